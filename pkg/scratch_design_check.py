"""Scratch: validate the design-pipeline numbers before freezing defaults."""
import numpy as np

from lqgltr import design, gimbal, robustness
from lqgltr.systems import default_grid, frequency_response

plant = gimbal.build_mimo_model(gimbal.AZIMUTH_PARAMS, gimbal.ELEVATION_PARAMS)
print("plant order:", plant.n_states, "stable:", plant.is_stable())
print("dc gain:\n", plant.dc_gain())

we1 = design.sensitivity_weight_model(design.DESIGN1_WEIGHT, channels=2)
we2 = design.sensitivity_weight_model(design.DESIGN2_WEIGHT, channels=2,
                                      gain=design.DESIGN2_GAIN)
_, _, w1 = gimbal.uncertainty_weights()

aug = design.augment_plant(plant, we2)
print("augmented order:", aug.order)
noise = design.NoiseIntensities.default(aug.gamma.shape[1], 2, theta_cov=1e-2)
kal = design.design_kalman(aug, noise)
print("kalman report:", kal.report)
print("R used:", noise.measurement_intensity(aug.noise_feedthrough)[0, 0])

grid = default_grid(points_per_decade=100)
fr = frequency_response(kal.loop, grid)
sv = np.linalg.svd(fr.values, compute_uv=False)
print("CPhiKf sigma at DC-ish:", sv[0], " at ~10Hz:",
      sv[np.argmin(np.abs(grid - 2 * np.pi * 10))])

sweep = design.ltr_sweep(aug, kal, [1e-1, 1e-2, 1e-3, 1e-4, 1e-5], grid=grid)
for rho in sweep.rhos:
    print(f"rho={rho:g} recovery_error={sweep.recovery_error[rho]:.4f} "
          f"stable={sweep.loop_stable[rho]}")

for rho in (1e-3, 1e-4):
    comp = sweep.compensator(rho)
    print(f"rho={rho:g}: compensator order {comp.n_states}, stable:",
          comp.is_stable())
    loop_comp = design.loop_compensator(comp)
    report, s_o, t_o = robustness.evaluate_robustness(plant, loop_comp, we1, w1,
                                                      grid=grid)
    print(f"  np={report.np_peak:.4f}@{report.np_peak_hz:.2f}Hz  "
          f"rs={report.rs_peak:.4f}@{report.rs_peak_hz:.2f}Hz  "
          f"rp={report.rp_peak:.4f}@{report.rp_peak_hz:.2f}Hz")
    fmin, lmin = design.return_difference_minima(aug, kal.gain,
                                                 sweep.kc_by_rho[rho], grid=grid)
    print(f"  return-difference minima: filter {fmin:.8f}  lqr {lmin:.8f}")
    print(f"  sigma(S_o) at DC: {np.linalg.svd(s_o.transfer_at(0.0), compute_uv=False)}")
