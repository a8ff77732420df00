"""Benchmark: compiled vs pure-Python simulation kernels.

Runs the two hot loops (sampled-data closed-loop stepping and the CD-EKF
pass) on representative workloads with every importable backend and prints
a timing table plus the cross-backend agreement.

Usage: python benchmarks/bench_kernels.py [--repeat N]
"""

import argparse
import time

import numpy as np

from lqgltr import design, gimbal, reduction, simident
from lqgltr.kernels import available_backends


def build_loop_workload():
    plant = gimbal.build_mimo_model(gimbal.AZIMUTH_PARAMS,
                                    gimbal.ELEVATION_PARAMS)
    we2 = design.sensitivity_weight_model(design.DESIGN2_WEIGHT, channels=2)
    aug = design.augment_plant(plant, we2)
    kal = design.design_kalman(aug, design.NoiseIntensities.default(2, 2))
    kc, _, _ = design.design_lqr(aug, 1e-4)
    comp = design.assemble_lqg(aug, kal.gain, kc)
    reduced, _ = reduction.balance_and_truncate(comp, 12)
    controller = reduction.bilinear_discretize(reduced, 5e-4)
    step_a, step_b = simident._loop_matrices(plant, controller, 10)
    nsteps = 40000  # 20 s at 2 kHz
    times = np.arange(nsteps) * controller.sample_period
    d_seq = simident.default_disturbance_profile(seed=1).sample(times)
    return dict(step_a=np.ascontiguousarray(step_a),
                step_b=np.ascontiguousarray(step_b),
                c=np.ascontiguousarray(plant.C),
                ak=np.ascontiguousarray(controller.A),
                bk=np.ascontiguousarray(controller.B),
                ck=np.ascontiguousarray(controller.C),
                dk=np.ascontiguousarray(controller.D),
                d_seq=np.ascontiguousarray(d_seq),
                x0=np.zeros(plant.n_states),
                xk0=np.zeros(controller.n_states))


def build_ekf_workload():
    p = gimbal.AZIMUTH_PARAMS
    model = simident.EkfModel.from_axis_params(p)
    dt = simident.DEFAULT_EKF_DT
    nsteps = 40000  # 20 s at 2 kHz
    t_half = 0.5 * dt * np.arange(2 * nsteps + 1)
    u_fine = np.sin(2.0 * np.pi * 4.0 * t_half)
    a_true, b_true = model.linear_matrices(p.J, p.Bv)
    from lqgltr import _kernels_py
    xs = _kernels_py.linear_rk4(a_true, b_true, u_fine, dt, np.zeros(4))
    rng = np.random.default_rng(0)
    y = xs[1:, 0] + 1e-3 * rng.standard_normal(nsteps)
    x0 = np.array([0, 0, 0, 0, 1.5 * p.J, 1.5 * p.Bv])
    sig = 0.1
    p0 = np.diag([sig ** 2, (sig * p.wg) ** 2, sig ** 2, sig ** 2,
                  (0.5 * x0[4]) ** 2, (0.5 * x0[5]) ** 2])
    qc = np.diag([1e-8] * 6)
    return dict(wg=p.wg, xi=p.xi, dlag=p.d, kt=p.Kt,
                u_fine=np.ascontiguousarray(u_fine),
                y_meas=np.ascontiguousarray(y), dt=dt,
                qc=np.ascontiguousarray(qc), r_meas=1e-6, x0=x0,
                p0=np.ascontiguousarray(p0))


def best_of(fn, repeat):
    best = np.inf
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()

    backends = available_backends()
    print(f"backends available: {', '.join(backends)}\n")

    loop_args = build_loop_workload()
    ekf_args = build_ekf_workload()

    results = {}
    for name, mod in backends.items():
        t_loop, loop_out = best_of(
            lambda m=mod: m.lti_loop(
                loop_args["step_a"], loop_args["step_b"], loop_args["c"],
                loop_args["ak"], loop_args["bk"], loop_args["ck"],
                loop_args["dk"], loop_args["d_seq"], loop_args["x0"],
                loop_args["xk0"]), args.repeat)
        t_ekf, ekf_out = best_of(
            lambda m=mod: m.ekf_run(
                ekf_args["wg"], ekf_args["xi"], ekf_args["dlag"],
                ekf_args["kt"], ekf_args["u_fine"], ekf_args["y_meas"],
                ekf_args["dt"], ekf_args["qc"], ekf_args["r_meas"],
                ekf_args["x0"], ekf_args["p0"]), args.repeat)
        results[name] = (t_loop, loop_out, t_ekf, ekf_out)
        print(f"{name:>9}: lti_loop 40k steps {t_loop * 1e3:8.1f} ms | "
              f"ekf_run 40k steps {t_ekf * 1e3:8.1f} ms")

    if len(results) == 2:
        py = results["python"]
        cy = results["compiled"]
        print(f"\nspeedup: lti_loop x{py[0] / cy[0]:.1f}, "
              f"ekf_run x{py[2] / cy[2]:.1f}")
        dy = np.max(np.abs(py[1][0] - cy[1][0]))
        dx = np.max(np.abs(py[3][0] - cy[3][0]))
        print(f"agreement: loop outputs {dy:.2e}, ekf states {dx:.2e}")


if __name__ == "__main__":
    main()
