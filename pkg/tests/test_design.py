"""Plant augmentation, Kalman/LQR synthesis, LTR recovery behavior."""

import numpy as np
import pytest

from lqgltr import design, gimbal
from lqgltr.errors import DimensionMismatch, InvalidParameters
from lqgltr.systems import (
    RationalTransferFunction,
    StateSpaceModel,
    default_grid,
    frequency_response,
    tf_to_ss,
)

TWO_PI = 2.0 * np.pi

# slow-weight recovery harness: the regulator's inversion depth at a given
# rho is relative to the target bandwidth and the cost's output units, so
# the recovery property is probed with a lazy target and a deeper output
# scale (see ltr_sweep tests)
SLOW_WEIGHT = design.SensitivityWeightParams(Ms=3.162, eps=0.01, xi=0.5,
                                             wb=TWO_PI * 0.3)
RECOVERY_RHOS = tuple(10.0 ** (-k) for k in range(1, 8))


def minimum_phase_test_plant():
    return tf_to_ss(RationalTransferFunction([1.0], [1.0, 2.0, 1.0]))


def scalar_augmented():
    """Plain scalar plant with unit process noise straight into the state."""
    model = StateSpaceModel([[-1.0]], [[1.0]], [[1.0]], [[0.0]])
    return design.AugmentedPlant(model=model, n_plant=1, n_weight=0,
                                 gamma=np.eye(1),
                                 noise_feedthrough=np.zeros((1, 1)))


class TestSensitivityWeight:
    def test_design1_gains(self):
        weight = design.make_sensitivity_weight(design.DESIGN1_WEIGHT)
        assert abs(weight.evaluate(0.0)) == pytest.approx(100.0, rel=1e-12)
        assert abs(weight.evaluate(1j * 1e8)) == pytest.approx(1.0 / 3.162,
                                                               rel=1e-4)

    def test_ms_one_variant(self):
        params = design.SensitivityWeightParams(Ms=1.0, eps=0.01, xi=0.5,
                                                wb=TWO_PI * 10.0)
        weight = design.make_sensitivity_weight(params)
        assert abs(weight.evaluate(0.0)) == pytest.approx(100.0, rel=1e-12)
        assert abs(weight.evaluate(1j * 1e8)) == pytest.approx(1.0, rel=1e-4)

    def test_scaled_output_variant(self):
        params = design.SensitivityWeightParams(Ms=3.162, eps=0.01, xi=0.5,
                                                wb=TWO_PI * 15.0)
        weight = design.make_sensitivity_weight(params, gain=2.5)
        assert abs(weight.evaluate(0.0)) == pytest.approx(250.0, rel=1e-12)

    def test_design2_gains(self):
        weight = design.make_sensitivity_weight(design.DESIGN2_WEIGHT)
        assert abs(weight.evaluate(0.0)) == pytest.approx(250.0, rel=1e-12)
        assert abs(weight.evaluate(1j * 1e8)) == pytest.approx(1.0 / 3.162,
                                                               rel=1e-4)

    def test_invalid_params(self):
        with pytest.raises(InvalidParameters):
            design.SensitivityWeightParams(Ms=0.5, eps=0.01, xi=0.5, wb=1.0)
        with pytest.raises(InvalidParameters):
            design.SensitivityWeightParams(Ms=2.0, eps=1.5, xi=0.5, wb=1.0)


class TestAugmentation:
    def test_gimbal_order_14(self, augmented):
        assert augmented.order == 14
        assert augmented.n_plant == 10
        assert augmented.n_weight == 4

    def test_static_identity_weight(self, gimbal_plant):
        aug = design.augment_plant(gimbal_plant,
                                   StateSpaceModel.static_gain(np.eye(2)))
        assert aug.order == gimbal_plant.n_states
        assert np.allclose(aug.noise_feedthrough, np.eye(2))
        assert np.allclose(aug.gamma, 0.0)

    def test_dimension_mismatch(self, gimbal_plant):
        with pytest.raises(DimensionMismatch):
            design.augment_plant(gimbal_plant,
                                 StateSpaceModel.static_gain(np.eye(3)))

    def test_disturbance_path_is_weight_proper_part(self, gimbal_plant,
                                                    we_design2, augmented):
        # with zero input, the z output driven through gamma equals the
        # weight's strictly proper part C_d (sI - A_d)^-1 B_d
        grid = np.array([1.0, 20.0, 300.0])
        a = augmented.model.A
        c = augmented.model.C
        for w in grid:
            phi = np.linalg.inv(1j * w * np.eye(augmented.order) - a)
            path = c @ phi @ augmented.gamma
            want = we_design2.transfer_at(1j * w) - we_design2.D
            assert np.allclose(path, want, atol=1e-9 * max(1, abs(want).max()))


class TestKalman:
    def test_scalar_filter(self):
        noise = design.NoiseIntensities(W=np.eye(1), V=np.eye(1),
                                        theta_cov=1.0)
        kal = design.design_kalman(scalar_augmented(), noise)
        assert kal.covariance[0, 0] == pytest.approx(np.sqrt(2.0) - 1.0,
                                                     abs=1e-10)
        assert kal.gain[0, 0] == pytest.approx(np.sqrt(2.0) - 1.0, abs=1e-10)

    def test_return_difference_inequality(self, augmented, kalman,
                                          coarse_grid):
        a = augmented.model.A
        c = augmented.model.C
        eye = np.eye(augmented.order)
        worst = np.inf
        for w in coarse_grid:
            rd = np.eye(2) + c @ np.linalg.solve(1j * w * eye - a, kalman.gain)
            worst = min(worst, np.linalg.svd(rd, compute_uv=False)[-1])
        assert worst >= 1.0 - 1e-6

    def test_process_noise_scaling_raises_low_freq_gain(self, augmented):
        base = design.design_kalman(augmented,
                                    design.NoiseIntensities.default(2, 2))
        hot = design.design_kalman(
            augmented, design.NoiseIntensities(W=100.0 * np.eye(2),
                                               V=np.eye(2), theta_cov=1.0))
        w = TWO_PI * 0.1
        lo_base = np.linalg.svd(base.loop.transfer_at(1j * w),
                                compute_uv=False)[-1]
        lo_hot = np.linalg.svd(hot.loop.transfer_at(1j * w),
                               compute_uv=False)[-1]
        assert lo_hot > lo_base

    def test_filter_stable(self, augmented, kalman):
        a_f = augmented.model.A - kalman.gain @ augmented.model.C
        assert np.max(np.linalg.eigvals(a_f).real) < 0.0


class TestLqr:
    def test_scalar_gain(self):
        kc, _, _ = design.design_lqr(scalar_augmented(), 1.0)
        assert kc[0, 0] == pytest.approx(np.sqrt(2.0) - 1.0, abs=1e-10)

    def test_return_difference_inequality(self, augmented, sweep,
                                          coarse_grid):
        kc = sweep.kc_by_rho[1e-4]
        a = augmented.model.A
        b = augmented.model.B
        eye = np.eye(augmented.order)
        worst = np.inf
        for w in coarse_grid:
            rd = np.eye(2) + kc @ np.linalg.solve(1j * w * eye - a, b)
            worst = min(worst, np.linalg.svd(rd, compute_uv=False)[-1])
        assert worst >= 1.0 - 1e-6

    def test_expensive_control_limit(self, augmented):
        kc, _, _ = design.design_lqr(augmented, 1e10)
        assert np.max(np.abs(kc)) <= 1e-3

    def test_rejects_nonpositive_rho(self, augmented):
        with pytest.raises(InvalidParameters):
            design.design_lqr(augmented, 0.0)


class TestAssembly:
    def test_scalar_compensator_pole(self):
        aug = scalar_augmented()
        noise = design.NoiseIntensities(W=np.eye(1), V=np.eye(1),
                                        theta_cov=1.0)
        kal = design.design_kalman(aug, noise)
        kc, _, _ = design.design_lqr(aug, 1.0)
        comp = design.assemble_lqg(aug, kal.gain, kc)
        expected_pole = -1.0 - kc[0, 0] - kal.gain[0, 0]
        assert comp.A[0, 0] == pytest.approx(expected_pole, abs=1e-9)
        assert comp.C[0, 0] == pytest.approx(-kc[0, 0])

    def test_order_14_and_stability(self, gimbal_plant, sweep):
        for rho in (1e-3, 1e-4):
            comp = sweep.compensator(rho)
            assert comp.n_states == 14
            acl = design.closed_loop_matrix(gimbal_plant, comp)
            assert np.max(np.linalg.eigvals(acl).real) < 0.0

    def test_gain_shape_mismatch(self, augmented, kalman):
        with pytest.raises(DimensionMismatch):
            design.assemble_lqg(augmented, kalman.gain, np.zeros((2, 3)))

    def test_separation(self, augmented, kalman, sweep):
        kc = sweep.kc_by_rho[1e-4]
        a = augmented.model.A
        b = augmented.model.B
        c = augmented.model.C
        comp = sweep.compensator(1e-4)
        n = augmented.order
        a_cl = np.zeros((2 * n, 2 * n))
        a_cl[:n, :n] = a
        a_cl[:n, n:] = b @ comp.C
        a_cl[n:, :n] = comp.B @ c
        a_cl[n:, n:] = comp.A
        closed = list(np.linalg.eigvals(a_cl))
        expected = list(np.concatenate([
            np.linalg.eigvals(a - b @ kc),
            np.linalg.eigvals(a - kalman.gain @ c)]))
        for lam_c in closed:
            i = int(np.argmin([abs(lam_c - lam_e) for lam_e in expected]))
            lam_e = expected.pop(i)
            assert abs(lam_c - lam_e) <= 1e-6 * (1.0 + abs(lam_e))


class TestLtrSweep:
    def test_minimum_phase_recovery(self, coarse_grid):
        plant = minimum_phase_test_plant()
        we = design.sensitivity_weight_model(SLOW_WEIGHT, channels=1)
        aug = design.augment_plant(plant, we)
        noise = design.NoiseIntensities.default(1, 1, theta_cov=100.0)
        kal = design.design_kalman(aug, noise)
        prev = None
        errs = []
        for rho in RECOVERY_RHOS:
            kc, _, _ = design.design_lqr(aug, rho, initial_gain=prev,
                                         output_scale=10.0)
            prev = kc
            comp = design.assemble_lqg(aug, kal.gain, kc)
            ach = design.recovery_open_loop_response(plant, comp, coarse_grid)
            target = frequency_response(kal.loop, coarse_grid).values
            band = coarse_grid <= TWO_PI * 100.0
            num = np.max(np.linalg.svd(ach - target,
                                       compute_uv=False)[band, 0])
            den = np.max(np.linalg.svd(target, compute_uv=False)[band, 0])
            errs.append(num / den)
        assert all(a > b for a, b in zip(errs, errs[1:]))
        assert errs[-1] <= 1e-2

    def test_gimbal_recovery_plateaus(self, gimbal_plant, we_design1,
                                      coarse_grid):
        aug = design.augment_plant(gimbal_plant, we_design1)
        kal = design.design_kalman(aug, design.NoiseIntensities.default(2, 2))
        sweep = design.ltr_sweep(aug, kal, RECOVERY_RHOS, grid=coarse_grid)
        errs = [sweep.recovery_error[r] for r in RECOVERY_RHOS]
        # decreasing but flattening toward a floor well above zero
        assert all(a >= b for a, b in zip(errs, errs[1:]))
        assert errs[-1] >= 0.1
        assert errs[-3] - errs[-1] <= 0.1 * errs[-1]

    def test_no_pade_variant_recovers(self, coarse_grid):
        plant = gimbal.build_mimo_model(gimbal.AZIMUTH_PARAMS,
                                        gimbal.ELEVATION_PARAMS,
                                        include_delay=False)
        we = design.sensitivity_weight_model(SLOW_WEIGHT, channels=2)
        aug = design.augment_plant(plant, we)
        kal = design.design_kalman(aug,
                                   design.NoiseIntensities.default(
                                       2, 2, theta_cov=100.0))
        prev = None
        for rho in RECOVERY_RHOS[:-1]:
            prev, _, _ = design.design_lqr(aug, rho, initial_gain=prev,
                                           output_scale=10.0)
        kc, _, _ = design.design_lqr(aug, RECOVERY_RHOS[-1],
                                     initial_gain=prev, output_scale=10.0)
        comp = design.assemble_lqg(aug, kal.gain, kc)
        ach = design.recovery_open_loop_response(plant, comp, coarse_grid)
        target = frequency_response(kal.loop, coarse_grid).values
        band = coarse_grid <= TWO_PI * 100.0
        err = np.max(np.linalg.svd(ach - target, compute_uv=False)[band, 0]) \
            / np.max(np.linalg.svd(target, compute_uv=False)[band, 0])
        assert err <= 5e-2

    def test_selected_design_recorded_stable(self, sweep):
        assert sweep.loop_stable[1e-4]
        assert sweep.loop_stable[1e-3]

    def test_design2_beats_design1_weight(self, gimbal_plant, we_design1,
                                          we_design2, coarse_grid, sweep):
        # at equal rho, synthesizing against the hotter 15 Hz target yields
        # a lower achieved ||We_design1 * S_o||_inf than synthesizing
        # against the design-1 weight itself
        from lqgltr.robustness import closed_loop_maps, nominal_performance
        aug1 = design.augment_plant(gimbal_plant, we_design1)
        kal1 = design.design_kalman(aug1,
                                    design.NoiseIntensities.default(2, 2))
        kc1, _, _ = design.design_lqr(aug1, 1e-4)
        comp1 = design.assemble_lqg(aug1, kal1.gain, kc1)
        s1, _ = closed_loop_maps(gimbal_plant, design.loop_compensator(comp1))
        np1, _ = nominal_performance(we_design1, s1)
        comp2 = sweep.compensator(1e-4)
        s2, _ = closed_loop_maps(gimbal_plant, design.loop_compensator(comp2))
        np2, _ = nominal_performance(we_design1, s2)
        assert np2 < np1
