"""Gimbal plant construction, uncertainty bounds, perturbed model sets."""

import numpy as np
import pytest

from lqgltr import gimbal
from lqgltr.errors import InvalidParameters
from lqgltr.systems import (
    default_grid,
    frequency_response,
    hinf_norm,
    sigma_envelope,
)

AZ = gimbal.AZIMUTH_PARAMS
EL = gimbal.ELEVATION_PARAMS


class TestAxisModel:
    def test_orders(self):
        assert gimbal.build_axis_model(AZ).n_states == 5
        assert gimbal.build_axis_model(AZ, include_delay=False).n_states == 3

    def test_dc_gains(self):
        az = gimbal.build_axis_model(AZ)
        el = gimbal.build_axis_model(EL)
        assert az.transfer_at(0.0)[0, 0] == pytest.approx(2.0 * 2.18 / 1.15,
                                                          rel=1e-10)
        assert el.transfer_at(0.0)[0, 0] == pytest.approx(4.36 / 0.61,
                                                          rel=1e-10)

    def test_rhp_zeros(self):
        # zeros of the Pade numerator: (3 +- sqrt(3) j) / d
        zeros = gimbal.delay_pade_tf(AZ.d).zeros()
        expected = np.array([3.0 + 1j * np.sqrt(3.0),
                             3.0 - 1j * np.sqrt(3.0)]) / AZ.d
        assert np.allclose(sorted(zeros, key=lambda z: z.imag),
                           sorted(expected, key=lambda z: z.imag), rtol=1e-9)
        assert np.all(np.real(zeros) > 0.0)
        assert np.real(expected[0]) == pytest.approx(666.666666, rel=1e-6)
        assert abs(np.imag(expected[0])) == pytest.approx(384.900179, rel=1e-6)

    def test_magnitude_factorization(self):
        # the all-pass contributes |.| = 1, so |G| is motor x gyro magnitude
        sys = gimbal.build_axis_model(AZ)
        motor = gimbal.motor_tf(AZ)
        gyro = gimbal.gyro_tf(AZ)
        for w in np.logspace(-1, 3.2, 20):
            got = abs(sys.transfer_at(1j * w)[0, 0])
            want = abs(motor.evaluate(1j * w)) * abs(gyro.evaluate(1j * w))
            assert got == pytest.approx(want, rel=1e-8)

    def test_invalid_parameters(self):
        with pytest.raises(InvalidParameters):
            gimbal.GimbalAxisParams(Ka=2.0, Kt=2.18, wg=1646.0, xi=1.5,
                                    d=0.0045, J=0.17, Bv=1.0)
        with pytest.raises(InvalidParameters):
            gimbal.GimbalAxisParams(Ka=-2.0, Kt=2.18, wg=1646.0, xi=0.8,
                                    d=0.0045, J=0.17, Bv=1.0)


class TestMimoModel:
    def test_order_and_decoupling(self, gimbal_plant):
        assert gimbal_plant.n_states == 10
        fr = frequency_response(gimbal_plant, default_grid(0.5, 500.0, 30))
        off = np.max(np.abs(fr.values[:, 0, 1])) + \
            np.max(np.abs(fr.values[:, 1, 0]))
        assert off == 0.0

    def test_identical_axes_symmetric_sigma(self):
        both = gimbal.build_mimo_model(AZ, AZ)
        fr = frequency_response(both, default_grid(0.5, 500.0, 30))
        sv = sigma_envelope(fr)
        assert np.allclose(sv[:, 0], sv[:, 1], rtol=1e-10)

    def test_stable(self, gimbal_plant):
        assert gimbal_plant.is_stable()


class TestUncertaintyWeights:
    def test_dc_values(self):
        w1a, w1e, _ = gimbal.uncertainty_weights()
        assert abs(w1a.weight.evaluate(0.0)) == pytest.approx(
            90750.0 / 572624.0, rel=1e-12)
        assert abs(w1e.weight.evaluate(0.0)) == pytest.approx(
            289957.0 / 2375266.0, rel=1e-12)

    def test_high_frequency_limits(self):
        w1a, w1e, _ = gimbal.uncertainty_weights()
        w = 1j * 1e7
        assert abs(w1a.weight.evaluate(w)) == pytest.approx(1.87, rel=1e-3)
        assert abs(w1e.weight.evaluate(w)) == pytest.approx(1.12, rel=1e-3)

    @pytest.mark.parametrize("which,lo,hi", [(0, 60.0, 85.0),
                                             (1, 130.0, 165.0)])
    def test_unity_crossing(self, which, lo, hi):
        # |w1| crosses 1 exactly once in 1..1000 Hz, inside the stated band
        weight = gimbal.uncertainty_weights()[which].weight
        freqs = np.logspace(0, 3, 4000)
        mags = np.abs(weight.evaluate(1j * 2 * np.pi * freqs))
        signs = np.sign(mags - 1.0)
        crossings = np.flatnonzero(np.diff(signs) != 0)
        assert crossings.size == 1
        f_cross = freqs[crossings[0]]
        assert lo <= f_cross <= hi

    def test_w1_model_matches_entries(self):
        w1a, w1e, w1 = gimbal.uncertainty_weights()
        for w in (1.0, 50.0, 800.0):
            val = w1.transfer_at(1j * w)
            assert val[0, 0] == pytest.approx(w1a.weight.evaluate(1j * w),
                                              rel=1e-9)
            assert val[1, 1] == pytest.approx(w1e.weight.evaluate(1j * w),
                                              rel=1e-9)
            assert val[0, 1] == 0.0 and val[1, 0] == 0.0


class TestPerturbedModels:
    def test_zero_delta_is_nominal(self, gimbal_plant, w1_model):
        from lqgltr.systems import StateSpaceModel
        delta0 = StateSpaceModel.static_gain(np.zeros((2, 2)))
        member = gimbal.apply_output_perturbation(gimbal_plant, w1_model,
                                                  delta0)
        for w in (1.0, 30.0, 700.0):
            assert np.allclose(member.transfer_at(1j * w),
                               gimbal_plant.transfer_at(1j * w), atol=1e-12)

    def test_identity_delta_scales_channels(self, gimbal_plant, w1_model):
        from lqgltr.systems import StateSpaceModel
        delta1 = StateSpaceModel.static_gain(np.eye(2))
        member = gimbal.apply_output_perturbation(gimbal_plant, w1_model,
                                                  delta1)
        w1a, w1e, _ = gimbal.uncertainty_weights()
        for w in (1.0, 100.0):
            got = member.transfer_at(1j * w)
            nom = gimbal_plant.transfer_at(1j * w)
            assert got[0, 0] == pytest.approx(
                (1.0 + w1a.weight.evaluate(1j * w)) * nom[0, 0], rel=1e-9)
            assert got[1, 1] == pytest.approx(
                (1.0 + w1e.weight.evaluate(1j * w)) * nom[1, 1], rel=1e-9)

    def test_sampling_determinism_and_norms(self, gimbal_plant, w1_model):
        set_a = gimbal.sample_perturbed_models(gimbal_plant, w1_model, 5,
                                               seed=123)
        set_b = gimbal.sample_perturbed_models(gimbal_plant, w1_model, 5,
                                               seed=123)
        for ma, mb in zip(set_a.members, set_b.members):
            assert np.array_equal(ma.A, mb.A)
            assert np.array_equal(ma.C, mb.C)
        for delta, nrm in zip(set_a.deltas, set_a.delta_norms):
            assert nrm <= 1.0 + 1e-6
            assert delta.is_stable()

    def test_members_stable(self, gimbal_plant, w1_model):
        sampled = gimbal.sample_perturbed_models(gimbal_plant, w1_model, 5,
                                                 seed=9)
        for member in sampled.members:
            assert member.is_stable()
