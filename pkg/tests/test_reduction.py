"""Balanced truncation and bilinear discretization."""

import numpy as np
import pytest

from lqgltr import reduction
from lqgltr.errors import NotStable, SingularTransformation
from lqgltr.systems import (
    RationalTransferFunction,
    StateSpaceModel,
    hinf_norm,
    subtract,
    tf_to_ss,
)


class TestGramians:
    def test_scalar(self):
        sys = tf_to_ss(RationalTransferFunction([1.0], [1.0, 1.0]))
        wc, wo = reduction.gramians(sys)
        assert wc[0, 0] == pytest.approx(0.5, abs=1e-12)
        assert wo[0, 0] == pytest.approx(0.5, abs=1e-12)

    def test_balanced_system_gramians_diagonal_equal(self, compensator):
        bal = reduction.balanced_realization(compensator)
        wc, wo = reduction.gramians(bal.system)
        hank = bal.hankel_values
        scale = hank[0]
        assert np.allclose(wc, np.diag(hank), atol=1e-6 * scale)
        assert np.allclose(wo, np.diag(hank), atol=1e-6 * scale)

    def test_unstable_rejected(self):
        sys = StateSpaceModel([[1.0]], [[1.0]], [[1.0]], [[0.0]])
        with pytest.raises(NotStable):
            reduction.gramians(sys)

    def test_compensator_hankel_values(self, compensator):
        hank = reduction.hankel_singular_values(compensator)
        assert hank.size == 14
        assert np.all(np.diff(hank) <= 1e-12)
        # independent oracle: sqrt of eigenvalues of Wc Wo
        wc, wo = reduction.gramians(compensator)
        oracle = np.sqrt(np.clip(np.sort(np.linalg.eigvals(wc @ wo).real)[::-1],
                                 0.0, None))
        assert np.allclose(hank, oracle, rtol=1e-6)

    def test_hankel_similarity_invariance(self, compensator):
        rng = np.random.default_rng(23)
        n = compensator.n_states
        t = np.eye(n) + 0.2 * rng.standard_normal((n, n))
        moved = StateSpaceModel(np.linalg.solve(t, compensator.A @ t),
                                np.linalg.solve(t, compensator.B),
                                compensator.C @ t, compensator.D)
        assert np.allclose(reduction.hankel_singular_values(moved),
                           reduction.hankel_singular_values(compensator),
                           rtol=1e-4)


class TestTruncation:
    def test_full_order_is_identity(self, compensator):
        reduced, bound = reduction.balance_and_truncate(compensator, 14)
        assert bound == 0.0
        for w in (1.0, 60.0, 900.0):
            assert np.allclose(reduced.transfer_at(1j * w),
                               compensator.transfer_at(1j * w), rtol=1e-8)

    def test_order_12_bound(self, compensator, reduced_compensator):
        reduced, bound = reduced_compensator
        hank = reduction.hankel_singular_values(compensator)
        assert reduced.n_states == 12
        assert bound == pytest.approx(2.0 * (hank[12] + hank[13]), rel=1e-9)
        actual = hinf_norm(subtract(compensator, reduced))
        assert actual <= bound * (1.0 + 1e-6)

    def test_bound_holds_across_orders(self, compensator):
        hank = reduction.hankel_singular_values(compensator)
        for k in (4, 8, 10, 13):
            reduced, bound = reduction.balance_and_truncate(compensator, k)
            assert bound == pytest.approx(2.0 * np.sum(hank[k:]), rel=1e-9)
            actual = hinf_norm(subtract(compensator, reduced))
            assert actual <= bound * (1.0 + 1e-6)

    def test_reduced_stable(self, reduced_compensator):
        assert reduced_compensator[0].is_stable()

    def test_bad_order_rejected(self, compensator):
        with pytest.raises(ValueError):
            reduction.balance_and_truncate(compensator, 0)
        with pytest.raises(ValueError):
            reduction.balance_and_truncate(compensator, 15)


class TestBilinear:
    def test_scalar_pole_map(self):
        sys = StateSpaceModel([[-1.0]], [[1.0]], [[1.0]], [[0.0]])
        disc = reduction.bilinear_discretize(sys, 1e-3)
        assert disc.A[0, 0] == pytest.approx(0.9995 / 1.0005, rel=1e-12)

    def test_integrator_tustin_identity(self):
        ts = 0.01
        integ = StateSpaceModel([[0.0]], [[1.0]], [[1.0]], [[0.0]])
        disc = reduction.bilinear_discretize(integ, ts)
        for w in (1.0, 10.0, 60.0):
            z = np.exp(1j * w * ts)
            target = (ts / 2.0) * (z + 1.0) / (z - 1.0)
            assert disc.transfer_at(z)[0, 0] == pytest.approx(target,
                                                              rel=1e-10)

    def test_frequency_warping_identity(self, reduced_compensator):
        reduced = reduced_compensator[0]
        ts = 5e-4
        disc = reduction.bilinear_discretize(reduced, ts)
        for f_hz in (1.0, 20.0, 150.0, 600.0):
            w = 2 * np.pi * f_hz
            warped = (2.0 / ts) * np.tan(w * ts / 2.0)
            got = disc.response_at_frequency(w)
            want = reduced.transfer_at(1j * warped)
            assert np.max(np.abs(got - want)) <= 1e-8 * max(
                1.0, np.max(np.abs(want)))

    def test_dc_gain_preserved(self, reduced_compensator):
        reduced = reduced_compensator[0]
        disc = reduction.bilinear_discretize(reduced, 5e-4)
        assert np.allclose(disc.transfer_at(1.0), reduced.transfer_at(0.0),
                           rtol=1e-9)

    def test_stability_mapping(self, discrete_controller):
        assert discrete_controller.is_stable()

    def test_singular_transformation(self):
        sys = StateSpaceModel([[2000.0]], [[1.0]], [[1.0]], [[0.0]])
        with pytest.raises(SingularTransformation):
            reduction.bilinear_discretize(sys, 1e-3)
