"""LTI representations, interconnections, responses, and norms."""

import numpy as np
import pytest

from lqgltr import systems
from lqgltr.errors import (
    AlgebraicLoop,
    DimensionMismatch,
    ImproperTransferFunction,
    SingularAtFrequency,
    UnstableSystem,
)
from lqgltr.systems import (
    RationalTransferFunction,
    StateSpaceModel,
    add,
    balance_states,
    connect_diagonal,
    connect_feedback,
    connect_series,
    default_grid,
    frequency_response,
    hinf_norm,
    negate,
    sigma_envelope,
    subtract,
    tf_to_ss,
)

from conftest import assert_response_close

PROBE_OMEGAS = np.logspace(-1, 3, 20)


def tf(num, den):
    return RationalTransferFunction(num, den)


class TestTransferFunctions:
    def test_first_order(self):
        sys = tf_to_ss(tf([1.0], [1.0, 1.0]))
        assert sys.n_states == 1
        assert sys.poles()[0] == pytest.approx(-1.0)

    def test_static_gain(self):
        sys = tf_to_ss(tf([3.0], [1.0]))
        assert sys.n_states == 0
        assert sys.D[0, 0] == pytest.approx(3.0)

    def test_improper_rejected(self):
        with pytest.raises(ImproperTransferFunction):
            tf([1.0, 0.0, 0.0], [1.0, 1.0])

    def test_round_trip_random(self):
        rng = np.random.default_rng(21)
        for _ in range(5):
            den = np.polymul([1.0, rng.uniform(0.5, 5.0)],
                             [1.0, rng.uniform(1.0, 20.0),
                              rng.uniform(10.0, 400.0)])
            num = rng.standard_normal(3)
            f = tf(num, den)
            sys = tf_to_ss(f)
            assert_response_close(sys, f.evaluate, PROBE_OMEGAS)

    def test_biproper_round_trip(self):
        f = tf([2.0, 1.0, 5.0], [1.0, 3.0, 7.0])
        sys = tf_to_ss(f)
        assert sys.D[0, 0] == pytest.approx(2.0)
        assert_response_close(sys, f.evaluate, PROBE_OMEGAS)


class TestInterconnections:
    def test_series_double_lag(self):
        g = tf_to_ss(tf([1.0], [1.0, 1.0]))
        both = connect_series(g, g)
        target = tf([1.0], np.polymul([1.0, 1.0], [1.0, 1.0]))
        assert_response_close(both, target.evaluate, PROBE_OMEGAS)

    def test_series_dimension_mismatch(self):
        g = tf_to_ss(tf([1.0], [1.0, 1.0]))
        two = connect_diagonal(g, g)
        with pytest.raises(DimensionMismatch):
            connect_series(two, g)

    def test_diagonal_block_structure(self):
        g1 = tf_to_ss(tf([1.0], [1.0, 1.0]))
        g2 = tf_to_ss(tf([2.0], [1.0, 3.0]))
        both = connect_diagonal(g1, g2)
        val = both.transfer_at(1j * 2.0)
        assert abs(val[0, 1]) == 0.0 and abs(val[1, 0]) == 0.0
        assert val[0, 0] == pytest.approx(1.0 / (1j * 2.0 + 1.0))

    def test_feedback_integrator(self):
        g = StateSpaceModel([[0.0]], [[1.0]], [[1.0]], [[0.0]])
        k = StateSpaceModel.static_gain([[1.0]])
        closed = connect_feedback(g, k, sign=-1)
        target = tf([1.0], [1.0, 1.0])
        assert_response_close(closed, target.evaluate, PROBE_OMEGAS)

    def test_feedback_algebraic_loop(self):
        g = StateSpaceModel.static_gain([[1.0]])
        k = StateSpaceModel.static_gain([[1.0]])
        with pytest.raises(AlgebraicLoop):
            connect_feedback(g, k, sign=+1)

    def test_add_subtract(self):
        g1 = tf_to_ss(tf([1.0], [1.0, 1.0]))
        g2 = tf_to_ss(tf([1.0], [1.0, 2.0]))
        total = add(g1, g2)
        diff = subtract(total, g2)
        assert_response_close(diff, tf([1.0], [1.0, 1.0]).evaluate,
                              PROBE_OMEGAS)

    def test_negate(self):
        g = tf_to_ss(tf([1.0], [1.0, 1.0]))
        assert negate(g).transfer_at(0.0)[0, 0] == pytest.approx(-1.0)


class TestFrequencyResponse:
    def test_first_order_point(self):
        sys = tf_to_ss(tf([1.0], [1.0, 1.0]))
        fr = frequency_response(sys, np.array([1.0]))
        val = fr.values[0, 0, 0]
        assert abs(val) == pytest.approx(1.0 / np.sqrt(2.0), abs=1e-12)
        assert np.angle(val, deg=True) == pytest.approx(-45.0, abs=1e-9)

    def test_singular_at_frequency(self):
        # undamped oscillator: jw equals an eigenvalue at w = 1
        sys = StateSpaceModel([[0.0, 1.0], [-1.0, 0.0]], [[0.0], [1.0]],
                              [[1.0, 0.0]], [[0.0]])
        with pytest.raises(SingularAtFrequency) as err:
            frequency_response(sys, np.array([1.0]))
        assert err.value.omega == pytest.approx(1.0)

    def test_default_grid_span(self):
        grid = default_grid()
        assert grid.size == 1601
        assert grid[0] == pytest.approx(2 * np.pi * 0.1)
        assert grid[-1] == pytest.approx(2 * np.pi * 1000.0)

    def test_sigma_envelope_siso_is_magnitude(self):
        sys = tf_to_ss(tf([10.0], [1.0, 1.0]))
        grid = default_grid(1.0, 10.0, 20)
        fr = frequency_response(sys, grid)
        sv = sigma_envelope(fr)
        assert np.allclose(sv[:, 0], np.abs(fr.values[:, 0, 0]))

    def test_sigma_envelope_diagonal_max(self):
        g1 = tf_to_ss(tf([1.0], [1.0, 1.0]))
        g2 = tf_to_ss(tf([5.0], [1.0, 1.0]))
        both = connect_diagonal(g1, g2)
        fr = frequency_response(both, default_grid(0.5, 50.0, 30))
        sv = sigma_envelope(fr)
        mags = np.abs(np.stack([fr.values[:, 0, 0], fr.values[:, 1, 1]]))
        assert np.allclose(sv[:, 0], np.max(mags, axis=0))
        assert np.all(np.diff(sv, axis=1) <= 1e-15)

    def test_balance_states_preserves_response(self):
        from lqgltr.gimbal import AZIMUTH_PARAMS, axis_tf, build_axis_model
        sys = build_axis_model(AZIMUTH_PARAMS)
        f = axis_tf(AZIMUTH_PARAMS)
        assert_response_close(sys, f.evaluate, PROBE_OMEGAS)
        again = balance_states(sys)
        assert_response_close(again, f.evaluate, PROBE_OMEGAS)


class TestHinfNorm:
    def test_first_order_dc_peak(self):
        assert hinf_norm(tf_to_ss(tf([1.0], [1.0, 1.0]))) == \
            pytest.approx(1.0, rel=1e-9)

    def test_sensitivity_weight_peak(self):
        # DC gain is 1/eps = 100; the underdamped denominator pushes the
        # actual supremum to ~115.4 just below 1 Hz (dense polynomial
        # evaluation is the oracle)
        from lqgltr.design import DESIGN1_WEIGHT, make_sensitivity_weight
        weight = make_sensitivity_weight(DESIGN1_WEIGHT)
        sys = tf_to_ss(weight)
        assert sys.transfer_at(0.0)[0, 0] == pytest.approx(100.0, rel=1e-12)
        dense = np.abs(weight.evaluate(1j * np.linspace(0.1, 100.0, 200001)))
        assert hinf_norm(sys) == pytest.approx(np.max(dense), rel=1e-5)

    def test_static_diagonal(self):
        assert hinf_norm(StateSpaceModel.static_gain(np.diag([2.0, 3.0]))) \
            == pytest.approx(3.0)

    def test_unstable_rejected(self):
        with pytest.raises(UnstableSystem):
            hinf_norm(StateSpaceModel([[1.0]], [[1.0]], [[1.0]], [[0.0]]))

    def test_resonant_peak_accuracy(self):
        # peak of a lightly damped resonance: |G|_max = 1/(2 z sqrt(1-z^2))
        z, wn = 0.05, 2 * np.pi * 30.0
        sys = tf_to_ss(tf([wn ** 2], [1.0, 2 * z * wn, wn ** 2]))
        expected = 1.0 / (2 * z * np.sqrt(1 - z ** 2))
        assert hinf_norm(sys) == pytest.approx(expected, rel=5e-3)

    def test_similarity_invariance(self):
        rng = np.random.default_rng(17)
        from lqgltr.gimbal import AZIMUTH_PARAMS, build_axis_model
        sys = build_axis_model(AZIMUTH_PARAMS)
        n = sys.n_states
        t = np.eye(n) + 0.3 * rng.standard_normal((n, n))
        tried = StateSpaceModel(np.linalg.solve(t, sys.A @ t),
                                np.linalg.solve(t, sys.B),
                                sys.C @ t, sys.D)
        assert hinf_norm(tried) == pytest.approx(hinf_norm(sys), rel=1e-6)


class TestLoopIdentities:
    def test_s_plus_t_identity_on_gimbal_loop(self, gimbal_plant, compensator,
                                              coarse_grid):
        from lqgltr.design import loop_compensator
        from lqgltr.robustness import closed_loop_maps
        s_o, t_o = closed_loop_maps(gimbal_plant, loop_compensator(compensator))
        fr_s = frequency_response(s_o, coarse_grid)
        fr_t = frequency_response(t_o, coarse_grid)
        total = fr_s.values + fr_t.values
        eye = np.eye(2)
        err = np.max(np.abs(total - eye))
        assert err <= 1e-8

    def test_pade_allpass_sigma_is_one(self):
        from lqgltr.gimbal import delay_pade_tf
        sys = tf_to_ss(delay_pade_tf(0.0045))
        fr = frequency_response(sys, default_grid())
        sv = sigma_envelope(fr)
        assert np.max(np.abs(sv - 1.0)) <= 1e-10


class TestSerialization:
    def test_frequency_response_round_trip(self, tmp_path):
        from lqgltr import textio
        sys = tf_to_ss(tf([2.0], [1.0, 0.5, 4.0]))
        fr = frequency_response(sys, default_grid(1.0, 100.0, 25))
        path = tmp_path / "resp.txt"
        textio.write_frequency_response(path, fr)
        back = textio.read_frequency_response(path)
        assert np.allclose(back.grid, fr.grid)
        assert np.allclose(back.values, fr.values)

    def test_state_space_round_trip(self, tmp_path):
        from lqgltr import textio
        sys = tf_to_ss(tf([1.0, 2.0], [1.0, 3.0, 5.0]))
        path = tmp_path / "sys.txt"
        textio.write_state_space(path, sys)
        back = textio.read_state_space(path)
        assert np.allclose(back.A, sys.A) and np.allclose(back.D, sys.D)
