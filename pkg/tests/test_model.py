import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from recall_dyn.errors import DimensionError, InvalidStateError, StructureError
from recall_dyn.model import (NetworkConfig, StateVector, WeightMatrix, jacobian_shifted,
                              rhs_original, rhs_shifted, shifted_nonlinearity, softmax_output,
                              structured_random_weights, trivial_equilibrium,
                              validate_assumptions)

from conftest import random_network


def naive_softmax(s, n, m):
    # two-pass oracle without max subtraction
    out = np.empty_like(s)
    for i in range(n):
        total = sum(math.exp(s[i * m + j]) for j in range(m))
        for j in range(m):
            out[i * m + j] = math.exp(s[i * m + j]) / total
    return out


def scalar_rhs(s, a, W, n, m, alpha, g):
    # element-by-element form of the dynamics
    o = naive_softmax(s, n, m)
    ds = np.zeros(n * m)
    da = np.zeros(n * m)
    for i in range(n):
        for j in range(m):
            acc = 0.0
            for k in range(n):
                for l in range(m):
                    acc += W[i * m + j, k * m + l] * o[k * m + l]
            ds[i * m + j] = acc - s[i * m + j] - a[i * m + j]
            da[i * m + j] = g * o[i * m + j] - alpha * a[i * m + j]
    return np.concatenate([ds, da])


class TestNetworkConfig:
    def test_valid(self):
        cfg = NetworkConfig(6, 3, 1 / 54, 97 / 54)
        assert cfg.size == 18
        assert cfg.gain_ratio == pytest.approx(97.0)

    @pytest.mark.parametrize("kw", [dict(n=0), dict(m=1), dict(alpha=0.0), dict(alpha=1.0),
                                    dict(g_bar_a=0.0), dict(g_bar_a=-1.0)])
    def test_invalid(self, kw):
        base = dict(n=2, m=3, alpha=0.1, g_bar_a=1.0)
        base.update(kw)
        with pytest.raises(ValueError):
            NetworkConfig(**base)


class TestSoftmax:
    def test_uniform(self):
        cfg = NetworkConfig(1, 3, 0.1, 1.0)
        np.testing.assert_allclose(softmax_output(np.zeros(3), cfg), [1 / 3] * 3, atol=1e-15)

    def test_two_units(self):
        cfg = NetworkConfig(1, 2, 0.1, 1.0)
        np.testing.assert_allclose(softmax_output([math.log(3), 0.0], cfg), [0.75, 0.25], atol=1e-15)

    def test_against_naive_oracle(self):
        cfg = NetworkConfig(2, 3, 0.1, 1.0)
        s = np.array([0.3, -1.0, 2.0, 1.0, 2.0, 3.0])
        o = softmax_output(s, cfg)
        np.testing.assert_allclose(o, naive_softmax(s, 2, 3), rtol=1e-14)
        np.testing.assert_allclose(o[3:], [0.09003057, 0.24472847, 0.66524096], atol=1e-8)

    def test_large_inputs_do_not_overflow(self):
        cfg = NetworkConfig(1, 3, 0.1, 1.0)
        o = softmax_output([1000.0, 999.0, -1000.0], cfg)
        assert np.all(np.isfinite(o))
        assert o.sum() == pytest.approx(1.0, abs=1e-15)

    @pytest.mark.parametrize("bad", [np.nan, np.inf, -np.inf])
    def test_non_finite_rejected(self, bad):
        cfg = NetworkConfig(1, 3, 0.1, 1.0)
        with pytest.raises(InvalidStateError):
            softmax_output([0.0, bad, 1.0], cfg)

    def test_wrong_length(self):
        with pytest.raises(DimensionError):
            softmax_output(np.zeros(4), NetworkConfig(1, 3, 0.1, 1.0))

    def test_batch(self, rng):
        cfg = NetworkConfig(3, 4, 0.1, 1.0)
        S = rng.normal(size=(5, 12))
        np.testing.assert_allclose(softmax_output(S, cfg), [softmax_output(s, cfg) for s in S])

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.floats(-50, 50), min_size=6, max_size=6))
    def test_block_sums_and_range(self, vals):
        cfg = NetworkConfig(2, 3, 0.1, 1.0)
        o = softmax_output(np.array(vals), cfg)
        np.testing.assert_allclose(o.reshape(2, 3).sum(axis=1), 1.0, atol=1e-12)
        assert np.all(o >= 0) and np.all(o <= 1)


class TestShiftedNonlinearity:
    def test_zero(self):
        cfg = NetworkConfig(3, 4, 0.1, 1.0)
        np.testing.assert_allclose(shifted_nonlinearity(np.zeros(12), cfg), 0.0, atol=1e-16)

    def test_two_units(self):
        cfg = NetworkConfig(1, 2, 0.1, 1.0)
        np.testing.assert_allclose(shifted_nonlinearity([math.log(3), 0.0], cfg), [0.25, -0.25],
                                   atol=1e-15)

    def test_block_sums_zero(self, rng):
        cfg = NetworkConfig(4, 5, 0.1, 1.0)
        fb = shifted_nonlinearity(rng.normal(scale=3, size=20), cfg)
        np.testing.assert_allclose(fb.reshape(4, 5).sum(axis=1), 0.0, atol=1e-12)


class TestWeightMatrix:
    def test_rejects_nonzero_diagonal_block(self):
        A = np.zeros((4, 4))
        A[0, 1] = A[1, 0] = 1.0
        with pytest.raises(StructureError):
            WeightMatrix(A, 2, 2)

    def test_rejects_bad_shape(self):
        with pytest.raises((StructureError, DimensionError)):
            WeightMatrix(np.zeros((3, 3)), 2, 2)

    def test_rejects_non_finite(self):
        A = np.zeros((4, 4))
        A[0, 2] = A[2, 0] = np.nan
        with pytest.raises(StructureError):
            WeightMatrix(A, 2, 2)

    def test_row_sums_and_F(self, rng):
        W = structured_random_weights(3, 4, rng)
        sums = W.row_sums()
        assert sums.shape == (3, 4, 3)
        np.testing.assert_allclose(sums - sums[:, :1, :], 0.0, atol=1e-12)
        np.testing.assert_allclose(W.F, W.F.T, atol=1e-12)


class TestAssumptions:
    def test_random_structured_pass(self, rng):
        for n, m in [(2, 2), (3, 3), (4, 5)]:
            assert validate_assumptions(structured_random_weights(n, m, rng)).all_pass

    def test_asymmetry_detected(self, rng):
        A = structured_random_weights(3, 3, rng).entries.copy()
        A[0, 3] += 0.1
        rep = validate_assumptions(WeightMatrix(A, 3, 3))
        assert not rep.symmetric and not rep.all_pass
        assert rep.symmetry_violation == pytest.approx(0.1)

    def test_unequal_row_sums_detected(self, rng):
        A = structured_random_weights(2, 3, rng).entries.copy()
        A[0, 3] += 0.2
        A[3, 0] += 0.2
        rep = validate_assumptions(WeightMatrix(A, 2, 3))
        assert rep.symmetric
        assert not rep.equal_row_sums
        assert rep.F is None

    def test_report_lines(self, rng):
        lines = validate_assumptions(structured_random_weights(2, 3, rng)).lines()
        assert lines[-1] == "overall: pass"


class TestVectorField:
    def test_zero_at_trivial_equilibrium(self, rng):
        W, cfg = random_network(rng, 4, 3)
        eq = trivial_equilibrium(W, cfg)
        np.testing.assert_allclose(rhs_original(eq, W, cfg), 0.0, atol=1e-12)
        np.testing.assert_allclose(softmax_output(eq.s, cfg), 1 / 3, atol=1e-15)
        np.testing.assert_allclose(eq.a, cfg.g_bar_a / (cfg.alpha * cfg.m))

    def test_zero_weights_at_origin(self):
        cfg = NetworkConfig(2, 3, 0.2, 1.5)
        d = rhs_original(StateVector(np.zeros(6), np.zeros(6)), WeightMatrix.zeros(2, 3), cfg)
        np.testing.assert_allclose(d[:6], 0.0)
        np.testing.assert_allclose(d[6:], 1.5 / 3)

    def test_scalar_oracle(self, rng):
        W, cfg = random_network(rng, 2, 2)
        for _ in range(5):
            s, a = rng.normal(size=4), rng.normal(size=4)
            got = rhs_original(StateVector(s, a), W, cfg)
            want = scalar_rhs(s, a, W.entries, 2, 2, cfg.alpha, cfg.g_bar_a)
            np.testing.assert_allclose(got, want, atol=1e-10)

    def test_shifted_matches_original(self, rng):
        W, cfg = random_network(rng, 3, 4)
        eq = trivial_equilibrium(W, cfg).as_array()
        for _ in range(5):
            xb = rng.normal(size=24)
            np.testing.assert_allclose(rhs_shifted(xb, W, cfg), rhs_original(xb + eq, W, cfg),
                                       atol=1e-11)

    def test_dimension_mismatch(self, rng):
        W, cfg = random_network(rng, 2, 3)
        with pytest.raises(DimensionError):
            rhs_original(np.zeros(10), W, cfg)
        with pytest.raises(DimensionError):
            rhs_original(np.zeros(12), W, NetworkConfig(3, 2, 0.1, 1.0))

    def test_jacobian_finite_difference(self, rng):
        W, cfg = random_network(rng, 3, 3)
        x = rng.normal(size=18)
        J = jacobian_shifted(x, W, cfg)
        h = 1e-6
        fd = np.column_stack([(rhs_shifted(x + h * e, W, cfg) - rhs_shifted(x - h * e, W, cfg)) / (2 * h)
                              for e in np.eye(18)])
        assert np.linalg.norm(J - fd) / np.linalg.norm(J) < 1e-7

    def test_state_vector_arithmetic(self):
        x = StateVector(np.ones(3), np.zeros(3))
        y = StateVector(np.zeros(3), np.ones(3))
        np.testing.assert_allclose((x + y).as_array(), np.ones(6))
        np.testing.assert_allclose((x - y).as_array(), [1, 1, 1, -1, -1, -1])
        with pytest.raises(InvalidStateError):
            StateVector(np.array([np.nan]), np.zeros(1))


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 4), st.integers(2, 5),
       st.lists(st.floats(-30, 30), min_size=20, max_size=20))
def test_shifted_output_inequality(n, m, vals):
    cfg = NetworkConfig(n, m, 0.1, 1.0)
    s = np.array(vals[:n * m])
    fb = shifted_nonlinearity(s, cfg)
    assert s @ fb - 2 * fb @ fb >= -1e-12
    assert fb @ fb >= 0
