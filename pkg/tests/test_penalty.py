import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from sgdtheta.cli.checks import tv1d_prox_bruteforce
from sgdtheta.exceptions import DimensionMismatchError, InfeasibleTargetError, NumericalFailure
from sgdtheta.penalty import (
    BregmanPair,
    PdhgConfig,
    PdhgState,
    PenaltySpec,
    PenaltyVariant,
    bregman_distance,
    grad2d,
    grad2d_adjoint,
    mirror_step,
    penalty_conjugate,
    penalty_value,
    tv_denoise_pdhg,
    tv_norm,
    tv_objective,
)

TIGHT = PdhgConfig(max_iters=20000, gap_tol=1e-12)
vec = arrays(np.float64, 6, elements=st.floats(-5, 5))


class TestSpec:
    def test_sigma(self):
        assert PenaltySpec.quadratic(3).sigma == 0.5
        assert PenaltySpec.nonneg(3).sigma == 0.5
        tv = PenaltySpec.tv((2, 3), 5.0)
        assert tv.sigma * 2 * tv.beta == 1.0
        assert tv.p == 2

    def test_pdhg_step_condition(self):
        with pytest.raises(ValueError):
            PdhgConfig(tau_primal=0.5, sigma_dual=0.5)
        PdhgConfig(tau_primal=0.25, sigma_dual=0.5)


class TestValue:
    def test_quadratic(self):
        assert penalty_value(PenaltySpec.quadratic(2), [3.0, 4.0]) == 12.5

    def test_nonneg_violation_is_infinite(self):
        assert penalty_value(PenaltySpec.nonneg(2), [1.0, -1.0]) == math.inf

    def test_tv_example(self):
        spec = PenaltySpec.tv((2, 2), 5.0)
        assert penalty_value(spec, np.array([[0.0, 1.0], [0.0, 1.0]]).ravel()) == pytest.approx(2.2, rel=1e-15)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            penalty_value(PenaltySpec.quadratic(3), [1.0, 2.0])

    def test_tv_isotropic_diagonal(self):
        # one pixel step in both directions: sqrt(1 + 1)
        assert tv_norm(np.array([[0.0, 1.0], [1.0, 1.0]])) == pytest.approx(math.sqrt(2))

    def test_gradient_adjoint(self):
        rng = np.random.default_rng(0)
        u = rng.standard_normal((5, 7))
        p = rng.standard_normal((2, 5, 7))
        assert np.sum(grad2d(u) * p) == pytest.approx(np.sum(u * grad2d_adjoint(p)), rel=1e-13)


class TestBregman:
    def test_quadratic_example(self):
        pair = BregmanPair(np.zeros(2), np.zeros(2))
        assert bregman_distance(PenaltySpec.quadratic(2), [1.0, 0.0], pair) == 0.5

    def test_nonneg_example(self):
        spec = PenaltySpec.nonneg(1)
        pair = mirror_step(spec, np.array([1.0]))
        assert bregman_distance(spec, [2.0], pair) == pytest.approx(0.5)

    def test_infeasible_target(self):
        spec = PenaltySpec.nonneg(2)
        with pytest.raises(InfeasibleTargetError):
            bregman_distance(spec, [-1.0, 0.0], mirror_step(spec, np.zeros(2)))

    @pytest.mark.parametrize("variant", ["quadratic", "nonneg", "tv"])
    def test_zero_at_itself(self, variant):
        rng = np.random.default_rng(1)
        spec = {"quadratic": PenaltySpec.quadratic(12), "nonneg": PenaltySpec.nonneg(12),
                "tv": PenaltySpec.tv((3, 4), 2.0)}[variant]
        pair = mirror_step(spec, rng.standard_normal(12), TIGHT)
        assert abs(bregman_distance(spec, pair.x, pair)) <= 1e-12

    @settings(max_examples=50, deadline=None)
    @given(vec, vec, st.sampled_from(["quadratic", "nonneg"]))
    def test_lower_bound_and_definition(self, xi, target, variant):
        spec = PenaltySpec.quadratic(6) if variant == "quadratic" else PenaltySpec.nonneg(6)
        if variant == "nonneg":
            target = np.abs(target)
        pair = mirror_step(spec, xi)
        d = bregman_distance(spec, target, pair)
        direct = penalty_value(spec, target) - penalty_value(spec, pair.x) - float(np.dot(pair.xi, target - pair.x))
        assert d == pytest.approx(direct, abs=1e-9)
        assert d >= spec.sigma * float(np.sum((target - pair.x) ** 2)) - 1e-9

    def test_lower_bound_tv(self):
        rng = np.random.default_rng(2)
        spec = PenaltySpec.tv((4, 4), 3.0)
        for _ in range(10):
            pair = mirror_step(spec, rng.standard_normal(16), TIGHT)
            target = rng.standard_normal(16)
            d = bregman_distance(spec, target, pair)
            assert d >= spec.sigma * float(np.sum((target - pair.x) ** 2)) - 1e-6

    @settings(max_examples=50, deadline=None)
    @given(vec, vec, vec)
    def test_three_point_identity_quadratic(self, xa, xb, target):
        spec = PenaltySpec.quadratic(6)
        a, b = mirror_step(spec, xa), mirror_step(spec, xb)
        lhs = bregman_distance(spec, target, b) - bregman_distance(spec, target, a)
        rhs = penalty_conjugate(spec, xb) - penalty_conjugate(spec, xa) - float(np.dot(xb - xa, target))
        assert lhs == pytest.approx(rhs, abs=1e-10 * (1 + abs(lhs)))


class TestMirrorStep:
    def test_nonneg_clips(self):
        pair = mirror_step(PenaltySpec.nonneg(3), np.array([1.0, -2.0, 0.5]))
        np.testing.assert_array_equal(pair.x, [1.0, 0.0, 0.5])
        np.testing.assert_array_equal(pair.xi, [1.0, -2.0, 0.5])

    def test_quadratic_zero(self):
        np.testing.assert_array_equal(mirror_step(PenaltySpec.quadratic(4), np.zeros(4)).x, np.zeros(4))

    def test_tv_constant(self):
        spec = PenaltySpec.tv((6, 5), 5.0)
        pair = mirror_step(spec, np.full(30, 0.3))
        np.testing.assert_allclose(pair.x, 1.5, atol=1e-12)

    def test_non_finite_dual(self):
        with pytest.raises(NumericalFailure):
            mirror_step(PenaltySpec.quadratic(2), np.array([np.nan, 0.0]))

    @pytest.mark.parametrize("variant", ["quadratic", "nonneg"])
    def test_argmin_against_random_points(self, variant):
        rng = np.random.default_rng(3)
        spec = PenaltySpec.quadratic(8) if variant == "quadratic" else PenaltySpec.nonneg(8)
        xi = rng.standard_normal(8)
        x = mirror_step(spec, xi).x
        best = penalty_value(spec, x) - float(np.dot(xi, x))
        for _ in range(1000):
            z = rng.standard_normal(8) * 2
            if variant == "nonneg":
                z = np.abs(z)
            assert penalty_value(spec, z) - float(np.dot(xi, z)) >= best - 1e-12


class TestTvDenoise:
    def test_constant_unchanged(self):
        g = np.full((4, 5), 2.5)
        np.testing.assert_array_equal(tv_denoise_pdhg(g, 1.0), g)

    def test_two_column_example_against_oracle(self):
        g = np.array([[0.0, 10.0], [0.0, 10.0]])
        z = tv_denoise_pdhg(g, 1.0, TIGHT)
        # each row is an independent 1D problem with the vertical jumps zero
        expected = tv1d_prox_bruteforce(np.array([0.0, 10.0]), 1.0)
        np.testing.assert_allclose(z, np.vstack([expected, expected]), atol=1e-6)
        np.testing.assert_allclose(expected, [1.0, 9.0], atol=1e-12)

    def test_oracle_two_point_closed_form(self):
        for g0, g1, beta in [(0.0, 1.0, 0.2), (0.0, 1.0, 3.0), (2.0, -1.0, 0.7)]:
            u = np.clip((g1 - g0) / (2 * beta), -1, 1)
            np.testing.assert_allclose(tv1d_prox_bruteforce(np.array([g0, g1]), beta),
                                       [g0 + beta * u, g1 - beta * u], atol=1e-12)

    def test_oracle_random_signals(self):
        rng = np.random.default_rng(4)
        for _ in range(30):
            L = int(rng.integers(1, 6))
            g = rng.uniform(-2, 2, L)
            beta = float(rng.uniform(0.2, 3))
            z = tv_denoise_pdhg(g.reshape(1, L), beta, TIGHT).ravel()
            assert np.max(np.abs(z - tv1d_prox_bruteforce(g, beta))) <= 1e-3

    @settings(max_examples=30, deadline=None)
    @given(arrays(np.float64, (4, 5), elements=st.floats(-3, 3)), st.floats(0.1, 10))
    def test_descent_and_mean(self, g, beta):
        z = tv_denoise_pdhg(g, beta)
        assert tv_objective(z, g, beta) <= tv_objective(g, g, beta) + 1e-12
        assert abs(z.mean() - g.mean()) <= 1e-8

    def test_warm_start_state(self):
        rng = np.random.default_rng(5)
        g = rng.standard_normal((8, 8))
        state = PdhgState()
        tv_denoise_pdhg(g, 1.0, state=state)
        cold = state.last_iters
        tv_denoise_pdhg(g, 1.0, state=state)
        assert state.dual.shape == (2, 8, 8)
        assert state.last_iters <= cold

    def test_rejects_non_finite(self):
        with pytest.raises(ValueError):
            tv_denoise_pdhg(np.array([[np.inf, 0.0]]), 1.0)

    def test_variant_values(self):
        assert {v.value for v in PenaltyVariant} == {"quadratic", "quadratic_nonneg", "quadratic_tv"}
