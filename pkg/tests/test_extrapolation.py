import numpy as np
import pytest

from fixops.extrapolation import (
    ExtrapolationState,
    lemma_a_plus_b,
    tau_hat_ball_affine,
    tau_star_common,
    tau_star_pair,
)
from fixops.operators import Ball, Hyperplane, identity, projection, relax
from fixops.parameter_algebra import nu_star_value


def proj_hyperplane(a, b, x):
    a = np.asarray(a, float)
    x = np.asarray(x, float)
    return x - ((x @ a - b) / (a @ a)) * a


def proj_ball(c, r, x):
    c = np.asarray(c, float)
    d = np.asarray(x, float) - c
    n = np.linalg.norm(d)
    return x.copy() if n <= r else c + (r / n) * d


class TestLemmaAPlusB:
    def test_zero_b_reduces_to_lam(self):
        for lam in (0.3, 1.0, 3.5):
            out = lemma_a_plus_b(lam, 1.0, [1.0, 0.0], [0.0, 0.0])
            assert out.ratio == pytest.approx(lam, rel=1e-15)
            assert not out.degenerate

    def test_cancelling_pair_is_degenerate(self):
        out = lemma_a_plus_b(1.0, 1.0, [1.0, 0.0], [-1.0, 0.0])
        assert out.denominator == pytest.approx(1.0)
        assert out.ratio == 0.0
        assert out.degenerate

    def test_random_sweep_bounded_by_nu_star(self, rng):
        for _ in range(10_000):
            lam, mu = rng.uniform(0.05, 3.9, size=2)
            while lam * mu >= 4.0:
                lam, mu = rng.uniform(0.05, 3.9, size=2)
            a = rng.standard_normal(4)
            b = rng.standard_normal(4)
            out = lemma_a_plus_b(lam, mu, a, b)
            assert out.denominator > 0.0
            assert out.ratio <= nu_star_value(lam, mu) + 1e-10
            assert out.ratio >= 0.0

    def test_rejects_zero_inputs(self):
        with pytest.raises(ValueError):
            lemma_a_plus_b(1.0, 1.0, [0.0, 0.0], [0.0, 0.0])

    def test_rejects_large_product(self):
        with pytest.raises(ValueError):
            lemma_a_plus_b(2.0, 2.0, [1.0, 0.0], [0.0, 1.0])


class TestTauStarPair:
    def test_both_fixed_returns_one(self):
        zero = np.zeros(2)
        state = ExtrapolationState(zero, zero, zero, zero, 1.0, 1.0)
        assert tau_star_pair(state) == 1.0

    def test_single_factor_reduction(self):
        state = ExtrapolationState(np.array([1.0, 0.0]), np.zeros(2),
                                   np.zeros(2), np.zeros(2), 3.0, 1.0)
        assert tau_star_pair(state) == pytest.approx(3.0, rel=1e-15)

    def test_second_point_fixed_uses_plain_displacements(self, rng):
        # with a2 = b2 = 0 the numerator is ||a1 + b1||^2
        a1 = rng.standard_normal(3)
        b1 = rng.standard_normal(3)
        state = ExtrapolationState(a1, b1, np.zeros(3), np.zeros(3), 1.5, 1.2)
        denom = (a1 @ a1) / 1.5 + (b1 @ b1) / 1.2 + a1 @ b1
        expected = ((a1 + b1) @ (a1 + b1)) / denom
        assert tau_star_pair(state) == pytest.approx(expected, rel=1e-14)

    def test_state_requires_small_product(self):
        with pytest.raises(ValueError):
            ExtrapolationState(np.ones(2), np.ones(2), np.ones(2), np.ones(2), 2.0, 2.0)

    def test_from_points(self, rng):
        A = Hyperplane([0.0, 1.0], 0.0)
        B = Hyperplane([1.0, 0.0], 0.0)
        T = relax(projection(A), 3.0)
        U = relax(projection(B), 1.0)
        x, y = rng.standard_normal(2), rng.standard_normal(2)
        state = ExtrapolationState.from_points(T, U, 3.0, 1.0, x, y)
        tx, ty = T(x), T(y)
        assert np.allclose(state.a1, tx - x)
        assert np.allclose(state.b2, U(ty) - ty)


class TestTauStarCommon:
    def test_common_fixed_point_returns_one(self):
        A = Hyperplane([0.0, 1.0], 0.0)
        B = Hyperplane([1.0, 0.0], 0.0)
        T = relax(projection(A), 3.0)
        U = relax(projection(B), 1.0)
        assert tau_star_common(T, U, 3.0, 1.0, np.zeros(2)) == 1.0

    def test_identity_outer_reduces_to_lam(self, rng):
        A = Hyperplane([0.0, 1.0], 0.0)
        T = relax(projection(A), 2.5)
        U = identity(2)
        x = np.array([0.3, 1.7])
        assert tau_star_common(T, U, 2.5, 1.0, x) == pytest.approx(2.5, rel=1e-14)

    def test_thirty_degree_hyperplanes_against_oracle(self):
        # independently recompute tau from raw projection formulas
        lam, mu = 3.0, 1.0
        a_vec = np.array([0.0, 1.0])
        theta = np.deg2rad(30.0)
        b_vec = np.array([-np.sin(theta), np.cos(theta)])
        T = relax(projection(Hyperplane(a_vec, 0.0)), lam)
        U = relax(projection(Hyperplane(b_vec, 0.0)), mu)
        x = np.array([0.0, 1.0])
        tx = x + lam * (proj_hyperplane(a_vec, 0.0, x) - x)
        a1 = tx - x
        b1 = mu * (proj_hyperplane(b_vec, 0.0, tx) - tx)
        expected = ((a1 + b1) @ (a1 + b1)) / (
            (a1 @ a1) / lam + (b1 @ b1) / mu + a1 @ b1)
        got = tau_star_common(T, U, lam, mu, x)
        assert got == pytest.approx(expected, rel=1e-13)

    def test_bounded_by_nu_star(self, rng):
        lam, mu = 1.8, 1.3
        nu = nu_star_value(lam, mu)
        A = Hyperplane([0.0, 1.0, 0.5], 0.0)
        B = Ball([0.0, 0.5, 0.0], 2.0)
        T = relax(projection(A), lam)
        U = relax(projection(B), mu)
        for _ in range(500):
            x = 4.0 * rng.standard_normal(3)
            tau = tau_star_common(T, U, lam, mu, x)
            assert 0.0 < tau <= nu

    def test_generalized_cutter_inequality(self, rng):
        # tau(x) <z - x, UT(x) - x> >= ||UT(x) - x||^2 for common fixed points z
        lam, mu = 3.0, 1.0
        A = Hyperplane([0.0, 1.0], 0.0)
        B = Hyperplane([1.0, 0.0], 0.0)
        T = relax(projection(A), lam)
        U = relax(projection(B), mu)
        z = np.zeros(2)
        for _ in range(500):
            x = 5.0 * rng.standard_normal(2)
            tau = tau_star_common(T, U, lam, mu, x)
            utx = U(T(x))
            assert tau * float((z - x) @ (utx - x)) >= float((utx - x) @ (utx - x)) - 1e-9


class TestTauHatBallAffine:
    def setup_method(self):
        self.ball = Ball([0.0, 1.0], 1.0)
        self.line = Hyperplane([0.0, 1.0], 0.0)
        self.tangency = np.zeros(2)

    def test_fixed_point_returns_one(self):
        assert tau_hat_ball_affine(self.ball, self.line, 3.0, self.tangency) == 1.0

    def test_zero_b_reduces_to_lam(self):
        # ball centered on the line: T(x) stays on the line, so b1 = 0
        ball = Ball([0.0, 0.0], 1.0)
        tau = tau_hat_ball_affine(ball, self.line, 3.0, np.array([2.0, 0.0]))
        assert tau == pytest.approx(3.0, rel=1e-14)

    def test_matches_raw_projection_oracle(self):
        lam = 3.0
        x = np.array([2.0, 0.0])
        tx = x + lam * (proj_ball([0.0, 1.0], 1.0, x) - x)
        a1 = tx - x
        b1 = proj_hyperplane([0.0, 1.0], 0.0, tx) - tx
        denom = (a1 @ a1) / lam + b1 @ b1 + a1 @ b1 - (b1 @ b1) / lam
        expected = min(((a1 + b1) @ (a1 + b1)) / denom, nu_star_value(lam, 1.0))
        got = tau_hat_ball_affine(self.ball, self.line, lam, x)
        assert got == pytest.approx(expected, rel=1e-13)

    def test_dominates_tau_star_at_known_fixed_point(self, rng):
        # tau_bar(x) >= tau*(x, z) with z the tangency point
        lam = 3.0
        T = relax(projection(self.ball), lam)
        U = projection(self.line)
        for _ in range(300):
            x = np.array([rng.uniform(-6.0, 6.0), 0.0])
            tau_hat = tau_hat_ball_affine(self.ball, self.line, lam, x)
            state = ExtrapolationState.from_points(T, U, lam, 1.0, x, self.tangency)
            tau_star = tau_star_pair(state)
            assert tau_hat >= min(tau_star, nu_star_value(lam, 1.0)) - 1e-12

    def test_never_exceeds_nu_star(self, rng):
        lam = 3.0
        nu = nu_star_value(lam, 1.0)
        for _ in range(300):
            x = np.array([rng.uniform(-6.0, 6.0), 0.0])
            assert tau_hat_ball_affine(self.ball, self.line, lam, x) <= nu

    def test_gap_case_exact_formula_oracle(self, rng):
        # disjoint ball and line with known fixed point z: tau*(x, z) from the
        # pair formula agrees with the closed form using the gap vector d
        lam = 3.0
        ball = Ball([0.0, 2.0], 1.0)
        line = Hyperplane([0.0, 1.0], 0.0)
        T = relax(projection(ball), lam)
        U = projection(line)
        z = np.zeros(2)  # U(T(z)) = z for this geometry
        assert np.allclose(U(T(z)), z, atol=1e-14)
        d = z - ball.project(z)
        for _ in range(200):
            # stay away from the fixed point itself, where both expressions
            # cancel to 0/0 and the comparison is ill-conditioned
            x = np.array([float(rng.choice([-1.0, 1.0])) * rng.uniform(0.5, 5.0), 0.0])
            tx = T(x)
            a1 = tx - x
            b1 = U(tx) - tx
            denom = ((a1 @ a1) / lam + b1 @ b1 + a1 @ b1
                     + lam * (d @ d) - 2.0 * (b1 @ d))
            expected = ((a1 + b1) @ (a1 + b1)) / denom
            state = ExtrapolationState.from_points(T, U, lam, 1.0, x, z)
            assert tau_star_pair(state) == pytest.approx(expected, rel=1e-10)

    def test_domain_validation(self):
        with pytest.raises(ValueError):
            tau_hat_ball_affine(self.ball, self.line, 3.0, np.array([1.0, 1.0]))
        with pytest.raises(ValueError):
            tau_hat_ball_affine(self.ball, self.line, 0.5, self.tangency)
        with pytest.raises(ValueError):
            tau_hat_ball_affine(self.ball, Ball([0.0, 0.0], 1.0), 3.0, self.tangency)
