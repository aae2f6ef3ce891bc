import numpy as np
import pytest

from nlheat import (
    Domain1D,
    GridFunction,
    SpectralOperator,
    apply_semigroup,
    dst,
    idst,
    lp_norm,
    phi1_apply,
    smoothing_constant,
)
from nlheat.errors import InvalidExponentError, InvalidTimeError
from nlheat.oracle import FdOperator, expm_apply
from nlheat.sampling import smooth_grid_function

from conftest import random_grid_function, sine_mode


class TestTransform:
    def test_pure_mode_has_unit_coefficient(self, unit_domain):
        c = dst(sine_mode(unit_domain))
        expected = np.zeros(unit_domain.n_interior)
        expected[0] = 1.0
        assert np.allclose(c.coeffs, expected, atol=1e-14)

    def test_round_trip(self, unit_domain):
        rng = np.random.default_rng(0)
        u = random_grid_function(unit_domain, rng)
        back = idst(dst(u))
        assert np.max(np.abs(back.values - u.values)) <= 1e-12 * np.max(np.abs(u.values))

    def test_zero_maps_to_zero(self, unit_domain):
        c = dst(GridFunction.zeros(unit_domain))
        assert np.all(c.coeffs == 0.0)

    def test_parseval(self, unit_domain):
        rng = np.random.default_rng(1)
        u = random_grid_function(unit_domain, rng)
        lhs = unit_domain.dx * np.sum(u.values ** 2)
        rhs = unit_domain.length / 2.0 * np.sum(dst(u).coeffs ** 2)
        assert lhs == pytest.approx(rhs, rel=1e-13)


class TestApplySemigroup:
    def test_single_mode_decay_factor(self):
        # L = pi puts the first eigenvalue at 1, so S(1) scales by e^{-1}.
        dom = Domain1D(np.pi, 64)
        op = SpectralOperator(dom)
        u = sine_mode(dom)
        out = apply_semigroup(op, 1.0, u)
        assert np.allclose(out.values, np.exp(-1.0) * u.values, rtol=1e-12)

    def test_zero_time_is_identity(self, unit_operator, unit_domain):
        rng = np.random.default_rng(2)
        u = random_grid_function(unit_domain, rng)
        assert np.array_equal(apply_semigroup(unit_operator, 0.0, u).values, u.values)

    def test_negative_time_rejected(self, unit_operator, unit_domain):
        with pytest.raises(InvalidTimeError):
            apply_semigroup(unit_operator, -0.1, GridFunction.zeros(unit_domain))

    def test_matches_finite_difference_exponential(self):
        # Two independent discretizations agree to O(dx^2) on smooth data.
        dom = Domain1D(1.0, 32)
        op = SpectralOperator(dom)
        fd = FdOperator(dom)
        u = smooth_grid_function(dom, np.random.default_rng(3))
        a = apply_semigroup(op, 0.37, u)
        b = expm_apply(fd, 0.37, u)
        rel = lp_norm(GridFunction(dom, a.values - b.values), 2) / lp_norm(u, 2)
        assert rel <= 2e-4

    def test_semigroup_law(self):
        dom = Domain1D(1.0, 128)
        op = SpectralOperator(dom)
        rng = np.random.default_rng(4)
        for _ in range(20):
            u = random_grid_function(dom, rng)
            t, s = rng.uniform(0.0, 2.0, size=2)
            once = apply_semigroup(op, t + s, u)
            twice = apply_semigroup(op, t, apply_semigroup(op, s, u))
            gap = lp_norm(GridFunction(dom, once.values - twice.values), 2)
            assert gap <= 1e-12 * lp_norm(u, 2)

    def test_l2_contraction(self):
        dom = Domain1D(1.0, 128)
        op = SpectralOperator(dom)
        rng = np.random.default_rng(5)
        for _ in range(20):
            u = random_grid_function(dom, rng)
            t = rng.uniform(0.0, 2.0)
            assert lp_norm(apply_semigroup(op, t, u), 2) <= lp_norm(u, 2) + 1e-14

    @pytest.mark.parametrize("p", [3.0, 4.0])
    def test_lp_contraction_on_smooth_profiles(self, p):
        # Quadrature slack 1e-8 covers the rectangle rule on smooth data.
        dom = Domain1D(1.0, 96)
        op = SpectralOperator(dom)
        rng = np.random.default_rng(6)
        for _ in range(20):
            u = smooth_grid_function(dom, rng)
            t = rng.uniform(0.01, 1.0)
            assert lp_norm(apply_semigroup(op, t, u), p) <= (1 + 1e-8) * lp_norm(u, p)

    def test_strong_continuity(self):
        dom = Domain1D(1.0, 64)
        op = SpectralOperator(dom)
        u = smooth_grid_function(dom, np.random.default_rng(7))
        gaps = []
        for t in (1e-1, 1e-2, 1e-3):
            out = apply_semigroup(op, t, u)
            gaps.append(lp_norm(GridFunction(dom, out.values - u.values), 2))
        assert gaps[0] > gaps[1] > gaps[2]
        assert gaps[2] < gaps[0] / 3.0


class TestPhi1:
    def test_single_mode_closed_form(self):
        dom = Domain1D(np.pi, 32)
        op = SpectralOperator(dom)
        v = sine_mode(dom)
        out = phi1_apply(op, 1.0, v)
        assert np.allclose(out.values, (1.0 - np.exp(-1.0)) * v.values, rtol=1e-12)

    def test_small_eigenvalue_limit_is_t(self):
        # With lambda*t tiny the weight collapses to t itself.
        from nlheat.semigroup import phi1_weights

        lam = np.array([1e-12, 1e-9, 1e-6])
        w = phi1_weights(lam, 0.5)
        assert np.allclose(w, 0.5, rtol=1e-6)

    def test_matches_brute_force_quadrature(self, unit_operator, unit_domain):
        # Trapezoid of S(t - s) v over 10^4 panels is the independent check.
        # v must be smooth: the panels cannot resolve the boundary layer of
        # modes with lambda comparable to 1/panel.
        v = smooth_grid_function(unit_domain, np.random.default_rng(8))
        t = 0.3
        panels = 10_000
        s_grid = np.linspace(0.0, t, panels + 1)
        acc = np.zeros(unit_domain.n_interior)
        for i, s in enumerate(s_grid):
            weight = 0.5 if i in (0, panels) else 1.0
            acc += weight * apply_semigroup(unit_operator, t - s, v).values
        acc *= t / panels
        out = phi1_apply(unit_operator, t, v)
        assert np.max(np.abs(out.values - acc)) <= 1e-8

    def test_nonpositive_time_rejected(self, unit_operator, unit_domain):
        with pytest.raises(InvalidTimeError):
            phi1_apply(unit_operator, 0.0, GridFunction.zeros(unit_domain))


class TestSmoothingConstant:
    def test_unit_base_point(self):
        t = 1.0 / (4.0 * np.pi)
        for (p, q, k) in [(4.0, 2.0, 1), (6.0, 2.0, 3), (3.0, 2.0, 2)]:
            assert smoothing_constant(t, p, q, k).value == pytest.approx(1.0, rel=1e-14)

    def test_closed_form_value(self):
        # (4 pi)^(-1/8), evaluated directly.
        bound = smoothing_constant(1.0, 4.0, 2.0, 1)
        assert bound.value == pytest.approx(0.728783895275958, abs=1e-9)
        assert bound.exponent == pytest.approx(0.125)
        assert bound.integrable

    def test_integrability_flag_matches_exponent_constraint(self):
        # k=3, q=2, p=4: exponent 3/8 < 1 and p q/(p-q) = 4 > k/2 = 1.5.
        bound = smoothing_constant(1.0, 4.0, 2.0, 3)
        assert bound.exponent == pytest.approx(3.0 / 8.0)
        assert bound.integrable
        assert 4.0 * 2.0 / (4.0 - 2.0) > 1.5

    def test_rejects_bad_exponents(self):
        with pytest.raises(InvalidExponentError):
            smoothing_constant(1.0, 2.0, 2.0, 1)
        with pytest.raises(InvalidExponentError):
            smoothing_constant(1.0, 2.0, 4.0, 1)

    def test_smoothing_inequality_sampled(self):
        # ||S(t) xi||_4 <= 1.05 c(t) ||xi||_2 on smooth profiles.
        dom = Domain1D(1.0, 96)
        op = SpectralOperator(dom)
        rng = np.random.default_rng(9)
        for _ in range(25):
            xi = smooth_grid_function(dom, rng)
            t = rng.uniform(1e-2, 1.0)
            c = smoothing_constant(t, 4.0, 2.0, 1).value
            assert lp_norm(apply_semigroup(op, t, xi), 4) <= 1.05 * c * lp_norm(xi, 2)
