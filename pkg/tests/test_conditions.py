import numpy as np
import pytest

from nlheat import (
    Antiperiodic,
    Domain1D,
    Fixed,
    GridFunction,
    Integral,
    MeanValue,
    Multipoint,
    Periodic,
    Trajectory,
    check_g2,
    evaluate_g,
    lipschitz_estimate,
    lp_norm,
)
from nlheat.errors import GridAlignmentError
from nlheat.sampling import TrajectorySampleSpec

from conftest import sine_mode


def constant_traj(u, horizon=1.0, n_steps=16):
    return Trajectory.constant(u, horizon, n_steps)


def ramp_traj(w, delta, horizon, n_steps):
    """u(t) = min(t/delta, 1) * w; the kink must sit on the grid."""
    times = np.linspace(0.0, horizon, n_steps + 1)
    ramp = np.minimum(times / delta, 1.0)
    return Trajectory(w.domain, horizon, np.outer(ramp, w.values))


class TestEvaluate:
    def test_periodic_reads_final_snapshot(self, unit_domain):
        w = sine_mode(unit_domain)
        assert np.array_equal(evaluate_g(Periodic(), constant_traj(w)).values, w.values)

    def test_antiperiodic_negates(self, unit_domain):
        w = sine_mode(unit_domain)
        assert np.array_equal(evaluate_g(Antiperiodic(), constant_traj(w)).values,
                              -w.values)

    def test_single_point_multipoint_at_horizon_is_periodic(self, unit_domain):
        rng = np.random.default_rng(0)
        traj = Trajectory(unit_domain, 1.0,
                          rng.standard_normal((17, unit_domain.n_interior)))
        mp = Multipoint((1.0,), (1.0,), lambda v: v)
        assert np.allclose(evaluate_g(mp, traj).values,
                           evaluate_g(Periodic(), traj).values)

    def test_multipoint_combination(self, unit_domain):
        w = sine_mode(unit_domain)
        traj = ramp_traj(w, delta=0.5, horizon=1.0, n_steps=16)
        mp = Multipoint((0.25, 0.5), (0.5, 1.0), lambda v: v)
        assert np.allclose(evaluate_g(mp, traj).values, 0.75 * w.values, atol=1e-14)

    def test_multipoint_off_grid_time_errors(self, unit_domain):
        traj = Trajectory.zeros(unit_domain, 1.0, 16)
        mp = Multipoint((1.0,), (0.51,), lambda v: v)
        with pytest.raises(GridAlignmentError):
            evaluate_g(mp, traj)

    def test_integral_trapezoid_exact_for_linear(self, unit_domain):
        # u(t) = t*w and eta = v/T give (T/2) w exactly.
        w = sine_mode(unit_domain)
        horizon = 2.0
        times = np.linspace(0.0, horizon, 17)
        traj = Trajectory(unit_domain, horizon, np.outer(times, w.values))
        cond = Integral(lambda t, x, v: v / horizon)
        assert np.allclose(evaluate_g(cond, traj).values, (horizon / 2.0) * w.values,
                           rtol=1e-13)

    def test_fixed_ignores_trajectory(self, unit_domain):
        u0 = sine_mode(unit_domain, amplitude=0.3)
        rng = np.random.default_rng(1)
        for _ in range(3):
            traj = Trajectory(unit_domain, 1.0,
                              rng.standard_normal((9, unit_domain.n_interior)))
            assert np.array_equal(evaluate_g(Fixed(u0), traj).values, u0.values)

    def test_positive_homogeneity(self, unit_domain):
        rng = np.random.default_rng(2)
        snaps = rng.standard_normal((17, unit_domain.n_interior))
        traj = Trajectory(unit_domain, 1.0, snaps)
        scaled = Trajectory(unit_domain, 1.0, 3.5 * snaps)
        for cond in (Periodic(), Antiperiodic(),
                     Multipoint((0.4, 0.6), (0.5, 1.0), lambda v: v)):
            assert np.allclose(evaluate_g(cond, scaled).values,
                               3.5 * evaluate_g(cond, traj).values, rtol=1e-13)


class TestMeanValueSeparation:
    def test_ramp_vs_constant_gap_is_half_delta_over_horizon(self, unit_domain):
        # The weighted mean distinguishes trajectories agreeing on [delta, T]:
        # the gap is exactly delta/(2T) (trapezoid-exact, kink on the grid).
        w = sine_mode(unit_domain)
        horizon, n_steps = 1.0, 4096
        delta = 0.25
        cond = MeanValue(lambda t: 1.0 / horizon)
        ramp = ramp_traj(w, delta, horizon, n_steps)
        const = constant_traj(w, horizon, n_steps)
        gap = lp_norm(GridFunction(unit_domain,
                                   evaluate_g(cond, ramp).values
                                   - evaluate_g(cond, const).values), 2)
        expected = delta / (2.0 * horizon) * lp_norm(w, 2)
        assert gap == pytest.approx(expected, abs=1e-8)


class TestSequentialContinuityProxy:
    # Perturb t = 0 arbitrarily while converging on (0, T]: g must not care.
    def _perturbed(self, base, level, rng):
        snaps = base.snapshots.copy()
        snaps[1:] += level * rng.standard_normal(snaps[1:].shape)
        snaps[0] += rng.standard_normal(snaps.shape[1])  # O(1) garbage at t=0
        return Trajectory(base.domain, base.horizon, snaps)

    @pytest.mark.parametrize("make_cond", [
        lambda T: Periodic(),
        lambda T: Antiperiodic(),
        lambda T: Multipoint((0.5, 0.5), (T / 2, T), np.tanh),
        lambda T: MeanValue(lambda t: 1.0 / T),
        lambda T: Integral(lambda t, x, v: v / T),
    ], ids=["periodic", "antiperiodic", "multipoint", "mean_value", "integral"])
    def test_g_ignores_initial_snapshot_in_the_limit(self, unit_domain, make_cond):
        horizon = 1.0
        rng = np.random.default_rng(3)
        w = sine_mode(unit_domain)
        gaps = []
        for k in range(1, 6):
            # refine the grid and shrink the interior perturbation together
            n_steps = 16 * 2 ** k
            base = constant_traj(w, horizon, n_steps)
            cond = make_cond(horizon)
            target = evaluate_g(cond, base).values
            pert = self._perturbed(base, 4.0 ** -k, rng)
            gaps.append(lp_norm(GridFunction(unit_domain,
                                             evaluate_g(cond, pert).values - target), 2))
        assert gaps[-1] < 1e-2 * (1.0 + gaps[0])
        assert gaps[-1] < gaps[0]


def _spec(unit_domain, seed=0, n_samples=30, n_steps=64):
    return TrajectorySampleSpec(unit_domain, 1.0, n_steps, n_samples=n_samples,
                                seed=seed)


class TestG2Bound:
    def test_periodic_always_within_radius(self, unit_domain):
        report = check_g2(Periodic(), 0.8, 4.0, _spec(unit_domain))
        assert report.passed
        assert report.details["max_g_norm"] <= 0.8 * (1 + 1e-10)

    def test_contractive_multipoint_passes(self, unit_domain):
        cond = Multipoint((0.4, 0.6), (0.5, 1.0), np.tanh)
        assert check_g2(cond, 0.8, 4.0, _spec(unit_domain)).passed

    def test_overweight_multipoint_fails_with_witness(self, unit_domain):
        cond = Multipoint((2.0,), (0.5,), lambda v: v)
        report = check_g2(cond, 0.8, 4.0, _spec(unit_domain))
        assert not report.passed
        assert report.witnesses
        assert report.witnesses[0].where["g_norm"] > 0.8

    def test_mean_value_unit_weight_passes(self, unit_domain):
        cond = MeanValue(lambda t: 1.0)
        assert check_g2(cond, 0.8, 4.0, _spec(unit_domain)).passed


class TestLipschitzEstimate:
    def test_periodic_estimate_reaches_one(self, unit_domain):
        est = lipschitz_estimate(Periodic(), 4.0, _spec(unit_domain))
        assert est <= 1.0 + 1e-10
        # the pair differing only at t = T realizes the constant exactly
        assert est == pytest.approx(1.0, abs=1e-10)

    def test_multipoint_bounded_by_gamma_lipschitz_times_weights(self, unit_domain):
        cond = Multipoint((0.3, 0.5), (0.5, 1.0), lambda v: 0.5 * v)
        est = lipschitz_estimate(cond, 4.0, _spec(unit_domain))
        assert est <= 0.5 * (0.3 + 0.5) + 1e-10

    def test_mean_value_bounded_by_weight_mass(self, unit_domain):
        cond = MeanValue(lambda t: 0.75)
        est = lipschitz_estimate(cond, 4.0, _spec(unit_domain))
        assert est <= 0.75 + 1e-10
        # constant-difference pairs realize the bound
        assert est == pytest.approx(0.75, abs=1e-6)

    def test_fixed_condition_has_zero_constant(self, unit_domain):
        u0 = sine_mode(unit_domain, amplitude=0.2)
        assert lipschitz_estimate(Fixed(u0), 4.0, _spec(unit_domain)) == 0.0


class TestStructuralValidation:
    def test_multipoint_rejects_bad_times(self):
        with pytest.raises(ValueError):
            Multipoint((1.0,), (0.0,), lambda v: v)
        with pytest.raises(ValueError):
            Multipoint((0.5, 0.5), (0.7, 0.3), lambda v: v)
        with pytest.raises(ValueError):
            Multipoint((0.5,), (0.3, 0.7), lambda v: v)


class TestVariantConsistency:
    def test_mean_value_is_the_linear_integral_condition(self, unit_domain):
        # MeanValue(alpha) and Integral(eta = alpha(t) v) are the same map.
        rng = np.random.default_rng(9)
        traj = Trajectory(unit_domain, 1.0,
                          rng.standard_normal((33, unit_domain.n_interior)))
        alpha = lambda t: 0.5 + 0.5 * t
        mv = evaluate_g(MeanValue(alpha), traj)
        integ = evaluate_g(Integral(lambda t, x, v: alpha(t) * v), traj)
        assert np.allclose(mv.values, integ.values, rtol=1e-13)
