"""Nonlocal initial-condition operators g and their hypothesis checkers.

(The module is not called ``nonlocal`` because that word is a Python
keyword.)

Each variant realizes one way of coupling the initial state to the whole
trajectory: reading the final snapshot (periodic/antiperiodic), combining
prescribed interior times (multipoint), integrating the trajectory in
time (integral and its weighted mean-value special case), or ignoring the
trajectory altogether (fixed).

The theorem-side bounds on the data — sum of multipoint coefficients <= 1,
L^1 bound on the mean-value weight — are deliberately *not* constructor
invariants: ``check_g2`` must be able to falsify conditions violating
them, so the constructors only enforce structural sanity (ordering,
lengths, positivity of times).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DomainMismatchError
from .lp_space import GridFunction, lp_norm
from .reporting import CheckReport, Witness
from .sampling import TrajectorySampleSpec, trajectory_pairs, trajectory_samples
from .trajectory import Trajectory

__all__ = [
    "NonlocalCondition",
    "Periodic",
    "Antiperiodic",
    "Multipoint",
    "Integral",
    "MeanValue",
    "Fixed",
    "evaluate_g",
    "check_g2",
    "lipschitz_estimate",
]


class NonlocalCondition:
    """Base class; subclasses implement ``evaluate``."""

    def evaluate(self, traj: Trajectory) -> GridFunction:
        raise NotImplementedError


@dataclass(frozen=True)
class Periodic(NonlocalCondition):
    """g(u) = u(T)."""

    def evaluate(self, traj: Trajectory) -> GridFunction:
        return GridFunction(traj.domain, traj.snapshots[-1].copy())


@dataclass(frozen=True)
class Antiperiodic(NonlocalCondition):
    """g(u) = -u(T)."""

    def evaluate(self, traj: Trajectory) -> GridFunction:
        return GridFunction(traj.domain, -traj.snapshots[-1])


@dataclass(frozen=True)
class Multipoint(NonlocalCondition):
    """g(u) = sum_i c_i * gamma(u(t_i, .)), 0 < t_1 < ... < t_m <= T.

    The prescribed times must sit on the trajectory's grid (snap tolerance
    1e-9 * dt); interpolating would silently change g.
    """

    coefficients: tuple
    times: tuple
    gamma: Callable[[np.ndarray], np.ndarray]

    def __post_init__(self):
        c = tuple(float(v) for v in self.coefficients)
        t = tuple(float(v) for v in self.times)
        if len(c) != len(t) or not c:
            raise ValueError("coefficients and times must be equal-length and nonempty")
        if any(ti <= 0 for ti in t) or any(b <= a for a, b in zip(t, t[1:])):
            raise ValueError("times must be strictly increasing and positive")
        object.__setattr__(self, "coefficients", c)
        object.__setattr__(self, "times", t)

    def evaluate(self, traj: Trajectory) -> GridFunction:
        out = np.zeros(traj.domain.n_interior)
        for ci, ti in zip(self.coefficients, self.times):
            j = traj.time_index(ti)
            out += ci * np.asarray(self.gamma(traj.snapshots[j]), dtype=float)
        return GridFunction(traj.domain, out)


def _trapezoid_weights(n_steps: int, dt: float) -> np.ndarray:
    w = np.full(n_steps + 1, dt)
    w[0] = w[-1] = dt / 2.0
    return w


@dataclass(frozen=True)
class Integral(NonlocalCondition):
    """g(u)(x) = int_0^T eta(t, x, u(t,x)) dt, trapezoid over the snapshots.

    ``alpha_bound`` optionally declares the envelope |eta(t,x,v)| <=
    alpha_bound(t) |v|; it is metadata for report consumers (the existence
    theory wants its time integral at most 1), never enforced here.
    """

    eta: Callable[[float, np.ndarray, np.ndarray], np.ndarray]
    alpha_bound: Callable[[float], float] | None = None

    def evaluate(self, traj: Trajectory) -> GridFunction:
        x = traj.domain.nodes
        weights = _trapezoid_weights(traj.n_steps, traj.dt)
        out = np.zeros(traj.domain.n_interior)
        for w, t, snap in zip(weights, traj.times, traj.snapshots):
            out += w * np.asarray(self.eta(t, x, snap), dtype=float)
        return GridFunction(traj.domain, out)


@dataclass(frozen=True)
class MeanValue(NonlocalCondition):
    """g(u) = int_0^T alpha(t) u(t) dt with a nonnegative weight alpha.

    alpha = 1/T gives the plain mean value of the trajectory.
    """

    alpha: Callable[[float], float]

    def evaluate(self, traj: Trajectory) -> GridFunction:
        weights = _trapezoid_weights(traj.n_steps, traj.dt)
        a = np.array([float(self.alpha(t)) for t in traj.times])
        return GridFunction(traj.domain, (weights * a) @ traj.snapshots)


@dataclass(frozen=True)
class Fixed(NonlocalCondition):
    """g(u) = u0, ignoring the trajectory entirely."""

    u0: GridFunction

    def evaluate(self, traj: Trajectory) -> GridFunction:
        if traj.domain != self.u0.domain:
            raise DomainMismatchError("fixed initial state lives on a different domain")
        return GridFunction(self.u0.domain, self.u0.values.copy())


def evaluate_g(cond: NonlocalCondition, traj: Trajectory) -> GridFunction:
    """Apply the nonlocal operator to a trajectory."""
    return cond.evaluate(traj)


def check_g2(cond: NonlocalCondition, R: float, p: float,
             sample_spec: TrajectorySampleSpec) -> CheckReport:
    """Probe sup ||g(u)||_p over sampled trajectories with sup-t norm <= R.

    Passes when the maximum stays within R(1 + 1e-10); a failing sample is
    reported with its index and norms.
    """
    tol = R * 1e-10
    margins, witnesses = [], []
    max_norm = 0.0
    for i, traj in enumerate(trajectory_samples(sample_spec, p, R)):
        g_norm = lp_norm(evaluate_g(cond, traj), p)
        max_norm = max(max_norm, g_norm)
        margins.append(g_norm - R)
        if g_norm > R + tol:
            witnesses.append(Witness(
                where={"sample": i, "g_norm": g_norm,
                       "trajectory_sup_norm": traj.sup_norm(p)},
                margin=g_norm - R,
            ))
    report = CheckReport(
        name="nonlocal_bound",
        passed=max_norm <= R + tol,
        n_samples=sample_spec.n_samples,
        max_margin=float(max(margins)) if margins else float("-inf"),
        witnesses=witnesses,
        details={"radius": R, "max_g_norm": max_norm, "tolerance": tol},
    )
    return report


def lipschitz_estimate(cond: NonlocalCondition, p: float,
                       sample_spec: TrajectorySampleSpec) -> float:
    """Largest sampled ratio ||g(u)-g(v)||_p / sup_t ||u(t)-v(t)||_p.

    A lower bound on the true Lipschitz constant of g.
    """
    best = 0.0
    for u, v in trajectory_pairs(sample_spec, p, radius=1.0):
        denom = u.sup_gap(v, p)
        if denom == 0.0:
            continue
        num = lp_norm(GridFunction(u.domain,
                                   evaluate_g(cond, u).values - evaluate_g(cond, v).values), p)
        best = max(best, num / denom)
    return best
