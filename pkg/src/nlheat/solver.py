"""Mild-solution time stepping and the fixed-point iteration for nonlocal problems.

The outer iteration is damped Picard on the *whole trajectory*: iterate the
map that sends a candidate trajectory q to the mild evolution started from
the (optionally smoothed) nonlocal value g(q) and driven by the frozen
forcing t -> f(t, q(t)).  This covers every condition variant uniformly,
including the integral and multipoint conditions where g reads the whole
trajectory; shooting on the initial value alone would privilege the
periodic case.

The frozen forcing uses the same quadrature weights as the stepper, so a
Picard fixed point is exactly a stepper-consistent discrete mild solution.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .conditions import NonlocalCondition, evaluate_g
from .errors import (
    BallExit,
    BlowUpError,
    DomainMismatchError,
    MaxIterExceeded,
    NonFiniteValue,
)
from .lp_space import GridFunction, duality_pairing, lp_norm, upper_semi_inner
from .nemytskii import Nonlinearity, evaluate_values, superpose
from .reporting import CheckReport, Witness
from .sampling import SampleSpec, smooth_profile
from .semigroup import (
    SpectralOperator,
    apply_semigroup,
    decay_weights,
    etd2_weights,
    inverse_transform_values,
    phi1_weights,
    transform_values,
)
from .trajectory import Trajectory

__all__ = [
    "STEPPERS",
    "Shell",
    "SolverConfig",
    "SolveReport",
    "SolveResult",
    "FamilyEntry",
    "FamilyResult",
    "SweepRow",
    "SweepReport",
    "BenilanReport",
    "ProbeReport",
    "cauchy_solve",
    "forcing_trajectory",
    "sigma_apply",
    "solve_nonlocal",
    "approximation_family",
    "continuation_sweep",
    "transversality_check",
    "benilan_gap",
    "uniqueness_probe",
]

STEPPERS = ("exponential_euler", "etd2")

# States beyond this magnitude are classified as blown up before
# floating-point overflow corrupts the forcing evaluation.
BLOWUP_THRESHOLD = 1e150


@dataclass(frozen=True)
class Shell:
    """Radii of the spherical shell probed by the transversality check."""

    r0: float
    R0: float

    def __post_init__(self):
        if not (0.0 <= self.r0 < self.R0):
            raise ValueError(f"shell needs 0 <= r0 < R0, got r0={self.r0!r}, R0={self.R0!r}")


@dataclass(frozen=True)
class SolverConfig:
    """Working radii, iteration controls and stepper selection.

    ``smoothing_n`` absent means "solve the limit problem directly"; a
    finite n composes both the forcing and the nonlocal value with S(1/n).
    ``lam`` is the continuation parameter: the trajectory map is scaled by
    it, and lam = 0 sends everything to the zero trajectory.
    """

    R_ball: float
    R_outer: float
    r_inner: float = 0.0
    picard_tol: float = 1e-10
    picard_max_iter: int = 200
    relaxation: float = 1.0
    smoothing_n: Optional[int] = None
    stepper: str = "exponential_euler"
    lam: float = 1.0

    def __post_init__(self):
        if not (self.r_inner < self.R_ball < self.R_outer):
            raise ValueError(
                f"radii must satisfy r_inner < R_ball < R_outer, got "
                f"{self.r_inner!r}, {self.R_ball!r}, {self.R_outer!r}"
            )
        if self.picard_tol <= 0:
            raise ValueError(f"picard_tol must be positive, got {self.picard_tol!r}")
        if self.picard_max_iter < 1:
            raise ValueError("picard_max_iter must be at least 1")
        if not (0.0 < self.relaxation <= 1.0):
            raise ValueError(f"relaxation must lie in (0, 1], got {self.relaxation!r}")
        if self.smoothing_n is not None and self.smoothing_n < 1:
            raise ValueError(f"smoothing_n must be a positive integer, got {self.smoothing_n!r}")
        if self.stepper not in STEPPERS:
            raise ValueError(f"stepper must be one of {STEPPERS}, got {self.stepper!r}")
        if not (0.0 <= self.lam <= 1.0):
            raise ValueError(f"lam must lie in [0, 1], got {self.lam!r}")


def _multipliers(op: SpectralOperator, dt: float, smoothing_n: Optional[int]):
    lam = op.eigenvalues
    decay = decay_weights(lam, dt)
    w1 = phi1_weights(lam, dt)
    w2 = etd2_weights(lam, dt)
    smooth = decay_weights(lam, 1.0 / smoothing_n) if smoothing_n else np.ones_like(lam)
    return decay, w1, w2, smooth


def _validate_stepper(stepper: str) -> None:
    if stepper not in STEPPERS:
        raise ValueError(f"stepper must be one of {STEPPERS}, got {stepper!r}")


def cauchy_solve(xi: GridFunction, h: Nonlinearity, op: SpectralOperator,
                 horizon: float, n_steps: int, stepper: str = "exponential_euler",
                 smoothing_n: Optional[int] = None) -> Trajectory:
    """March the mild formula from a fixed initial state.

    Exponential Euler freezes the forcing at the left endpoint of each
    step and integrates it against the semigroup exactly; etd2 adds the
    standard predictor-corrector second stage.  With h identically zero
    both reduce to the exact semigroup action mode by mode.

    A snapshot that becomes non-finite, or grows past BLOWUP_THRESHOLD
    (after which the forcing evaluation would overflow anyway), raises
    :class:`BlowUpError` with the first bad step index.
    """
    _validate_stepper(stepper)
    if xi.domain != op.domain:
        raise DomainMismatchError("initial state and operator live on different domains")
    if n_steps < 1:
        raise ValueError("need at least one time step")
    dt = horizon / n_steps
    x = op.domain.nodes
    decay, w1, w2, smooth = _multipliers(op, dt, smoothing_n)

    snaps = np.empty((n_steps + 1, op.domain.n_interior))
    snaps[0] = xi.values
    u = xi.values.copy()
    for j in range(n_steps):
        t = j * dt
        f_hat = smooth * transform_values(evaluate_values(h, t, x, u))
        u_hat = decay * transform_values(u) + w1 * f_hat
        if stepper == "etd2":
            predictor = inverse_transform_values(u_hat)
            f_hat_next = smooth * transform_values(
                evaluate_values(h, t + dt, x, predictor))
            u_hat = u_hat + w2 * (f_hat_next - f_hat)
        u = inverse_transform_values(u_hat)
        if not np.all(np.isfinite(u)) or np.max(np.abs(u)) > BLOWUP_THRESHOLD:
            raise BlowUpError(step_index=j + 1)
        snaps[j + 1] = u
    return Trajectory(op.domain, horizon, snaps)


def forcing_trajectory(h: Nonlinearity, traj: Trajectory,
                       op: Optional[SpectralOperator] = None,
                       smoothing_n: Optional[int] = None) -> Trajectory:
    """Snapshot-wise forcing t_j -> f(t_j, u(t_j)) along a trajectory.

    This reproduces exactly the forcing values the steppers consumed at
    snapshot times (the forcing is a pure function of the snapshot);
    ``smoothing_n`` composes with S(1/n) like the solver would.
    """
    x = traj.domain.nodes
    rows = np.empty_like(traj.snapshots)
    for j, t in enumerate(traj.times):
        rows[j] = evaluate_values(h, t, x, traj.snapshots[j])
    if smoothing_n is not None:
        if op is None:
            raise ValueError("smoothing a forcing requires the spectral operator")
        mult = decay_weights(op.eigenvalues, 1.0 / smoothing_n)
        rows = inverse_transform_values(mult * transform_values(rows))
    return Trajectory(traj.domain, traj.horizon, rows)


def sigma_apply(traj: Trajectory, lam: float, smoothing_n: Optional[int],
                h: Nonlinearity, cond: NonlocalCondition, op: SpectralOperator,
                stepper: str = "exponential_euler") -> Trajectory:
    """One application of the trajectory map with frozen forcing.

    Returns lam * [mild evolution from S(1/n) g(q) driven by S(1/n) f(., q(.))]
    where q is the *input* trajectory; the map is evaluated, never iterated,
    here.  lam = 0 yields the zero trajectory exactly.
    """
    _validate_stepper(stepper)
    if traj.domain != op.domain:
        raise DomainMismatchError("trajectory and operator live on different domains")
    dt = traj.dt
    n_steps = traj.n_steps
    x = op.domain.nodes
    decay, w1, w2, smooth = _multipliers(op, dt, smoothing_n)

    f_hat = np.empty_like(traj.snapshots)
    for j, t in enumerate(traj.times):
        f_hat[j] = transform_values(evaluate_values(h, t, x, traj.snapshots[j]))
    f_hat *= lam * smooth

    u_hat = lam * smooth * transform_values(evaluate_g(cond, traj).values)
    snaps = np.empty_like(traj.snapshots)
    snaps[0] = inverse_transform_values(u_hat)
    for j in range(n_steps):
        u_hat = decay * u_hat + w1 * f_hat[j]
        if stepper == "etd2":
            u_hat = u_hat + w2 * (f_hat[j + 1] - f_hat[j])
        row = inverse_transform_values(u_hat)
        if not np.all(np.isfinite(row)) or np.max(np.abs(row)) > BLOWUP_THRESHOLD:
            raise BlowUpError(step_index=j + 1)
        snaps[j + 1] = row
    return Trajectory(traj.domain, traj.horizon, snaps)


@dataclass
class SolveReport:
    """Iteration history and ball occupancy of one nonlocal solve."""

    converged: bool
    iterations: int
    residuals: list
    sup_norms: list
    p: float
    R_ball: float
    R_outer: float
    snapshot_norms: Optional[np.ndarray] = None
    failure: Optional[str] = None

    @property
    def occupancy(self) -> float:
        """Largest sup-t norm seen along the iteration, vs the working radius."""
        return max(self.sup_norms) if self.sup_norms else 0.0

    @property
    def contraction_factor(self) -> Optional[float]:
        """Worst residual ratio r_{k+1}/r_k for k >= 1 above the roundoff floor.

        The first ratio is excluded: it measures the initial-guess
        transient, not the contraction of the map.
        """
        floor = 1e3 * np.finfo(float).eps * max(self.sup_norms, default=1.0)
        ratios = [
            self.residuals[k + 1] / self.residuals[k]
            for k in range(1, len(self.residuals) - 1)
            if self.residuals[k + 1] > floor and self.residuals[k] > 0.0
        ]
        return max(ratios) if ratios else None

    def to_dict(self) -> dict:
        return {
            "converged": self.converged,
            "iterations": self.iterations,
            "residuals": [float(r) for r in self.residuals],
            "sup_norms": [float(s) for s in self.sup_norms],
            "p": self.p,
            "R_ball": self.R_ball,
            "R_outer": self.R_outer,
            "occupancy": float(self.occupancy),
            "contraction_factor": self.contraction_factor,
            "snapshot_norms": None if self.snapshot_norms is None
            else [float(v) for v in self.snapshot_norms],
            "failure": self.failure,
        }


@dataclass
class SolveResult:
    trajectory: Trajectory
    report: SolveReport


def solve_nonlocal(h: Nonlinearity, cond: NonlocalCondition, op: SpectralOperator,
                   horizon: float, n_steps: int, config: SolverConfig,
                   initial_guess: Optional[Trajectory] = None) -> SolveResult:
    """Damped Picard iteration u^{k+1} = (1-w) u^k + w Sigma(u^k).

    Stops when the sup-t L^p gap between consecutive iterates falls below
    ``picard_tol``; p is the nonlinearity's declared exponent.  Raises
    :class:`MaxIterExceeded`, :class:`BallExit` (an iterate reached the
    outer radius) or :class:`NonFiniteValue`, each carrying the partial
    report.
    """
    p = h.growth.p
    if initial_guess is None:
        current = Trajectory.zeros(op.domain, horizon, n_steps)
    else:
        if initial_guess.n_steps != n_steps or initial_guess.domain != op.domain:
            raise ValueError("initial guess must live on the solve grid")
        current = initial_guess

    residuals: list = []
    sup_norms: list = []
    omega = config.relaxation

    def _report(converged: bool, failure: Optional[str] = None,
                final: Optional[Trajectory] = None) -> SolveReport:
        return SolveReport(
            converged=converged,
            iterations=len(residuals),
            residuals=residuals,
            sup_norms=sup_norms,
            p=p,
            R_ball=config.R_ball,
            R_outer=config.R_outer,
            snapshot_norms=None if final is None else final.snapshot_norms(p),
            failure=failure,
        )

    for _ in range(config.picard_max_iter):
        try:
            image = sigma_apply(current, config.lam, config.smoothing_n,
                                h, cond, op, config.stepper)
        except BlowUpError as exc:
            raise NonFiniteValue(
                f"iterate became non-finite at step {exc.step_index}",
                report=_report(False, failure="non_finite"),
            ) from exc
        blended = (1.0 - omega) * current.snapshots + omega * image.snapshots
        nxt = Trajectory(op.domain, horizon, blended)
        residuals.append(nxt.sup_gap(current, p))
        occupancy = nxt.sup_norm(p)
        sup_norms.append(occupancy)
        if occupancy >= config.R_outer:
            raise BallExit(
                f"iterate reached the outer radius R_outer={config.R_outer} "
                f"(sup norm {occupancy:.6g}); transversality_check probes the "
                f"inward-pointing condition on the shell",
                report=_report(False, failure="ball_exit"),
            )
        current = nxt
        if residuals[-1] <= config.picard_tol:
            return SolveResult(current, _report(True, final=current))
    raise MaxIterExceeded(
        f"no convergence within {config.picard_max_iter} iterations "
        f"(last residual {residuals[-1]:.3e})",
        report=_report(False, failure="max_iter"),
    )


@dataclass
class FamilyEntry:
    n: int
    result: Optional[SolveResult]
    error: Optional[str]


@dataclass
class FamilyResult:
    """Solutions of the smoothing family and their neighbor gaps."""

    entries: list
    table: list          # (n_i, sup-t p-norm gap to the next family member)
    nonincreasing: bool
    violations: list     # indices i where gap_i+1 > gap_i

    def to_dict(self) -> dict:
        return {
            "entries": [
                {
                    "n": e.n,
                    "converged": e.result is not None,
                    "error": e.error,
                    "iterations": None if e.result is None else e.result.report.iterations,
                    "sup_norm": None if e.result is None else float(e.result.report.occupancy),
                }
                for e in self.entries
            ],
            "table": [{"n": n, "gap": float(g)} for n, g in self.table],
            "nonincreasing": self.nonincreasing,
            "violations": self.violations,
        }


def approximation_family(h: Nonlinearity, cond: NonlocalCondition,
                         op: SpectralOperator, horizon: float, n_steps: int,
                         config: SolverConfig, n_list) -> FamilyResult:
    """Solve the smoothing family for each n and tabulate neighbor gaps.

    Smoothing composes both the forcing and the nonlocal value with
    S(1/n).  Per-n solver failures are recorded and the family continues.
    The gap sequence is expected nonincreasing; violations are reported,
    not fatal.
    """
    n_list = [int(n) for n in n_list]
    if any(b <= a for a, b in zip(n_list, n_list[1:])) or not n_list:
        raise ValueError("n_list must be nonempty and strictly increasing")
    p = h.growth.p
    entries = []
    for n in n_list:
        cfg = dataclasses.replace(config, smoothing_n=n)
        try:
            entries.append(FamilyEntry(n, solve_nonlocal(h, cond, op, horizon,
                                                         n_steps, cfg), None))
        except (MaxIterExceeded, BallExit, NonFiniteValue) as exc:
            entries.append(FamilyEntry(n, None, f"{type(exc).__name__}: {exc}"))

    table = []
    for a, b in zip(entries, entries[1:]):
        if a.result is not None and b.result is not None:
            table.append((a.n, a.result.trajectory.sup_gap(b.result.trajectory, p)))
    gaps = [g for _, g in table]
    violations = [i for i in range(len(gaps) - 1) if gaps[i + 1] > gaps[i]]
    return FamilyResult(entries, table, not violations, violations)


@dataclass
class SweepRow:
    lam: float
    converged: bool
    iterations: int
    sup_norm: float
    error: Optional[str]


@dataclass
class SweepReport:
    """Branch of fixed points along the continuation parameter."""

    rows: list
    max_occupancy: float
    touched_outer: bool

    def to_dict(self) -> dict:
        return {
            "rows": [
                {"lambda": r.lam, "converged": r.converged, "iterations": r.iterations,
                 "sup_norm": float(r.sup_norm), "error": r.error}
                for r in self.rows
            ],
            "max_occupancy": float(self.max_occupancy),
            "touched_outer": self.touched_outer,
        }


def continuation_sweep(h: Nonlinearity, cond: NonlocalCondition,
                       op: SpectralOperator, horizon: float, n_steps: int,
                       config: SolverConfig, lambda_grid) -> SweepReport:
    """Track the fixed-point branch over the continuation parameter.

    Each solve warm-starts from the previous fixed point; the report
    records whether any branch point reached the outer radius.
    """
    grid = [float(l) for l in lambda_grid]
    if any(not (0.0 <= l <= 1.0) for l in grid):
        raise ValueError("lambda_grid entries must lie in [0, 1]")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError("lambda_grid must be strictly increasing")
    rows = []
    warm: Optional[Trajectory] = None
    max_occ = 0.0
    touched = False
    for lam in grid:
        cfg = dataclasses.replace(config, lam=lam)
        try:
            res = solve_nonlocal(h, cond, op, horizon, n_steps, cfg, initial_guess=warm)
            rows.append(SweepRow(lam, True, res.report.iterations,
                                 res.trajectory.sup_norm(h.growth.p), None))
            warm = res.trajectory
            max_occ = max(max_occ, rows[-1].sup_norm)
        except (MaxIterExceeded, BallExit, NonFiniteValue) as exc:
            occupancy = exc.report.occupancy if exc.report is not None else float("nan")
            rows.append(SweepRow(lam, False,
                                 exc.report.iterations if exc.report else 0,
                                 occupancy, f"{type(exc).__name__}: {exc}"))
            max_occ = max(max_occ, occupancy)
            if isinstance(exc, BallExit):
                touched = True
    return SweepReport(rows, max_occ, touched)


def transversality_check(h: Nonlinearity, op: SpectralOperator, n: int, p: float,
                         shell: Shell, sample_spec: SampleSpec) -> CheckReport:
    """Probe the inward-pointing condition on the shell r0 < ||v||_p < R0.

    Samples smooth states v rescaled into the shell and times from the
    sample range, then evaluates the duality pairing of v against the
    smoothed superposition S(1/n) f(t, v).  Positive pairings beyond
    1e-10 * ||v||_p * ||S(1/n) f||_p are violations.
    """
    rng = np.random.default_rng(sample_spec.seed)
    margins, witnesses = [], []
    for i in range(sample_spec.n_samples):
        profile = smooth_profile(op.domain, rng)
        gf = GridFunction(op.domain, profile)
        norm = lp_norm(gf, p)
        if norm == 0.0:
            continue
        radius = rng.uniform(shell.r0, shell.R0)
        v = GridFunction(op.domain, profile * (radius / norm))
        t = float(rng.uniform(*sample_spec.t_range))
        w = apply_semigroup(op, 1.0 / n, superpose(h, t, v))
        pairing = duality_pairing(v, w, p)
        tol = 1e-10 * radius * lp_norm(w, p)
        margins.append(pairing - tol)
        if pairing > tol:
            witnesses.append(Witness(
                where={"sample": i, "t": t, "radius": radius, "pairing": pairing},
                margin=pairing,
            ))
    return CheckReport(
        name="transversality",
        passed=not witnesses,
        n_samples=sample_spec.n_samples,
        max_margin=float(max(margins)) if margins else float("-inf"),
        witnesses=witnesses,
        details={"smoothing_n": n, "r0": shell.r0, "R0": shell.R0},
    )


@dataclass
class BenilanReport:
    """Worst violation of the two-trajectory comparison inequality.

    For every snapshot pair s < t the inequality
    ||u(t)-v(t)|| <= ||u(s)-v(s)|| + int_s^t [u-v, b1-b2]_+ is checked
    with a trapezoid time integral of the upper semi-inner product.
    """

    max_violation: float
    tolerance: float
    passed: bool
    worst_pair: tuple

    def to_dict(self) -> dict:
        return {
            "max_violation": float(self.max_violation),
            "tolerance": float(self.tolerance),
            "pass": self.passed,
            "worst_pair": list(self.worst_pair),
        }


def benilan_gap(u: Trajectory, v: Trajectory, beta1: Trajectory, beta2: Trajectory,
                p: float) -> BenilanReport:
    """Check the comparison inequality for two forced evolutions.

    All four trajectories must share the grid; beta1, beta2 are the forcing
    snapshots along u and v.  The pass tolerance scales with the observed
    gap and integrand magnitudes to absorb quadrature error.
    """
    for other in (v, beta1, beta2):
        if other.snapshots.shape != u.snapshots.shape or other.domain != u.domain:
            raise ValueError("all four trajectories must share domain and grid")
    m = u.n_steps
    dt = u.dt
    gaps = np.empty(m + 1)
    integrand = np.empty(m + 1)
    for j in range(m + 1):
        du = GridFunction(u.domain, u.snapshots[j] - v.snapshots[j])
        db = GridFunction(u.domain, beta1.snapshots[j] - beta2.snapshots[j])
        gaps[j] = lp_norm(du, p)
        integrand[j] = upper_semi_inner(du, db, p)

    prefix = np.concatenate(([0.0], np.cumsum(0.5 * dt * (integrand[:-1] + integrand[1:]))))
    # max over s < t of gaps[t] - gaps[s] - (prefix[t] - prefix[s]),
    # via a running minimum of gaps[s] - prefix[s].
    d = gaps - prefix
    worst = -np.inf
    worst_pair = (0, 0)
    run_min = d[0]
    run_arg = 0
    for j in range(1, m + 1):
        violation = d[j] - run_min
        if violation > worst:
            worst = violation
            worst_pair = (run_arg, j)
        if d[j] < run_min:
            run_min = d[j]
            run_arg = j
    tol = 1e-6 * (1.0 + float(np.max(gaps)) + u.horizon * float(np.max(np.abs(integrand))))
    return BenilanReport(max_violation=float(worst), tolerance=tol,
                         passed=bool(worst <= tol), worst_pair=worst_pair)


@dataclass
class ProbeReport:
    """Gap between two solves started from different guesses."""

    gap: float
    threshold: float
    passed: bool
    report1: SolveReport
    report2: SolveReport

    def to_dict(self) -> dict:
        return {
            "gap": float(self.gap),
            "threshold": float(self.threshold),
            "pass": self.passed,
            "iterations": [self.report1.iterations, self.report2.iterations],
        }


def uniqueness_probe(h: Nonlinearity, cond: NonlocalCondition, op: SpectralOperator,
                     horizon: float, n_steps: int, config: SolverConfig,
                     guess1: Optional[Trajectory], guess2: Optional[Trajectory]) -> ProbeReport:
    """Solve from two guesses and compare the converged trajectories.

    Meaningful mainly under a monotone reaction; without it a nonzero gap
    is expected territory (multiple fixed points), not a solver failure.
    """
    res1 = solve_nonlocal(h, cond, op, horizon, n_steps, config, initial_guess=guess1)
    res2 = solve_nonlocal(h, cond, op, horizon, n_steps, config, initial_guess=guess2)
    gap = res1.trajectory.sup_gap(res2.trajectory, h.growth.p)
    threshold = 10.0 * config.picard_tol
    return ProbeReport(gap=gap, threshold=threshold, passed=bool(gap <= threshold),
                       report1=res1.report, report2=res2.report)
