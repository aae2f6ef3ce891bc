"""Reaction terms h(t, x, v), their superposition operators, and hypothesis checks.

A :class:`Nonlinearity` bundles the pointwise reaction with its declared
growth data (the envelope |h| <= ell(t,x) + m |v|^(p/q)) and claim flags
for the sign and monotonicity conditions.  The checkers are seeded
sampling falsifiers with reported witnesses, never proofs: the conditions
quantify over continua, and the artifact's contract is falsification plus
reproducibility.

``eval`` must be vectorized over the x and v arguments (scalar t); all
built-ins are plain numpy expressions.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import InvalidExponentError, NonlinearityEvaluationError
from .lp_space import GridFunction, lp_norm
from .reporting import CheckReport, Witness
from .sampling import SampleSpec

__all__ = [
    "GrowthData",
    "Claims",
    "Nonlinearity",
    "VainbergReport",
    "superpose",
    "check_growth",
    "check_sign",
    "check_monotone",
    "vainberg_bound",
    "zero",
    "linear",
    "odd_power",
    "damped_cubic",
    "chafee_infante",
    "forced_linear",
]

# Sign-type checks tolerate this much positive excess, absorbing roundoff
# on exact-zero boundaries.
SIGN_TOL = 1e-12

#: claims.periodic_in_t value meaning "independent of t" (periodic with any T).
ANY_PERIOD = 0.0


def _zero_profile(t: float, x: np.ndarray) -> np.ndarray:
    return np.zeros_like(x)


@dataclass(frozen=True)
class GrowthData:
    """Envelope data: |h(t,x,v)| <= ell_profile(t,x) + m |v|^(p/q)."""

    ell_profile: Callable[[float, np.ndarray], np.ndarray]
    m: float
    p: float
    q: float

    def __post_init__(self):
        if self.q < 2 or self.q >= self.p:
            raise InvalidExponentError(
                f"growth exponents must satisfy 2 <= q < p, got q={self.q!r}, p={self.p!r}"
            )
        if self.m < 0:
            raise ValueError(f"growth coefficient m must be nonnegative, got {self.m!r}")


@dataclass(frozen=True)
class Claims:
    """Declared structural properties; checkers verify, solvers trust."""

    sign_condition: bool = False
    monotone: bool = False
    periodic_in_t: Optional[float] = None


@dataclass(frozen=True)
class Nonlinearity:
    name: str
    eval: Callable[[float, np.ndarray, np.ndarray], np.ndarray]
    growth: GrowthData
    claims: Claims = Claims()

    def has_period(self, horizon: float) -> bool:
        """True when h is periodic with period dividing the given horizon."""
        period = self.claims.periodic_in_t
        if period is None:
            return False
        if period == ANY_PERIOD:
            return True
        ratio = horizon / period
        return abs(ratio - round(ratio)) < 1e-9


def evaluate_values(h: Nonlinearity, t: float, x: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Pointwise h(t, x_i, v_i) with a finite-value guarantee."""
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        out = np.asarray(h.eval(t, x, v), dtype=float)
    bad = ~np.isfinite(out)
    if np.any(bad):
        i = int(np.argmax(bad))
        raise NonlinearityEvaluationError(t=float(t), x=float(x[i]), v=float(v[i]))
    return out


def superpose(h: Nonlinearity, t: float, u: GridFunction) -> GridFunction:
    """The superposition operator f(t, u)(x_i) = h(t, x_i, u_i)."""
    values = evaluate_values(h, t, u.domain.nodes, u.values)
    return GridFunction(u.domain, values)


def _pointwise_batches(spec: SampleSpec, pairs: bool = False):
    """Seeded (t, x, v[, u]) batches; scalar t per batch, arrays for the rest."""
    rng = np.random.default_rng(spec.seed)
    remaining = spec.n_samples
    batch = 256
    while remaining > 0:
        n = min(batch, remaining)
        t = float(rng.uniform(*spec.t_range))
        x = rng.uniform(*spec.x_range, size=n)
        v = rng.uniform(*spec.v_range, size=n)
        if pairs:
            u = rng.uniform(*spec.v_range, size=n)
            yield t, x, v, u
        else:
            yield t, x, v
        remaining -= n


def _collect(name: str, spec: SampleSpec, margins: list, witnesses: list,
             tol: float, details: dict | None = None) -> CheckReport:
    max_margin = float(max(margins)) if margins else float("-inf")
    return CheckReport(
        name=name,
        passed=max_margin <= tol,
        n_samples=spec.n_samples,
        max_margin=max_margin,
        witnesses=witnesses,
        details={"tolerance": tol, **(details or {})},
    )


def check_growth(h: Nonlinearity, spec: SampleSpec) -> CheckReport:
    """Sample |h| against the declared envelope; report every violation."""
    g = h.growth
    margins, witnesses = [], []
    for t, x, v in _pointwise_batches(spec):
        vals = np.abs(evaluate_values(h, t, x, v))
        bound = g.ell_profile(t, x) + g.m * np.abs(v) ** (g.p / g.q)
        excess = vals - bound - SIGN_TOL * (1.0 + bound)
        margins.append(np.max(excess))
        for i in np.flatnonzero(excess > 0):
            witnesses.append(Witness(
                where={"t": t, "x": float(x[i]), "v": float(v[i])},
                margin=float(excess[i]),
            ))
    return _collect("growth_bound", spec, margins, witnesses, 0.0,
                    {"m": g.m, "p_over_q": g.p / g.q})


def check_sign(h: Nonlinearity, spec: SampleSpec) -> CheckReport:
    """Sample v * h(t,x,v); positive products beyond the roundoff slack fail."""
    margins, witnesses = [], []
    for t, x, v in _pointwise_batches(spec):
        product = v * evaluate_values(h, t, x, v)
        margins.append(np.max(product))
        for i in np.flatnonzero(product > SIGN_TOL):
            witnesses.append(Witness(
                where={"t": t, "x": float(x[i]), "v": float(v[i])},
                margin=float(product[i]),
            ))
    return _collect("sign_condition", spec, margins, witnesses, SIGN_TOL)


def check_monotone(h: Nonlinearity, spec: SampleSpec) -> CheckReport:
    """Sample (u-v)(h(t,x,u) - h(t,x,v)); positive products fail."""
    margins, witnesses = [], []
    for t, x, v, u in _pointwise_batches(spec, pairs=True):
        product = (u - v) * (evaluate_values(h, t, x, u) - evaluate_values(h, t, x, v))
        margins.append(np.max(product))
        for i in np.flatnonzero(product > SIGN_TOL):
            witnesses.append(Witness(
                where={"t": t, "x": float(x[i]), "u": float(u[i]), "v": float(v[i])},
                margin=float(product[i]),
            ))
    return _collect("monotone", spec, margins, witnesses, SIGN_TOL)


@dataclass(frozen=True)
class VainbergReport:
    """One evaluation of the superposition growth bound in integral form."""

    lhs: float   # ||f(t,u)||_q
    rhs: float   # ||ell(t,.)||_q + m ||u||_p^(p/q)
    passed: bool


def vainberg_bound(h: Nonlinearity, t: float, u: GridFunction) -> VainbergReport:
    """Check ||f(t,u)||_q <= ||ell(t,.)||_q + m ||u||_p^(p/q) on one state.

    This is the sharp triangle-inequality form of the growth envelope; it
    certifies that the superposition lands in L^q with the declared bound.
    """
    g = h.growth
    lhs = lp_norm(superpose(h, t, u), g.q)
    ell = GridFunction(u.domain, np.asarray(g.ell_profile(t, u.domain.nodes), dtype=float))
    rhs = lp_norm(ell, g.q) + g.m * lp_norm(u, g.p) ** (g.p / g.q)
    return VainbergReport(lhs=lhs, rhs=rhs, passed=bool(lhs <= rhs * (1.0 + 1e-10)))


# ---------------------------------------------------------------------------
# Built-in catalogue.  Growth metadata is chosen so the declared envelope is
# valid over all of R, not just the sampled window.
# ---------------------------------------------------------------------------

def zero(p: float = 4.0, q: float = 2.0) -> Nonlinearity:
    return Nonlinearity(
        name="zero",
        eval=lambda t, x, v: np.zeros_like(v),
        growth=GrowthData(_zero_profile, 0.0, p, q),
        claims=Claims(sign_condition=True, monotone=True, periodic_in_t=ANY_PERIOD),
    )


def linear(c: float, p: float = 4.0, q: float = 2.0) -> Nonlinearity:
    """h = -c*v; damping for c > 0.  |{-c v}| <= |c| + |c||v|^(p/q) for p > q."""
    good = c >= 0
    return Nonlinearity(
        name="linear",
        eval=lambda t, x, v: -c * v,
        growth=GrowthData(lambda t, x: np.full_like(x, abs(c)), abs(c), p, q),
        claims=Claims(sign_condition=good, monotone=good, periodic_in_t=ANY_PERIOD),
    )


def odd_power(alpha: int, coefficient: float = -1.0, q: float = 2.0) -> Nonlinearity:
    """h = coefficient * v^alpha for odd alpha; growth pinned at p = alpha*q."""
    if alpha % 2 != 1 or alpha < 3:
        raise ValueError(f"alpha must be an odd integer >= 3, got {alpha!r}")
    good = coefficient <= 0
    return Nonlinearity(
        name="odd_power",
        eval=lambda t, x, v: coefficient * v ** alpha,
        growth=GrowthData(_zero_profile, abs(coefficient), alpha * q, q),
        claims=Claims(sign_condition=good, monotone=good, periodic_in_t=ANY_PERIOD),
    )


def damped_cubic(q: float = 2.0) -> Nonlinearity:
    """h = -(sin(v) + 2) v^3 / (1 + t^2): a cubic with damping coefficient
    in (1, 3]/(1+t^2), so |h| <= 3 |v|^3 and v*h <= 0 everywhere.

    Not monotone: the modulation sin(v) makes h increasing near |v| ~ 6.5.
    """
    return Nonlinearity(
        name="damped_cubic",
        eval=lambda t, x, v: -(np.sin(v) + 2.0) * v ** 3 / (1.0 + t ** 2),
        growth=GrowthData(_zero_profile, 3.0, 3.0 * q, q),
        claims=Claims(sign_condition=True, monotone=False, periodic_in_t=None),
    )


def chafee_infante(lam: float, q: float = 2.0) -> Nonlinearity:
    """h = lam*(v - v^3).  Ships for experimentation: the sign condition
    fails for 0 < |v| < 1 (v*h > 0 there), so the existence hypotheses of
    the nonlocal solver do not cover it.
    """
    return Nonlinearity(
        name="chafee_infante",
        eval=lambda t, x, v: lam * (v - v ** 3),
        growth=GrowthData(lambda t, x: np.full_like(x, abs(lam)), 2.0 * abs(lam),
                          3.0 * q, q),
        claims=Claims(sign_condition=False, monotone=False, periodic_in_t=ANY_PERIOD),
    )


def forced_linear(c: float, forcing: Callable[[float, np.ndarray], np.ndarray],
                  p: float = 4.0, q: float = 2.0,
                  periodic_in_t: Optional[float] = None) -> Nonlinearity:
    """h = -c*v + s(t, x) for manufactured-solution runs.

    Monotone whenever c >= 0 (the forcing cancels in differences); the sign
    condition fails as soon as s is not identically zero.
    """
    def ell(t: float, x: np.ndarray) -> np.ndarray:
        return np.abs(forcing(t, x)) + abs(c)

    return Nonlinearity(
        name="forced_linear",
        eval=lambda t, x, v: -c * v + forcing(t, x),
        growth=GrowthData(ell, abs(c), p, q),
        claims=Claims(sign_condition=False, monotone=c >= 0,
                      periodic_in_t=periodic_in_t),
    )
