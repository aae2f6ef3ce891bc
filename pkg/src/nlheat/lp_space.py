"""Discrete L^p calculus on a uniform 1-D Dirichlet grid.

Grid functions hold values at the interior nodes x_i = i*dx of (0, L);
boundary values are identically zero and never stored.  All integrals use
the rectangle rule with uniform weight dx, which is exactly compatible
with the sine transform's Parseval relation at p = 2 and O(dx^2) accurate
for profiles vanishing at the boundary.

The duality operations require p >= 2: |u|^(p-2) is singular at zeros of
u for smaller exponents, and every consumer in this package works with
2 <= q < p.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DomainMismatchError, InvalidExponentError, ZeroElementError

__all__ = [
    "Domain1D",
    "GridFunction",
    "lp_norm",
    "duality_pairing",
    "upper_semi_inner",
]


@dataclass(frozen=True)
class Domain1D:
    """Uniform Dirichlet grid on (0, L) with ``n_interior`` interior nodes."""

    length: float
    n_interior: int

    def __post_init__(self):
        if not (np.isfinite(self.length) and self.length > 0):
            raise ValueError(f"domain length must be positive, got {self.length!r}")
        if int(self.n_interior) != self.n_interior or self.n_interior < 2:
            raise ValueError(
                f"need an integer number of interior nodes >= 2, got {self.n_interior!r}"
            )

    @property
    def dx(self) -> float:
        return self.length / (self.n_interior + 1)

    @property
    def nodes(self) -> np.ndarray:
        """Interior nodes x_i = i*dx, i = 1..N."""
        return self.dx * np.arange(1, self.n_interior + 1)


@dataclass(frozen=True)
class GridFunction:
    """Real function sampled at the interior nodes of a :class:`Domain1D`."""

    domain: Domain1D
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != (self.domain.n_interior,):
            raise ValueError(
                f"expected {self.domain.n_interior} values, got shape {vals.shape}"
            )
        if not np.all(np.isfinite(vals)):
            raise ValueError("grid function values must all be finite")
        object.__setattr__(self, "values", vals)

    @classmethod
    def zeros(cls, domain: Domain1D) -> "GridFunction":
        return cls(domain, np.zeros(domain.n_interior))

    @classmethod
    def from_profile(cls, domain: Domain1D, profile: Callable) -> "GridFunction":
        """Sample a callable x -> value on the interior nodes."""
        return cls(domain, np.asarray(profile(domain.nodes), dtype=float))


def _require_same_domain(u: GridFunction, v: GridFunction) -> None:
    if u.domain != v.domain:
        raise DomainMismatchError(
            f"grid functions live on different domains: {u.domain} vs {v.domain}"
        )


def lp_norm(u: GridFunction, p: float) -> float:
    """Rectangle-rule L^p norm, (dx * sum |u_i|^p)^(1/p).

    Zero exactly when u vanishes at every node.
    """
    if p < 1:
        raise InvalidExponentError(f"lp_norm needs p >= 1, got p={p!r}")
    return float((u.domain.dx * np.sum(np.abs(u.values) ** p)) ** (1.0 / p))


def duality_pairing(u: GridFunction, v: GridFunction, p: float) -> float:
    """Pairing of the normalized duality map of u against v.

    Returns ||u||_p^(2-p) * dx * sum |u_i|^(p-2) u_i v_i, so that pairing
    u against itself reproduces ||u||_p^2.  Undefined at u = 0; callers
    needing the u = 0 limit must use :func:`upper_semi_inner`.
    """
    if p < 2:
        raise InvalidExponentError(f"duality_pairing needs p >= 2, got p={p!r}")
    _require_same_domain(u, v)
    norm_u = lp_norm(u, p)
    if norm_u == 0.0:
        raise ZeroElementError("duality pairing is undefined at the zero element")
    if p == 2:
        weighted = u.values * v.values
    else:
        weighted = np.abs(u.values) ** (p - 2) * u.values * v.values
    return float(norm_u ** (2.0 - p) * u.domain.dx * np.sum(weighted))


def upper_semi_inner(u: GridFunction, v: GridFunction, p: float) -> float:
    """One-sided directional derivative of the norm at u in direction v.

    Equals duality_pairing(u, v, p) / ||u||_p for nonzero u, and ||v||_p at
    u = 0 (the limit of (||h v|| - 0)/h as h decreases to 0).
    """
    if p < 2:
        raise InvalidExponentError(f"upper_semi_inner needs p >= 2, got p={p!r}")
    _require_same_domain(u, v)
    norm_u = lp_norm(u, p)
    if norm_u == 0.0:
        return lp_norm(v, p)
    return duality_pairing(u, v, p) / norm_u
