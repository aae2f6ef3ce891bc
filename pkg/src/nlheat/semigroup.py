"""Spectral realization of the Dirichlet heat semigroup on the grid.

The generator is diagonalized by the discrete sine basis with the
*continuous* eigenvalues (k*pi/L)^2, not the finite-difference ones, so
the semigroup law and the phi-function weights hold exactly mode by mode
and all discretization error sits in the spatial truncation.  The
independent finite-difference realization lives in :mod:`nlheat.oracle`.

On the grid the state space and the forcing space coincide as vectors and
differ only in which norm is applied, so one implementation serves the
semigroup on both; the smoothing constant quantifies the norm gain.

Transform normalization (fixed so Parseval constants in tests are stable):

    c_k = (2/(N+1)) * sum_i u_i sin(k pi i / (N+1)),
    u_i = sum_k c_k sin(k pi i / (N+1)),
    dx * sum_i u_i^2 = (L/2) * sum_k c_k^2.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import NamedTuple

import numpy as np
from scipy.fft import dst as _dst1

from .errors import DomainMismatchError, InvalidExponentError, InvalidTimeError
from .lp_space import Domain1D, GridFunction

__all__ = [
    "SpectralOperator",
    "SineCoefficients",
    "SmoothingBound",
    "dst",
    "idst",
    "apply_semigroup",
    "phi1_apply",
    "smoothing_constant",
    "decay_weights",
    "phi1_weights",
    "etd2_weights",
]

# phi1 switches to its 3-term series below this value of lambda*t to avoid
# the 1 - exp(-x) cancellation.
_PHI1_SERIES_THRESHOLD = 1e-8
_ETD2_SERIES_THRESHOLD = 1e-4


def transform_values(values: np.ndarray) -> np.ndarray:
    """Raw sine-coefficient array of a value array (hot-loop helper)."""
    return _dst1(values, type=1) / (values.shape[-1] + 1)


def inverse_transform_values(coeffs: np.ndarray) -> np.ndarray:
    """Raw value array of a sine-coefficient array (hot-loop helper)."""
    return _dst1(coeffs, type=1) / 2.0


@dataclass(frozen=True)
class SpectralOperator:
    """Sine-basis diagonalization of the Dirichlet Laplacian on a grid.

    ``space_dim`` only enters :func:`smoothing_constant`; the discretized
    evolution is always one-dimensional.
    """

    domain: Domain1D
    space_dim: int = 1

    def __post_init__(self):
        if self.space_dim < 1:
            raise ValueError(f"space_dim must be a positive integer, got {self.space_dim!r}")

    @cached_property
    def eigenvalues(self) -> np.ndarray:
        """(k*pi/L)^2 for k = 1..N; strictly increasing, all positive."""
        k = np.arange(1, self.domain.n_interior + 1)
        return (k * np.pi / self.domain.length) ** 2


@dataclass(frozen=True)
class SineCoefficients:
    """Coefficients against sin(k*pi*x/L), k = 1..N."""

    domain: Domain1D
    coeffs: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.coeffs, dtype=float)
        if vals.shape != (self.domain.n_interior,):
            raise ValueError(
                f"expected {self.domain.n_interior} coefficients, got shape {vals.shape}"
            )
        object.__setattr__(self, "coeffs", vals)


def dst(u: GridFunction) -> SineCoefficients:
    """Forward sine transform."""
    return SineCoefficients(u.domain, transform_values(u.values))


def idst(c: SineCoefficients) -> GridFunction:
    """Inverse sine transform; exact inverse of :func:`dst` up to roundoff."""
    return GridFunction(c.domain, inverse_transform_values(c.coeffs))


def decay_weights(eigenvalues: np.ndarray, t: float) -> np.ndarray:
    """Mode multipliers exp(-lambda_k t) of S(t)."""
    return np.exp(-eigenvalues * t)


def phi1_weights(eigenvalues: np.ndarray, t: float) -> np.ndarray:
    """Mode multipliers of int_0^t S(t-s) ds, i.e. (1 - exp(-lambda t))/lambda."""
    x = eigenvalues * t
    small = x < _PHI1_SERIES_THRESHOLD
    out = np.empty_like(x)
    xs = x[small]
    out[small] = t * (1.0 - xs / 2.0 + xs * xs / 6.0)
    out[~small] = -np.expm1(-x[~small]) / eigenvalues[~small]
    return out


def etd2_weights(eigenvalues: np.ndarray, t: float) -> np.ndarray:
    """Second-order weights (lambda t - 1 + exp(-lambda t)) / (lambda^2 t).

    Together with :func:`phi1_weights` these integrate a forcing linear in
    time exactly: int_0^t S(t-s)[a + (b-a)s/t] ds = w1*a + w2*(b-a).
    """
    x = eigenvalues * t
    small = x < _ETD2_SERIES_THRESHOLD
    out = np.empty_like(x)
    xs = x[small]
    out[small] = t * (0.5 - xs / 6.0 + xs * xs / 24.0)
    xl = x[~small]
    out[~small] = (xl + np.expm1(-xl)) / (xl * eigenvalues[~small])
    return out


def _require_domain(op: SpectralOperator, u: GridFunction) -> None:
    if op.domain != u.domain:
        raise DomainMismatchError("operator and grid function live on different domains")


def apply_semigroup(op: SpectralOperator, t: float, u: GridFunction) -> GridFunction:
    """Apply S(t): multiply mode k by exp(-lambda_k t).

    S(0) is the identity exactly; every t > 0 contracts each mode, so the
    L^2 norm never grows.
    """
    if t < 0:
        raise InvalidTimeError(f"semigroup time must be nonnegative, got t={t!r}")
    _require_domain(op, u)
    if t == 0.0:
        return GridFunction(u.domain, u.values.copy())
    coeffs = transform_values(u.values) * decay_weights(op.eigenvalues, t)
    return GridFunction(u.domain, inverse_transform_values(coeffs))


def phi1_apply(op: SpectralOperator, t: float, v: GridFunction) -> GridFunction:
    """Apply int_0^t S(t-s) ds to a constant-in-time v, exactly mode-wise."""
    if t <= 0:
        raise InvalidTimeError(f"phi1 time must be positive, got t={t!r}")
    _require_domain(op, v)
    coeffs = transform_values(v.values) * phi1_weights(op.eigenvalues, t)
    return GridFunction(v.domain, inverse_transform_values(coeffs))


class SmoothingBound(NamedTuple):
    value: float
    exponent: float
    integrable: bool


def smoothing_constant(t: float, p: float, q: float, k_dim: int) -> SmoothingBound:
    """Gain constant of the L^q -> L^p smoothing bound of the heat semigroup.

    Returns (4 pi t)^(-(k_dim/2)(1/q - 1/p)) together with the exponent and
    a flag telling whether the exponent is below 1, i.e. whether the
    constant is integrable in time near t = 0.
    """
    if q < 2 or q >= p:
        raise InvalidExponentError(
            f"smoothing constant needs 2 <= q < p, got q={q!r}, p={p!r}"
        )
    if t <= 0:
        raise InvalidTimeError(f"smoothing constant needs t > 0, got t={t!r}")
    exponent = 0.5 * k_dim * (1.0 / q - 1.0 / p)
    value = float((4.0 * np.pi * t) ** (-exponent))
    return SmoothingBound(value=value, exponent=exponent, integrable=bool(exponent < 1.0))
