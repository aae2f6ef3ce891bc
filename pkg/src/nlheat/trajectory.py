"""Time-indexed snapshots of grid functions on a uniform grid over [0, T]."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import GridAlignmentError
from .lp_space import Domain1D, GridFunction

__all__ = ["Trajectory"]


@dataclass(frozen=True)
class Trajectory:
    """M+1 snapshots at t_j = j*T/M; the discrete stand-in for C([0,T]; L^p)."""

    domain: Domain1D
    horizon: float
    snapshots: np.ndarray  # shape (M+1, N)

    def __post_init__(self):
        snaps = np.asarray(self.snapshots, dtype=float)
        if snaps.ndim != 2 or snaps.shape[0] < 2 or snaps.shape[1] != self.domain.n_interior:
            raise ValueError(
                f"snapshots must have shape (M+1, {self.domain.n_interior}) with M >= 1, "
                f"got {snaps.shape}"
            )
        if not (np.isfinite(self.horizon) and self.horizon > 0):
            raise ValueError(f"horizon must be positive, got {self.horizon!r}")
        if not np.all(np.isfinite(snaps)):
            raise ValueError("all snapshots must be finite")
        object.__setattr__(self, "snapshots", snaps)

    @property
    def n_steps(self) -> int:
        return self.snapshots.shape[0] - 1

    @property
    def dt(self) -> float:
        return self.horizon / self.n_steps

    @cached_property
    def times(self) -> np.ndarray:
        return np.linspace(0.0, self.horizon, self.n_steps + 1)

    @classmethod
    def zeros(cls, domain: Domain1D, horizon: float, n_steps: int) -> "Trajectory":
        return cls(domain, horizon, np.zeros((n_steps + 1, domain.n_interior)))

    @classmethod
    def constant(cls, u: GridFunction, horizon: float, n_steps: int) -> "Trajectory":
        """Constant-in-time trajectory t -> u."""
        return cls(u.domain, horizon, np.tile(u.values, (n_steps + 1, 1)))

    def snapshot(self, j: int) -> GridFunction:
        return GridFunction(self.domain, self.snapshots[j].copy())

    def time_index(self, t: float, snap_tol: float = 1e-9) -> int:
        """Index of the grid time nearest t; errors when off-grid beyond tolerance.

        The tolerance is relative to the step size, so prescribed times must
        sit essentially exactly on the stored grid.
        """
        j = int(round(t / self.dt))
        if j < 0 or j > self.n_steps or abs(t - j * self.dt) > snap_tol * self.dt:
            raise GridAlignmentError(
                f"time {t!r} does not align with the grid (dt={self.dt!r})"
            )
        return j

    def snapshot_norms(self, p: float) -> np.ndarray:
        """Rectangle-rule L^p norm of every snapshot."""
        dx = self.domain.dx
        return (dx * np.sum(np.abs(self.snapshots) ** p, axis=1)) ** (1.0 / p)

    def sup_norm(self, p: float) -> float:
        """sup over snapshot times of the L^p norm."""
        return float(np.max(self.snapshot_norms(p)))

    def sup_gap(self, other: "Trajectory", p: float) -> float:
        """sup over snapshot times of the L^p norm of the difference."""
        if other.domain != self.domain or other.snapshots.shape != self.snapshots.shape:
            raise ValueError("trajectories must share domain and time grid")
        dx = self.domain.dx
        diff = self.snapshots - other.snapshots
        return float(np.max((dx * np.sum(np.abs(diff) ** p, axis=1)) ** (1.0 / p)))
