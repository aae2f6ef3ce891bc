"""Deterministic smooth random profiles and trajectories for the checkers.

Everything here is seeded: a fixed seed reproduces the exact sample
sequence, which is part of every checker's contract.  Trajectory samplers
cycle through a fixed mixture of shapes — constant in time, separable
smooth-in-time, two-profile blends — so that worst cases of the nonlocal
operators (constant trajectories, endpoint perturbations) are always
represented rather than left to chance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .lp_space import Domain1D, GridFunction, lp_norm
from .semigroup import inverse_transform_values
from .trajectory import Trajectory

__all__ = [
    "SampleSpec",
    "TrajectorySampleSpec",
    "smooth_profile",
    "smooth_grid_function",
    "smooth_trajectory",
    "trajectory_samples",
    "trajectory_pairs",
]


@dataclass(frozen=True)
class SampleSpec:
    """Ranges and budget for pointwise (t, x, v) sampling."""

    n_samples: int = 2000
    seed: int = 0
    t_range: tuple = (0.0, 1.0)
    x_range: tuple = (0.0, 1.0)
    v_range: tuple = (-8.0, 8.0)


@dataclass(frozen=True)
class TrajectorySampleSpec:
    """Budget and grid for sampling smooth trajectories."""

    domain: Domain1D
    horizon: float
    n_steps: int
    n_samples: int = 24
    seed: int = 0
    decay: float = 3.0


def smooth_profile(domain: Domain1D, rng: np.random.Generator, decay: float = 3.0,
                   n_modes: int | None = None) -> np.ndarray:
    """Random Dirichlet-compatible profile with sine spectrum ~ k^(-decay)."""
    n = domain.n_interior
    if n_modes is None:
        n_modes = min(n, 12)
    coeffs = np.zeros(n)
    k = np.arange(1, n_modes + 1)
    coeffs[:n_modes] = rng.standard_normal(n_modes) / k ** decay
    return inverse_transform_values(coeffs)


def smooth_grid_function(domain: Domain1D, rng: np.random.Generator,
                         decay: float = 3.0) -> GridFunction:
    return GridFunction(domain, smooth_profile(domain, rng, decay))


def _time_envelope(kind: int, times: np.ndarray, horizon: float,
                   rng: np.random.Generator) -> np.ndarray:
    if kind == 0:
        return np.ones_like(times)
    freq = rng.integers(1, 4)
    phase = rng.uniform(0.0, 2.0 * np.pi)
    return 1.0 + 0.5 * np.sin(2.0 * np.pi * freq * times / horizon + phase)


def smooth_trajectory(domain: Domain1D, horizon: float, n_steps: int,
                      rng: np.random.Generator, decay: float = 3.0,
                      kind: int = 1) -> Trajectory:
    """One smooth trajectory; kind 0 is constant in time, kind 2 a blend."""
    times = np.linspace(0.0, horizon, n_steps + 1)
    w = smooth_profile(domain, rng, decay)
    snaps = np.outer(_time_envelope(kind % 3, times, horizon, rng), w)
    if kind % 3 == 2:
        w2 = smooth_profile(domain, rng, decay)
        snaps = snaps + np.outer(_time_envelope(1, times, horizon, rng) - 1.0, w2)
    return Trajectory(domain, horizon, snaps)


def rescale_to_sup_norm(traj: Trajectory, p: float, target: float) -> Trajectory:
    """Scale a trajectory so its sup-t L^p norm equals target exactly."""
    current = traj.sup_norm(p)
    if current == 0.0:
        return traj
    return Trajectory(traj.domain, traj.horizon, traj.snapshots * (target / current))


def trajectory_samples(spec: TrajectorySampleSpec, p: float, radius: float):
    """Yield smooth trajectories with sup-t L^p norm <= radius.

    Every third sample is constant in time and pinned to the boundary
    sup norm = radius, the worst case for snapshot-reading conditions.
    """
    rng = np.random.default_rng(spec.seed)
    for i in range(spec.n_samples):
        kind = i % 3
        traj = smooth_trajectory(spec.domain, spec.horizon, spec.n_steps, rng,
                                 spec.decay, kind)
        target = radius if kind == 0 else radius * rng.uniform(0.3, 1.0)
        yield rescale_to_sup_norm(traj, p, target)


def trajectory_pairs(spec: TrajectorySampleSpec, p: float, radius: float):
    """Yield trajectory pairs for Lipschitz probing.

    Cycles through: independent samples, pairs differing by a constant
    profile, and pairs differing only at the final snapshot.
    """
    rng = np.random.default_rng(spec.seed)
    for i in range(spec.n_samples):
        kind = i % 3
        u = rescale_to_sup_norm(
            smooth_trajectory(spec.domain, spec.horizon, spec.n_steps, rng,
                              spec.decay, i % 2 + 1),
            p, radius * rng.uniform(0.3, 1.0))
        if kind == 0:
            v = rescale_to_sup_norm(
                smooth_trajectory(spec.domain, spec.horizon, spec.n_steps, rng,
                                  spec.decay, (i + 1) % 3),
                p, radius * rng.uniform(0.3, 1.0))
        elif kind == 1:
            delta = smooth_profile(spec.domain, rng, spec.decay)
            scale = radius * 0.1 / max(lp_norm(GridFunction(spec.domain, delta), p), 1e-300)
            v = Trajectory(spec.domain, spec.horizon,
                           u.snapshots + scale * delta[None, :])
        else:
            snaps = u.snapshots.copy()
            snaps[-1] = snaps[-1] + smooth_profile(spec.domain, rng, spec.decay)
            v = Trajectory(spec.domain, spec.horizon, snaps)
        yield u, v
