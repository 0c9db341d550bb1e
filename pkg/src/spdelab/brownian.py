"""Reproducible Brownian drivers on uniform grids.

Streams are counter-based (Philox) and keyed by (seed, stream_id), so any
path of an ensemble can be regenerated bit-identically without generating
the others.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class GridError(ValueError):
    """Time grid is not uniform or degenerate."""


def uniform_grid(T: float, dt: float) -> np.ndarray:
    """Grid 0 = t_0 < ... < t_J = T with step dt; dt must divide T."""
    if dt <= 0 or T <= 0:
        raise GridError(f"need T, dt > 0, got T={T}, dt={dt}")
    steps = T / dt
    j = int(round(steps))
    if j < 1 or abs(steps - j) > 1e-9 * max(1.0, steps):
        raise GridError(f"dt={dt} does not divide T={T}")
    return np.linspace(0.0, T, j + 1)


def _check_uniform(times: np.ndarray) -> float:
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size < 2:
        raise GridError("grid needs at least two points")
    steps = np.diff(times)
    dt = steps[0]
    if dt <= 0 or np.any(np.abs(steps - dt) > 1e-12 * max(1.0, abs(times[-1]))):
        raise GridError("nonuniform time grid rejected")
    return float(dt)


@dataclass(frozen=True)
class BrownianPath:
    """Increments of an n-dimensional Wiener process on a uniform grid."""

    times: np.ndarray
    increments: np.ndarray  # shape (J, n)
    seed: int
    stream_id: int

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0])

    @property
    def n(self) -> int:
        return self.increments.shape[1]

    def cumulative(self) -> np.ndarray:
        """w(t_j) for j = 0..J, shape (J+1, n)."""
        out = np.zeros((len(self.times), self.n))
        np.cumsum(self.increments, axis=0, out=out[1:])
        return out

    def coarsen(self, factor: int) -> "BrownianPath":
        """Sum consecutive increments; the same path on a coarser grid."""
        j = self.increments.shape[0]
        if j % factor != 0:
            raise GridError(f"cannot coarsen {j} steps by factor {factor}")
        inc = self.increments.reshape(j // factor, factor, self.n).sum(axis=1)
        return BrownianPath(
            times=self.times[::factor], increments=inc,
            seed=self.seed, stream_id=self.stream_id,
        )


def _stream(seed: int, stream_id: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=[seed & 0xFFFFFFFFFFFFFFFF,
                                                     stream_id & 0xFFFFFFFFFFFFFFFF]))


def sample_brownian(n: int, grid: np.ndarray, seed: int, stream_id: int = 0) -> BrownianPath:
    """Independent Gaussian increments with variance dt, deterministic per key."""
    grid = np.asarray(grid, dtype=float)
    dt = _check_uniform(grid)
    rng = _stream(seed, stream_id)
    inc = rng.standard_normal((len(grid) - 1, n)) * np.sqrt(dt)
    return BrownianPath(times=grid, increments=inc, seed=seed, stream_id=stream_id)


def sample_brownian_ensemble(
    n: int, grid: np.ndarray, seed: int, n_paths: int, first_stream: int = 0
) -> np.ndarray:
    """Stacked increments (n_paths, J, n); path p uses stream first_stream + p."""
    grid = np.asarray(grid, dtype=float)
    dt = _check_uniform(grid)
    j = len(grid) - 1
    out = np.empty((n_paths, j, n))
    root = np.sqrt(dt)
    for p in range(n_paths):
        rng = _stream(seed, first_stream + p)
        out[p] = rng.standard_normal((j, n)) * root
    return out
