"""Particle transport: explicit Euler along a velocity field, plus the
quantile-coupling (monotone rearrangement) baseline and its displacement
velocity for one-dimensional marginals.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .densities import GaussianMixture

__all__ = [
    "TrajectorySet",
    "euler_transport",
    "mccann_map",
    "mccann_velocity",
    "mccann_transport",
]


@dataclass(frozen=True)
class TrajectorySet:
    """Particle paths on a uniform time grid.

    positions[i, k] is particle i at times[k]; times runs 0..1 inclusive.
    """

    times: np.ndarray
    positions: np.ndarray
    seed: Optional[int] = None

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        x = np.asarray(self.positions, dtype=float)
        if t.ndim != 1 or x.ndim != 2 or x.shape[1] != t.shape[0]:
            raise ValueError("positions must be (n_particles, n_times)")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "positions", x)

    @property
    def n_particles(self) -> int:
        return self.positions.shape[0]

    @property
    def terminal(self) -> np.ndarray:
        return self.positions[:, -1]


def _time_grid(dt: float) -> np.ndarray:
    if not (math.isfinite(dt) and 0 < dt <= 1):
        raise ValueError(f"dt must lie in (0, 1], got {dt}")
    n = round(1.0 / dt)
    if abs(n * dt - 1.0) > 1e-12:
        raise ValueError(f"dt={dt} does not divide the unit interval")
    return np.linspace(0.0, 1.0, n + 1)


def euler_transport(
    velocity: Callable[[np.ndarray, float], np.ndarray],
    init: np.ndarray,
    dt: float,
    seed: Optional[int] = None,
) -> TrajectorySet:
    """Integrate dX/dt = velocity(X, t) from t=0 to t=1 by explicit Euler.

    velocity is evaluated vectorized over all particles at the left endpoint
    of each step. Aborts if any state goes non-finite.
    """
    times = _time_grid(dt)
    init = np.asarray(init, dtype=float)
    if init.ndim != 1:
        raise ValueError("init must be a flat particle array")
    if not np.isfinite(init).all():
        raise ValueError("init contains non-finite particles")
    out = np.empty((init.shape[0], times.shape[0]))
    out[:, 0] = init
    x = init.copy()
    for k in range(times.shape[0] - 1):
        t = times[k]
        v = np.asarray(velocity(x, float(t)), dtype=float)
        if v.shape != x.shape:
            raise ValueError(
                f"velocity returned shape {v.shape}, expected {x.shape}"
            )
        x = x + dt * v
        if not np.isfinite(x).all():
            i = int(np.flatnonzero(~np.isfinite(x))[0])
            raise FloatingPointError(
                f"particle {i} became non-finite at t={times[k + 1]:.6g}"
            )
        out[:, k + 1] = x
    return TrajectorySet(times=times, positions=out, seed=seed)


def mccann_map(eta: GaussianMixture, pi: GaussianMixture, x) -> np.ndarray:
    """Monotone map pushing eta to pi: quantile(pi, cdf(eta, x))."""
    x = np.asarray(x, dtype=float)
    p = eta.cdf(x)
    return pi.quantile(p)


def mccann_velocity(
    eta: GaussianMixture, pi: GaussianMixture, x, t: float
) -> np.ndarray:
    """Velocity of the displacement interpolation at position x and time t.

    A particle at x solves x = (1-t) x0 + t T(x0) for its start x0 and moves
    with constant speed T(x0) - x0. At t=1 the start is recovered directly
    through the inverse map.
    """
    x = np.asarray(x, dtype=float)
    t = float(t)
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"t must lie in [0, 1], got {t}")
    scalar = x.ndim == 0
    xf = np.atleast_1d(x)
    if t == 0.0:
        x0 = xf.copy()
    elif t == 1.0:
        x0 = eta.quantile(pi.cdf(xf))
    else:
        x0 = _invert_interpolant(eta, pi, xf, t)
    v = (mccann_map(eta, pi, x0) - x0) if t < 1.0 else (xf - x0) / t
    return v[0] if scalar else v


def _invert_interpolant(eta, pi, x, t, tol=1e-10, max_expand=200):
    """Solve h(x0) = (1-t) x0 + t T(x0) = x by bisection; h is strictly
    increasing, so brackets are expanded outward until they straddle."""
    lo = np.minimum(x, eta.quantile(pi.cdf(x))) - 1.0
    hi = np.maximum(x, eta.quantile(pi.cdf(x))) + 1.0

    def h(z):
        return (1.0 - t) * z + t * mccann_map(eta, pi, z)

    width = 1.0
    for _ in range(max_expand):
        bad = h(lo) > x
        if not bad.any():
            break
        lo = np.where(bad, lo - width, lo)
        width *= 2.0
    else:
        raise RuntimeError("failed to bracket the interpolant from below")
    width = 1.0
    for _ in range(max_expand):
        bad = h(hi) < x
        if not bad.any():
            break
        hi = np.where(bad, hi + width, hi)
        width *= 2.0
    else:
        raise RuntimeError("failed to bracket the interpolant from above")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        above = h(mid) > x
        hi = np.where(above, mid, hi)
        lo = np.where(above, lo, mid)
        if np.max(hi - lo) <= tol:
            break
    return 0.5 * (lo + hi)


def mccann_transport(
    eta: GaussianMixture,
    pi: GaussianMixture,
    init: np.ndarray,
    dt: float,
    seed: Optional[int] = None,
) -> TrajectorySet:
    """Exact displacement trajectories (1-t) x0 + t T(x0) on an Euler-style
    uniform time grid, for like-for-like comparison with integrated paths."""
    times = _time_grid(dt)
    init = np.asarray(init, dtype=float)
    target = mccann_map(eta, pi, init)
    positions = init[:, None] * (1.0 - times)[None, :] + target[:, None] * times[None, :]
    return TrajectorySet(times=times, positions=positions, seed=seed)
