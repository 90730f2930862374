"""Gaussian-mixture calculus, geometric annealing paths, and 1D quadrature.

Everything here is plain numpy on the real line: mixture log-densities and
scores, CDF/quantile/sampling, the log-linear interpolation between a base
density ``eta`` and a target ``pi``, and trapezoid quadrature for the
expectations and normalizing constants that the solvers need.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Optional, Tuple

import numpy as np
from scipy.special import logsumexp, ndtr, ndtri

__all__ = [
    "GaussianMixture",
    "GeometricPath",
    "QuadratureRule",
    "path_expectation",
    "path_normalizer",
]

_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)

# A tilt term evaluated along the path: (x_array, t) -> (g values, dt_g values).
TiltTerm = Callable[[np.ndarray, float], Tuple[np.ndarray, np.ndarray]]


def _finite_array(x, name: str) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if not np.isfinite(x).all():
        raise ValueError(f"{name} must be finite")
    return x


@dataclass(frozen=True)
class GaussianMixture:
    """Finite mixture of 1D normals: components are (weight, mean, std) triples."""

    components: tuple

    def __post_init__(self):
        comps = tuple((float(w), float(m), float(s)) for (w, m, s) in self.components)
        if not comps:
            raise ValueError("mixture needs at least one component")
        w = np.array([c[0] for c in comps])
        m = np.array([c[1] for c in comps])
        s = np.array([c[2] for c in comps])
        if not (np.isfinite(w).all() and np.isfinite(m).all() and np.isfinite(s).all()):
            raise ValueError("mixture parameters must be finite")
        if (w <= 0).any():
            raise ValueError("mixture weights must be positive")
        if abs(w.sum() - 1.0) > 1e-12:
            raise ValueError(f"mixture weights must sum to 1, got {w.sum()!r}")
        if (s <= 0).any():
            raise ValueError("mixture stds must be positive")
        object.__setattr__(self, "components", comps)

    @classmethod
    def normal(cls, mean: float, std: float) -> "GaussianMixture":
        return cls(((1.0, mean, std),))

    @cached_property
    def _arrays(self):
        c = np.asarray(self.components, dtype=float)
        return c[:, 0], c[:, 1], c[:, 2]

    def _log_terms(self, x: np.ndarray) -> np.ndarray:
        # log(w_i N(x; m_i, s_i^2)), shape (..., n_components)
        w, m, s = self._arrays
        z = (x[..., None] - m) / s
        return np.log(w) - np.log(s) - 0.5 * z * z - _LOG_SQRT_2PI

    def log_pdf(self, x):
        x = _finite_array(x, "x")
        return logsumexp(self._log_terms(x), axis=-1)

    def pdf(self, x):
        return np.exp(self.log_pdf(x))

    def score(self, x):
        """d/dx log_pdf, via component responsibilities (softmax-stabilized)."""
        x = _finite_array(x, "x")
        w, m, s = self._arrays
        lt = self._log_terms(x)
        resp = np.exp(lt - logsumexp(lt, axis=-1, keepdims=True))
        return np.sum(resp * (m - x[..., None]) / (s * s), axis=-1)

    def cdf(self, x):
        x = _finite_array(x, "x")
        w, m, s = self._arrays
        return np.sum(w * ndtr((x[..., None] - m) / s), axis=-1)

    def quantile(self, p):
        """Inverse CDF to absolute tolerance 1e-10 (bisection, then Newton polish).

        The bracket [min_i, max_i] of the component quantiles always contains
        the mixture quantile because the mixture CDF is a convex combination.
        """
        p = np.asarray(p, dtype=float)
        if not np.isfinite(p).all() or (p <= 0).any() or (p >= 1).any():
            raise ValueError("quantile requires 0 < p < 1")
        w, m, s = self._arrays
        zp = ndtri(p)
        comp_q = m + s * zp[..., None]
        lo = comp_q.min(axis=-1)
        hi = comp_q.max(axis=-1)
        for _ in range(200):
            if np.max(hi - lo) <= 1e-12:
                break
            mid = 0.5 * (lo + hi)
            below = self.cdf(mid) < p
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
        x = 0.5 * (lo + hi)
        for _ in range(3):
            step = (self.cdf(x) - p) / np.maximum(self.pdf(x), 1e-300)
            x = np.clip(x - step, lo, hi)
        return x[()] if x.ndim == 0 else x

    def sample(self, n: int, seed) -> np.ndarray:
        """n i.i.d. draws: inverse-CDF component choice from one uniform stream,
        then one standard-normal draw per particle."""
        if n < 1:
            raise ValueError("n must be >= 1")
        w, m, s = self._arrays
        rng = np.random.default_rng(seed)
        u = rng.random(n)
        cum = np.cumsum(w)
        cum[-1] = 1.0  # guard the float roundoff at the top
        idx = np.searchsorted(cum, u, side="right")
        z = rng.standard_normal(n)
        return m[idx] + s[idx] * z

    def mean(self) -> float:
        w, m, _ = self._arrays
        return float(np.dot(w, m))

    def var(self) -> float:
        w, m, s = self._arrays
        return float(np.dot(w, s * s + m * m) - self.mean() ** 2)


@dataclass(frozen=True)
class GeometricPath:
    """Log-linear interpolation between eta (t=0) and pi (t=1), unnormalized."""

    eta: GaussianMixture
    pi: GaussianMixture

    @staticmethod
    def _check_t(t):
        t = np.asarray(t, dtype=float)
        if not np.isfinite(t).all() or (t < 0).any() or (t > 1).any():
            raise ValueError("t must lie in [0, 1]")
        return t

    def log_unnorm(self, x, t):
        """(1-t) log eta(x) + t log pi(x); broadcasts over x and t."""
        t = self._check_t(t)
        return (1.0 - t) * self.eta.log_pdf(x) + t * self.pi.log_pdf(x)

    def ingredients(self, x, t):
        """The residual inputs at (x, t): the log-ratio log(pi/eta)(x) and the
        interpolated score (1-t) d/dx log eta + t d/dx log pi."""
        t = self._check_t(t)
        ell = self.pi.log_pdf(x) - self.eta.log_pdf(x)
        s = (1.0 - t) * self.eta.score(x) + t * self.pi.score(x)
        return ell, s


@dataclass(frozen=True)
class QuadratureRule:
    """Composite trapezoid rule on [lower, upper] with a fixed node count."""

    lower: float = -30.0
    upper: float = 30.0
    nodes: int = 4001
    scheme: str = "composite-trapezoid"

    def __post_init__(self):
        if not (self.lower < self.upper):
            raise ValueError("quadrature interval must have lower < upper")
        if self.nodes < 3:
            raise ValueError("quadrature needs at least 3 nodes")
        if self.scheme != "composite-trapezoid":
            raise ValueError(f"unknown quadrature scheme {self.scheme!r}")

    @cached_property
    def points(self) -> np.ndarray:
        return np.linspace(self.lower, self.upper, self.nodes)

    @cached_property
    def weights(self) -> np.ndarray:
        h = (self.upper - self.lower) / (self.nodes - 1)
        w = np.full(self.nodes, h)
        w[0] = w[-1] = 0.5 * h
        return w


def _check_coverage(path: GeometricPath, quad: QuadratureRule) -> None:
    for mix in (path.eta, path.pi):
        _, m, s = mix._arrays
        if (m - 8 * s).min() < quad.lower or (m + 8 * s).max() > quad.upper:
            raise ValueError(
                "quadrature interval must cover all component means +/- 8 stds"
            )


def _log_weights(path, tilt, t, quad):
    x = quad.points
    logw = path.log_unnorm(x, t)
    if tilt is None:
        return x, logw, None
    g, dg = tilt(x, t)
    return x, logw + g, np.asarray(dg, dtype=float)


def path_expectation(
    path: GeometricPath,
    tilt: Optional[TiltTerm],
    t: float,
    quad: QuadratureRule,
) -> float:
    """Normalized expectation along the (optionally tilted) path at time t.

    Integrates f = log(pi/eta) + dt_g against weights exp(log_unnorm + g);
    with ``tilt=None`` this is the expectation of the log-ratio under the
    geometric path. ``tilt`` must map (x_array, t) to (g, dt_g) arrays.
    """
    _check_coverage(path, quad)
    x, logw, dg = _log_weights(path, tilt, t, quad)
    ell, _ = path.ingredients(x, t)
    f = ell if dg is None else ell + dg
    bad = ~(np.isfinite(logw) & np.isfinite(f))
    if bad.any():
        raise ValueError(f"non-finite integrand at node x={x[bad][0]!r}")
    w = np.exp(logw - logw.max()) * quad.weights
    return float(np.dot(w, f) / w.sum())


def path_normalizer(
    path: GeometricPath,
    tilt: Optional[TiltTerm],
    t: float,
    quad: QuadratureRule,
) -> float:
    """Normalizing constant Z(t) of the (optionally tilted) unnormalized path."""
    _check_coverage(path, quad)
    x, logw, _ = _log_weights(path, tilt, t, quad)
    if not np.isfinite(logw).all():
        raise ValueError(f"non-finite integrand at node x={x[~np.isfinite(logw)][0]!r}")
    m = logw.max()
    return float(math.exp(m) * np.dot(np.exp(logw - m), quad.weights))
