"""Collocation grids, feature maps, Gram factors, and representer evaluation.

A feature map is an ordered list of linear functionals (point evaluations and
derivative evaluations of the product kernel's RKHS elements). Gram entries
apply a functional pair to both kernel arguments; evaluation rows apply the
functionals to the second argument only. Assembly is vectorized by grouping
runs of functionals that share a derivative signature, so the expensive
exp(-rate*|d|) factor is computed once per block rather than per entry.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional, Sequence, Tuple

import numpy as np
import scipy.linalg

from .kernels import Matern52, ProductKernel, _radial_poly

__all__ = [
    "CollocationSet",
    "Functional",
    "FeatureMap",
    "GramFactor",
    "Representer",
    "build_grid",
    "feature_map_u",
    "feature_map_g",
    "assemble_gram",
    "factor_gram",
]

# kind -> (space derivative order, time derivative order)
_KIND_ORDERS = {
    "eval": (0, 0),
    "space_deriv": (1, 0),
    "space_laplacian": (2, 0),
    "time_deriv": (0, 1),
}

JITTER_START = 1e-10
JITTER_CAP = 1e-4


@dataclass(frozen=True, eq=False)
class CollocationSet:
    """Interior and boundary space-time points on a tensor grid.

    time_index[j] gives the position of interior point j in the distinct-time
    table t_grid (length n_times).
    """

    x_grid: np.ndarray
    t_grid: np.ndarray
    interior: np.ndarray  # (J, 2)
    boundary: np.ndarray  # (J_b, 2), t in {0, 1}
    time_index: np.ndarray  # (J,) ints

    @property
    def n_interior(self) -> int:
        return self.interior.shape[0]

    @property
    def n_boundary(self) -> int:
        return self.boundary.shape[0]

    @property
    def n_times(self) -> int:
        return self.t_grid.shape[0]


def build_grid(x_lo: float, x_hi: float, n_x: int, n_t: int) -> CollocationSet:
    """Uniform n_x by n_t tensor grid on [x_lo, x_hi] x [0, 1].

    Interior points include the t=0 and t=1 slices; the boundary set is the
    spatial grid at t=0 followed by the spatial grid at t=1 (J_b = 2 n_x).
    """
    if not (x_lo < x_hi):
        raise ValueError("need x_lo < x_hi")
    if n_x < 2 or n_t < 2:
        raise ValueError("need n_x >= 2 and n_t >= 2")
    x = np.linspace(x_lo, x_hi, n_x)
    t = np.linspace(0.0, 1.0, n_t)
    interior = np.column_stack([np.repeat(x, n_t), np.tile(t, n_x)])
    boundary = np.concatenate(
        [
            np.column_stack([x, np.zeros(n_x)]),
            np.column_stack([x, np.ones(n_x)]),
        ]
    )
    time_index = np.tile(np.arange(n_t), n_x)
    return CollocationSet(x, t, interior, boundary, time_index)


@dataclass(frozen=True)
class Functional:
    """A linear functional on the kernel's RKHS.

    Simple kinds evaluate a derivative at ``point``; a weighted_combo is a
    finite combination of simple terms, each (coefficient, kind, point).
    """

    kind: str
    point: Tuple[float, float]
    terms: Optional[Tuple[Tuple[float, str, Tuple[float, float]], ...]] = None

    def __post_init__(self):
        if self.kind == "weighted_combo":
            if not self.terms:
                raise ValueError("weighted_combo needs at least one term")
            for coef, kind, _ in self.terms:
                if kind not in _KIND_ORDERS:
                    raise ValueError(f"unknown term kind {kind!r}")
                if not np.isfinite(coef):
                    raise ValueError("weighted_combo coefficients must be finite")
        elif self.kind not in _KIND_ORDERS:
            raise ValueError(f"unknown functional kind {self.kind!r}")
        elif self.terms:
            raise ValueError("terms are only valid for weighted_combo")


@dataclass(eq=False)
class _Segment:
    """A run of functionals sharing one term signature, in array form."""

    orders: Tuple[Tuple[int, int], ...]  # per-term (space, time) orders
    xcols: Tuple[np.ndarray, ...]  # per-term point coordinates, each (m,)
    tcols: Tuple[np.ndarray, ...]
    ccols: Tuple[Optional[np.ndarray], ...]  # per-term coefficients, None = ones

    def __len__(self) -> int:
        return self.xcols[0].shape[0]


def _signature(f: Functional):
    if f.kind == "weighted_combo":
        return tuple(kind for _, kind, _ in f.terms)
    return (f.kind,)


def _segment_from_run(run: Sequence[Functional]) -> _Segment:
    sig = _signature(run[0])
    orders = tuple(_KIND_ORDERS[k] for k in sig)
    xcols, tcols, ccols = [], [], []
    for p, kind in enumerate(sig):
        if run[0].kind == "weighted_combo":
            pts = [f.terms[p][2] for f in run]
            ccols.append(np.array([f.terms[p][0] for f in run]))
        else:
            pts = [f.point for f in run]
            ccols.append(None)
        xcols.append(np.array([pt[0] for pt in pts]))
        tcols.append(np.array([pt[1] for pt in pts]))
    return _Segment(orders, tuple(xcols), tuple(tcols), tuple(ccols))


def _deriv_matrix(kern: Matern52, a: int, b: int, xl, xr, cache: dict):
    """(-1)^b f^(a+b) of the pairwise differences, with the exp factor cached."""
    key = (id(xl), id(xr), kern.rate)
    entry = cache.get(key)
    if entry is None:
        d = xl[:, None] - xr[None, :]
        r = np.abs(d)
        entry = (d, r, np.exp(-kern.rate * r))
        cache[key] = entry
    d, r, e = entry
    out = _radial_poly(kern.rate, d, r, a + b) * e
    return -out if b % 2 else out


def _pair_block(kernel: ProductKernel, left: _Segment, right: _Segment) -> np.ndarray:
    out = None
    cache: dict = {}
    for p, (sxl, stl) in enumerate(left.orders):
        for q, (sxr, str_) in enumerate(right.orders):
            blk = _deriv_matrix(
                kernel.space, sxl, sxr, left.xcols[p], right.xcols[q], cache
            ) * _deriv_matrix(kernel.time, stl, str_, left.tcols[p], right.tcols[q], cache)
            cl, cr = left.ccols[p], right.ccols[q]
            if cl is not None:
                blk *= cl[:, None]
            if cr is not None:
                blk *= cr[None, :]
            out = blk if out is None else out + blk
    return out


@dataclass(frozen=True, eq=False)
class FeatureMap:
    """Ordered functionals over one product kernel."""

    kernel: ProductKernel
    functionals: Tuple[Functional, ...]

    def __len__(self) -> int:
        return len(self.functionals)

    @cached_property
    def _segments(self):
        segs, slices = [], []
        start = 0
        run = [self.functionals[0]]
        for f in self.functionals[1:]:
            if _signature(f) == _signature(run[0]):
                run.append(f)
            else:
                segs.append(_segment_from_run(run))
                slices.append(slice(start, start + len(run)))
                start += len(run)
                run = [f]
        segs.append(_segment_from_run(run))
        slices.append(slice(start, start + len(run)))
        return list(zip(segs, slices))

    def gram(self) -> np.ndarray:
        """Symmetric matrix of the functional pairs applied to both arguments."""
        n = len(self)
        out = np.empty((n, n))
        for left, sl in self._segments:
            for right, sr in self._segments:
                out[sl, sr] = _pair_block(self.kernel, left, right)
        return out

    def rows(self, x, t, space_order: int = 0, time_order: int = 0) -> np.ndarray:
        """Evaluation rows: functionals applied to the kernel's second argument,
        with an optional query-side derivative applied to the first.

        Returns an (m, len(self)) matrix for m query points.
        """
        x = np.atleast_1d(np.asarray(x, dtype=float))
        t = np.broadcast_to(np.asarray(t, dtype=float), x.shape).copy()
        out = np.empty((x.shape[0], len(self)))
        query = _Segment(((space_order, time_order),), (x,), (t,), (None,))
        for seg, sl in self._segments:
            out[:, sl] = _pair_block(self.kernel, query, seg)
        return out


def feature_map_u(colloc: CollocationSet, kernel: ProductKernel) -> FeatureMap:
    """Potential feature map: Laplacian block then gradient block, both at the
    interior points (2J functionals)."""
    pts = [(float(x), float(t)) for x, t in colloc.interior]
    fs = [Functional("space_laplacian", p) for p in pts]
    fs += [Functional("space_deriv", p) for p in pts]
    return FeatureMap(kernel, tuple(fs))


def feature_map_g(colloc: CollocationSet, kernel: ProductKernel) -> FeatureMap:
    """Tilting feature map: time-derivative block at interior points, value
    block at boundary points, gradient block at interior points (2J + J_b)."""
    pts = [(float(x), float(t)) for x, t in colloc.interior]
    bpts = [(float(x), float(t)) for x, t in colloc.boundary]
    fs = [Functional("time_deriv", p) for p in pts]
    fs += [Functional("eval", p) for p in bpts]
    fs += [Functional("space_deriv", p) for p in pts]
    return FeatureMap(kernel, tuple(fs))


@dataclass(frozen=True, eq=False)
class GramFactor:
    """A Gram matrix with the diagonal jitter and Cholesky factor that made it
    numerically positive definite."""

    matrix: np.ndarray
    jitter: float
    lower: np.ndarray

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        return scipy.linalg.cho_solve((self.lower, True), rhs)

    def whiten(self, z: np.ndarray) -> np.ndarray:
        """L^{-1} z, the change of variables used by the penalized solver."""
        return scipy.linalg.solve_triangular(self.lower, z, lower=True)


def factor_gram(matrix: np.ndarray) -> GramFactor:
    """Cholesky with deterministic jitter escalation.

    Jitter starts at 1e-10 * trace/dim and grows tenfold until the factorization
    succeeds; past 1e-4 * trace/dim the matrix is declared numerically
    indefinite and the smallest eigenvalue is reported.
    """
    n = matrix.shape[0]
    base = float(np.trace(matrix)) / n
    if not (np.isfinite(base) and base > 0):
        raise np.linalg.LinAlgError(f"gram trace/dim not positive: {base!r}")
    scale = JITTER_START
    while scale <= JITTER_CAP * (1 + 1e-12):
        jitter = scale * base
        try:
            lower = np.linalg.cholesky(matrix + jitter * np.eye(n))
            return GramFactor(matrix, jitter, lower)
        except np.linalg.LinAlgError:
            scale *= 10.0
    smallest = scipy.linalg.eigh(matrix, eigvals_only=True, subset_by_index=[0, 0])[0]
    raise np.linalg.LinAlgError(
        f"gram not factorizable at jitter cap {JITTER_CAP * base:.3e}; "
        f"smallest eigenvalue ~ {smallest:.3e}"
    )


def assemble_gram(features: FeatureMap) -> GramFactor:
    if len(features) == 0:
        raise ValueError("feature map is empty")
    return factor_gram(features.gram())


@dataclass(eq=False)
class Representer:
    """Kernel expansion u(.) = K(., features) @ coef fit to functional targets."""

    features: FeatureMap
    factor: GramFactor
    targets: np.ndarray
    coef: np.ndarray

    @classmethod
    def fit(cls, features: FeatureMap, factor: GramFactor, targets: np.ndarray):
        targets = np.asarray(targets, dtype=float)
        return cls(features, factor, targets, factor.solve(targets))

    def _eval(self, x, t, space_order, time_order):
        scalar = np.isscalar(x) and np.isscalar(t)
        out = self.features.rows(x, t, space_order, time_order) @ self.coef
        return float(out[0]) if scalar else out

    def value(self, x, t):
        return self._eval(x, t, 0, 0)

    def grad_x(self, x, t):
        return self._eval(x, t, 1, 0)

    def lap_x(self, x, t):
        return self._eval(x, t, 2, 0)

    def time_deriv(self, x, t):
        return self._eval(x, t, 0, 1)

    def value_grid(self, xs, ts, space_order: int = 0, time_order: int = 0) -> np.ndarray:
        """Evaluate on a tensor grid, exploiting the kernel's separability.

        Returns values[i, j] at (xs[i], ts[j]); one GEMM per feature term, so
        this is much faster than rows() on large display grids.
        """
        from .kernels import matern52_deriv

        xs = np.asarray(xs, dtype=float)
        ts = np.asarray(ts, dtype=float)
        out = np.zeros((xs.shape[0], ts.shape[0]))
        for seg, sl in self.features._segments:
            alpha = self.coef[sl]
            for p, (sxr, str_) in enumerate(seg.orders):
                w = alpha if seg.ccols[p] is None else alpha * seg.ccols[p]
                sx = matern52_deriv(
                    self.features.kernel.space, space_order, sxr, xs[:, None], seg.xcols[p][None, :]
                )
                st = matern52_deriv(
                    self.features.kernel.time, time_order, str_, ts[:, None], seg.tcols[p][None, :]
                )
                out += (sx * w[None, :]) @ st.T
        return out

    @cached_property
    def norm(self) -> float:
        """RKHS norm sqrt(z^T (K + jitter I)^{-1} z) of the fitted expansion."""
        w = self.factor.whiten(self.targets)
        return float(np.sqrt(np.dot(w, w)))
