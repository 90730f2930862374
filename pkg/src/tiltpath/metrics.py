"""Sample-quality metrics and RKHS norm diagnostics."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np

from .collocation import GramFactor, factor_gram
from .kernels import Matern52, matern52_deriv

__all__ = [
    "fraction_left",
    "moment_errors",
    "mmd",
    "spatial_rkhs_norm",
    "spacetime_rkhs_norm",
    "MetricsReport",
]


def fraction_left(samples, threshold: float = -2.0) -> float:
    """Fraction of samples strictly below threshold (mode-coverage check)."""
    samples = np.asarray(samples, dtype=float)
    if samples.ndim != 1 or samples.size == 0:
        raise ValueError("samples must be a nonempty flat array")
    return float(np.mean(samples < threshold))


def moment_errors(samples, target_mean: float, target_var: float) -> dict:
    """Absolute error of the sample mean and relative error of the unbiased
    sample variance against the given targets."""
    samples = np.asarray(samples, dtype=float)
    if samples.ndim != 1 or samples.size < 2:
        raise ValueError("need at least two samples")
    if target_var <= 0:
        raise ValueError("target_var must be positive")
    m = float(np.mean(samples))
    v = float(np.var(samples, ddof=1))
    return {
        "mean": m,
        "var": v,
        "abs_err_mean": abs(m - target_mean),
        "rel_err_var": abs(v - target_var) / target_var,
    }


def _pairwise_sq(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return (a[:, None] - b[None, :]) ** 2


def mmd(a, b, bandwidth: Union[str, float] = "median") -> float:
    """Biased (V-statistic) maximum mean discrepancy with the Gaussian kernel
    exp(-(x-y)^2 / (2 h^2)).

    bandwidth="median" sets h to the median pairwise distance of the pooled
    samples (zero-distance pairs included); a positive float fixes h.
    Returns the square root of the V-statistic.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.ndim != 1 or b.ndim != 1 or a.size == 0 or b.size == 0:
        raise ValueError("both sample sets must be nonempty flat arrays")
    if isinstance(bandwidth, str):
        if bandwidth != "median":
            raise ValueError(f"unknown bandwidth rule {bandwidth!r}")
        pooled = np.concatenate([a, b])
        h = float(np.median(np.abs(pooled[:, None] - pooled[None, :])))
        if h <= 0:
            h = 1.0
    else:
        h = float(bandwidth)
        if not (math.isfinite(h) and h > 0):
            raise ValueError("bandwidth must be positive")
    gamma = 1.0 / (2.0 * h * h)
    kaa = np.exp(-gamma * _pairwise_sq(a, a)).mean()
    kbb = np.exp(-gamma * _pairwise_sq(b, b)).mean()
    kab = np.exp(-gamma * _pairwise_sq(a, b)).mean()
    return float(np.sqrt(max(kaa + kbb - 2.0 * kab, 0.0)))


def spatial_rkhs_norm(
    func: Callable[[np.ndarray, float], np.ndarray],
    t: float,
    x_grid: np.ndarray,
    kernel: Matern52,
) -> float:
    """Norm of the time-slice func(., t) in the spatial kernel's RKHS,
    discretized on x_grid: sqrt(f^T K^{-1} f)."""
    x = np.asarray(x_grid, dtype=float)
    if x.ndim != 1 or x.size < 2:
        raise ValueError("x_grid must be a flat grid")
    f = np.asarray(func(x, float(t)), dtype=float)
    if f.shape != x.shape:
        raise ValueError("func must return one value per grid point")
    gram = matern52_deriv(kernel, 0, 0, x[:, None], x[None, :])
    factor = factor_gram(gram)
    return float(np.linalg.norm(factor.whiten(f)))


def spacetime_rkhs_norm(z: np.ndarray, factor: GramFactor) -> float:
    """Norm of the representer with target vector z under the factored Gram:
    sqrt(z^T K^{-1} z) = |L^{-1} z|."""
    return float(np.linalg.norm(factor.whiten(np.asarray(z, dtype=float))))


@dataclass
class MetricsReport:
    """Standard bundle for a terminal-sample evaluation."""

    fraction_left: float
    mean: float
    var: float
    abs_err_mean: float
    rel_err_var: float
    mmd_vs_target: Optional[float] = None

    @classmethod
    def from_samples(
        cls,
        samples,
        target_mean: float,
        target_var: float,
        target_samples=None,
        threshold: float = -2.0,
    ) -> "MetricsReport":
        mom = moment_errors(samples, target_mean, target_var)
        d = None
        if target_samples is not None:
            d = mmd(samples, target_samples)
        return cls(
            fraction_left=fraction_left(samples, threshold),
            mean=mom["mean"],
            var=mom["var"],
            abs_err_mean=mom["abs_err_mean"],
            rel_err_var=mom["rel_err_var"],
            mmd_vs_target=d,
        )

    def to_dict(self) -> dict:
        out = {
            "fraction_left": self.fraction_left,
            "mean": self.mean,
            "var": self.var,
            "abs_err_mean": self.abs_err_mean,
            "rel_err_var": self.rel_err_var,
        }
        if self.mmd_vs_target is not None:
            out["mmd_vs_target"] = self.mmd_vs_target
        return out
