"""Matern-5/2 kernels and their exact mixed derivatives.

The collocation feature maps need k and its partial derivatives in *both*
arguments: up to second order per side in space and first order per side in
time. With d = x - x' the kernel is the radial profile

    f(d) = (1 + a|d| + a^2 d^2 / 3) exp(-a|d|),    a = sqrt(5) / lengthscale,

and every required derivative is (-1)^b f^(a+b)(d), so the whole table is the
five closed-form radial derivatives below. f is C^4, exactly the smoothness
Matern-5/2 provides; orders beyond (2,2) in space are rejected.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = ["Matern52", "ProductKernel", "DerivOrder", "matern52_deriv", "product_deriv"]


@dataclass(frozen=True)
class Matern52:
    lengthscale: float

    def __post_init__(self):
        ls = float(self.lengthscale)
        if not (math.isfinite(ls) and ls > 0):
            raise ValueError("lengthscale must be a positive finite real")
        object.__setattr__(self, "lengthscale", ls)

    @property
    def rate(self) -> float:
        return math.sqrt(5.0) / self.lengthscale


def _radial_poly(rate: float, d, r, order: int):
    """Polynomial factor of f^(order)(d), i.e. f^(order) = poly * exp(-rate*r)."""
    u = rate * r
    if order == 0:
        return 1.0 + u + u * u / 3.0
    if order == 1:
        return -(rate * rate / 3.0) * d * (1.0 + u)
    if order == 2:
        return -(rate * rate / 3.0) * (1.0 + u - u * u)
    if order == 3:
        return (rate**4 / 3.0) * d * (3.0 - u)
    if order == 4:
        return (rate**4 / 3.0) * (3.0 - 5.0 * u + u * u)
    raise ValueError(f"radial derivative order {order} out of range")


def _radial_deriv(rate: float, d, order: int):
    r = np.abs(d)
    return _radial_poly(rate, d, r, order) * np.exp(-rate * r)


def matern52_deriv(kernel: Matern52, a: int, b: int, x, x_prime):
    """d^a/dx^a d^b/dx'^b k(x, x'), elementwise over broadcast inputs.

    Each per-side order may be 0, 1 or 2 (so a+b <= 4, the most the 5/2
    profile supports).
    """
    if a not in (0, 1, 2) or b not in (0, 1, 2):
        raise ValueError("per-side derivative orders must be 0, 1 or 2")
    d = np.asarray(x, dtype=float) - np.asarray(x_prime, dtype=float)
    out = _radial_deriv(kernel.rate, d, a + b)
    return -out if b % 2 else out


@dataclass(frozen=True)
class ProductKernel:
    """Separable space-time kernel K((x,t),(x',t')) = Kx(x,x') * Kt(t,t')."""

    space: Matern52
    time: Matern52


@dataclass(frozen=True)
class DerivOrder:
    space_left: int = 0
    time_left: int = 0
    space_right: int = 0
    time_right: int = 0

    def __post_init__(self):
        if self.space_left not in (0, 1, 2) or self.space_right not in (0, 1, 2):
            raise ValueError("space orders must be 0, 1 or 2")
        if self.time_left not in (0, 1) or self.time_right not in (0, 1):
            raise ValueError("time orders must be 0 or 1")

    def swap(self) -> "DerivOrder":
        return DerivOrder(self.space_right, self.time_right, self.space_left, self.time_left)


def product_deriv(kernel: ProductKernel, order: DerivOrder, y, y_prime):
    """Mixed partial of the product kernel; y and y' are (..., 2) as (x, t)."""
    y = np.asarray(y, dtype=float)
    yp = np.asarray(y_prime, dtype=float)
    return matern52_deriv(
        kernel.space, order.space_left, order.space_right, y[..., 0], yp[..., 0]
    ) * matern52_deriv(
        kernel.time, order.time_left, order.time_right, y[..., 1], yp[..., 1]
    )
