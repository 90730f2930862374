"""Linear optimal recovery of the geometric-path potential.

The geometric annealing path mu(t) is transported by v = grad(u_ref) where
-div(mu grad u_ref) = mu * d/dt log mu. Collocating the elliptic operator at
the grid points turns this into one linear representer solve: each constraint
is the weighted combination  -mu*s * du/dx - mu * d2u/dx2  at a point, and the
right-hand side is mu * (log-ratio minus its path expectation at that time).

The unnormalized path density is used on both sides; scaling an equality
constraint does not move the min-norm solution.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .collocation import (
    CollocationSet,
    FeatureMap,
    Functional,
    GramFactor,
    Representer,
    factor_gram,
)
from .densities import GeometricPath, QuadratureRule, path_expectation
from .kernels import ProductKernel

__all__ = [
    "ReferenceSolution",
    "reference_operator_features",
    "reference_rhs",
    "solve_reference",
    "eval_reference",
]


def reference_operator_features(
    colloc: CollocationSet, path: GeometricPath, kernel: ProductKernel
) -> FeatureMap:
    """One weighted-combo functional -mu*s * d/dx - mu * d2/dx2 per interior point."""
    x = colloc.interior[:, 0]
    t = colloc.interior[:, 1]
    mu = np.exp(path.log_unnorm(x, t))
    _, s = path.ingredients(x, t)
    fs = []
    for j in range(colloc.n_interior):
        pt = (float(x[j]), float(t[j]))
        fs.append(
            Functional(
                "weighted_combo",
                pt,
                terms=(
                    (float(-mu[j] * s[j]), "space_deriv", pt),
                    (float(-mu[j]), "space_laplacian", pt),
                ),
            )
        )
    return FeatureMap(kernel, tuple(fs))


def reference_rhs(
    colloc: CollocationSet, path: GeometricPath, quad: QuadratureRule
) -> np.ndarray:
    """f_j = mu_j * (ell_j - E[ell] at t_j), the expectation once per distinct time."""
    x = colloc.interior[:, 0]
    t = colloc.interior[:, 1]
    mu = np.exp(path.log_unnorm(x, t))
    ell, _ = path.ingredients(x, t)
    expect = np.array(
        [path_expectation(path, None, float(tn), quad) for tn in colloc.t_grid]
    )
    return mu * (ell - expect[colloc.time_index])


@dataclass(eq=False)
class ReferenceSolution:
    features: FeatureMap
    gram: GramFactor
    coefficients: np.ndarray
    rhs: np.ndarray
    norm: float

    @property
    def representer(self) -> Representer:
        return Representer(self.features, self.gram, self.rhs, self.coefficients)

    def velocity(self, x, t):
        """Transport velocity du/dx at (x, t)."""
        return eval_reference(self, x, t)[1]


def solve_reference(
    colloc: CollocationSet,
    path: GeometricPath,
    kernel: ProductKernel,
    quad: QuadratureRule,
) -> ReferenceSolution:
    features = reference_operator_features(colloc, path, kernel)
    gram = factor_gram(features.gram())
    rhs = reference_rhs(colloc, path, quad)
    coef = gram.solve(rhs)
    norm = float(np.sqrt(max(np.dot(rhs, coef), 0.0)))
    return ReferenceSolution(features, gram, coef, rhs, norm)


def eval_reference(sol: ReferenceSolution, x, t):
    """Value and spatial gradient of the recovered potential at (x, t)."""
    rep = sol.representer
    return rep.value(x, t), rep.grad_x(x, t)
