"""Penalized collocation solve for the tilted path and its potential.

Unknowns are the functional targets of the potential u (Laplacians z4 and
gradients z3 at interior points), of the tilting g (time-derivatives z1,
boundary values z5, gradients z2), and the per-time constants c standing in
for the normalization rate of the tilted path. The PDE residual at interior
point j, in the v = +grad(u) convention, is

    F_j = ell_j + z1_j - c_{n(j)} + (s_j + z2_j) * z3_j + z4_j,

and the objective is the regularized sum of squares

    |w_u|^2 + lam_g |w_g|^2 + lam_pde sum F_j^2 + lam_bc sum (z5_j)^2,

with the whitened variables w = L^{-1} z of the Gram Cholesky factors.
Levenberg-Marquardt iterates on w = (w_u, w_g, c).

The damped normal equations are solved through the block structure: the
regularization rows contribute a diagonal, and the penalty rows have only
J + J_b rows, so a capacity-matrix factorization of that size gives the exact
(J^T J + delta I)^{-1} J^T r step. The products L_block L_block^T that appear
are sub-blocks of K + jitter I, already assembled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np
import scipy.linalg

from .collocation import CollocationSet, FeatureMap, GramFactor, Representer
from .collocation import factor_gram, feature_map_g, feature_map_u
from .densities import GeometricPath
from .kernels import ProductKernel

__all__ = [
    "PenaltyConfig",
    "LMConfig",
    "ControlState",
    "SolveReport",
    "ControlSolution",
    "ControlProblem",
    "tilted_log_unnorm",
]

_DAMPING_MAX = 1e16
_DAMPING_MIN = 1e-12


@dataclass(frozen=True)
class PenaltyConfig:
    lam_g: float = 51.8
    lam_pde: float = 2.63e5
    lam_bc: float = 6.01e4

    def __post_init__(self):
        for name in ("lam_g", "lam_pde", "lam_bc"):
            v = float(getattr(self, name))
            if not (math.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be positive")
            object.__setattr__(self, name, v)


@dataclass(frozen=True)
class LMConfig:
    damping_init: float = 1e-2
    damping_shrink: float = 0.5
    damping_grow: float = 4.0
    tol_rel: float = 1e-9
    tol_grad: float = 1e-8
    max_iter: int = 500
    warmup_balance: bool = False
    warmup_iters: int = 5

    def to_dict(self) -> dict:
        return {
            "damping_init": self.damping_init,
            "damping_shrink": self.damping_shrink,
            "damping_grow": self.damping_grow,
            "tol_rel": self.tol_rel,
            "tol_grad": self.tol_grad,
            "max_iter": self.max_iter,
            "warmup_balance": self.warmup_balance,
            "warmup_iters": self.warmup_iters,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "LMConfig":
        return cls(**d)


@dataclass
class ControlState:
    """Solver unknowns in target space; block layout documented on the fields."""

    z_u: np.ndarray  # (2J,): Laplacian targets then gradient targets
    z_g: np.ndarray  # (2J+J_b,): time-deriv, boundary-value, gradient targets
    c: np.ndarray  # (N,): per-time normalization-rate constants

    def __post_init__(self):
        self.z_u = np.asarray(self.z_u, dtype=float)
        self.z_g = np.asarray(self.z_g, dtype=float)
        self.c = np.asarray(self.c, dtype=float)
        if self.z_u.ndim != 1 or self.z_u.shape[0] % 2:
            raise ValueError("z_u must be a flat vector of even length 2J")
        j = self.z_u.shape[0] // 2
        if self.z_g.ndim != 1 or self.z_g.shape[0] < 2 * j:
            raise ValueError("z_g must be a flat vector of length 2J + J_b")
        if self.c.ndim != 1:
            raise ValueError("c must be a flat vector")
        for name, v in (("z_u", self.z_u), ("z_g", self.z_g), ("c", self.c)):
            if not np.isfinite(v).all():
                raise ValueError(f"{name} must be finite")

    @property
    def n_interior(self) -> int:
        return self.z_u.shape[0] // 2

    @property
    def lap_u(self) -> np.ndarray:
        return self.z_u[: self.n_interior]

    @property
    def grad_u(self) -> np.ndarray:
        return self.z_u[self.n_interior :]

    @property
    def dt_g(self) -> np.ndarray:
        return self.z_g[: self.n_interior]

    @property
    def bnd_g(self) -> np.ndarray:
        j = self.n_interior
        return self.z_g[j : self.z_g.shape[0] - j]

    @property
    def grad_g(self) -> np.ndarray:
        return self.z_g[self.z_g.shape[0] - self.n_interior :]

    def to_dict(self) -> dict:
        return {"z_u": self.z_u.tolist(), "z_g": self.z_g.tolist(), "c": self.c.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "ControlState":
        return cls(np.array(d["z_u"]), np.array(d["z_g"]), np.array(d["c"]))


@dataclass
class SolveReport:
    iterations: int
    converged: bool
    reason: str
    objective_history: list
    final_pde_residual_rms: float
    final_bc_residual_rms: float
    grad_norm: float
    damping_final: float
    lam_pde_used: float
    lam_bc_used: float

    def to_dict(self) -> dict:
        return {
            "iterations": self.iterations,
            "converged": self.converged,
            "reason": self.reason,
            "objective_history": list(self.objective_history),
            "final_pde_residual_rms": self.final_pde_residual_rms,
            "final_bc_residual_rms": self.final_bc_residual_rms,
            "grad_norm": self.grad_norm,
            "damping_final": self.damping_final,
            "lam_pde_used": self.lam_pde_used,
            "lam_bc_used": self.lam_bc_used,
        }


@dataclass(eq=False)
class ControlSolution:
    state: ControlState
    u: Representer
    g: Representer
    norm_u: float
    norm_g: float
    report: Optional[SolveReport] = None

    def velocity(self, x, t):
        """Transport velocity grad_x u at (x, t)."""
        return self.u.grad_x(x, t)

    def tilt_term(self, x, t):
        """(g, dt_g) at (x_array, t), in the shape quadrature helpers expect."""
        return self.g.value(x, t), self.g.time_deriv(x, t)


def tilted_log_unnorm(sol: ControlSolution, path: GeometricPath, x, t):
    """Unnormalized log-density of the tilted path: geometric part plus g."""
    return path.log_unnorm(x, t) + sol.g.value(x, t)


class ControlProblem:
    """Problem context: grids, Gram factors, and the penalized LM solve."""

    def __init__(
        self,
        colloc: CollocationSet,
        path: GeometricPath,
        kernel: ProductKernel,
        penalties: PenaltyConfig = PenaltyConfig(),
    ):
        self.colloc = colloc
        self.path = path
        self.kernel = kernel
        self.penalties = penalties
        self.features_u = feature_map_u(colloc, kernel)
        self.features_g = feature_map_g(colloc, kernel)
        self.factor_u = factor_gram(self.features_u.gram())
        self.factor_g = factor_gram(self.features_g.gram())
        x = colloc.interior[:, 0]
        t = colloc.interior[:, 1]
        self.ell, self.score = path.ingredients(x, t)
        self.time_index = colloc.time_index.astype(np.intp)
        self.n_j = colloc.n_interior
        self.n_b = colloc.n_boundary
        self.n_times = colloc.n_times
        self.n_u = 2 * self.n_j
        self.n_g = 2 * self.n_j + self.n_b

    # ---- state plumbing -------------------------------------------------

    def zero_state(self) -> ControlState:
        return ControlState(
            np.zeros(self.n_u), np.zeros(self.n_g), np.zeros(self.n_times)
        )

    def w_from_state(self, state: ControlState) -> np.ndarray:
        return np.concatenate(
            [
                self.factor_u.whiten(state.z_u),
                self.factor_g.whiten(state.z_g),
                state.c,
            ]
        )

    def state_from_w(self, w: np.ndarray) -> ControlState:
        w_u, w_g, c = self._split(w)
        return ControlState(
            self.factor_u.lower @ w_u, self.factor_g.lower @ w_g, c.copy()
        )

    def _split(self, w: np.ndarray):
        return (
            w[: self.n_u],
            w[self.n_u : self.n_u + self.n_g],
            w[self.n_u + self.n_g :],
        )

    # ---- residuals ------------------------------------------------------

    def pde_residual(self, state: ControlState) -> np.ndarray:
        return (
            self.ell
            + state.dt_g
            - state.c[self.time_index]
            + (self.score + state.grad_g) * state.grad_u
            + state.lap_u
        )

    def residual_vector(self, state: ControlState) -> np.ndarray:
        """[w_u ; sqrt(lam_g) w_g ; sqrt(lam_pde) F ; sqrt(lam_bc) z5]; its
        squared norm is the penalized objective."""
        self._check_dims(state)
        lam = self.penalties
        return np.concatenate(
            [
                self.factor_u.whiten(state.z_u),
                math.sqrt(lam.lam_g) * self.factor_g.whiten(state.z_g),
                math.sqrt(lam.lam_pde) * self.pde_residual(state),
                math.sqrt(lam.lam_bc) * state.bnd_g,
            ]
        )

    def jacobian(self, state: ControlState) -> np.ndarray:
        """Dense Jacobian of residual_vector w.r.t. the whitened unknowns
        [w_u ; w_g ; c]. Intended for small instances and verification."""
        self._check_dims(state)
        nj, nb, nt = self.n_j, self.n_b, self.n_times
        nu, ng = self.n_u, self.n_g
        lam = self.penalties
        lu = self.factor_u.lower
        lg = self.factor_g.lower
        rows = nu + ng + nj + nb
        cols = nu + ng + nt
        out = np.zeros((rows, cols))
        out[:nu, :nu] = np.eye(nu)
        out[nu : nu + ng, nu : nu + ng] = math.sqrt(lam.lam_g) * np.eye(ng)
        a = self.score + state.grad_g
        b = state.grad_u
        r0 = nu + ng
        sp = math.sqrt(lam.lam_pde)
        out[r0 : r0 + nj, :nu] = sp * (lu[:nj, :] + a[:, None] * lu[nj:, :])
        out[r0 : r0 + nj, nu : nu + ng] = sp * (
            lg[:nj, :] + b[:, None] * lg[nj + nb :, :]
        )
        out[np.arange(r0, r0 + nj), nu + ng + self.time_index] = -sp
        out[r0 + nj :, nu : nu + ng] = math.sqrt(lam.lam_bc) * lg[nj : nj + nb, :]
        return out

    def _check_dims(self, state: ControlState) -> None:
        if (
            state.z_u.shape[0] != self.n_u
            or state.z_g.shape[0] != self.n_g
            or state.c.shape[0] != self.n_times
        ):
            raise ValueError("state dimensions do not match the problem")

    # ---- Levenberg-Marquardt --------------------------------------------

    def _evaluate(self, w, lam_pde, lam_bc):
        """Split w, map to targets, and return everything the step needs."""
        w_u, w_g, c = self._split(w)
        z_u = self.factor_u.lower @ w_u
        z_g = self.factor_g.lower @ w_g
        nj, nb = self.n_j, self.n_b
        z4, z3 = z_u[:nj], z_u[nj:]
        z1, z5, z2 = z_g[:nj], z_g[nj : nj + nb], z_g[nj + nb :]
        f = self.ell + z1 - c[self.time_index] + (self.score + z2) * z3 + z4
        obj = (
            np.dot(w_u, w_u)
            + self.penalties.lam_g * np.dot(w_g, w_g)
            + lam_pde * np.dot(f, f)
            + lam_bc * np.dot(z5, z5)
        )
        return {"w_u": w_u, "w_g": w_g, "c": c, "z3": z3, "z2": z2, "z5": z5,
                "f": f, "obj": float(obj)}

    def _grad(self, ev, lam_pde, lam_bc):
        """J^T r for the current point (exact, via the block structure)."""
        nj, nb = self.n_j, self.n_b
        lu, lg = self.factor_u.lower, self.factor_g.lower
        a = self.score + ev["z2"]
        b = ev["z3"]
        yp = lam_pde * ev["f"]
        yb = lam_bc * ev["z5"]
        g_u = ev["w_u"] + lu[:nj].T @ yp + lu[nj:].T @ (a * yp)
        g_g = (
            self.penalties.lam_g * ev["w_g"]
            + lg[:nj].T @ yp
            + lg[nj + nb :].T @ (b * yp)
            + lg[nj : nj + nb].T @ yb
        )
        g_c = -np.bincount(self.time_index, weights=yp, minlength=self.n_times)
        return np.concatenate([g_u, g_g, g_c])

    def _normal_blocks(self):
        """Constant pieces of the capacity matrix. L_block L_block^T equals the
        corresponding block of K + jitter I, so no matrix products are needed."""
        nj, nb = self.n_j, self.n_b
        ku, ju = self.factor_u.matrix, self.factor_u.jitter
        kg, jg = self.factor_g.matrix, self.factor_g.jitter
        eye_j = np.eye(nj)
        t1 = ku[:nj, :nj] + ju * eye_j
        t2 = ku[nj:, :nj]
        t3 = ku[nj:, nj:] + ju * eye_j
        u1 = kg[:nj, :nj] + jg * eye_j
        u2 = kg[nj + nb :, :nj]
        u3 = kg[nj + nb :, nj + nb :] + jg * eye_j
        v1 = kg[:nj, nj : nj + nb]
        v2 = kg[nj + nb :, nj : nj + nb]
        ss = kg[nj : nj + nb, nj : nj + nb] + jg * np.eye(nb)
        eqt = (self.time_index[:, None] == self.time_index[None, :]).astype(float)
        return t1, t2, t3, u1, u2, u3, v1, v2, ss, eqt

    def _solve_step(self, eqt, alal, blbl, bls, ss, G_apply, GT_apply,
                    grad, delta, lam_pde, lam_bc):
        """One damped step: solve (D + G^T G) p = -grad via the capacity matrix
        M = I + G D^{-1} G^T of size J + J_b. Returns None if M fails to factor."""
        nj, nb = self.n_j, self.n_b
        lam_g = self.penalties.lam_g
        d = np.concatenate(
            [
                np.full(self.n_u, 1.0 + delta),
                np.full(self.n_g, lam_g + delta),
                np.full(self.n_times, delta),
            ]
        )
        m = np.empty((nj + nb, nj + nb))
        m[:nj, :nj] = (
            (lam_pde / (1.0 + delta)) * alal
            + (lam_pde / (lam_g + delta)) * blbl
            + (lam_pde / delta) * eqt
        )
        cross = (math.sqrt(lam_pde * lam_bc) / (lam_g + delta)) * bls
        m[:nj, nj:] = cross
        m[nj:, :nj] = cross.T
        m[nj:, nj:] = (lam_bc / (lam_g + delta)) * ss
        m.flat[:: nj + nb + 1] += 1.0
        try:
            cho = scipy.linalg.cho_factor(m, lower=True)
        except np.linalg.LinAlgError:
            return None
        u0 = -grad / d
        y = scipy.linalg.cho_solve(cho, G_apply(u0))
        return u0 - GT_apply(y) / d

    def lm_solve(
        self,
        init: Optional[ControlState] = None,
        lm: LMConfig = LMConfig(),
    ) -> ControlSolution:
        """Damped Gauss-Newton on the whitened unknowns from the given state
        (zeros by default). Returns the reconstructed solution with a report."""
        nj, nb = self.n_j, self.n_b
        lu, lg = self.factor_u.lower, self.factor_g.lower
        lam_pde, lam_bc = self.penalties.lam_pde, self.penalties.lam_bc
        w = (
            np.zeros(self.n_u + self.n_g + self.n_times)
            if init is None
            else self.w_from_state(init)
        )
        if init is not None:
            self._check_dims(init)
        ev = self._evaluate(w, lam_pde, lam_bc)
        if not math.isfinite(ev["obj"]):
            raise RuntimeError(f"non-finite objective at the initial state: {ev['obj']!r}")

        t1, t2, t3, u1, u2, u3, v1, v2, ss, eqt = self._normal_blocks()
        sp, sb = math.sqrt(lam_pde), math.sqrt(lam_bc)

        delta = lm.damping_init
        history = [ev["obj"]]
        converged = False
        reason = "max_iter"
        grad_norm = math.nan

        for it in range(lm.max_iter):
            if lm.warmup_balance and it < lm.warmup_iters:
                # rescale the data weights so each penalty block matches the
                # regularization block; clamped so a near-zero block cannot
                # blow the weights up
                reg = np.dot(ev["w_u"], ev["w_u"]) + self.penalties.lam_g * np.dot(
                    ev["w_g"], ev["w_g"]
                )
                sf = np.dot(ev["f"], ev["f"])
                s5 = np.dot(ev["z5"], ev["z5"])
                if reg > 0 and sf > 0:
                    lam_pde = min(max(reg / sf, 1e-6), 1e12)
                if reg > 0 and s5 > 0:
                    lam_bc = min(max(reg / s5, 1e-6), 1e12)
                sp, sb = math.sqrt(lam_pde), math.sqrt(lam_bc)
                ev = self._evaluate(w, lam_pde, lam_bc)
                history[-1] = ev["obj"]
            grad = self._grad(ev, lam_pde, lam_bc)
            grad_norm = float(np.linalg.norm(grad))
            if grad_norm <= lm.tol_grad:
                converged, reason = True, "gradient"
                break
            a = self.score + ev["z2"]
            b = ev["z3"]
            alal = t1 + t2.T * a[None, :] + a[:, None] * t2 + (a[:, None] * a[None, :]) * t3
            blbl = u1 + u2.T * b[None, :] + b[:, None] * u2 + (b[:, None] * b[None, :]) * u3
            bls = v1 + b[:, None] * v2

            def G_apply(x):
                x_u, x_g, x_c = self._split(x)
                pde = sp * (
                    lu[:nj] @ x_u
                    + a * (lu[nj:] @ x_u)
                    + lg[:nj] @ x_g
                    + b * (lg[nj + nb :] @ x_g)
                    - x_c[self.time_index]
                )
                return np.concatenate([pde, sb * (lg[nj : nj + nb] @ x_g)])

            def GT_apply(y):
                yp, yb = y[:nj], y[nj:]
                g_u = sp * (lu[:nj].T @ yp + lu[nj:].T @ (a * yp))
                g_g = (
                    sp * (lg[:nj].T @ yp + lg[nj + nb :].T @ (b * yp))
                    + sb * (lg[nj : nj + nb].T @ yb)
                )
                g_c = -sp * np.bincount(self.time_index, weights=yp, minlength=self.n_times)
                return np.concatenate([g_u, g_g, g_c])

            accepted = False
            while delta <= _DAMPING_MAX:
                step = self._solve_step(
                    eqt, alal, blbl, bls, ss, G_apply, GT_apply,
                    grad, delta, lam_pde, lam_bc,
                )
                if step is not None:
                    trial = self._evaluate(w + step, lam_pde, lam_bc)
                    if math.isfinite(trial["obj"]) and trial["obj"] < ev["obj"]:
                        w = w + step
                        prev = ev["obj"]
                        ev = trial
                        history.append(ev["obj"])
                        delta = max(delta * lm.damping_shrink, _DAMPING_MIN)
                        accepted = True
                        break
                delta *= lm.damping_grow
            if not accepted:
                converged, reason = False, "stalled"
                break
            if prev - ev["obj"] <= lm.tol_rel * max(prev, 1e-300):
                converged, reason = True, "objective"
                break

        state = self.state_from_w(w)
        report = SolveReport(
            iterations=len(history) - 1,
            converged=converged,
            reason=reason,
            objective_history=history,
            final_pde_residual_rms=float(np.sqrt(np.mean(ev["f"] ** 2))),
            final_bc_residual_rms=float(np.sqrt(np.mean(ev["z5"] ** 2))),
            grad_norm=grad_norm,
            damping_final=float(delta),
            lam_pde_used=float(lam_pde),
            lam_bc_used=float(lam_bc),
        )
        sol = self.reconstruct(state)
        sol.report = report
        return sol

    def reconstruct(self, state: ControlState) -> ControlSolution:
        """Representer functions through the Gram factors; exposes u, grad u,
        g, dt_g, grad g anywhere via the returned solution."""
        self._check_dims(state)
        u = Representer.fit(self.features_u, self.factor_u, state.z_u)
        g = Representer.fit(self.features_g, self.factor_g, state.z_g)
        return ControlSolution(state, u, g, u.norm, g.norm)
