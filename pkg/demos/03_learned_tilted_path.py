"""Learning a tilted path whose dynamics a particle can actually follow.

Instead of accepting the geometric path as given, we multiply it by exp(g)
and solve for the tilt g, the potential u, and the per-time constants c so
that the continuity equation holds with v = grad u. The tilt reshapes the
intermediate densities into a bridge that carries mass continuously to the
far-away left mode, and the resulting velocity stays moderate.

The solve runs on a reduced 30 x 31 grid (~10 s of Levenberg-Marquardt).

Run:  python3 demos/03_learned_tilted_path.py   (~1 min, writes figures)
"""

import pathlib

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from tiltpath import (
    ControlProblem,
    GaussianMixture,
    GeometricPath,
    Matern52,
    PenaltyConfig,
    ProductKernel,
    QuadratureRule,
    build_grid,
    euler_transport,
    tilted_log_unnorm,
)

FIGDIR = pathlib.Path(__file__).parent / "figures"
FIGDIR.mkdir(exist_ok=True)

eta = GaussianMixture.normal(0.0, 1.0)
pi = GaussianMixture(((2 / 3, -8.0, 1.0), (1 / 3, 4.0, 1.0)))
path = GeometricPath(eta, pi)

n_x, n_t = 30, 31
colloc = build_grid(-11.0, 7.0, n_x, n_t)
kernel = ProductKernel(Matern52(180.0 / n_x), Matern52(1.0 / np.sqrt(n_t)))

problem = ControlProblem(colloc, path, kernel, PenaltyConfig())
sol = problem.lm_solve()
rep = sol.report
print(f"LM: {rep.iterations} iterations, converged={rep.converged} ({rep.reason})")
print(f"    PDE residual rms {rep.final_pde_residual_rms:.2e}, "
      f"boundary residual rms {rep.final_bc_residual_rms:.2e}")
print(f"    |u| = {sol.norm_u:.1f}, |g| = {sol.norm_g:.1f}")

# tilted path density, normalized per time slice by quadrature
quad = QuadratureRule(-30.0, 30.0, 4001)
xs = np.linspace(-12.0, 8.0, 400)
ts = np.linspace(0.0, 1.0, 101)
log_rho = np.column_stack([tilted_log_unnorm(sol, path, xs, float(t)) for t in ts])
log_rho_q = np.column_stack(
    [tilted_log_unnorm(sol, path, quad.points, float(t)) for t in ts]
)
peak = log_rho_q.max(axis=0)
log_z = peak + np.log(quad.weights @ np.exp(log_rho_q - peak[None, :]))
density = np.exp(log_rho - log_z[None, :])

init = eta.sample(300, seed=0)
traj = euler_transport(sol.velocity, init, dt=0.01, seed=0)
left = float(np.mean(traj.terminal < -2.0))
print(f"fraction of particles ending in the left mode: {left:.3f} (target 2/3)")

fig, axes = plt.subplots(1, 3, figsize=(15, 4.2))

im0 = axes[0].pcolormesh(ts, xs, density, shading="auto", cmap="viridis")
axes[0].set_title("learned (tilted) path density")
axes[0].set_xlabel("t")
axes[0].set_ylabel("x")
fig.colorbar(im0, ax=axes[0])

tilt = np.column_stack([sol.g.value(xs, float(t)) for t in ts])
im1 = axes[1].pcolormesh(ts, xs, np.exp(tilt), shading="auto", cmap="magma")
axes[1].set_title("tilt factor $e^g$")
axes[1].set_xlabel("t")
fig.colorbar(im1, ax=axes[1])

for i in range(0, 300, 6):
    axes[2].plot(traj.times, traj.positions[i], lw=0.5, color="tab:blue", alpha=0.45)
axes[2].set_title("particles following the learned velocity")
axes[2].set_xlabel("t")
axes[2].set_ylim(-12, 8)

fig.tight_layout()
out = FIGDIR / "03_learned_tilted_path.png"
fig.savefig(out, dpi=130)
print(f"wrote {out}")

# objective decay
fig2, ax = plt.subplots(figsize=(5, 3.4))
ax.semilogy(rep.objective_history)
ax.set_xlabel("accepted step")
ax.set_ylabel("penalized objective")
ax.grid(alpha=0.3)
fig2.tight_layout()
out2 = FIGDIR / "03_lm_objective.png"
fig2.savefig(out2, dpi=130)
print(f"wrote {out2}")
