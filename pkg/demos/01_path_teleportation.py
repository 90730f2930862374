"""Why the plain annealing path is hard to follow.

The geometric path mu(t) ~ eta^(1-t) pi^t between a standard normal and a
far-away bimodal target moves probability mass by shrinking it in one place
and regrowing it in another ("teleportation") instead of carrying it across.
The velocity field that reproduces this path with an ODE must therefore be
enormous exactly where there is almost no mass to push.

This script renders the path density and the recovered reference velocity,
and plots the per-time spatial RKHS norm of the potential, which climbs
steeply as the teleportation happens.

Run:  python3 demos/01_path_teleportation.py   (~15 s, writes demos/figures/)
"""

import pathlib

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from tiltpath import (
    GaussianMixture,
    GeometricPath,
    Matern52,
    ProductKernel,
    QuadratureRule,
    build_grid,
    solve_reference,
)

FIGDIR = pathlib.Path(__file__).parent / "figures"
FIGDIR.mkdir(exist_ok=True)

eta = GaussianMixture.normal(0.0, 1.0)
pi = GaussianMixture(((2 / 3, -8.0, 1.0), (1 / 3, 4.0, 1.0)))
path = GeometricPath(eta, pi)
quad = QuadratureRule(-30.0, 30.0, 4001)

# normalized path density on a display grid
xs = np.linspace(-12.0, 8.0, 400)
ts = np.linspace(0.0, 1.0, 101)
log_mu = path.log_unnorm(xs[:, None], ts[None, :])
log_mu_q = path.log_unnorm(quad.points[:, None], ts[None, :])
peak = log_mu_q.max(axis=0)
log_z = peak + np.log(quad.weights @ np.exp(log_mu_q - peak[None, :]))
density = np.exp(log_mu - log_z[None, :])

# velocity that reproduces the path, recovered on a reduced collocation grid
n_x, n_t = 30, 31
colloc = build_grid(-11.0, 7.0, n_x, n_t)
kernel = ProductKernel(Matern52(180.0 / n_x), Matern52(1.0 / np.sqrt(n_t)))
sol = solve_reference(colloc, path, kernel, quad)
velocity = np.column_stack([sol.velocity(xs, float(t)) for t in ts])

fig, axes = plt.subplots(1, 3, figsize=(15, 4.2))

im0 = axes[0].pcolormesh(ts, xs, density, shading="auto", cmap="viridis")
axes[0].set_title("geometric path density")
axes[0].set_xlabel("t")
axes[0].set_ylabel("x")
fig.colorbar(im0, ax=axes[0])

im1 = axes[1].pcolormesh(ts, xs, velocity, shading="auto", cmap="coolwarm")
axes[1].set_title("reference velocity")
axes[1].set_xlabel("t")
fig.colorbar(im1, ax=axes[1])

# spatial norm per slice: interpolate each slice on a fine grid
from tiltpath import spatial_rkhs_norm

rep = sol.representer
norms = [spatial_rkhs_norm(rep.value, float(t), xs, kernel.space) for t in ts]
axes[2].semilogy(ts, norms, color="tab:red")
axes[2].set_title("spatial RKHS norm of the potential")
axes[2].set_xlabel("t")
axes[2].grid(alpha=0.3)

fig.tight_layout()
out = FIGDIR / "01_path_teleportation.png"
fig.savefig(out, dpi=130)
print(f"wrote {out}")
print(f"norm curve: min {min(norms):.1f}, max {max(norms):.1f}, "
      f"ratio {max(norms) / min(norms):.1f}")
print(f"peak |velocity| on display grid: {np.abs(velocity).max():.0f}")
