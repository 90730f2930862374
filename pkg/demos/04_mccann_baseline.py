"""The 1D optimal-transport baseline.

In one dimension the optimal transport map between two densities is the
monotone rearrangement T = quantile_pi . cdf_eta, and the displacement
interpolation moves each particle along the straight line from x to T(x).
It reaches the target exactly -- at the price of needing the target's
quantile function, which a sampling method cannot assume.

Run:  python3 demos/04_mccann_baseline.py
"""

import pathlib

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from tiltpath import GaussianMixture, fraction_left, mccann_map, mccann_transport

FIGDIR = pathlib.Path(__file__).parent / "figures"
FIGDIR.mkdir(exist_ok=True)

eta = GaussianMixture.normal(0.0, 1.0)
pi = GaussianMixture(((2 / 3, -8.0, 1.0), (1 / 3, 4.0, 1.0)))

init = eta.sample(1000, seed=0)
traj = mccann_transport(eta, pi, init, dt=0.01, seed=0)
print(f"fraction ending left of -2: {fraction_left(traj.terminal):.3f} (target 2/3)")
print(f"terminal mean {traj.terminal.mean():.3f} (target {pi.mean():.3f})")

fig, axes = plt.subplots(1, 3, figsize=(15, 4))

grid = np.linspace(-3.5, 3.5, 300)
axes[0].plot(grid, mccann_map(eta, pi, grid))
axes[0].set_xlabel("x")
axes[0].set_ylabel("T(x)")
axes[0].set_title("monotone rearrangement map")
axes[0].grid(alpha=0.3)

for i in range(0, 1000, 20):
    axes[1].plot(traj.times, traj.positions[i], lw=0.5, color="tab:green", alpha=0.4)
axes[1].set_xlabel("t")
axes[1].set_title("displacement interpolation")

xs = np.linspace(-12, 8, 400)
axes[2].hist(traj.terminal, bins=60, density=True, alpha=0.6, label="terminal particles")
axes[2].plot(xs, pi.pdf(xs), "k-", lw=1.2, label="target density")
axes[2].set_xlabel("x")
axes[2].legend()
axes[2].set_title("terminal ensemble vs target")

fig.tight_layout()
out = FIGDIR / "04_mccann_baseline.png"
fig.savefig(out, dpi=130)
print(f"wrote {out}")
