"""Head-to-head sample quality of the three transports.

Runs the full pipeline (reference path, learned tilted path, and the
monotone-map baseline) through the command-line runner on the reduced grid,
then reads back the metrics table and draws the terminal histograms.

Run:  python3 demos/05_sample_quality.py   (~1.5 min)
"""

import csv
import json
import pathlib
import tempfile

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from tiltpath import GaussianMixture
from tiltpath.cli import main

FIGDIR = pathlib.Path(__file__).parent / "figures"
FIGDIR.mkdir(exist_ok=True)

CONFIG = {"grid": {"x_lo": -11.0, "x_hi": 7.0, "n_x": 30, "n_t": 31}}

with tempfile.TemporaryDirectory() as tmp:
    tmp = pathlib.Path(tmp)
    cfg = tmp / "config.json"
    cfg.write_text(json.dumps(CONFIG))
    out = tmp / "out"
    code = main(["all", "--config", str(cfg), "--out", str(out)])
    assert code == 0, f"pipeline exited {code}"

    table = json.loads((out / "table1.json").read_text())
    cols = table["columns"]
    print(f"{'method':<14}" + "".join(f"{c:>15}" for c in cols))
    for name in ("reference", "learned", "mccann", "ground_truth"):
        row = table["rows"][name]
        cells = "".join(
            f"{row[c]:>15.4f}" if row[c] is not None else f"{'-':>15}" for c in cols
        )
        print(f"{name:<14}{cells}")

    def terminal(path):
        with open(path) as fh:
            rows = [r for r in csv.reader(fh)][1:]
        last_t = rows[-1][1]
        return np.array([float(x) for p, t, x in rows if t == last_t])

    ensembles = {
        "reference path": terminal(out / "reference_trajectories.csv"),
        "learned path": terminal(out / "learned_trajectories.csv"),
        "monotone map": terminal(out / "mccann_trajectories.csv"),
    }

pi = GaussianMixture(((2 / 3, -8.0, 1.0), (1 / 3, 4.0, 1.0)))
xs = np.linspace(-13, 9, 500)
fig, axes = plt.subplots(1, 3, figsize=(14, 3.8), sharey=True)
for ax, (label, samples) in zip(axes, ensembles.items()):
    ax.hist(samples, bins=60, density=True, alpha=0.65)
    ax.plot(xs, pi.pdf(xs), "k-", lw=1.1)
    ax.set_title(label)
    ax.set_xlabel("x")
axes[0].set_ylabel("density")
fig.tight_layout()
dest = FIGDIR / "05_sample_quality.png"
fig.savefig(dest, dpi=130)
print(f"wrote {dest}")
