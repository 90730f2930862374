"""End-to-end acceptance checks for the shipped pipeline.

One test per criterion, asserted at the stated tolerance, so `pytest -v`
gives a pass/fail line for each. The two expensive fixtures (the default
full-grid run and the reduced-grid CI gate) are session-scoped and shared.

Criterion 3's full-grid clause asserts an MMD ratio of at least 3. On this
implementation the measured ratio is ~2.25 with the median-heuristic
V-statistic, and it is bandwidth-independent (the large-bandwidth limit is
|mean error| ratio ~2.4), so the test documents the shortfall rather than
relaxing the threshold.
"""

import csv
import hashlib
import json
import time
from pathlib import Path

import numpy as np
import pytest

from tiltpath.cli import main
from tiltpath.collocation import (
    Representer,
    assemble_gram,
    build_grid,
    feature_map_g,
)
from tiltpath.controlsolver import ControlProblem, PenaltyConfig
from tiltpath.densities import GaussianMixture, GeometricPath, QuadratureRule
from tiltpath.kernels import DerivOrder, Matern52, ProductKernel, matern52_deriv, product_deriv
from tiltpath.metrics import mmd
from tiltpath.refsolver import solve_reference
from tiltpath.transport import euler_transport, mccann_map

REDUCED = {"grid": {"x_lo": -11.0, "x_hi": 7.0, "n_x": 30, "n_t": 31}}


def _run_all(tmp, config: dict, tag: str):
    cfg_path = tmp / f"{tag}.json"
    cfg_path.write_text(json.dumps(config))
    out = tmp / tag
    start = time.monotonic()
    code = main(["all", "--config", str(cfg_path), "--out", str(out)])
    elapsed = time.monotonic() - start
    assert code == 0, f"pipeline exited {code}"
    return {"out": out, "elapsed": elapsed}


@pytest.fixture(scope="session")
def full_run(tmp_path_factory):
    """`all` on the default configuration (50 x 51 grid, 1000 particles)."""
    return _run_all(tmp_path_factory.mktemp("accept_full"), {}, "full")


@pytest.fixture(scope="session")
def reduced_runs(tmp_path_factory):
    """The reduced CI-gate configuration, run twice with the same seed."""
    tmp = tmp_path_factory.mktemp("accept_reduced")
    first = _run_all(tmp, REDUCED, "run_a")
    second = _run_all(tmp, REDUCED, "run_b")
    return {"first": first, "second": second}


def _metrics(run, name):
    return json.loads((run["out"] / name).read_text())


def _norm_curve(run, name):
    with open(run["out"] / name) as fh:
        return np.array([float(r[1]) for r in csv.reader(fh) if r[0] != "t"])


def test_criterion_01_reference_transport_misses_left_mode(full_run):
    m = _metrics(full_run, "reference_metrics.json")
    print(f"reference fraction_left={m['fraction_left']:.4f} elapsed={full_run['elapsed']:.0f}s")
    assert m["n_particles"] == 1000
    assert m["fraction_left"] <= 0.05
    assert full_run["elapsed"] <= 30 * 60


def test_criterion_02_learned_transport_covers_both_modes(full_run, reduced_runs):
    m = _metrics(full_run, "learned_metrics.json")
    print(f"learned fraction_left={m['fraction_left']:.4f} rel_err_var={m['rel_err_var']:.4f}")
    assert m["fraction_left"] >= 0.2
    assert m["rel_err_var"] <= 0.1
    assert full_run["elapsed"] <= 2 * 3600
    gate = _metrics(reduced_runs["first"], "learned_metrics.json")
    print(f"reduced gate fraction_left={gate['fraction_left']:.4f} "
          f"elapsed={reduced_runs['first']['elapsed']:.0f}s")
    assert gate["fraction_left"] >= 0.15
    assert reduced_runs["first"]["elapsed"] <= 10 * 60


def test_criterion_03_mmd_ordering(full_run, reduced_runs):
    ratios = {}
    for tag, run in (("full", full_run), ("reduced", reduced_runs["first"])):
        ref = _metrics(run, "reference_metrics.json")["mmd_vs_target"]
        learned = _metrics(run, "learned_metrics.json")["mmd_vs_target"]
        ratios[tag] = ref / learned
        print(f"{tag}: mmd ref={ref:.4f} learned={learned:.4f} ratio={ratios[tag]:.3f}")
    assert ratios["reduced"] >= 2.0
    assert ratios["full"] >= 3.0, (
        f"full-grid MMD ratio {ratios['full']:.3f} < 3. The learned MMD "
        "(~0.38) is dominated by the residual mode-mass error of the "
        "terminal ensemble and the ratio is bandwidth-independent "
        "(large-bandwidth limit ~2.4); optimizer restarts reach the same "
        "objective, so the shortfall is not a convergence artifact."
    )


def test_criterion_04_rkhs_norm_diagnostics(full_run):
    ref_curve = _norm_curve(full_run, "reference_norms.csv")
    g_curve = _norm_curve(full_run, "learned_norms.csv")
    ref_ratio = ref_curve.max() / ref_curve.min()
    g_ratio = g_curve.max() / g_curve.min()
    ref_norm = json.loads((full_run["out"] / "reference_solution.json").read_text())["norm_u"]
    u_norm = json.loads((full_run["out"] / "control_solution.json").read_text())["norm_u"]
    print(f"spatial max/min: reference={ref_ratio:.1f} learned={g_ratio:.2f}; "
          f"space-time norms {ref_norm:.1f}/{u_norm:.1f}={ref_norm / u_norm:.2f}")
    assert ref_ratio >= 10.0
    assert g_ratio <= 3.0
    assert ref_norm / u_norm >= 3.0


def test_criterion_05_gaussian_shift_oracle():
    start = time.monotonic()
    eta = GaussianMixture.normal(0.0, 1.0)
    pi = GaussianMixture.normal(2.0, 1.0)
    path = GeometricPath(eta, pi)
    colloc = build_grid(-4.0, 6.0, 30, 31)
    kern = ProductKernel(Matern52(180.0 / 30), Matern52(1.0 / np.sqrt(31)))
    quad = QuadratureRule(-15.0, 15.0, 2001)

    ref = solve_reference(colloc, path, kern, quad)
    xs = np.linspace(-1.5, 3.5, 41)
    worst = max(
        np.abs(ref.velocity(xs, float(t)) - 2.0).max() for t in np.linspace(0, 1, 31)
    )
    print(f"max|v_ref - 2| = {worst:.4f} on the central half-domain")
    assert worst <= 0.04

    prob = ControlProblem(colloc, path, kern, PenaltyConfig())
    sol = prob.lm_solve()
    print(f"learned pde_rms = {sol.report.final_pde_residual_rms:.2e}")
    assert sol.report.final_pde_residual_rms <= 1e-3

    init = eta.sample(1000, seed=0)
    traj = euler_transport(sol.velocity, init, dt=0.01, seed=0)
    term_mean = float(traj.terminal.mean())
    elapsed = time.monotonic() - start
    print(f"terminal mean = {term_mean:.4f}, elapsed = {elapsed:.1f}s")
    assert abs(term_mean - 2.0) <= 0.05
    assert elapsed <= 120.0


def test_criterion_06_kernel_derivatives_match_finite_differences():
    start = time.monotonic()
    rng = np.random.default_rng(0)

    def richardson(f, x, h):
        def central(step):
            return (f(x + step) - f(x - step)) / (2 * step)

        return (4.0 * central(h / 2) - central(h)) / 3.0

    for check in range(200):
        sigma = float(rng.choice([0.1, 1.0, 3.6]))
        kern = Matern52(sigma)
        # bump one per-side order by differencing along that axis; the
        # bumped side must stay within the implemented range 0..2
        bumped = int(rng.integers(0, 2))
        lo = int(rng.integers(0, 2))
        other = int(rng.integers(0, 3))
        a, b = (lo, other) if bumped == 0 else (other, lo)
        d = float(rng.uniform(0.2, 2.5) * sigma * rng.choice([-1.0, 1.0]))
        h = 1e-4 * sigma
        if bumped == 0:
            exact = matern52_deriv(kern, a + 1, b, d, 0.0)
            fd = richardson(lambda y: matern52_deriv(kern, a, b, y, 0.0), d, h)
        else:
            exact = matern52_deriv(kern, a, b + 1, d, 0.0)
            fd = richardson(lambda y: matern52_deriv(kern, a, b, d, y), 0.0, h)
        scale = max(abs(exact), (np.sqrt(5.0) / sigma) ** (a + b + 1))
        assert abs(exact - fd) / scale < 1e-5, (sigma, a, b, d)
    elapsed = time.monotonic() - start
    print(f"200 kernel-derivative configurations in {elapsed:.1f}s")
    assert elapsed <= 10.0


def test_criterion_07_representer_interpolation():
    start = time.monotonic()
    kern = ProductKernel(Matern52(1.0), Matern52(0.25))
    worst = 0.0
    for seed in range(20):
        rng = np.random.default_rng(seed)
        colloc = build_grid(-2.0, 2.0, 5, 5)
        features = feature_map_g(colloc, kern)
        factor = assemble_gram(features)
        z = rng.normal(size=len(features))
        rep = Representer.fit(features, factor, z)
        x, t = colloc.interior[:, 0], colloc.interior[:, 1]
        bx, bt = colloc.boundary[:, 0], colloc.boundary[:, 1]
        got = np.concatenate(
            [rep.time_deriv(x, t), rep.value(bx, bt), rep.grad_x(x, t)]
        )
        worst = max(worst, np.linalg.norm(got - z) / np.linalg.norm(z))
    elapsed = time.monotonic() - start
    print(f"worst relative reconstruction error = {worst:.2e} in {elapsed:.1f}s")
    assert worst < 1e-6
    assert elapsed <= 10.0


def test_criterion_08_lm_contract(full_run, reduced_runs):
    # monotone accepted objectives on both shipped grids
    for tag, run in (("full", full_run), ("reduced", reduced_runs["first"])):
        hist = json.loads((run["out"] / "manifest.json").read_text())["solver"][
            "objective_history"
        ]
        drops = [b - a for a, b in zip(hist, hist[1:])]
        print(f"{tag}: {len(hist) - 1} accepted steps, max increase {max(drops):.3e}")
        assert all(d < 0 for d in drops)

    # analytic Jacobian against central differences on a small instance
    eta = GaussianMixture.normal(0.0, 1.0)
    path = GeometricPath(eta, GaussianMixture.normal(2.0, 1.0))
    colloc = build_grid(-4.0, 6.0, 4, 3)
    kern = ProductKernel(Matern52(2.5), Matern52(0.45))
    prob = ControlProblem(colloc, path, kern, PenaltyConfig(3.0, 40.0, 25.0))
    rng = np.random.default_rng(0)
    n = prob.n_u + prob.n_g + prob.n_times
    w0 = 0.3 * rng.normal(size=n)
    jac = prob.jacobian(prob.state_from_w(w0))
    h = 1e-6
    worst = 0.0
    for col in range(n):
        wp, wm = w0.copy(), w0.copy()
        wp[col] += h
        wm[col] -= h
        fd = (
            prob.residual_vector(prob.state_from_w(wp))
            - prob.residual_vector(prob.state_from_w(wm))
        ) / (2 * h)
        worst = max(worst, np.abs(jac[:, col] - fd).max())
    print(f"max |J - J_fd| = {worst:.2e}")
    assert worst < 1e-6


def test_criterion_09_mccann_baseline(full_run):
    m = _metrics(full_run, "mccann_metrics.json")
    print(f"mccann fraction_left = {m['fraction_left']:.4f}")
    assert abs(m["fraction_left"] - 2.0 / 3.0) <= 0.05

    eta = GaussianMixture.normal(0.0, 1.0)
    pi = GaussianMixture(((2.0 / 3.0, -8.0, 1.0), (1.0 / 3.0, 4.0, 1.0)))
    x = np.sort(eta.sample(1000, seed=0))
    tx = mccann_map(eta, pi, x)
    assert np.all(np.diff(tx) > 0)


def test_criterion_10_determinism(reduced_runs):
    out_a = reduced_runs["first"]["out"]
    out_b = reduced_runs["second"]["out"]

    def digests(out):
        return {
            p.name: hashlib.sha256(p.read_bytes()).hexdigest()
            for p in sorted(out.iterdir())
            if p.name != "manifest.json"
        }

    da, db = digests(out_a), digests(out_b)
    assert da == db
    man_a = json.loads((out_a / "manifest.json").read_text())
    man_b = json.loads((out_b / "manifest.json").read_text())
    assert man_a["files"] == man_b["files"]
    # the config echo records the --out override; everything else must agree
    man_a["config"].pop("outputs")
    man_b["config"].pop("outputs")
    assert man_a["config"] == man_b["config"]
    print(f"{len(da)} artifacts byte-identical across reruns")
