"""Experiment runner.

Wires the library into four commands — reference, learn, mccann, all — driven
by a JSON config, and emits every artifact as a flat file: trajectory and
norm-curve CSVs, solution and metrics JSON, display grids of the tilting and
the normalized path density, a four-row comparison table, and a manifest with
content hashes.

Exit codes: 0 success, 2 config error, 3 solver/numeric failure, 4 I/O failure.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import datetime
import hashlib
import json
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .collocation import CollocationSet, build_grid, factor_gram
from .controlsolver import (
    ControlProblem,
    ControlSolution,
    LMConfig,
    PenaltyConfig,
)
from .densities import GaussianMixture, GeometricPath, QuadratureRule
from .kernels import Matern52, ProductKernel, matern52_deriv
from .metrics import fraction_left, mmd, moment_errors
from .refsolver import ReferenceSolution, solve_reference
from .transport import TrajectorySet, euler_transport, mccann_map, mccann_transport

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "load_config",
    "run_reference",
    "run_learn",
    "run_mccann",
    "run_all",
    "main",
]

LEFT_MODE_THRESHOLD = -2.0
DISPLAY_NX = 200
DISPLAY_NT = 101


class ConfigError(ValueError):
    pass


def _require_keys(d: dict, allowed, where: str) -> None:
    if not isinstance(d, dict):
        raise ConfigError(f"{where} must be a JSON object")
    unknown = sorted(set(d) - set(allowed))
    if unknown:
        raise ConfigError(f"unknown key(s) in {where}: {', '.join(unknown)}")


def _get_num(d: dict, key: str, default: float, where: str) -> float:
    v = d.get(key, default)
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{where}.{key} must be a number")
    return float(v)


def _get_int(d: dict, key: str, default: int, where: str) -> int:
    v = d.get(key, default)
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigError(f"{where}.{key} must be an integer")
    return v


def _get_bool(d: dict, key: str, default: bool, where: str) -> bool:
    v = d.get(key, default)
    if not isinstance(v, bool):
        raise ConfigError(f"{where}.{key} must be a boolean")
    return v


def _mixture_from_dict(d: dict, where: str) -> GaussianMixture:
    _require_keys(d, {"components"}, where)
    comps = d.get("components")
    if not isinstance(comps, list) or not comps:
        raise ConfigError(f"{where}.components must be a nonempty list")
    triples = []
    for i, c in enumerate(comps):
        sub = f"{where}.components[{i}]"
        _require_keys(c, {"weight", "mean", "std"}, sub)
        for key in ("weight", "mean", "std"):
            if key not in c:
                raise ConfigError(f"{sub} is missing required key {key!r}")
        triples.append(
            (
                _get_num(c, "weight", 0.0, sub),
                _get_num(c, "mean", 0.0, sub),
                _get_num(c, "std", 0.0, sub),
            )
        )
    try:
        return GaussianMixture(tuple(triples))
    except ValueError as e:
        raise ConfigError(f"{where}: {e}") from e


def _mixture_to_dict(m: GaussianMixture) -> dict:
    return {
        "components": [
            {"weight": w, "mean": mu, "std": s} for (w, mu, s) in m.components
        ]
    }


@dataclass(frozen=True)
class GridConfig:
    x_lo: float = -11.0
    x_hi: float = 7.0
    n_x: int = 50
    n_t: int = 51

    def to_dict(self) -> dict:
        return {"x_lo": self.x_lo, "x_hi": self.x_hi, "n_x": self.n_x, "n_t": self.n_t}

    @classmethod
    def from_dict(cls, d: dict) -> "GridConfig":
        _require_keys(d, {"x_lo", "x_hi", "n_x", "n_t"}, "grid")
        return cls(
            _get_num(d, "x_lo", cls.x_lo, "grid"),
            _get_num(d, "x_hi", cls.x_hi, "grid"),
            _get_int(d, "n_x", cls.n_x, "grid"),
            _get_int(d, "n_t", cls.n_t, "grid"),
        )


@dataclass(frozen=True)
class KernelConfig:
    """Lengthscales; None derives sigma_x = 180/n_x and sigma_t = 1/sqrt(n_t)."""

    sigma_x: Optional[float] = None
    sigma_t: Optional[float] = None

    def resolve(self, grid: GridConfig):
        sx = 180.0 / grid.n_x if self.sigma_x is None else self.sigma_x
        st = 1.0 / np.sqrt(grid.n_t) if self.sigma_t is None else self.sigma_t
        return float(sx), float(st)

    def to_dict(self) -> dict:
        return {"sigma_x": self.sigma_x, "sigma_t": self.sigma_t}

    @classmethod
    def from_dict(cls, d: dict) -> "KernelConfig":
        _require_keys(d, {"sigma_x", "sigma_t"}, "kernels")
        out = {}
        for key in ("sigma_x", "sigma_t"):
            v = d.get(key, None)
            if v is None:
                out[key] = None
            elif isinstance(v, bool) or not isinstance(v, (int, float)):
                raise ConfigError(f"kernels.{key} must be a number or null")
            else:
                out[key] = float(v)
        return cls(**out)


@dataclass(frozen=True)
class TransportConfig:
    dt: float = 0.01
    n_particles: int = 1000
    seed: int = 0

    def to_dict(self) -> dict:
        return {"dt": self.dt, "n_particles": self.n_particles, "seed": self.seed}

    @classmethod
    def from_dict(cls, d: dict) -> "TransportConfig":
        _require_keys(d, {"dt", "n_particles", "seed"}, "transport")
        return cls(
            _get_num(d, "dt", cls.dt, "transport"),
            _get_int(d, "n_particles", cls.n_particles, "transport"),
            _get_int(d, "seed", cls.seed, "transport"),
        )


@dataclass(frozen=True)
class QuadConfig:
    lower: float = -30.0
    upper: float = 30.0
    nodes: int = 4001

    def to_dict(self) -> dict:
        return {"lower": self.lower, "upper": self.upper, "nodes": self.nodes}

    @classmethod
    def from_dict(cls, d: dict) -> "QuadConfig":
        _require_keys(d, {"lower", "upper", "nodes"}, "quadrature")
        return cls(
            _get_num(d, "lower", cls.lower, "quadrature"),
            _get_num(d, "upper", cls.upper, "quadrature"),
            _get_int(d, "nodes", cls.nodes, "quadrature"),
        )


def _default_eta() -> GaussianMixture:
    return GaussianMixture.normal(0.0, 1.0)

def _default_pi() -> GaussianMixture:
    return GaussianMixture(((2.0 / 3.0, -8.0, 1.0), (1.0 / 3.0, 4.0, 1.0)))


@dataclass(frozen=True)
class ExperimentConfig:
    eta: GaussianMixture = dataclasses.field(default_factory=_default_eta)
    pi: GaussianMixture = dataclasses.field(default_factory=_default_pi)
    grid: GridConfig = GridConfig()
    kernels: KernelConfig = KernelConfig()
    penalties: PenaltyConfig = PenaltyConfig()
    warmup_balancing: bool = False
    lm: LMConfig = LMConfig()
    transport: TransportConfig = TransportConfig()
    quadrature: QuadConfig = QuadConfig()
    outputs: str = "out"

    _TOP_KEYS = {
        "eta", "pi", "grid", "kernels", "penalties", "warmup_balancing",
        "lm", "transport", "quadrature", "outputs",
    }
    _LM_KEYS = {
        "damping_init", "damping_shrink", "damping_grow",
        "tol_rel", "tol_grad", "max_iter",
    }

    def to_dict(self) -> dict:
        return {
            "eta": _mixture_to_dict(self.eta),
            "pi": _mixture_to_dict(self.pi),
            "grid": self.grid.to_dict(),
            "kernels": self.kernels.to_dict(),
            "penalties": {
                "lam_g": self.penalties.lam_g,
                "lam_pde": self.penalties.lam_pde,
                "lam_bc": self.penalties.lam_bc,
            },
            "warmup_balancing": self.warmup_balancing,
            "lm": {k: getattr(self.lm, k) for k in sorted(self._LM_KEYS)},
            "transport": self.transport.to_dict(),
            "quadrature": self.quadrature.to_dict(),
            "outputs": self.outputs,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        _require_keys(d, cls._TOP_KEYS, "config")
        kwargs = {}
        if "eta" in d:
            kwargs["eta"] = _mixture_from_dict(d["eta"], "eta")
        if "pi" in d:
            kwargs["pi"] = _mixture_from_dict(d["pi"], "pi")
        if "grid" in d:
            kwargs["grid"] = GridConfig.from_dict(d["grid"])
        if "kernels" in d:
            kwargs["kernels"] = KernelConfig.from_dict(d["kernels"])
        if "penalties" in d:
            p = d["penalties"]
            _require_keys(p, {"lam_g", "lam_pde", "lam_bc"}, "penalties")
            try:
                kwargs["penalties"] = PenaltyConfig(
                    _get_num(p, "lam_g", PenaltyConfig.lam_g, "penalties"),
                    _get_num(p, "lam_pde", PenaltyConfig.lam_pde, "penalties"),
                    _get_num(p, "lam_bc", PenaltyConfig.lam_bc, "penalties"),
                )
            except ValueError as e:
                raise ConfigError(f"penalties: {e}") from e
        if "warmup_balancing" in d:
            kwargs["warmup_balancing"] = _get_bool(
                d, "warmup_balancing", False, "config"
            )
        if "lm" in d:
            lm = d["lm"]
            _require_keys(lm, cls._LM_KEYS, "lm")
            defaults = LMConfig()
            kwargs["lm"] = LMConfig(
                damping_init=_get_num(lm, "damping_init", defaults.damping_init, "lm"),
                damping_shrink=_get_num(lm, "damping_shrink", defaults.damping_shrink, "lm"),
                damping_grow=_get_num(lm, "damping_grow", defaults.damping_grow, "lm"),
                tol_rel=_get_num(lm, "tol_rel", defaults.tol_rel, "lm"),
                tol_grad=_get_num(lm, "tol_grad", defaults.tol_grad, "lm"),
                max_iter=_get_int(lm, "max_iter", defaults.max_iter, "lm"),
            )
        if "transport" in d:
            kwargs["transport"] = TransportConfig.from_dict(d["transport"])
        if "quadrature" in d:
            kwargs["quadrature"] = QuadConfig.from_dict(d["quadrature"])
        if "outputs" in d:
            if not isinstance(d["outputs"], str):
                raise ConfigError("outputs must be a string path")
            kwargs["outputs"] = d["outputs"]
        try:
            return cls(**kwargs)
        except ValueError as e:
            raise ConfigError(str(e)) from e

    # -- constructed objects ------------------------------------------------

    def collocation(self) -> CollocationSet:
        g = self.grid
        return build_grid(g.x_lo, g.x_hi, g.n_x, g.n_t)

    def path(self) -> GeometricPath:
        return GeometricPath(self.eta, self.pi)

    def kernel(self) -> ProductKernel:
        sx, st = self.kernels.resolve(self.grid)
        return ProductKernel(Matern52(sx), Matern52(st))

    def quad_rule(self) -> QuadratureRule:
        q = self.quadrature
        return QuadratureRule(q.lower, q.upper, q.nodes)

    def lm_config(self) -> LMConfig:
        return dataclasses.replace(
            self.lm, warmup_balance=self.warmup_balancing
        )


def load_config(path) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise ConfigError(f"cannot read config file {path}: {e}") from e
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"config file {path} is not valid JSON: {e}") from e
    return ExperimentConfig.from_dict(data)


# ---- artifact writers ------------------------------------------------------


class _Stage:
    """Tracks files written by one stage so a failure can remove partials."""

    def __init__(self, out_dir: Path):
        self.out_dir = Path(out_dir)
        self.files = []

    def path(self, name: str) -> Path:
        p = self.out_dir / name
        self.files.append(p)
        return p

    def cleanup(self) -> None:
        for p in self.files:
            try:
                p.unlink(missing_ok=True)
            except OSError:
                pass


def _json_default(o):
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


def _write_json(path: Path, obj) -> None:
    with open(path, "w") as f:
        json.dump(obj, f, indent=1, sort_keys=True, default=_json_default)
        f.write("\n")


def _write_trajectories(path: Path, traj: TrajectorySet) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["particle", "t", "x"])
        times = traj.times
        pos = traj.positions
        for i in range(pos.shape[0]):
            for k in range(times.shape[0]):
                w.writerow([i, repr(float(times[k])), repr(float(pos[i, k]))])


def _write_norm_curve(path: Path, ts: np.ndarray, norms: np.ndarray) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["t", "norm"])
        for t, v in zip(ts, norms):
            w.writerow([repr(float(t)), repr(float(v))])


def _write_value_grid(path: Path, xs: np.ndarray, ts: np.ndarray, values: np.ndarray) -> None:
    """Long-format space-time field: header x,t,value; x is the outer loop."""
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["x", "t", "value"])
        for i in range(xs.shape[0]):
            xi = repr(float(xs[i]))
            for k in range(ts.shape[0]):
                w.writerow([xi, repr(float(ts[k])), repr(float(values[i, k]))])


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _utc_now() -> str:
    return datetime.datetime.now(datetime.timezone.utc).isoformat()


# ---- metrics helpers --------------------------------------------------------


def _sample_metrics(cfg: ExperimentConfig, samples: np.ndarray, seed: int) -> dict:
    """Terminal-ensemble metrics against the analytic target moments and a
    fresh target draw (seed + 1) for the MMD column."""
    target_mean = cfg.pi.mean()
    target_var = cfg.pi.var()
    mom = moment_errors(samples, target_mean, target_var)
    fresh = cfg.pi.sample(samples.shape[0], seed=seed + 1)
    return {
        "n_particles": int(samples.shape[0]),
        "threshold": LEFT_MODE_THRESHOLD,
        "fraction_left": fraction_left(samples, LEFT_MODE_THRESHOLD),
        "mean": mom["mean"],
        "var": mom["var"],
        "abs_err_mean": mom["abs_err_mean"],
        "rel_err_mean": mom["abs_err_mean"] / abs(target_mean)
        if target_mean != 0.0
        else mom["abs_err_mean"],
        "rel_err_var": mom["rel_err_var"],
        "target_mean": target_mean,
        "target_var": target_var,
        "mmd_vs_target": mmd(samples, fresh),
        "seed": seed,
    }


def _norm_curve(value_grid_fn, grid: GridConfig, kernel: ProductKernel) -> tuple:
    """Spatial RKHS norm of each time slice of a representer.

    The slices are interpolated on the fine display x-axis rather than the
    collocation grid: the interpolation norm grows monotonically with added
    points, and the coarse grid undersamples exactly the sharp late-time
    structure the diagnostic is meant to expose. One factorization of the
    spatial Gram serves all slices.
    """
    xs = np.linspace(grid.x_lo, grid.x_hi, DISPLAY_NX)
    ts = np.linspace(0.0, 1.0, grid.n_t)
    vals = value_grid_fn(xs, ts)
    gram = matern52_deriv(kernel.space, 0, 0, xs[:, None], xs[None, :])
    factor = factor_gram(gram)
    norms = np.array([np.linalg.norm(factor.whiten(vals[:, k])) for k in range(ts.shape[0])])
    return ts, norms


def _display_axes(grid: GridConfig):
    xs = np.linspace(grid.x_lo, grid.x_hi, DISPLAY_NX)
    ts = np.linspace(0.0, 1.0, DISPLAY_NT)
    return xs, ts


# ---- stages -----------------------------------------------------------------


def run_reference(cfg: ExperimentConfig, out_dir: Path) -> dict:
    """Solve the untilted-path velocity, transport particles, emit artifacts."""
    stage = _Stage(out_dir)
    try:
        colloc = cfg.collocation()
        path = cfg.path()
        kernel = cfg.kernel()
        quad = cfg.quad_rule()
        sol = solve_reference(colloc, path, kernel, quad)
        seed = cfg.transport.seed
        init = cfg.eta.sample(cfg.transport.n_particles, seed=seed)
        traj = euler_transport(sol.velocity, init, cfg.transport.dt, seed=seed)
        metrics = _sample_metrics(cfg, traj.terminal, seed)
        rep = sol.representer
        ts, norms = _norm_curve(rep.value_grid, cfg.grid, kernel)

        sx, st = cfg.kernels.resolve(cfg.grid)
        _write_json(
            stage.path("reference_solution.json"),
            {
                "grid": cfg.grid.to_dict(),
                "kernels": {"sigma_x": sx, "sigma_t": st},
                "jitter": sol.gram.jitter,
                "norm_u": sol.norm,
                "coefficients": sol.coefficients.tolist(),
                "rhs": sol.rhs.tolist(),
            },
        )
        _write_trajectories(stage.path("reference_trajectories.csv"), traj)
        _write_json(stage.path("reference_metrics.json"), metrics)
        _write_norm_curve(stage.path("reference_norms.csv"), ts, norms)
    except BaseException:
        stage.cleanup()
        raise
    return {
        "files": stage.files,
        "solution": sol,
        "trajectories": traj,
        "metrics": metrics,
        "jitter": sol.gram.jitter,
        "norm_u": sol.norm,
    }


def run_learn(cfg: ExperimentConfig, out_dir: Path) -> dict:
    """Solve for the tilted path, transport particles, emit artifacts
    including display grids of exp(g) and the normalized path density."""
    stage = _Stage(out_dir)
    try:
        colloc = cfg.collocation()
        path = cfg.path()
        kernel = cfg.kernel()
        quad = cfg.quad_rule()
        problem = ControlProblem(colloc, path, kernel, cfg.penalties)
        sol = problem.lm_solve(lm=cfg.lm_config())
        seed = cfg.transport.seed
        init = cfg.eta.sample(cfg.transport.n_particles, seed=seed)
        traj = euler_transport(sol.velocity, init, cfg.transport.dt, seed=seed)
        metrics = _sample_metrics(cfg, traj.terminal, seed)
        ts, norms = _norm_curve(sol.u.value_grid, cfg.grid, kernel)

        xd, td = _display_axes(cfg.grid)
        g_disp = sol.g.value_grid(xd, td)
        g_quad = sol.g.value_grid(quad.points, td)
        log_mu_quad = path.log_unnorm(quad.points[:, None], td[None, :])
        log_rho_quad = log_mu_quad + g_quad
        peak = log_rho_quad.max(axis=0)
        log_z = peak + np.log(quad.weights @ np.exp(log_rho_quad - peak[None, :]))
        log_rho_disp = path.log_unnorm(xd[:, None], td[None, :]) + g_disp
        rho_disp = np.exp(log_rho_disp - log_z[None, :])

        sx, st = cfg.kernels.resolve(cfg.grid)
        _write_json(
            stage.path("control_solution.json"),
            {
                "grid": cfg.grid.to_dict(),
                "kernels": {"sigma_x": sx, "sigma_t": st},
                "penalties": cfg.to_dict()["penalties"],
                "warmup_balancing": cfg.warmup_balancing,
                "jitter_u": problem.factor_u.jitter,
                "jitter_g": problem.factor_g.jitter,
                "norm_u": sol.norm_u,
                "norm_g": sol.norm_g,
                "state": sol.state.to_dict(),
                "report": sol.report.to_dict(),
            },
        )
        _write_trajectories(stage.path("learned_trajectories.csv"), traj)
        _write_json(stage.path("learned_metrics.json"), metrics)
        _write_norm_curve(stage.path("learned_norms.csv"), ts, norms)
        _write_value_grid(stage.path("tilting_grid.csv"), xd, td, np.exp(g_disp))
        _write_value_grid(stage.path("path_grid.csv"), xd, td, rho_disp)
    except BaseException:
        stage.cleanup()
        raise
    return {
        "files": stage.files,
        "solution": sol,
        "trajectories": traj,
        "metrics": metrics,
        "jitter_u": problem.factor_u.jitter,
        "jitter_g": problem.factor_g.jitter,
        "norm_u": sol.norm_u,
        "norm_g": sol.norm_g,
        "report": sol.report,
    }


def run_mccann(cfg: ExperimentConfig, out_dir: Path) -> dict:
    """Exact monotone-rearrangement transport baseline."""
    stage = _Stage(out_dir)
    try:
        seed = cfg.transport.seed
        init = cfg.eta.sample(cfg.transport.n_particles, seed=seed)
        traj = mccann_transport(cfg.eta, cfg.pi, init, cfg.transport.dt, seed=seed)
        metrics = _sample_metrics(cfg, traj.terminal, seed)
        _write_trajectories(stage.path("mccann_trajectories.csv"), traj)
        _write_json(stage.path("mccann_metrics.json"), metrics)
    except BaseException:
        stage.cleanup()
        raise
    return {"files": stage.files, "trajectories": traj, "metrics": metrics}


def _table_row(metrics: dict, norm_u: Optional[float]) -> dict:
    return {
        "fraction_left": metrics["fraction_left"],
        "rel_err_mean": metrics["rel_err_mean"],
        "rel_err_var": metrics["rel_err_var"],
        "mmd": metrics["mmd_vs_target"],
        "rkhs_norm_u": norm_u,
    }


def run_all(cfg: ExperimentConfig, out_dir: Path) -> dict:
    started = _utc_now()
    ref = run_reference(cfg, out_dir)
    learned = run_learn(cfg, out_dir)
    mcc = run_mccann(cfg, out_dir)

    stage = _Stage(out_dir)
    try:
        seed = cfg.transport.seed
        truth = cfg.pi.sample(cfg.transport.n_particles, seed=seed + 2)
        truth_metrics = _sample_metrics(cfg, truth, seed)
        table = {
            "columns": [
                "fraction_left",
                "rel_err_mean",
                "rel_err_var",
                "mmd",
                "rkhs_norm_u",
            ],
            "rows": {
                "reference": _table_row(ref["metrics"], ref["norm_u"]),
                "learned": _table_row(learned["metrics"], learned["norm_u"]),
                "mccann": _table_row(mcc["metrics"], None),
                "ground_truth": _table_row(truth_metrics, None),
            },
        }
        _write_json(stage.path("table1.json"), table)

        inventory_paths = ref["files"] + learned["files"] + mcc["files"] + stage.files
        manifest = {
            "config": cfg.to_dict(),
            "started_utc": started,
            "finished_utc": _utc_now(),
            "jitters": {
                "reference": ref["jitter"],
                "control_u": learned["jitter_u"],
                "control_g": learned["jitter_g"],
            },
            "solver": learned["report"].to_dict(),
            "files": [
                {
                    "name": p.name,
                    "sha256": _sha256(p),
                    "bytes": p.stat().st_size,
                }
                for p in inventory_paths
            ],
        }
        _write_json(Path(out_dir) / "manifest.json", manifest)
    except BaseException:
        stage.cleanup()
        raise
    return {
        "reference": ref,
        "learned": learned,
        "mccann": mcc,
        "table": table,
        "manifest": manifest,
    }


# ---- entry point ------------------------------------------------------------


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="tiltpath",
        description="Sample a target density by learning a tilted path of "
        "measures and transporting particles along its velocity field.",
    )
    parser.add_argument(
        "command", choices=["reference", "learn", "mccann", "all"],
        help="pipeline stage to run",
    )
    parser.add_argument("--config", required=True, help="JSON experiment config")
    parser.add_argument("--out", default=None, help="output directory override")
    parser.add_argument("--seed", type=int, default=None, help="transport seed override")
    args = parser.parse_args(argv)

    try:
        cfg = load_config(args.config)
        if args.out is not None:
            cfg = dataclasses.replace(cfg, outputs=args.out)
        if args.seed is not None:
            cfg = dataclasses.replace(
                cfg, transport=dataclasses.replace(cfg.transport, seed=args.seed)
            )
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2

    out_dir = Path(cfg.outputs)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        runner = {
            "reference": run_reference,
            "learn": run_learn,
            "mccann": run_mccann,
            "all": run_all,
        }[args.command]
        runner(cfg, out_dir)
    except OSError as e:
        print(f"error: I/O failure: {e}", file=sys.stderr)
        return 4
    except (np.linalg.LinAlgError, FloatingPointError, RuntimeError, ValueError) as e:
        print(f"error: solver failure: {e}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
