"""Manifest-driven experiment runner and the `ttsa` command-line surface.

A manifest is a JSON document with stable keys (see ExperimentManifest);
running one produces moments.csv, slopes.json, audit.json, provenance.json
and, when a grid search is configured, grid.json.  Outputs are byte-stable
across reruns except the wall-clock field in provenance.
"""

from __future__ import annotations

import argparse
import datetime
import hashlib
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .engine import (HAVE_KERNEL, RunConfig, resolve_workers, run_experiment)
from .metrics import MomentSeries, aggregate, fit_slope
from .noise import NoiseModel
from .problems import get_problem
from .schedules import (StepSchedule, audit_schedule, corollary_schedule,
                        schedule_bounds)

BETA0_CONSTRAINT = "beta0 >= 1 when b = 1"

DEFAULT_GRID = (10.0, 3.0, 1.0, 0.3, 0.1)


@dataclass
class GridSearchSpec:
    alpha0_grid: tuple[float, ...] = DEFAULT_GRID
    beta0_grid: tuple[float, ...] = DEFAULT_GRID
    search_horizon: int = 10_000
    search_reps: int = 50
    constraint: Optional[str] = None

    def __post_init__(self):
        if not self.alpha0_grid or not self.beta0_grid:
            raise ValueError("grid_search grids must be non-empty")
        if self.constraint not in (None, BETA0_CONSTRAINT):
            raise ValueError(
                f"unknown constraint {self.constraint!r}; the only "
                f"supported one is {BETA0_CONSTRAINT!r}")

    def to_dict(self):
        return {"alpha0_grid": list(self.alpha0_grid),
                "beta0_grid": list(self.beta0_grid),
                "search_horizon": self.search_horizon,
                "search_reps": self.search_reps,
                "constraint": self.constraint}


@dataclass
class ExperimentManifest:
    name: str
    problem: str
    schedule: StepSchedule
    noise: NoiseModel
    horizon: int
    replications: int
    base_seed: int
    mode: str = "simultaneous"
    checkpoints: Optional[list[int]] = None
    grid_search: Optional[GridSearchSpec] = None
    slope_windows: dict[str, tuple[float, float]] = field(default_factory=dict)
    out_dir: Optional[str] = None

    def to_dict(self) -> dict:
        s = self.schedule
        n = self.noise
        return {
            "name": self.name,
            "problem": self.problem,
            "schedule": {"alpha0": s.alpha0, "a": s.a, "beta0": s.beta0,
                         "b": s.b, "T0": s.T0},
            "noise": {"kind": n.kind, "sigma_xi": n.sigma_xi,
                      "sigma_psi": n.sigma_psi, "bias_scale": n.bias_scale},
            "horizon": self.horizon,
            "replications": self.replications,
            "base_seed": self.base_seed,
            "mode": self.mode,
            "checkpoints": self.checkpoints,
            "grid_search": (None if self.grid_search is None
                            else self.grid_search.to_dict()),
            "slope_windows": {k: list(v)
                              for k, v in self.slope_windows.items()},
            "out_dir": self.out_dir,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentManifest":
        try:
            sched = StepSchedule(**d["schedule"])
            noise = NoiseModel(**d["noise"])
            gs = d.get("grid_search")
            if gs is not None:
                gs = GridSearchSpec(
                    alpha0_grid=tuple(gs.get("alpha0_grid", DEFAULT_GRID)),
                    beta0_grid=tuple(gs.get("beta0_grid", DEFAULT_GRID)),
                    search_horizon=int(gs.get("search_horizon", 10_000)),
                    search_reps=int(gs.get("search_reps", 50)),
                    constraint=gs.get("constraint"))
            windows = {k: (float(v[0]), float(v[1]))
                       for k, v in d.get("slope_windows", {}).items()}
            return cls(name=d["name"], problem=d["problem"], schedule=sched,
                       noise=noise, horizon=int(d["horizon"]),
                       replications=int(d["replications"]),
                       base_seed=int(d["base_seed"]),
                       mode=d.get("mode", "simultaneous"),
                       checkpoints=d.get("checkpoints"),
                       grid_search=gs, slope_windows=windows,
                       out_dir=d.get("out_dir"))
        except KeyError as exc:
            raise ValueError(f"manifest is missing field {exc}") from exc

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "ExperimentManifest":
        return cls.from_dict(json.loads(text))

    def sha256(self) -> str:
        canon = json.dumps(self.to_dict(), sort_keys=True,
                           separators=(",", ":"))
        return hashlib.sha256(canon.encode()).hexdigest()


def load_manifest(path) -> ExperimentManifest:
    return ExperimentManifest.from_json(Path(path).read_text())


def default_slope_window(horizon: int) -> tuple[float, float]:
    return (horizon / 10.0, float(horizon))


# ---------------------------------------------------------------------------
# Grid search
# ---------------------------------------------------------------------------

@dataclass
class GridResult:
    alpha0: float
    beta0: float
    cells: list[dict]

    def to_dict(self):
        return {"selected": {"alpha0": self.alpha0, "beta0": self.beta0},
                "cells": self.cells}


def grid_search(manifest: ExperimentManifest,
                workers: Optional[int] = None,
                base_seed: Optional[int] = None) -> GridResult:
    """Pick (alpha0, beta0) minimizing the terminal slow-iterate error.

    Every cell runs search_reps replications for search_horizon steps on
    the same streams; the score is the terminal mean |y_hat|^2 over
    surviving replications.  Ties break to smaller terminal |x_hat|^2,
    then to larger alpha0.
    """
    gs = manifest.grid_search
    if gs is None:
        raise ValueError(f"manifest {manifest.name!r} has no grid_search")
    seed = manifest.base_seed if base_seed is None else base_seed
    beta_candidates = list(gs.beta0_grid)
    if gs.constraint == BETA0_CONSTRAINT and manifest.schedule.b == 1.0:
        beta_candidates = [b0 for b0 in beta_candidates if b0 >= 1.0]
        if not beta_candidates:
            raise ValueError("constraint removed every beta0 candidate")

    cells = []
    for a0 in gs.alpha0_grid:
        for b0 in beta_candidates:
            sched = StepSchedule(alpha0=a0, a=manifest.schedule.a,
                                 beta0=b0, b=manifest.schedule.b,
                                 T0=manifest.schedule.T0)
            cfg = RunConfig(problem_id=manifest.problem, schedule=sched,
                            noise=manifest.noise, horizon=gs.search_horizon,
                            replications=gs.search_reps, base_seed=seed,
                            mode=manifest.mode,
                            checkpoints=np.array([0, gs.search_horizon]))
            series = aggregate(run_experiment(cfg, workers=workers))
            if len(series.t) and series.t[-1] == gs.search_horizon:
                score = float(series.e_y2[-1])
                x_score = float(series.e_x2[-1])
            else:
                score = math.inf
                x_score = math.inf
            cells.append({"alpha0": a0, "beta0": b0, "score": score,
                          "terminal_e_x2": x_score,
                          "n_divergent": series.n_divergent})

    finite = [c for c in cells if math.isfinite(c["score"])]
    if not finite:
        raise RuntimeError(
            f"grid search for manifest {manifest.name!r}: every cell "
            "diverged")
    best = min(finite, key=lambda c: (c["score"], c["terminal_e_x2"],
                                      -c["alpha0"]))
    return GridResult(alpha0=best["alpha0"], beta0=best["beta0"],
                      cells=cells)


# ---------------------------------------------------------------------------
# Full manifest execution
# ---------------------------------------------------------------------------

def run_manifest(manifest: ExperimentManifest,
                 workers: Optional[int] = None,
                 seed: Optional[int] = None,
                 out_dir=None) -> dict:
    """Grid search (if configured), main run, metric and audit outputs.

    Returns {"moments": MomentSeries, "slopes": {...}, "paths": {...}, ...}.
    """
    get_problem(manifest.problem)  # unknown ids fail before any computation
    base_seed = manifest.base_seed if seed is None else seed
    out = Path(out_dir if out_dir is not None
               else (manifest.out_dir or f"out/{manifest.name}"))
    out.mkdir(parents=True, exist_ok=True)
    mhash = manifest.sha256()

    sched = manifest.schedule
    grid_result = None
    if manifest.grid_search is not None:
        grid_result = grid_search(manifest, workers=workers,
                                  base_seed=base_seed)
        sched = StepSchedule(alpha0=grid_result.alpha0, a=sched.a,
                             beta0=grid_result.beta0, b=sched.b, T0=sched.T0)

    cfg = RunConfig(
        problem_id=manifest.problem, schedule=sched, noise=manifest.noise,
        horizon=manifest.horizon, replications=manifest.replications,
        base_seed=base_seed, mode=manifest.mode,
        checkpoints=(None if manifest.checkpoints is None
                     else np.asarray(manifest.checkpoints, dtype=np.int64)))
    captures = run_experiment(cfg, workers=workers)
    moments = aggregate(captures)

    windows = dict(manifest.slope_windows)
    if not windows:
        w = default_slope_window(manifest.horizon)
        windows = {"e_x2": w, "e_y2": w}
    slopes = {}
    for metric, window in sorted(windows.items()):
        try:
            rep = fit_slope(moments.series(metric), window, metric=metric)
            slopes[metric] = rep.to_dict()
        except (ValueError, AttributeError) as exc:
            slopes[metric] = {"metric": metric, "error": str(exc)}

    problem = get_problem(manifest.problem)
    audit = audit_schedule(sched, problem.constants, problem.d_x,
                           horizon=max(manifest.horizon, 2))

    paths = {}
    paths["moments"] = out / "moments.csv"
    paths["moments"].write_text(
        moments.to_csv(comment=f"manifest_sha256={mhash}"))
    paths["slopes"] = out / "slopes.json"
    paths["slopes"].write_text(json.dumps(
        {"manifest_sha256": mhash, "slopes": slopes},
        indent=2, sort_keys=True))
    paths["audit"] = out / "audit.json"
    paths["audit"].write_text(json.dumps(
        {"manifest_sha256": mhash,
         "schedule": {"alpha0": sched.alpha0, "a": sched.a,
                      "beta0": sched.beta0, "b": sched.b, "T0": sched.T0},
         "conditions": audit.to_dict()},
        indent=2, sort_keys=True))
    if grid_result is not None:
        paths["grid"] = out / "grid.json"
        paths["grid"].write_text(json.dumps(
            {"manifest_sha256": mhash, **grid_result.to_dict()},
            indent=2, sort_keys=True))
    paths["provenance"] = out / "provenance.json"
    paths["provenance"].write_text(json.dumps(
        {"manifest_sha256": mhash, "base_seed": base_seed,
         "version": __version__,
         "backend": "compiled" if HAVE_KERNEL else "python",
         "workers": resolve_workers(workers),
         "wall_clock_utc": datetime.datetime.now(
             datetime.timezone.utc).isoformat()},
        indent=2, sort_keys=True))

    return {"moments": moments, "slopes": slopes, "schedule": sched,
            "grid": grid_result, "audit": audit, "paths": paths,
            "n_divergent": moments.n_divergent}


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def _cmd_run(args) -> int:
    manifest = load_manifest(args.manifest)
    result = run_manifest(manifest, workers=args.workers, seed=args.seed,
                          out_dir=args.out)
    for metric, rep in result["slopes"].items():
        if "slope" in rep:
            print(f"{metric}: slope={rep['slope']:.4f} "
                  f"r2={rep['r_squared']:.4f}")
        else:
            print(f"{metric}: {rep['error']}")
    print(f"outputs in {result['paths']['moments'].parent}")
    return 0


def _cmd_audit(args) -> int:
    manifest = load_manifest(args.manifest)
    problem = get_problem(manifest.problem)
    horizon = args.horizon or max(manifest.horizon, 2)
    audit = audit_schedule(manifest.schedule, problem.constants,
                           problem.d_x, horizon=horizon)
    print(audit.to_json())
    return 0 if audit.all_pass else 1


def _cmd_constants(args) -> int:
    manifest = load_manifest(args.manifest)
    problem = get_problem(manifest.problem)
    b = schedule_bounds(problem.constants, problem.d_x)
    print(json.dumps({"iota1": b.iota1, "iota2": b.iota2,
                      "kappa": b.kappa, "rho": b.rho,
                      "infinite": list(b.infinite)}, indent=2))
    return 0


def _cmd_corollary(args) -> int:
    manifest = load_manifest(args.manifest)
    problem = get_problem(manifest.problem)
    s = corollary_schedule(problem.constants, problem.d_x, args.a, args.b)
    print(json.dumps({"alpha0": s.alpha0, "a": s.a, "beta0": s.beta0,
                      "b": s.b, "T0": s.T0}, indent=2))
    return 0


def _cmd_slope(args) -> int:
    moments = MomentSeries.from_csv(Path(args.csv).read_text())
    rep = fit_slope(moments.series(args.metric),
                    (args.window[0], args.window[1]), metric=args.metric)
    print(rep.to_json())
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ttsa",
        description="Two-time-scale stochastic approximation laboratory")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("manifest", help="path to a manifest JSON file")

    p = sub.add_parser("run", help="execute a manifest end to end")
    add_common(p)
    p.add_argument("--workers", type=int, default=None,
                   help="replication workers (default: TTSA_WORKERS or cpu)")
    p.add_argument("--seed", type=int, default=None,
                   help="override the manifest base_seed")
    p.add_argument("--out", default=None, help="override output directory")

    p = sub.add_parser("audit", help="audit the manifest's step schedule")
    add_common(p)
    p.add_argument("--horizon", type=int, default=None)

    p = sub.add_parser("constants",
                       help="print the step-size bounds for the problem")
    add_common(p)

    p = sub.add_parser("corollary",
                       help="print the constructive schedule for (a, b)")
    add_common(p)
    p.add_argument("--a", type=float, required=True)
    p.add_argument("--b", type=float, required=True)

    p = sub.add_parser("slope", help="refit a slope from a moments CSV")
    p.add_argument("csv", help="path to moments.csv")
    p.add_argument("--metric", required=True,
                   choices=["e_x2", "e_y2", "cross", "e_x4", "e_y4"])
    p.add_argument("--window", type=float, nargs=2, required=True,
                   metavar=("LO", "HI"))

    return parser


_HANDLERS = {"run": _cmd_run, "audit": _cmd_audit,
             "constants": _cmd_constants, "corollary": _cmd_corollary,
             "slope": _cmd_slope}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _HANDLERS[args.command](args)
    except (ValueError, KeyError, RuntimeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
