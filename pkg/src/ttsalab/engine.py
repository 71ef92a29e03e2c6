"""Two-time-scale iteration loops, replication orchestration, checkpoints.

The per-replication loop runs on the compiled kernel when (a) the
extension built, (b) the problem is a scalar catalog entry.  Everything
else falls back to the pure-Python loop; both paths consume the same
random stream and agree bit for bit on catalog problems.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import _loops
from .core import ProblemSpec, RngStream, Vec, as_vec
from .noise import NoiseModel
from .problems import get_problem
from .schedules import StepSchedule

try:
    from . import _kernel
    HAVE_KERNEL = True
except ImportError:  # pragma: no cover - build-environment dependent
    _kernel = None
    HAVE_KERNEL = False

# "auto" prefers the compiled kernel; "python" forces the fallback
BACKEND = "python" if os.environ.get("TTSA_PURE_PYTHON") else "auto"

MODES = ("simultaneous", "alternating")


class ConfigError(ValueError):
    pass


def default_checkpoints(T: int, n_log: int = 100) -> np.ndarray:
    """t = 0 and T plus ~n_log log-spaced indices in [1, T], deduplicated."""
    pts = {0, T}
    if T >= 1:
        pts.update(int(round(v)) for v in
                   np.logspace(0.0, np.log10(max(T, 1)), n_log))
    return np.array(sorted(p for p in pts if 0 <= p <= T), dtype=np.int64)


@dataclass
class RunConfig:
    problem_id: str
    schedule: StepSchedule
    noise: NoiseModel
    horizon: int
    replications: int
    base_seed: int
    mode: str = "simultaneous"
    checkpoints: Optional[np.ndarray] = None
    x0: Optional[Vec] = None
    y0: Optional[Vec] = None

    def __post_init__(self):
        if self.horizon < 0:
            raise ConfigError("horizon must be >= 0")
        if self.replications < 1:
            raise ConfigError("replications must be >= 1")
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}")
        if self.checkpoints is None:
            self.checkpoints = default_checkpoints(self.horizon)
        else:
            cps = np.asarray(self.checkpoints, dtype=np.int64)
            if cps.size == 0 or np.any(np.diff(cps) <= 0):
                raise ConfigError("checkpoints must be strictly increasing")
            if cps[0] < 0 or cps[-1] > self.horizon:
                raise ConfigError("checkpoints must lie in [0, horizon]")
            self.checkpoints = cps
        if self.x0 is not None:
            self.x0 = as_vec(self.x0)
        if self.y0 is not None:
            self.y0 = as_vec(self.y0)


@dataclass
class TrajectoryCapture:
    rep: int
    checkpoints: np.ndarray
    x_raw: np.ndarray   # (n_cps, d_x)
    y_raw: np.ndarray   # (n_cps, d_y)
    x_hat: np.ndarray   # x - H(y) at each checkpoint
    y_hat: np.ndarray   # y - y_star
    diverged_at: Optional[int] = None

    def valid_mask(self) -> np.ndarray:
        if self.diverged_at is None:
            return np.ones(len(self.checkpoints), dtype=bool)
        return self.checkpoints < self.diverged_at


def step_simultaneous(p: ProblemSpec, x: Vec, y: Vec, alpha: float,
                      beta: float, xi: Vec, psi: Vec) -> tuple[Vec, Vec]:
    """One coupled step with G evaluated at the old x."""
    fv = as_vec(p.F(x, y))
    gv = as_vec(p.G(x, y))
    return x - alpha * (fv + xi), y - beta * (gv + psi)


def step_alternating(p: ProblemSpec, x: Vec, y: Vec, alpha: float,
                     beta: float, xi: Vec, psi: Vec) -> tuple[Vec, Vec]:
    """One coupled step with G evaluated at the freshly updated x."""
    fv = as_vec(p.F(x, y))
    xn = x - alpha * (fv + xi)
    gv = as_vec(p.G(xn, y))
    return xn, y - beta * (gv + psi)


def _resolve(cfg: RunConfig) -> tuple[ProblemSpec, Vec, Vec]:
    try:
        p = get_problem(cfg.problem_id)
    except KeyError as exc:
        raise ConfigError(str(exc)) from exc
    if p.H is None or p.root is None:
        raise ConfigError(
            f"problem {p.id!r} lacks H or an exact root; residual capture "
            "is undefined")
    x0 = cfg.x0 if cfg.x0 is not None else p.x0
    y0 = cfg.y0 if cfg.y0 is not None else p.y0
    if x0.shape[0] != p.d_x or y0.shape[0] != p.d_y:
        raise ConfigError("x0/y0 dimensions do not match the problem")
    return p, x0, y0


def _use_kernel(p: ProblemSpec) -> bool:
    return (HAVE_KERNEL and BACKEND == "auto" and p.kernel_id is not None
            and p.d_x == 1 and p.d_y == 1)


def run_replication(cfg: RunConfig, rep: int) -> TrajectoryCapture:
    if not (0 <= rep < cfg.replications):
        raise ConfigError(f"rep={rep} outside [0, {cfg.replications})")
    p, x0, y0 = _resolve(cfg)
    rng = RngStream(cfg.base_seed, rep)
    alternating = cfg.mode == "alternating"
    cps = cfg.checkpoints

    if _use_kernel(p):
        p0 = p.kernel_params[0] if p.kernel_params else 0.0
        s = cfg.schedule
        xs, ys, div = _kernel.run_trajectory(
            p.kernel_id, p0, s.alpha0, s.a, s.beta0, s.b, s.T0,
            int(alternating), int(cfg.noise.kind == "gaussian-biased"),
            cfg.noise.sigma_xi, cfg.noise.sigma_psi, cfg.noise.bias_scale,
            cfg.horizon, cps, float(x0[0]), float(y0[0]), rng.bitgen)
        xs = xs.reshape(-1, 1)
        ys = ys.reshape(-1, 1)
        diverged_at = None if div < 0 else int(div)
    else:
        xs, ys, diverged_at = _loops.run_trajectory_py(
            p, cfg.schedule, cfg.noise, alternating, cfg.horizon, cps,
            rng, x0, y0)

    y_star = p.root[1]
    x_hat = np.full_like(xs, np.nan)
    y_hat = np.full_like(ys, np.nan)
    limit = len(cps) if diverged_at is None else int(
        np.searchsorted(cps, diverged_at))
    for i in range(limit):
        x_hat[i] = xs[i] - as_vec(p.H(ys[i]))
        y_hat[i] = ys[i] - y_star
    return TrajectoryCapture(rep=rep, checkpoints=cps, x_raw=xs, y_raw=ys,
                             x_hat=x_hat, y_hat=y_hat,
                             diverged_at=diverged_at)


def resolve_workers(workers: Optional[int] = None) -> int:
    if workers is None:
        env = os.environ.get("TTSA_WORKERS")
        workers = int(env) if env else min(os.cpu_count() or 1, 8)
    return max(1, workers)


def run_experiment(cfg: RunConfig,
                   workers: Optional[int] = None) -> list[TrajectoryCapture]:
    """All replications, ordered by index regardless of completion order.

    Replications run on a thread pool; the compiled kernel releases the
    GIL, so threads scale on the hot path.
    """
    _resolve(cfg)  # fail fast on configuration errors
    workers = resolve_workers(workers)
    reps = range(cfg.replications)
    if workers == 1 or cfg.replications == 1:
        return [run_replication(cfg, r) for r in reps]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda r: run_replication(cfg, r), reps))
