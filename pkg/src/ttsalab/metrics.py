"""Monte Carlo moment estimation, spectral norms, log-log slope fits, and
the theoretical rate predictions they are compared against.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .core import ProblemConstants
from .engine import TrajectoryCapture

CSV_HEADER = ["t", "n", "e_x2", "se_x2", "e_y2", "se_y2", "cross",
              "e_x4", "e_y4"]


def spectral_norm(M: np.ndarray, tol: float = 1e-10,
                  max_iter: int = 10_000) -> float:
    """Largest singular value.

    Closed form when min(d_x, d_y) <= 2 (via the eigenvalues of M M^T),
    deterministic power iteration on M^T M otherwise.
    """
    M = np.atleast_2d(np.asarray(M, dtype=np.float64))
    if not np.all(np.isfinite(M)):
        raise ValueError("matrix entries must be finite")
    r, c = M.shape
    if min(r, c) == 1:
        return float(np.linalg.norm(M))
    if min(r, c) == 2:
        A = M @ M.T if r <= c else M.T @ M
        # eigenvalues of a symmetric 2x2 in closed form
        tr = A[0, 0] + A[1, 1]
        det = A[0, 0] * A[1, 1] - A[0, 1] * A[1, 0]
        disc = max(tr * tr / 4.0 - det, 0.0)
        lam = tr / 2.0 + math.sqrt(disc)
        return math.sqrt(max(lam, 0.0))
    # power iteration with a fixed start for determinism
    A = M.T @ M
    v = np.ones(A.shape[0]) / math.sqrt(A.shape[0])
    lam = 0.0
    for _ in range(max_iter):
        w = A @ v
        nw = float(np.linalg.norm(w))
        if nw == 0.0:
            return 0.0
        v = w / nw
        if abs(nw - lam) <= tol * max(nw, 1e-300):
            lam = nw
            break
        lam = nw
    return math.sqrt(lam)


@dataclass
class MomentSeries:
    """Per-checkpoint Monte Carlo moment estimates over replications.

    Checkpoints where no replication survived are dropped entirely rather
    than reported as zero.
    """

    t: np.ndarray
    n: np.ndarray
    e_x2: np.ndarray
    se_x2: np.ndarray
    e_y2: np.ndarray
    se_y2: np.ndarray
    cross: np.ndarray
    e_x4: np.ndarray
    e_y4: np.ndarray
    n_divergent: int = 0

    def to_csv(self, comment: str = "") -> str:
        """Deterministic CSV: '.' decimal, 17 significant digits, LF."""
        buf = io.StringIO()
        if comment:
            buf.write(f"# {comment}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for i in range(len(self.t)):
            w.writerow([int(self.t[i]), int(self.n[i])]
                       + [format(v, ".17g") for v in
                          (self.e_x2[i], self.se_x2[i], self.e_y2[i],
                           self.se_y2[i], self.cross[i], self.e_x4[i],
                           self.e_y4[i])])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "MomentSeries":
        rows = [r for r in csv.reader(
            line for line in text.splitlines() if not line.startswith("#"))]
        if not rows or rows[0] != CSV_HEADER:
            raise ValueError(f"bad CSV header, expected {CSV_HEADER}")
        data = np.array([[float(v) for v in r] for r in rows[1:]])
        if data.size == 0:
            data = data.reshape(0, len(CSV_HEADER))
        return cls(t=data[:, 0].astype(np.int64), n=data[:, 1].astype(int),
                   e_x2=data[:, 2], se_x2=data[:, 3], e_y2=data[:, 4],
                   se_y2=data[:, 5], cross=data[:, 6], e_x4=data[:, 7],
                   e_y4=data[:, 8])

    def series(self, metric: str) -> list[tuple[int, float]]:
        vals = getattr(self, metric)
        return [(int(ti), float(vi)) for ti, vi in zip(self.t, vals)]


def aggregate(captures: Sequence[TrajectoryCapture]) -> MomentSeries:
    """Reduce captures to per-checkpoint moments over surviving replications.

    Sums run in replication-index order, so the result is independent of
    how the captures were produced (worker count, completion order).
    """
    if not captures:
        raise ValueError("no captures to aggregate")
    cps = captures[0].checkpoints
    for c in captures[1:]:
        if not np.array_equal(c.checkpoints, cps):
            raise ValueError("captures disagree on the checkpoint grid")
    d_x = captures[0].x_hat.shape[1]
    d_y = captures[0].y_hat.shape[1]
    n_divergent = sum(1 for c in captures if c.diverged_at is not None)

    rows = {k: [] for k in ("t", "n", "e_x2", "se_x2", "e_y2", "se_y2",
                            "cross", "e_x4", "e_y4")}
    for j, tj in enumerate(cps):
        sq_x, sq_y, q_x, q_y = [], [], [], []
        M = np.zeros((d_x, d_y))
        n_eff = 0
        for c in captures:
            if c.diverged_at is not None and tj >= c.diverged_at:
                continue
            xh = c.x_hat[j]
            yh = c.y_hat[j]
            sx = float(xh @ xh)
            sy = float(yh @ yh)
            sq_x.append(sx)
            sq_y.append(sy)
            q_x.append(sx * sx)
            q_y.append(sy * sy)
            M += np.outer(xh, yh)
            n_eff += 1
        if n_eff == 0:
            continue
        sq_x = np.array(sq_x)
        sq_y = np.array(sq_y)
        rows["t"].append(int(tj))
        rows["n"].append(n_eff)
        rows["e_x2"].append(float(sq_x.mean()))
        rows["e_y2"].append(float(sq_y.mean()))
        rows["se_x2"].append(float(sq_x.std(ddof=1) / math.sqrt(n_eff))
                             if n_eff > 1 else 0.0)
        rows["se_y2"].append(float(sq_y.std(ddof=1) / math.sqrt(n_eff))
                             if n_eff > 1 else 0.0)
        rows["cross"].append(spectral_norm(M / n_eff))
        rows["e_x4"].append(float(np.mean(q_x)))
        rows["e_y4"].append(float(np.mean(q_y)))

    return MomentSeries(
        t=np.array(rows["t"], dtype=np.int64),
        n=np.array(rows["n"], dtype=int),
        e_x2=np.array(rows["e_x2"]), se_x2=np.array(rows["se_x2"]),
        e_y2=np.array(rows["e_y2"]), se_y2=np.array(rows["se_y2"]),
        cross=np.array(rows["cross"]),
        e_x4=np.array(rows["e_x4"]), e_y4=np.array(rows["e_y4"]),
        n_divergent=n_divergent)


@dataclass(frozen=True)
class SlopeReport:
    metric: str
    window: tuple[float, float]
    slope: float          # metric ~ c * t^(-slope); positive means decay
    intercept: float      # log10 c
    r_squared: float
    n_points: int
    excluded: int = 0     # non-positive values dropped from the window

    def to_dict(self) -> dict:
        return {"metric": self.metric, "window": list(self.window),
                "slope": self.slope, "intercept": self.intercept,
                "r_squared": self.r_squared, "n_points": self.n_points,
                "excluded": self.excluded}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def fit_slope(series: Sequence[tuple[float, float]],
              window: tuple[float, float],
              metric: str = "") -> SlopeReport:
    """OLS of log10(value) on log10(t) over t in [window[0], window[1]]."""
    lo, hi = window
    pts = [(t, v) for t, v in series if lo <= t <= hi]
    excluded = sum(1 for _, v in pts if v <= 0)
    pts = [(t, v) for t, v in pts if v > 0 and t > 0]
    if len(pts) < 3:
        raise ValueError(
            f"need >= 3 positive points in window [{lo}, {hi}], "
            f"have {len(pts)} ({excluded} excluded as non-positive)")
    lt = np.log10([t for t, _ in pts])
    lv = np.log10([v for _, v in pts])
    coef, intercept = np.polyfit(lt, lv, 1)
    pred = coef * lt + intercept
    ss_res = float(np.sum((lv - pred) ** 2))
    ss_tot = float(np.sum((lv - lv.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0.0 else max(0.0, min(1.0, 1.0 - ss_res / ss_tot))
    return SlopeReport(metric=metric, window=(float(lo), float(hi)),
                       slope=float(-coef), intercept=float(intercept),
                       r_squared=r2, n_points=len(pts), excluded=excluded)


@dataclass(frozen=True)
class RatePrediction:
    a: float
    b: float
    verdict: str                      # "decoupled" or "outside-guarantee"
    e_x2: Optional[float] = None
    cross: Optional[float] = None
    e_y2: Optional[float] = None
    e_x4: Optional[float] = None

    def to_dict(self) -> dict:
        return {"a": self.a, "b": self.b, "verdict": self.verdict,
                "e_x2": self.e_x2, "cross": self.cross,
                "e_y2": self.e_y2, "e_x4": self.e_x4}


def predict_rates(c: ProblemConstants, a: float, b: float) -> RatePrediction:
    """Predicted decay exponents when the step ratio is inside the
    guaranteed range 1 <= b/a <= 1 + min(delta_F/2, delta_G)."""
    if not (0 < a <= 1) or not (0 < b <= 1) or b < a:
        raise ValueError("need a, b in (0, 1] with b >= a")
    if b / a <= 1.0 + min(c.delta_F / 2.0, c.delta_G):
        return RatePrediction(a=a, b=b, verdict="decoupled",
                              e_x2=a, cross=b, e_y2=b, e_x4=2.0 * a)
    return RatePrediction(a=a, b=b, verdict="outside-guarantee",
                          e_x2=a, e_x4=2.0 * a)
