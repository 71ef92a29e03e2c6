"""Pure-Python trajectory loop, the fallback twin of the compiled kernel.

Kept operation for operation in sync with _kernel.pyx: identical uniform
consumption, identical expression shapes.  For catalog problems the two
backends produce bit-identical trajectories; this one also handles generic
(non-catalog, possibly multi-dimensional) problems.
"""

from __future__ import annotations

from typing import Optional

import numpy as np

from .core import ProblemSpec, RngStream, is_finite_vec
from .noise import NoiseModel, sample_noise
from .schedules import StepSchedule


def run_trajectory_py(p: ProblemSpec, sched: StepSchedule, nm: NoiseModel,
                      alternating: bool, T: int, cps: np.ndarray,
                      rng: RngStream, x0: np.ndarray, y0: np.ndarray,
                      ) -> tuple[np.ndarray, np.ndarray, Optional[int]]:
    """Run T steps, recording raw (x, y) at each checkpoint index.

    Returns (xs, ys, diverged_at); rows at checkpoints past a divergence
    stay NaN.
    """
    x = x0.copy()
    y = y0.copy()
    n = len(cps)
    xs = np.full((n, p.d_x), np.nan)
    ys = np.full((n, p.d_y), np.nan)
    ci = 0
    diverged_at = None
    for t in range(T + 1):
        if ci < n and cps[ci] == t:
            xs[ci] = x
            ys[ci] = y
            ci += 1
        if t == T:
            break
        alpha = sched.alpha0 / (t + sched.T0) ** sched.a
        beta = sched.beta0 / (t + sched.T0) ** sched.b

        xi, psi = sample_noise(nm, rng, (x, y), t, beta)
        fv = p.F(x, y)
        if alternating:
            xn = x - alpha * (fv + xi)
            gv = p.G(xn, y)
            yn = y - beta * (gv + psi)
        else:
            gv = p.G(x, y)
            xn = x - alpha * (fv + xi)
            yn = y - beta * (gv + psi)

        if not (is_finite_vec(xn) and is_finite_vec(yn)):
            diverged_at = t + 1
            break
        x, y = xn, yn
    return xs, ys, diverged_at
