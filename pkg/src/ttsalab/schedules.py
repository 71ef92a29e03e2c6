"""Polynomial step-size schedules, their problem-dependent safe bounds, and
a finite-horizon audit of every step-size condition.

Schedules are alpha_t = alpha0 / (t + T0)^a and beta_t = beta0 / (t + T0)^b
with b >= a, so the slow step decays at least as fast as the fast one.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .core import ProblemConstants

# relative slack on every <= comparison in the audit, absorbs rounding
AUDIT_SLACK = 1e-12


@dataclass(frozen=True)
class StepSchedule:
    alpha0: float
    a: float
    beta0: float
    b: float
    T0: int = 1

    def __post_init__(self):
        if self.alpha0 <= 0 or self.beta0 <= 0:
            raise ValueError("alpha0 and beta0 must be positive")
        if not (0 < self.a <= 1) or not (0 < self.b <= 1):
            raise ValueError("decay exponents must lie in (0, 1]")
        if self.b < self.a:
            raise ValueError(
                f"b={self.b} < a={self.a}: the slow step must decay "
                "at least as fast as the fast step")
        if self.T0 < 1:
            raise ValueError("T0 must be >= 1")

    def alpha(self, t) -> float:
        return self.alpha0 / (t + self.T0) ** self.a

    def beta(self, t) -> float:
        return self.beta0 / (t + self.T0) ** self.b


def eval_schedule(s: StepSchedule, t: int) -> tuple[float, float]:
    if t < 0:
        raise ValueError("t must be >= 0")
    return s.alpha(t), s.beta(t)


@dataclass(frozen=True)
class ScheduleBounds:
    """Safe upper bounds (iota1, iota2, kappa, rho) for the step sizes.

    Bounds whose defining denominator vanishes (L_H = 0 or L_Gx = 0) are
    +inf and listed in `infinite`; the audit treats conditions against an
    infinite bound as vacuously satisfied.
    """

    iota1: float
    iota2: float
    kappa: float
    rho: float
    infinite: tuple[str, ...] = ()


def schedule_bounds(c: ProblemConstants, d_x: int) -> ScheduleBounds:
    iota1 = min(c.mu_F / (4.0 * c.L_F ** 2), 1.0 / (12.0 * c.mu_F))

    if c.L_Gx > 0:
        iota2 = min(c.mu_G / c.L_Gx ** 2, 1.0 / (14.0 * c.mu_G))
    else:
        iota2 = 1.0 / (14.0 * c.mu_G)

    infinite = []
    if c.L_H > 0 and c.L_Gx > 0:
        kappa = min(c.mu_F * c.mu_G / (
            max(28.0 * d_x, 200.0 * c.L_Gy) * c.L_H * c.L_Gx),
            c.mu_F / (5.0 * c.mu_G))
        rho = c.mu_F / (max(16.0 * d_x, 200.0) * c.L_H ** 2 * c.L_Gx ** 2)
    else:
        # the coupling terms these bounds control vanish when L_H or L_Gx
        # is zero, so the conditions are vacuous
        kappa = math.inf
        rho = math.inf
        infinite += ["kappa", "rho"]

    return ScheduleBounds(iota1, iota2, kappa, rho, tuple(infinite))


def corollary_schedule(c: ProblemConstants, d_x: int,
                       a: float, b: float) -> StepSchedule:
    """Constructive schedule guaranteed to pass the audit.

    alpha0 = 128 / (delta * mu_G * kappa), beta0 = 128 / (delta * mu_G)
    with delta = min(delta_F, delta_G), and T0 large enough that every
    per-step bound holds from t = 0 on.  Feasibility requires
    1 <= b/a <= 1 + min(delta_F / 2, delta_G).
    """
    if not (0 < a <= 1) or not (0 < b <= 1):
        raise ValueError("a and b must lie in (0, 1]")
    hi = 1.0 + min(c.delta_F / 2.0, c.delta_G)
    ratio = b / a
    if not (1.0 <= ratio <= hi):
        raise ValueError(
            f"b/a = {ratio:.6g} outside the feasible range [1, {hi:.6g}]")

    bounds = schedule_bounds(c, d_x)
    if math.isinf(bounds.kappa):
        raise ValueError(
            "kappa is infinite (L_H or L_Gx = 0): the constructive schedule "
            "is undefined; choose alpha0/beta0 directly")
    delta = min(c.delta_F, c.delta_G)
    alpha0 = 128.0 / (delta * c.mu_G * bounds.kappa)
    beta0 = 128.0 / (delta * c.mu_G)
    t1 = 128.0 / (c.mu_G * min(bounds.kappa * bounds.iota1, bounds.iota2,
                               bounds.rho / bounds.kappa))
    T0 = math.ceil(t1 ** (1.0 / a))
    return StepSchedule(alpha0=alpha0, a=a, beta0=beta0, b=b, T0=T0)


@dataclass(frozen=True)
class ConditionResult:
    name: str
    passed: bool
    first_violation: Optional[int]
    worst_margin: float
    note: str = ""


@dataclass(frozen=True)
class ScheduleAudit:
    horizon: int
    conditions: tuple[ConditionResult, ...] = field(default=())

    @property
    def all_pass(self) -> bool:
        return all(c.passed for c in self.conditions)

    def to_dict(self) -> dict:
        out = {}
        for c in self.conditions:
            entry = {"pass": c.passed,
                     "first_violation": c.first_violation,
                     "worst_margin": c.worst_margin}
            if c.note:
                entry["note"] = c.note
            out[c.name] = entry
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def _check_le(name, lhs, rhs, t_index, note=""):
    """lhs <= rhs elementwise with relative slack; margins are lhs - rhs."""
    if np.isscalar(rhs):
        rhs = np.full_like(lhs, rhs)
    ok = lhs <= rhs * (1.0 + AUDIT_SLACK)
    margin = lhs - rhs
    if np.all(ok):
        worst = float(np.max(margin)) if margin.size else -math.inf
        return ConditionResult(name, True, None, worst, note)
    bad = np.nonzero(~ok)[0]
    return ConditionResult(name, False, int(t_index[bad[0]]),
                           float(np.max(margin)), note)


def _vacuous(name, note):
    return ConditionResult(name, True, None, -math.inf, note)


def audit_schedule(s: StepSchedule, c: ProblemConstants, d_x: int,
                   horizon: int) -> ScheduleAudit:
    """Check every step-size condition for 0 <= t <= horizon.

    Failures are data, not errors.  The asymptotic product condition is
    replaced by a finite-horizon proxy: prod(1 - mu_G beta/4) / alpha_t^2
    must be non-increasing past a burn-in of max(10, horizon/100) steps.
    """
    if horizon < 2:
        raise ValueError("horizon must be >= 2")
    bounds = schedule_bounds(c, d_x)
    t = np.arange(horizon + 1, dtype=np.float64)
    alpha = s.alpha0 / (t + s.T0) ** s.a
    beta = s.beta0 / (t + s.T0) ** s.b
    results = []

    results.append(_check_le("alpha_le_iota1", alpha, bounds.iota1, t))
    results.append(_check_le("beta_le_iota2", beta, bounds.iota2, t))
    if math.isinf(bounds.kappa):
        results.append(_vacuous("ratio_le_kappa",
                                "vacuous: kappa is infinite (L_H or L_Gx = 0)"))
    else:
        results.append(_check_le("ratio_le_kappa", beta / alpha,
                                 bounds.kappa, t))
    if math.isinf(bounds.rho):
        results.append(_vacuous("beta_sq_over_alpha_le_rho",
                                "vacuous: rho is infinite (L_H or L_Gx = 0)"))
    else:
        results.append(_check_le("beta_sq_over_alpha_le_rho",
                                 beta ** 2 / alpha, bounds.rho, t))

    # growth conditions, t >= 1
    ra = alpha[:-1] / alpha[1:]
    rb = beta[:-1] / beta[1:]
    t1 = t[1:]
    a_cap = 1.0 + np.minimum.reduce([
        c.delta_F * c.mu_F * alpha[1:] / 16.0,
        c.delta_F * c.mu_G * beta[1:] / 16.0,
        c.delta_G * c.mu_G * beta[1:] / 8.0,
    ])
    lower_ok_a = _check_le("alpha_growth_lower", 1.0 - AUDIT_SLACK
                           + np.zeros_like(ra), ra, t1)
    upper_a = _check_le("alpha_growth_upper", ra, a_cap, t1)
    results.append(lower_ok_a)
    results.append(upper_a)
    results.append(_check_le("beta_growth_lower",
                             1.0 - AUDIT_SLACK + np.zeros_like(rb), rb, t1))
    results.append(_check_le("beta_growth_upper", rb,
                             1.0 + c.mu_G * beta[1:] / 64.0, t1))

    ratio = beta / alpha
    results.append(_check_le("ratio_nonincreasing", ratio[1:], ratio[:-1], t1))

    # product-condition proxy, in log space to dodge underflow
    factors = 1.0 - c.mu_G * beta / 4.0
    if np.any(factors <= 0):
        first = int(np.nonzero(factors <= 0)[0][0])
        results.append(ConditionResult(
            "product_over_alpha_sq_nonincreasing", False, first, math.inf,
            "proxy: a product factor 1 - mu_G*beta/4 is <= 0"))
    else:
        log_r = np.cumsum(np.log(factors)) - 2.0 * np.log(alpha)
        burn_in = max(10, horizon // 100)
        seg = log_r[burn_in:]
        t_seg = t[burn_in + 1:]
        results.append(_check_le(
            "product_over_alpha_sq_nonincreasing",
            seg[1:], seg[:-1] + AUDIT_SLACK, t_seg,
            note=f"proxy: monotone non-increase after burn-in {burn_in}"))

    return ScheduleAudit(horizon=horizon, conditions=tuple(results))
