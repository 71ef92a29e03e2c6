"""Catalog of example problems, all scalar, each a validated ProblemSpec.

Catalog evaluators compute with Python floats and libm functions (math.cos
etc.) so the pure-Python trajectory loop reproduces the compiled kernel
bit for bit.  Exact roots of the scalar transcendental equations are found
by bisection to 1e-12 at registration time and cached on the spec.
"""

from __future__ import annotations

import math
from typing import Callable, Optional

import numpy as np

from .core import (ProblemConstants, ProblemSpec, Vec, as_vec, bisect_root,
                   validate_problem)

# kernel dispatch ids, mirrored in _kernel.pyx
K_SIGN_ABS = 0
K_SIGN_ABS_H = 1
K_SGD_PR = 2
K_SHB = 3
K_BILEVEL = 4
K_LINEAR_CROSS = 5
K_LINEAR_SANITY = 6

DEFAULT_X0 = 2.0
DEFAULT_Y0 = 2.0


def sign(x: float) -> float:
    """sign(0) = 0: the indicator difference 1_{x>0} - 1_{x<0}."""
    if x > 0.0:
        return 1.0
    if x < 0.0:
        return -1.0
    return 0.0


def h_tilde(delta: float, x: float) -> float:
    """Power-law/linear splice, 1-Lipschitz and odd for delta >= 1."""
    if delta < 1.0:
        raise ValueError(f"delta={delta} < 1 would break the Lipschitz bound")
    ax = abs(x)
    if ax <= 1.0:
        return sign(x) * ax ** delta / delta
    return sign(x) * (ax - 1.0 + 1.0 / delta)


def h_tilde2_deriv(y: float) -> float:
    """Derivative of h_tilde(2, .): |y| inside the unit ball, 1 outside."""
    ay = abs(y)
    return ay if ay <= 1.0 else 1.0


class HTilde:
    """h_tilde with a fixed exponent, callable on floats."""

    def __init__(self, delta: float):
        if delta < 1.0:
            raise ValueError(f"delta={delta} < 1")
        self.delta = float(delta)

    def __call__(self, x: float) -> float:
        return h_tilde(self.delta, x)


def _scalar_problem(pid, f, g, h, root, constants, kernel_id, kernel_params,
                    x0=DEFAULT_X0, y0=DEFAULT_Y0):
    """Wrap scalar float evaluators into the vector ProblemSpec contract."""
    spec = ProblemSpec(
        id=pid, d_x=1, d_y=1,
        F=lambda x, y: np.array([f(float(x[0]), float(y[0]))]),
        G=lambda x, y: np.array([g(float(x[0]), float(y[0]))]),
        H=(None if h is None else (lambda y: np.array([h(float(y[0]))]))),
        root=(None if root is None
              else (as_vec([root[0]]), as_vec([root[1]]))),
        constants=constants,
        x0=as_vec([x0]), y0=as_vec([y0]),
        kernel_id=kernel_id, kernel_params=tuple(kernel_params),
    )
    violations = validate_problem(spec)
    if violations:
        raise ValueError(f"problem {pid!r} failed registration: {violations}")
    return spec


def problem_sign_abs(H: Optional[Callable[[float], float]] = None,
                     h_variant: Optional[float] = None,
                     pid: Optional[str] = None) -> ProblemSpec:
    """Sign/absolute-value coupling that defeats local linearity.

    F(x, y) = x - H(y);  G(x, y) = -|x - H(y)| sign(y) + y, or with
    h_variant = delta, G(x, y) = -h_tilde_delta(|x - y|) sign(y) + y
    (the variant fixes H to the identity).  Root (H(0), 0).  H must be
    one-to-one and 1-Lipschitz (caller's responsibility).
    """
    if h_variant is None:
        hf = H if H is not None else (lambda y: y)

        def f(x, y):
            return x - hf(y)

        def g(x, y):
            return -abs(x - hf(y)) * sign(y) + y

        constants = ProblemConstants(mu_F=1, mu_G=1, L_F=1, L_H=1,
                                     L_Gx=1, L_Gy=1)
        kernel_id = K_SIGN_ABS if H is None else None
        params = ()
        pid = pid or "sign-abs"
        root = (hf(0.0), 0.0)
    else:
        if H is not None:
            raise ValueError("h_variant fixes H to the identity")
        delta = float(h_variant)
        hf = lambda y: y  # noqa: E731

        def f(x, y):
            return x - y

        def g(x, y):
            return -h_tilde(delta, abs(x - y)) * sign(y) + y

        constants = ProblemConstants(mu_F=1, mu_G=1, L_F=1, L_H=1,
                                     L_Gx=1, L_Gy=1,
                                     delta_F=1.0, delta_G=0.5, S_BF=0.0)
        kernel_id = K_SIGN_ABS_H
        params = (delta,)
        pid = pid or f"sign-abs-h{delta:g}"
        root = (0.0, 0.0)

    return _scalar_problem(pid, f, g, hf, root, constants, kernel_id, params)


# f(x) = x^2 + sin x: strongly convex with mu = 1, L = 3, used by the
# SGD-averaging and heavy-ball instances below
def _quadratic_sin_grad(x: float) -> float:
    return 2.0 * x + math.cos(x)


def quadratic_sin_minimizer() -> float:
    return bisect_root(_quadratic_sin_grad, -1.0, 0.0, tol=1e-12)


def problem_sgd_pr(f_grad: Callable[[float], float], x_opt: float,
                   mu: float, L: float, S: float = 0.0,
                   pid: str = "sgd-pr") -> ProblemSpec:
    """SGD iterate paired with its running (Polyak-Ruppert) average.

    F(x, y) = f_grad(x), G(x, y) = y - x, H constant at the minimizer;
    root (x_opt, x_opt).
    """
    if abs(f_grad(x_opt)) > 1e-9:
        raise ValueError(f"f_grad(x_opt) = {f_grad(x_opt):.3e} is not a root")
    constants = ProblemConstants(mu_F=mu, mu_G=1, L_F=L, L_H=0,
                                 L_Gx=1, L_Gy=1, S_H=0.0, S_BG=0.0,
                                 S_BF=S, delta_F=1.0)
    kernel_id = K_SGD_PR if f_grad is _quadratic_sin_grad else None
    return _scalar_problem(
        pid,
        f=lambda x, y: f_grad(x),
        g=lambda x, y: y - x,
        h=lambda y: x_opt,
        root=(x_opt, x_opt),
        constants=constants,
        kernel_id=kernel_id, kernel_params=(x_opt,),
    )


def problem_shb(f_grad: Callable[[float], float], y_opt: float,
                mu: float, L: float, S: float = 0.0,
                pid: str = "shb") -> ProblemSpec:
    """Normalized stochastic heavy ball as a two-time-scale pair.

    F(x, y) = x - f_grad(y), G(x, y) = x, H(y) = f_grad(y); root (0, y_opt).
    """
    if abs(f_grad(y_opt)) > 1e-9:
        raise ValueError(f"f_grad(y_opt) = {f_grad(y_opt):.3e} is not a root")
    constants = ProblemConstants(mu_F=1, mu_G=mu, L_F=1, L_H=L,
                                 L_Gx=1, L_Gy=L, delta_H=1.0,
                                 S_H=S / 2.0, S_BF=0.0, S_BG=S,
                                 delta_G=1.0)
    kernel_id = K_SHB if f_grad is _quadratic_sin_grad else None
    return _scalar_problem(
        pid,
        f=lambda x, y: x - f_grad(y),
        g=lambda x, y: x,
        h=lambda y: f_grad(y),
        root=(0.0, y_opt),
        constants=constants,
        kernel_id=kernel_id, kernel_params=(),
    )


# ---------------------------------------------------------------------------
# Bilevel instance: inner objective f(x, y) = u^2 + sin u with
# u = x + h_tilde_2(y), outer objective g(x, y) = u^2 + y^2 + sin y.
# All partial derivatives below are analytic; tests cross-check them
# against finite differences.
# ---------------------------------------------------------------------------

def bilevel_f(x: float, y: float) -> float:
    u = x + h_tilde(2.0, y)
    return u * u + math.sin(u)


def bilevel_g(x: float, y: float) -> float:
    u = x + h_tilde(2.0, y)
    return u * u + y * y + math.sin(y)


def bilevel_F(x: float, y: float) -> float:
    u = x + h_tilde(2.0, y)
    return 2.0 * u + math.cos(u)


def bilevel_G(x: float, y: float) -> float:
    # grad_y g - (d2f/dydx) (d2f/dx2)^-1 (dg/dx), all in closed form
    u = x + h_tilde(2.0, y)
    h2p = h_tilde2_deriv(y)
    gy = 2.0 * u * h2p + 2.0 * y + math.cos(y)
    gx = 2.0 * u
    fyx = h2p * (2.0 - math.sin(u))
    fxx = 2.0 - math.sin(u)
    return gy - fyx * gx / fxx


def problem_bilevel(pid: str = "bilevel-sin") -> ProblemSpec:
    """Scalar stochastic bilevel instance with known analytic structure.

    H(y) = u_star - h_tilde_2(y) where u_star solves 2u + cos u = 0;
    y_star solves G(H(y), y) = 0.  Constants are conservative numeric
    bounds from the analytic derivatives on a bounded region (the audit
    for this problem is advisory).
    """
    u_star = bisect_root(lambda u: 2.0 * u + math.cos(u), -1.0, 0.0)

    def h(y):
        return u_star - h_tilde(2.0, y)

    y_star = bisect_root(lambda y: bilevel_G(h(y), y), -1.0, 0.0)
    x_star = h(y_star)

    # d2f/dx2 = 2 - sin u in [1, 3]; d(G(H(y), y))/dy = 2 - sin y in [1, 3];
    # |H'| = |h_tilde_2'| <= 1, H' is 1-Lipschitz
    constants = ProblemConstants(mu_F=1, mu_G=1, L_F=3, L_H=1,
                                 L_Gx=1.0, L_Gy=3, delta_H=1.0,
                                 S_H=0.5, S_BF=0.5, S_BG=0.5)
    return _scalar_problem(
        pid, f=bilevel_F, g=bilevel_G, h=h,
        root=(x_star, y_star), constants=constants,
        kernel_id=K_BILEVEL, kernel_params=(u_star,),
    )


def problem_linear_cross(pid: str = "linear-cross") -> ProblemSpec:
    """Linear coupled pair with a nonzero residual cross term; root (0, 0)."""
    constants = ProblemConstants(mu_F=1, mu_G=1, L_F=1, L_H=1,
                                 L_Gx=0.5, L_Gy=1, S_H=0.0)
    return _scalar_problem(
        pid,
        f=lambda x, y: x - y,
        g=lambda x, y: y + 0.5 * (x - y),
        h=lambda y: y,
        root=(0.0, 0.0), constants=constants,
        kernel_id=K_LINEAR_CROSS, kernel_params=(),
    )


def problem_linear_sanity(pid: str = "linear-sanity") -> ProblemSpec:
    """Fully decoupled linear pair used by contraction sanity checks."""
    constants = ProblemConstants(mu_F=1, mu_G=1, L_F=1, L_H=1,
                                 L_Gx=0.0, L_Gy=1, S_H=0.0)
    return _scalar_problem(
        pid,
        f=lambda x, y: x - y,
        g=lambda x, y: y,
        h=lambda y: y,
        root=(0.0, 0.0), constants=constants,
        kernel_id=K_LINEAR_SANITY, kernel_params=(),
    )


_BUILDERS: dict[str, Callable[[], ProblemSpec]] = {
    "sign-abs": lambda: problem_sign_abs(),
    "sign-abs-h1.5": lambda: problem_sign_abs(h_variant=1.5),
    "sgd-pr-quadratic-sin": lambda: problem_sgd_pr(
        _quadratic_sin_grad, quadratic_sin_minimizer(),
        mu=1.0, L=3.0, S=1.0, pid="sgd-pr-quadratic-sin"),
    "shb-quadratic-sin": lambda: problem_shb(
        _quadratic_sin_grad, quadratic_sin_minimizer(),
        mu=1.0, L=3.0, S=1.0, pid="shb-quadratic-sin"),
    "bilevel-sin": lambda: problem_bilevel(),
    "linear-cross": lambda: problem_linear_cross(),
    "linear-sanity": lambda: problem_linear_sanity(),
}

_CACHE: dict[str, ProblemSpec] = {}


def problem_ids() -> list[str]:
    return sorted(_BUILDERS)


def get_problem(pid: str) -> ProblemSpec:
    if pid not in _BUILDERS:
        raise KeyError(
            f"unknown problem id {pid!r}; known ids: {', '.join(problem_ids())}")
    if pid not in _CACHE:
        _CACHE[pid] = _BUILDERS[pid]()
    return _CACHE[pid]
