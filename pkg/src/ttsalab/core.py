"""Foundational types: vectors, problem contracts, deterministic randomness.

Vectors are plain 1-D float64 numpy arrays.  Every value that crosses a
module boundary is expected to be finite; `validate_problem` and the run
loops enforce this where it can be checked cheaply.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

Vec = np.ndarray


def as_vec(x) -> Vec:
    v = np.asarray(x, dtype=np.float64)
    if v.ndim == 0:
        v = v.reshape(1)
    if v.ndim != 1:
        raise ValueError(f"expected a 1-D vector, got shape {v.shape}")
    return v


def is_finite_vec(v: Vec) -> bool:
    return bool(np.all(np.isfinite(v)))


@dataclass(frozen=True)
class ProblemConstants:
    """Smoothness / monotonicity constants attached to a problem.

    These feed the step-size bound calculator and the schedule audit; they
    are not enforced at runtime beyond the construction checks below.
    """

    mu_F: float
    mu_G: float
    L_F: float
    L_H: float
    L_Gx: float
    L_Gy: float
    delta_F: float = 1.0
    delta_G: float = 1.0
    delta_H: float = 1.0
    S_H: float = 0.0
    S_BF: float = 0.0
    S_BG: float = 0.0

    def __post_init__(self):
        vals = [self.mu_F, self.mu_G, self.L_F, self.L_H, self.L_Gx,
                self.L_Gy, self.delta_F, self.delta_G, self.delta_H,
                self.S_H, self.S_BF, self.S_BG]
        if not all(math.isfinite(v) for v in vals):
            raise ValueError("all problem constants must be finite")
        if self.mu_F <= 0 or self.mu_G <= 0:
            raise ValueError("mu_F and mu_G must be positive")
        if self.L_F < self.mu_F:
            raise ValueError(f"L_F={self.L_F} must be >= mu_F={self.mu_F}")
        if self.L_Gy < self.mu_G:
            raise ValueError(f"L_Gy={self.L_Gy} must be >= mu_G={self.mu_G}")
        if self.L_H < 0 or self.L_Gx < 0:
            raise ValueError("Lipschitz constants must be nonnegative")
        if not (0 < self.delta_F <= 1) or not (0 < self.delta_G <= 1):
            raise ValueError("delta_F and delta_G must lie in (0, 1]")
        if not (0 <= self.delta_H <= 1):
            raise ValueError("delta_H must lie in [0, 1]")
        if min(self.S_H, self.S_BF, self.S_BG) < 0:
            raise ValueError("S_H, S_BF, S_BG must be nonnegative")


@dataclass
class ProblemSpec:
    """A coupled root-finding problem: drive F and G to zero jointly.

    F maps (x, y) to R^{d_x}, G maps (x, y) to R^{d_y}.  H, when known, is
    the inner-solution map (x solving F(x, y) = 0 for fixed y) and `root`
    the exact root pair, both used for residual metrics.

    kernel_id / kernel_params mark catalog problems that the compiled
    trajectory kernel knows how to evaluate natively; generic problems
    leave them unset and run through the Python loop.
    """

    id: str
    d_x: int
    d_y: int
    F: Callable[[Vec, Vec], Vec]
    G: Callable[[Vec, Vec], Vec]
    constants: ProblemConstants
    x0: Vec
    y0: Vec
    H: Optional[Callable[[Vec], Vec]] = None
    root: Optional[tuple[Vec, Vec]] = None
    kernel_id: Optional[int] = None
    kernel_params: tuple[float, ...] = field(default=())

    def __post_init__(self):
        self.x0 = as_vec(self.x0)
        self.y0 = as_vec(self.y0)
        if self.root is not None:
            self.root = (as_vec(self.root[0]), as_vec(self.root[1]))


ROOT_TOL = 1e-9


def validate_problem(p: ProblemSpec) -> list[str]:
    """Check the registration identities of a ProblemSpec.

    Returns an empty list iff everything passes at tolerance 1e-9.  Each
    violation names the failing identity and the residual norm; evaluators
    that raise or return non-finite values are reported, never re-raised.
    """
    violations: list[str] = []

    def _eval(name, fn, *args, expect_dim):
        try:
            out = as_vec(fn(*args))
        except Exception as exc:
            violations.append(f"{name} raised {type(exc).__name__}: {exc}")
            return None
        if out.shape[0] != expect_dim:
            violations.append(
                f"{name} returned dim {out.shape[0]}, expected {expect_dim}")
            return None
        if not is_finite_vec(out):
            violations.append(f"{name} returned a non-finite value")
            return None
        return out

    if p.x0.shape[0] != p.d_x:
        violations.append(f"x0 has dim {p.x0.shape[0]}, expected {p.d_x}")
    if p.y0.shape[0] != p.d_y:
        violations.append(f"y0 has dim {p.y0.shape[0]}, expected {p.d_y}")

    _eval("F(x0, y0)", p.F, p.x0, p.y0, expect_dim=p.d_x)
    _eval("G(x0, y0)", p.G, p.x0, p.y0, expect_dim=p.d_y)
    if p.H is not None:
        _eval("H(y0)", p.H, p.y0, expect_dim=p.d_x)

    if p.H is not None and p.root is not None:
        x_star, y_star = p.root
        hy = _eval("H(y*)", p.H, y_star, expect_dim=p.d_x)
        if hy is not None:
            r = float(np.linalg.norm(x_star - hy))
            if r > ROOT_TOL:
                violations.append(f"|x* - H(y*)| = {r:.3e} > {ROOT_TOL}")
            f = _eval("F(H(y*), y*)", p.F, hy, y_star, expect_dim=p.d_x)
            if f is not None and float(np.linalg.norm(f)) > ROOT_TOL:
                violations.append(
                    f"|F(H(y*), y*)| = {float(np.linalg.norm(f)):.3e} > {ROOT_TOL}")
        g = _eval("G(x*, y*)", p.G, x_star, y_star, expect_dim=p.d_y)
        if g is not None and float(np.linalg.norm(g)) > ROOT_TOL:
            violations.append(
                f"|G(x*, y*)| = {float(np.linalg.norm(g)):.3e} > {ROOT_TOL}")

    return violations


# ---------------------------------------------------------------------------
# Deterministic randomness
# ---------------------------------------------------------------------------

class RngStream:
    """Counter-based stream keyed by (seed, stream_id).

    Backed by numpy's Philox bit generator, so streams with distinct ids are
    independent and any (seed, stream_id) pair reproduces the same sequence.
    One stream is owned by exactly one replication worker at a time.
    """

    __slots__ = ("seed", "stream_id", "bitgen", "_gen")

    def __init__(self, seed: int, stream_id: int = 0):
        self.seed = int(seed)
        self.stream_id = int(stream_id)
        self.bitgen = np.random.Philox(
            key=np.array([self.seed, self.stream_id], dtype=np.uint64))
        self._gen = np.random.Generator(self.bitgen)

    def uniform(self, n: int) -> Vec:
        """n uniforms on [0, 1), one next_double per entry."""
        return self._gen.random(n)


# Inverse normal CDF, Wichura's algorithm AS 241 (PPND16, ~1e-16 relative
# accuracy).  Implemented here in scalar Python and again, operation for
# operation, in the compiled kernel so both backends produce bit-identical
# normal draws from the same uniform stream.

_A = (3.3871328727963666080e0, 1.3314166789178437745e2,
      1.9715909503065514427e3, 1.3731693765509461125e4,
      4.5921953931549871457e4, 6.7265770927008700853e4,
      3.3430575583588128105e4, 2.5090809287301226727e3)
_B = (1.0, 4.2313330701600911252e1, 6.8718700749205790830e2,
      5.3941960214247511077e3, 2.1213794301586595867e4,
      3.9307895800092710610e4, 2.8729085735721942674e4,
      5.2264952788528545610e3)
_C = (1.42343711074968357734e0, 4.63033784615654529590e0,
      5.76949722146069140550e0, 3.64784832476320460504e0,
      1.27045825245236838258e0, 2.41780725177450611770e-1,
      2.27238449892691845833e-2, 7.74545014278341407640e-4)
_D = (1.0, 2.05319162663775882187e0, 1.67638483018380384940e0,
      6.89767334985100004550e-1, 1.48103976427480074590e-1,
      1.51986665636164571966e-2, 5.47593808499534494600e-4,
      1.05075007164441684324e-9)
_E = (6.65790464350110377720e0, 5.46378491116411436990e0,
      1.78482653991729133580e0, 2.96560571828504891230e-1,
      2.65321895265761230930e-2, 1.24266094738807843860e-3,
      2.71155556874348757815e-5, 2.01033439929228813265e-7)
_F = (1.0, 5.99832206555887937690e-1, 1.36929880922735805310e-1,
      1.48753612908506148525e-2, 7.86869131145613259100e-4,
      1.84631831751005468180e-5, 1.42151175831644588870e-7,
      2.04426310338993978564e-15)


def _poly(c, r):
    return ((((((c[7] * r + c[6]) * r + c[5]) * r + c[4]) * r + c[3])
             * r + c[2]) * r + c[1]) * r + c[0]


def inv_norm_cdf(p: float) -> float:
    """Standard normal quantile for p in (0, 1)."""
    q = p - 0.5
    if abs(q) <= 0.425:
        r = 0.180625 - q * q
        return q * _poly(_A, r) / _poly(_B, r)
    r = p if q < 0.0 else 1.0 - p
    r = math.sqrt(-math.log(r))
    if r <= 5.0:
        r = r - 1.6
        x = _poly(_C, r) / _poly(_D, r)
    else:
        r = r - 5.0
        x = _poly(_E, r) / _poly(_F, r)
    return -x if q < 0.0 else x


_U_MIN = 2.0 ** -53  # smallest nonzero value on the next_double grid


def gaussian(rng: RngStream, dim: int, sigma: float) -> Vec:
    """dim independent N(0, sigma^2) draws via the inverse-CDF transform.

    Consumes exactly `dim` uniforms whatever sigma is, so zero-variance
    noise keeps the stream aligned with the non-degenerate case.
    """
    if dim < 1:
        raise ValueError("dim must be >= 1")
    if not math.isfinite(sigma) or sigma < 0:
        raise ValueError("sigma must be finite and >= 0")
    u = rng.uniform(dim)
    out = np.empty(dim, dtype=np.float64)
    for i in range(dim):
        ui = u[i]
        if ui <= 0.0:
            ui = _U_MIN
        out[i] = sigma * inv_norm_cdf(ui)
    return out


def bisect_root(f: Callable[[float], float], lo: float, hi: float,
                tol: float = 1e-12) -> float:
    """Bisection on a sign change; used as an independent root oracle."""
    flo, fhi = f(lo), f(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if flo * fhi > 0:
        raise ValueError(f"no sign change on [{lo}, {hi}]")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if fm == 0.0:
            return mid
        if flo * fm < 0:
            hi = mid
        else:
            lo, flo = mid, fm
    return 0.5 * (lo + hi)
