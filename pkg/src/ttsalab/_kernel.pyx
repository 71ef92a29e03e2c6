# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled trajectory loop for the scalar catalog problems.

Mirrors ttsalab._loops.run_trajectory_py operation for operation: same
uniform-stream consumption order, the same AS 241 inverse normal CDF, the
same expression shapes for the problem evaluators.  Results are
bit-identical to the pure-Python loop for every catalog problem.
"""

import numpy as np

from cpython.pycapsule cimport PyCapsule_GetPointer, PyCapsule_IsValid
from libc.math cimport cos, fabs, isfinite, log, pow, sin, sqrt
from numpy.random cimport bitgen_t

cimport numpy as cnp

cnp.import_array()

# problem kinds, mirrored in ttsalab.problems
cdef enum:
    K_SIGN_ABS = 0
    K_SIGN_ABS_H = 1
    K_SGD_PR = 2
    K_SHB = 3
    K_BILEVEL = 4
    K_LINEAR_CROSS = 5
    K_LINEAR_SANITY = 6

cdef double U_MIN = 2.0 ** -53


# --- AS 241 (PPND16) inverse normal CDF, identical to core.inv_norm_cdf ---

cdef inline double _poly_a(double r) nogil:
    return ((((((2.5090809287301226727e3 * r + 3.3430575583588128105e4) * r
        + 6.7265770927008700853e4) * r + 4.5921953931549871457e4) * r
        + 1.3731693765509461125e4) * r + 1.9715909503065514427e3) * r
        + 1.3314166789178437745e2) * r + 3.3871328727963666080e0

cdef inline double _poly_b(double r) nogil:
    return ((((((5.2264952788528545610e3 * r + 2.8729085735721942674e4) * r
        + 3.9307895800092710610e4) * r + 2.1213794301586595867e4) * r
        + 5.3941960214247511077e3) * r + 6.8718700749205790830e2) * r
        + 4.2313330701600911252e1) * r + 1.0

cdef inline double _poly_c(double r) nogil:
    return ((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r
        + 2.41780725177450611770e-1) * r + 1.27045825245236838258e0) * r
        + 3.64784832476320460504e0) * r + 5.76949722146069140550e0) * r
        + 4.63033784615654529590e0) * r + 1.42343711074968357734e0

cdef inline double _poly_d(double r) nogil:
    return ((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r
        + 1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r
        + 6.89767334985100004550e-1) * r + 1.67638483018380384940e0) * r
        + 2.05319162663775882187e0) * r + 1.0

cdef inline double _poly_e(double r) nogil:
    return ((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r
        + 1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r
        + 2.96560571828504891230e-1) * r + 1.78482653991729133580e0) * r
        + 5.46378491116411436990e0) * r + 6.65790464350110377720e0

cdef inline double _poly_f(double r) nogil:
    return ((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r
        + 1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r
        + 1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r
        + 5.99832206555887937690e-1) * r + 1.0

cdef inline double ppnd(double p) nogil:
    cdef double q = p - 0.5
    cdef double r, x
    if fabs(q) <= 0.425:
        r = 0.180625 - q * q
        return q * _poly_a(r) / _poly_b(r)
    if q < 0.0:
        r = p
    else:
        r = 1.0 - p
    r = sqrt(-log(r))
    if r <= 5.0:
        r = r - 1.6
        x = _poly_c(r) / _poly_d(r)
    else:
        r = r - 5.0
        x = _poly_e(r) / _poly_f(r)
    if q < 0.0:
        return -x
    return x


# --- catalog evaluators ---

cdef inline double sgn(double x) nogil:
    if x > 0.0:
        return 1.0
    if x < 0.0:
        return -1.0
    return 0.0

cdef inline double h_tilde(double delta, double x) nogil:
    cdef double ax = fabs(x)
    if ax <= 1.0:
        return sgn(x) * pow(ax, delta) / delta
    return sgn(x) * (ax - 1.0 + 1.0 / delta)

cdef inline double ht2_deriv(double y) nogil:
    cdef double ay = fabs(y)
    return ay if ay <= 1.0 else 1.0

cdef inline double eval_F(int kind, double p0, double x, double y) nogil:
    cdef double u
    if kind == K_SGD_PR:
        return 2.0 * x + cos(x)
    if kind == K_SHB:
        return x - (2.0 * y + cos(y))
    if kind == K_BILEVEL:
        u = x + h_tilde(2.0, y)
        return 2.0 * u + cos(u)
    # sign-abs family and linear problems share F = x - y
    return x - y

cdef inline double eval_G(int kind, double p0, double x, double y) nogil:
    cdef double u, h2p, gy, gx, fyx, fxx
    if kind == K_SIGN_ABS:
        return -fabs(x - y) * sgn(y) + y
    if kind == K_SIGN_ABS_H:
        return -h_tilde(p0, fabs(x - y)) * sgn(y) + y
    if kind == K_SGD_PR:
        return y - x
    if kind == K_SHB:
        return x
    if kind == K_BILEVEL:
        u = x + h_tilde(2.0, y)
        h2p = ht2_deriv(y)
        gy = 2.0 * u * h2p + 2.0 * y + cos(y)
        gx = 2.0 * u
        fyx = h2p * (2.0 - sin(u))
        fxx = 2.0 - sin(u)
        return gy - fyx * gx / fxx
    if kind == K_LINEAR_CROSS:
        return y + 0.5 * (x - y)
    return y  # K_LINEAR_SANITY


def run_trajectory(int kind, double p0,
                   double alpha0, double a, double beta0, double b,
                   long long T0, int alternating, int biased,
                   double sigma_xi, double sigma_psi, double bias_scale,
                   long long T, cnp.int64_t[::1] cps,
                   double x0, double y0, bitgen):
    """Run T steps from (x0, y0), recording the raw state at each checkpoint.

    Returns (xs, ys, diverged_at) with diverged_at = -1 when every iterate
    stayed finite.  `bitgen` is a numpy BitGenerator owned by this call's
    replication; the loop consumes its next_double stream directly.
    """
    cdef bitgen_t *rng
    capsule = bitgen.capsule
    if not PyCapsule_IsValid(capsule, "BitGenerator"):
        raise ValueError("expected a numpy BitGenerator capsule")
    rng = <bitgen_t *> PyCapsule_GetPointer(capsule, "BitGenerator")

    cdef Py_ssize_t n = cps.shape[0]
    xs_arr = np.full(n, np.nan)
    ys_arr = np.full(n, np.nan)
    cdef double[::1] xs = xs_arr
    cdef double[::1] ys = ys_arr

    cdef double x = x0, y = y0
    cdef double alpha, beta, u, xi, psi, fv, gv, xn, yn
    cdef long long t, diverged_at = -1
    cdef Py_ssize_t ci = 0

    with nogil:
        for t in range(T + 1):
            if ci < n and cps[ci] == t:
                xs[ci] = x
                ys[ci] = y
                ci += 1
            if t == T:
                break
            alpha = alpha0 / pow(<double> (t + T0), a)
            beta = beta0 / pow(<double> (t + T0), b)

            u = rng.next_double(rng.state)
            if u <= 0.0:
                u = U_MIN
            xi = sigma_xi * ppnd(u)
            u = rng.next_double(rng.state)
            if u <= 0.0:
                u = U_MIN
            psi = sigma_psi * ppnd(u)
            if biased:
                u = rng.next_double(rng.state)
                psi = psi + (-bias_scale * sgn(x)) * sqrt(beta) * u

            fv = eval_F(kind, p0, x, y)
            if alternating:
                xn = x - alpha * (fv + xi)
                gv = eval_G(kind, p0, xn, y)
                yn = y - beta * (gv + psi)
            else:
                gv = eval_G(kind, p0, x, y)
                xn = x - alpha * (fv + xi)
                yn = y - beta * (gv + psi)

            if not (isfinite(xn) and isfinite(yn)):
                diverged_at = t + 1
                break
            x = xn
            y = yn

    return xs_arr, ys_arr, int(diverged_at)
