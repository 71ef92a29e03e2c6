import math

import numpy as np
import pytest

from ttsalab.core import (ProblemConstants, ProblemSpec, RngStream, as_vec,
                          bisect_root, gaussian, inv_norm_cdf,
                          validate_problem)
from ttsalab.problems import get_problem


def test_gaussian_zero_sigma_is_zero_vector():
    rng = RngStream(1, 0)
    assert np.array_equal(gaussian(rng, 3, 0.0), np.zeros(3))


def test_gaussian_determinism_same_key():
    a = gaussian(RngStream(1, 0), 10, 1.0)
    b = gaussian(RngStream(1, 0), 10, 1.0)
    assert np.array_equal(a, b)


def test_gaussian_different_streams_differ():
    a = gaussian(RngStream(1, 0), 10, 1.0)
    b = gaussian(RngStream(1, 1), 10, 1.0)
    assert not np.array_equal(a, b)


def test_gaussian_moments_large_sample():
    # law-of-large-numbers bounds at n = 1e6, verified by direct simulation
    draws = gaussian(RngStream(7, 0), 10 ** 6, 1.0)
    assert abs(draws.mean()) < 0.01
    assert abs(draws.var() - 1.0) < 0.02


def test_stream_independence_proxy():
    n = 10 ** 5
    a = RngStream(3, 0).uniform(n)
    b = RngStream(3, 1).uniform(n)
    corr = np.corrcoef(a, b)[0, 1]
    assert abs(corr) < 0.01


def test_inverse_cdf_matches_scipy():
    scipy_special = pytest.importorskip("scipy.special")
    u = np.random.default_rng(0).random(20_000)
    u = np.concatenate([u, [1e-300, 1e-12, 0.5, 1 - 1e-12]])
    ours = np.array([inv_norm_cdf(v) for v in u])
    ref = scipy_special.ndtri(u)
    assert np.max(np.abs(ours - ref)) < 1e-12


def test_constants_reject_inconsistent():
    with pytest.raises(ValueError):
        ProblemConstants(mu_F=2, mu_G=1, L_F=1, L_H=0, L_Gx=1, L_Gy=1)
    with pytest.raises(ValueError):
        ProblemConstants(mu_F=1, mu_G=2, L_F=1, L_H=0, L_Gx=1, L_Gy=1)
    with pytest.raises(ValueError):
        ProblemConstants(mu_F=1, mu_G=1, L_F=1, L_H=0, L_Gx=1, L_Gy=1,
                         delta_F=1.5)


def test_validate_sign_abs_clean():
    assert validate_problem(get_problem("sign-abs")) == []


def test_validate_wrong_root_is_reported():
    # (0, 1) is not a root of sign-abs: H(1) = 1 != 0, though G(0, 1) = 0
    p = get_problem("sign-abs")
    bad = ProblemSpec(id="bad", d_x=1, d_y=1, F=p.F, G=p.G, H=p.H,
                      root=(as_vec([0.0]), as_vec([1.0])),
                      constants=p.constants, x0=p.x0, y0=p.y0)
    violations = validate_problem(bad)
    assert len(violations) == 1
    assert "x* - H(y*)" in violations[0]

    # and a point violating the slow-iterate identity names G
    bad2 = ProblemSpec(id="bad2", d_x=1, d_y=1, F=p.F, G=p.G, H=p.H,
                       root=(as_vec([0.5]), as_vec([0.5])),
                       constants=p.constants, x0=p.x0, y0=p.y0)
    assert any("G(x*, y*)" in v for v in validate_problem(bad2))


def test_validate_sgd_pr_bisection_root():
    # root of 2x + cos x found by an independent bisection oracle
    x_opt = bisect_root(lambda x: 2 * x + math.cos(x), -1.0, 0.0)
    assert abs(2 * x_opt + math.cos(x_opt)) < 1e-11
    assert validate_problem(get_problem("sgd-pr-quadratic-sin")) == []


def test_validate_is_pure():
    p = get_problem("sign-abs")
    first = validate_problem(p)
    second = validate_problem(p)
    assert first == second == []


def test_validate_reports_raising_evaluator():
    def boom(x, y):
        raise RuntimeError("nope")

    p = ProblemSpec(id="boom", d_x=1, d_y=1, F=boom,
                    G=lambda x, y: np.zeros(1),
                    constants=ProblemConstants(mu_F=1, mu_G=1, L_F=1,
                                               L_H=0, L_Gx=1, L_Gy=1),
                    x0=[0.0], y0=[0.0])
    violations = validate_problem(p)
    assert any("raised" in v for v in violations)


def test_validate_reports_nonfinite_output():
    p = ProblemSpec(id="inf", d_x=1, d_y=1,
                    F=lambda x, y: np.array([np.inf]),
                    G=lambda x, y: np.zeros(1),
                    constants=ProblemConstants(mu_F=1, mu_G=1, L_F=1,
                                               L_H=0, L_Gx=1, L_Gy=1),
                    x0=[0.0], y0=[0.0])
    assert any("non-finite" in v for v in validate_problem(p))
