import math

import numpy as np
import pytest

import ttsalab.engine as engine
from ttsalab.core import ProblemConstants, ProblemSpec, RngStream, as_vec
from ttsalab.engine import (ConfigError, RunConfig, default_checkpoints,
                            run_experiment, run_replication,
                            step_alternating, step_simultaneous)
from ttsalab.noise import NoiseModel, sample_noise
from ttsalab.problems import get_problem, problem_ids
from ttsalab.schedules import StepSchedule

ZERO_NOISE = NoiseModel(sigma_xi=0.0, sigma_psi=0.0)


def _adhoc_linear():
    # F(x, y) = x, G(x, y) = x + y: tiny instance for the step examples
    return ProblemSpec(
        id="adhoc", d_x=1, d_y=1,
        F=lambda x, y: np.array([float(x[0])]),
        G=lambda x, y: np.array([float(x[0]) + float(y[0])]),
        constants=ProblemConstants(mu_F=1, mu_G=1, L_F=1, L_H=0,
                                   L_Gx=1, L_Gy=1),
        x0=[2.0], y0=[2.0])


def test_step_examples_linear():
    p = _adhoc_linear()
    x, y = as_vec([2.0]), as_vec([2.0])
    zero = as_vec([0.0])
    xs, ys = step_simultaneous(p, x, y, 0.5, 0.5, zero, zero)
    assert xs[0] == 1.0 and ys[0] == 0.0
    xa, ya = step_alternating(p, x, y, 0.5, 0.5, zero, zero)
    assert xa[0] == 1.0 and ya[0] == 0.5  # G sees the fresh x


def test_step_example_sgd_pr():
    p = get_problem("sgd-pr-quadratic-sin")
    x, y = as_vec([2.0]), as_vec([2.0])
    zero = as_vec([0.0])
    xs, ys = step_simultaneous(p, x, y, 1.0, 1.0, zero, zero)
    assert xs[0] == pytest.approx(-2.0 - math.cos(2.0), abs=1e-15)
    assert ys[0] == 2.0  # y - (y - x) with x = y


def test_step_fixed_point():
    p = get_problem("sign-abs")
    x_star, y_star = p.root
    zero = as_vec([0.0])
    for stepper in (step_simultaneous, step_alternating):
        xs, ys = stepper(p, x_star, y_star, 0.05, 0.05, zero, zero)
        assert np.array_equal(xs, x_star) and np.array_equal(ys, y_star)


def test_default_checkpoints():
    cps = default_checkpoints(0)
    assert cps.tolist() == [0]
    cps = default_checkpoints(1000)
    assert cps[0] == 0 and cps[-1] == 1000
    assert np.all(np.diff(cps) > 0)
    assert len(cps) <= 102


def test_config_validation():
    sched = StepSchedule(1.0, 1.0, 1.0, 1.0, T0=10)
    with pytest.raises(ConfigError):
        RunConfig("sign-abs", sched, ZERO_NOISE, horizon=-1,
                  replications=1, base_seed=0)
    with pytest.raises(ConfigError):
        RunConfig("sign-abs", sched, ZERO_NOISE, horizon=10,
                  replications=0, base_seed=0)
    with pytest.raises(ConfigError):
        RunConfig("sign-abs", sched, ZERO_NOISE, horizon=10,
                  replications=1, base_seed=0, mode="leapfrog")
    with pytest.raises(ConfigError):
        RunConfig("sign-abs", sched, ZERO_NOISE, horizon=10,
                  replications=1, base_seed=0, checkpoints=[5, 5])
    with pytest.raises(ConfigError):
        RunConfig("sign-abs", sched, ZERO_NOISE, horizon=10,
                  replications=1, base_seed=0, checkpoints=[0, 20])
    cfg = RunConfig("no-such-problem", sched, ZERO_NOISE, horizon=10,
                    replications=1, base_seed=0)
    with pytest.raises(ConfigError):
        run_replication(cfg, 0)


def test_zero_horizon_capture():
    cfg = RunConfig("sign-abs", StepSchedule(0.05, 1.0, 0.05, 1.0, T0=1),
                    ZERO_NOISE, horizon=0, replications=1, base_seed=1)
    cap = run_replication(cfg, 0)
    assert cap.checkpoints.tolist() == [0]
    p = get_problem("sign-abs")
    assert cap.x_raw[0, 0] == p.x0[0]
    assert cap.y_raw[0, 0] == p.y0[0]
    assert cap.diverged_at is None


def test_rep_out_of_range():
    cfg = RunConfig("sign-abs", StepSchedule(0.05, 1.0, 0.05, 1.0, T0=1),
                    ZERO_NOISE, horizon=10, replications=2, base_seed=1)
    with pytest.raises(ConfigError):
        run_replication(cfg, 2)


def test_deterministic_replication():
    cfg = RunConfig("bilevel-sin", StepSchedule(1.0, 0.7, 1.0, 1.0, T0=10),
                    NoiseModel(sigma_xi=1.0, sigma_psi=1.0),
                    horizon=2000, replications=3, base_seed=42)
    a = run_replication(cfg, 1)
    b = run_replication(cfg, 1)
    assert np.array_equal(a.x_raw, b.x_raw)
    assert np.array_equal(a.y_raw, b.y_raw)


def test_matches_independent_reference_loop():
    """Hand-rolled recursion (no engine code) must agree exactly."""
    T = 60
    sched = StepSchedule(alpha0=0.05, a=1.0, beta0=0.05, b=1.0, T0=2)
    noise = NoiseModel(sigma_xi=0.5, sigma_psi=0.1)
    cps = np.arange(T + 1, dtype=np.int64)
    cfg = RunConfig("sign-abs", sched, noise, horizon=T, replications=1,
                    base_seed=7, checkpoints=cps)
    cap = run_replication(cfg, 0)

    p = get_problem("sign-abs")
    rng = RngStream(7, 0)
    x, y = float(p.x0[0]), float(p.y0[0])
    ref_x, ref_y = [], []
    for t in range(T + 1):
        ref_x.append(x)
        ref_y.append(y)
        if t == T:
            break
        alpha = 0.05 / (t + 2) ** 1.0
        beta = 0.05 / (t + 2) ** 1.0
        xi, psi = sample_noise(noise, rng, (as_vec([x]), as_vec([y])),
                               t, beta)
        f = x - y
        g = -abs(x - y) * (1.0 if y > 0 else (-1.0 if y < 0 else 0.0)) + y
        x, y = x - alpha * (f + xi[0]), y - beta * (g + psi[0])
    assert cap.x_raw[:, 0].tolist() == ref_x
    assert cap.y_raw[:, 0].tolist() == ref_y


def test_residual_identity():
    cfg = RunConfig("shb-quadratic-sin",
                    StepSchedule(0.5, 0.7, 0.5, 1.0, T0=10),
                    NoiseModel(sigma_xi=1.0, sigma_psi=1.0),
                    horizon=500, replications=1, base_seed=3)
    cap = run_replication(cfg, 0)
    p = get_problem("shb-quadratic-sin")
    for i in range(len(cap.checkpoints)):
        assert np.array_equal(cap.x_hat[i], cap.x_raw[i] - p.H(cap.y_raw[i]))
        assert np.array_equal(cap.y_hat[i], cap.y_raw[i] - p.root[1])


def test_zero_noise_contraction():
    cfg = RunConfig("linear-sanity", StepSchedule(0.9, 1.0, 0.9, 1.0, T0=1),
                    ZERO_NOISE, horizon=200, replications=1, base_seed=0,
                    checkpoints=np.arange(201, dtype=np.int64))
    cap = run_replication(cfg, 0)
    mag_x = np.abs(cap.x_hat[:, 0])
    mag_y = np.abs(cap.y_hat[:, 0])
    assert np.all(np.diff(mag_y) <= 1e-15)
    # polynomial step decay gives polynomial contraction, not geometric
    assert mag_y[-1] < 1e-2 and mag_x[-1] < 5e-2


def test_worker_count_invariance():
    cfg = RunConfig("sign-abs", StepSchedule(1.0, 0.6, 1.0, 1.0, T0=10),
                    NoiseModel(sigma_xi=1.0, sigma_psi=0.1),
                    horizon=1000, replications=8, base_seed=99)
    one = run_experiment(cfg, workers=1)
    four = run_experiment(cfg, workers=4)
    assert len(one) == len(four) == 8
    for c1, c4 in zip(one, four):
        assert c1.rep == c4.rep
        assert np.array_equal(c1.x_raw, c4.x_raw)
        assert np.array_equal(c1.y_raw, c4.y_raw)


def test_mode_divergence_bound_per_step():
    # one alternating step differs from one simultaneous step only in the
    # slow update, by at most beta * L_Gx * |alpha (F + xi)|
    p = get_problem("shb-quadratic-sin")
    L_Gx = p.constants.L_Gx
    rng = np.random.default_rng(8)
    for _ in range(200):
        x = as_vec([rng.uniform(-2, 2)])
        y = as_vec([rng.uniform(-2, 2)])
        xi = as_vec([rng.normal()])
        psi = as_vec([rng.normal()])
        alpha, beta = 1e-3, 1e-3
        xs, ys = step_simultaneous(p, x, y, alpha, beta, xi, psi)
        xa, ya = step_alternating(p, x, y, alpha, beta, xi, psi)
        assert np.array_equal(xs, xa)
        fv = p.F(x, y)[0] + xi[0]
        assert abs(ya[0] - ys[0]) <= beta * L_Gx * abs(alpha * fv) + 1e-15


def test_divergence_is_flagged_and_masked():
    cfg = RunConfig("sign-abs", StepSchedule(1e8, 1.0, 1.0, 1.0, T0=1),
                    NoiseModel(sigma_xi=1.0, sigma_psi=0.1),
                    horizon=500, replications=1, base_seed=5)
    cap = run_replication(cfg, 0)
    assert cap.diverged_at is not None
    assert 0 < cap.diverged_at <= 500
    mask = cap.valid_mask()
    assert not mask[-1]
    assert np.all(np.isfinite(cap.x_hat[mask]))
    assert np.all(np.isnan(cap.x_hat[~mask]))


@pytest.mark.skipif(not engine.HAVE_KERNEL,
                    reason="compiled kernel not available")
def test_backends_agree_bit_for_bit(monkeypatch):
    noises = [NoiseModel(sigma_xi=1.0, sigma_psi=0.1),
              NoiseModel(kind="gaussian-biased", sigma_xi=1.0,
                         sigma_psi=1.0, bias_scale=10.0)]
    for pid in problem_ids():
        for mode in ("simultaneous", "alternating"):
            for noise in noises:
                cfg = RunConfig(pid, StepSchedule(0.5, 0.7, 0.5, 1.0, T0=20),
                                noise, horizon=2000, replications=1,
                                base_seed=17, mode=mode)
                fast = run_replication(cfg, 0)
                monkeypatch.setattr(engine, "BACKEND", "python")
                slow = run_replication(cfg, 0)
                monkeypatch.setattr(engine, "BACKEND", "auto")
                assert np.array_equal(fast.x_raw, slow.x_raw), (pid, mode)
                assert np.array_equal(fast.y_raw, slow.y_raw), (pid, mode)
                assert fast.diverged_at == slow.diverged_at
