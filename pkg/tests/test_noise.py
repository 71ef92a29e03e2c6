import math

import numpy as np
import pytest

from ttsalab.core import RngStream, as_vec
from ttsalab.noise import NoiseModel, sample_noise, sample_noise_parts


def test_model_validation():
    with pytest.raises(ValueError):
        NoiseModel(kind="poisson")
    with pytest.raises(ValueError):
        NoiseModel(kind="gaussian", bias_scale=1.0)
    with pytest.raises(ValueError):
        NoiseModel(sigma_xi=-1.0)
    NoiseModel(kind="gaussian-biased", bias_scale=10.0)  # fine


def test_gaussian_noise_zero_mean():
    m = NoiseModel(sigma_xi=1.0, sigma_psi=0.5)
    rng = RngStream(11, 0)
    state = (as_vec([1.0]), as_vec([2.0]))
    n = 100_000
    xis = np.empty(n)
    psis = np.empty(n)
    for i in range(n):
        xi, psi = sample_noise(m, rng, state, i, beta_t=0.1)
        xis[i] = xi[0]
        psis[i] = psi[0]
    # 4-sigma bands on the sample means
    assert abs(xis.mean()) < 4.0 / math.sqrt(n)
    assert abs(psis.mean()) < 4.0 * 0.5 / math.sqrt(n)
    assert abs(xis.std() - 1.0) < 0.02
    assert abs(psis.std() - 0.5) < 0.02
    assert abs(np.corrcoef(xis, psis)[0, 1]) < 0.02


def test_bias_bound_holds_sample_by_sample():
    m = NoiseModel(kind="gaussian-biased", sigma_xi=1.0, sigma_psi=1.0,
                   bias_scale=10.0)
    rng = RngStream(12, 0)
    state = (as_vec([-3.0]), as_vec([1.0]))
    for t in range(5000):
        beta_t = 1.0 / (t + 1)
        _, _, psi2 = sample_noise_parts(m, rng, state, t, beta_t)
        assert float(psi2 @ psi2) <= m.bias_scale ** 2 * 1 * beta_t + 1e-12
        # sign convention: bias pushes against sign(x)
        assert psi2[0] >= 0.0  # x < 0 here


def test_zero_bias_scale_reduces_to_psi1():
    m = NoiseModel(kind="gaussian-biased", sigma_xi=1.0, sigma_psi=0.3,
                   bias_scale=0.0)
    rng = RngStream(13, 0)
    state = (as_vec([2.0]), as_vec([2.0]))
    for t in range(100):
        xi, psi1, psi2 = sample_noise_parts(m, rng, state, t, beta_t=0.5)
        assert np.all(psi2 == 0.0)


def test_biased_requires_matching_dimensions():
    m = NoiseModel(kind="gaussian-biased", bias_scale=1.0)
    rng = RngStream(14, 0)
    with pytest.raises(ValueError, match="d_x == d_y"):
        sample_noise_parts(m, rng, (as_vec([1.0, 2.0]), as_vec([1.0])),
                           0, 0.5)


def test_beta_must_be_positive():
    m = NoiseModel()
    with pytest.raises(ValueError):
        sample_noise_parts(m, RngStream(1, 0),
                           (as_vec([1.0]), as_vec([1.0])), 0, 0.0)


def test_second_moment_metadata():
    m = NoiseModel(sigma_xi=2.0, sigma_psi=0.5)
    b = m.second_moment_bounds(3, 2)
    assert b["E_xi_sq"] == 3 * 4.0
    assert b["E_psi_sq"] == 2 * 0.25
    assert b["E_xi_quartic"] == (9 + 6) * 16.0
    assert b["cross"] == 0.0
