"""Conditional noise samplers for the fast/slow update pair.

Two kinds: `gaussian` (independent zero-mean components, the martingale
difference case) and `gaussian-biased`, which adds a controlled bias to the
slow noise whose squared norm is bounded by bias_scale^2 * d_y * beta_t.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import RngStream, Vec, gaussian

KINDS = ("gaussian", "gaussian-biased")


@dataclass(frozen=True)
class NoiseModel:
    kind: str = "gaussian"
    sigma_xi: float = 1.0
    sigma_psi: float = 0.1
    bias_scale: float = 0.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}, got {self.kind!r}")
        if self.sigma_xi < 0 or self.sigma_psi < 0 or self.bias_scale < 0:
            raise ValueError("sigma_xi, sigma_psi, bias_scale must be >= 0")
        if self.kind == "gaussian" and self.bias_scale != 0.0:
            raise ValueError("bias_scale requires kind='gaussian-biased'")

    def second_moment_bounds(self, d_x: int, d_y: int) -> dict:
        """Declared moment metadata; Gaussians meet the fourth-order bounds
        automatically (E|v|^4 = (d^2 + 2d) sigma^4).  The cross bound is 0
        because the two streams are sampled independently."""
        return {
            "E_xi_sq": d_x * self.sigma_xi ** 2,
            "E_psi_sq": d_y * self.sigma_psi ** 2
            + self.bias_scale ** 2 * d_y,  # bias part, at beta_t <= 1
            "E_xi_quartic": (d_x ** 2 + 2 * d_x) * self.sigma_xi ** 4,
            "E_psi_quartic": (d_y ** 2 + 2 * d_y) * self.sigma_psi ** 4,
            "cross": 0.0,
        }


def sample_noise_parts(m: NoiseModel, rng: RngStream, state: tuple[Vec, Vec],
                       t: int, beta_t: float) -> tuple[Vec, Vec, Vec]:
    """Draw (xi, psi1, psi2) for step t.

    Consumption order is fixed (xi, then psi1, then the bias uniforms) and
    mirrored exactly by the compiled kernel.  The bias term is
    -bias_scale * sign(x_t) * sqrt(beta_t) * u componentwise with u uniform
    on [0, 1), so |psi2|^2 <= bias_scale^2 * d_y * beta_t holds sample by
    sample.
    """
    if beta_t <= 0:
        raise ValueError("beta_t must be positive")
    x, y = state
    d_x = x.shape[0]
    d_y = y.shape[0]
    xi = gaussian(rng, d_x, m.sigma_xi)
    psi1 = gaussian(rng, d_y, m.sigma_psi)
    if m.kind == "gaussian-biased":
        if d_x != d_y:
            raise ValueError("biased noise needs d_x == d_y for the "
                             "componentwise sign(x) bias")
        u = rng.uniform(d_y)
        psi2 = -m.bias_scale * np.sign(x) * math.sqrt(beta_t) * u
    else:
        psi2 = np.zeros(d_y)
    return xi, psi1, psi2


def sample_noise(m: NoiseModel, rng: RngStream, state: tuple[Vec, Vec],
                 t: int, beta_t: float) -> tuple[Vec, Vec]:
    xi, psi1, psi2 = sample_noise_parts(m, rng, state, t, beta_t)
    return xi, psi1 + psi2
