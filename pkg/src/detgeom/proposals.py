"""Gaussian-noise-augmented image-size region proposals.

Each proposal starts from the full-image box (0.5, 0.5, 1, 1) in
normalized coordinates and is perturbed by per-proposal noise
(eps_x, eps_y): the center shifts by eps and the extent shrinks by
2 * |eps|, so every augmented box stays inside the unit image.

Reproducibility: uniforms come from a seeded PCG64 stream and are mapped
to Gaussians through the inverse normal CDF, so a given seed yields the
same proposals on every platform.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri

from .geometry import Box

IMAGE_BOX = Box(0.5, 0.5, 1.0, 1.0)

# Noise is clamped so box extents stay positive; at the default variance
# 0.01 this is a ~5 sigma event per draw.
NOISE_CLAMP = 0.49

_U_TINY = 2.0 ** -53


@dataclass(frozen=True)
class ProposalConfig:
    num_proposals: int = 300
    mu: float = 0.0
    sigma2: float = 0.01
    seed: int = 0

    def __post_init__(self) -> None:
        if self.num_proposals < 1:
            raise ValueError(f"num_proposals must be >= 1, got {self.num_proposals}")
        if self.sigma2 < 0.0:
            raise ValueError(f"sigma2 must be >= 0, got {self.sigma2}")


def draw_noise(cfg: ProposalConfig) -> np.ndarray:
    """Draw the (eps_x, eps_y) pairs used for augmentation, shape (n, 2).

    Values are clamped to [-NOISE_CLAMP, NOISE_CLAMP]; these are exactly
    the offsets fed to augment_box, in proposal order.
    """
    rng = np.random.Generator(np.random.PCG64(cfg.seed))
    u = rng.random((cfg.num_proposals, 2))
    # Keep the uniforms strictly inside (0, 1) so ndtri stays finite.
    u = np.clip(u, _U_TINY, 1.0 - _U_TINY)
    eps = cfg.mu + np.sqrt(cfg.sigma2) * ndtri(u)
    return np.clip(eps, -NOISE_CLAMP, NOISE_CLAMP)


def augment_box(b: Box, eps_x: float, eps_y: float) -> Box:
    """Shift the center by eps and shrink the extent by 2 * |eps|.

    Offsets are clamped to +/- NOISE_CLAMP times the box extent, which
    keeps the shrunken extent strictly positive in both dimensions.
    """
    limit_x = NOISE_CLAMP * b.w
    limit_y = NOISE_CLAMP * b.h
    ex = min(max(eps_x, -limit_x), limit_x)
    ey = min(max(eps_y, -limit_y), limit_y)
    return Box(b.cx + ex, b.cy + ey, b.w - 2.0 * abs(ex), b.h - 2.0 * abs(ey))


def generate_proposals(cfg: ProposalConfig) -> list[Box]:
    """Generate num_proposals noise-augmented copies of the image box.

    Deterministic: the same config yields the same list, element for
    element.
    """
    eps = draw_noise(cfg)
    return [augment_box(IMAGE_BOX, float(ex), float(ey)) for ex, ey in eps]
