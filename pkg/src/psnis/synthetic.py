"""Synthetic class imagery for demos, benchmarks and end-to-end tests.

The "class" is a family of two-texture images: horizontal sinusoidal stripes
above a per-image split row, vertical stripes below, both with period 8 and a
random phase per image.  Patches of this family live on a low-dimensional
manifold (phase plus orientation plus boundary mixes), which is exactly the
situation a class-specific patch prior exploits.
"""

from __future__ import annotations

import numpy as np

__all__ = ["texture_image", "make_texture_corpus", "flat_image"]

STRIPE_PERIOD = 8


def texture_image(size: int, rng: np.random.Generator) -> np.ndarray:
    """One two-texture image with intensities in (0, 1]."""
    rows = np.arange(size, dtype=float)[:, None]
    cols = np.arange(size, dtype=float)[None, :]
    horizontal = 0.55 + 0.45 * np.sin(2.0 * np.pi * rows / STRIPE_PERIOD + rng.uniform(0, 2 * np.pi))
    vertical = 0.55 + 0.45 * np.sin(2.0 * np.pi * cols / STRIPE_PERIOD + rng.uniform(0, 2 * np.pi))
    split = int(rng.integers(size // 4, 3 * size // 4))
    img = np.where(rows < split, horizontal + 0.0 * cols, vertical + 0.0 * rows)
    return np.maximum(img, 1e-3)


def make_texture_corpus(count: int, size: int = 64, seed: int = 0) -> list[np.ndarray]:
    """A list of ``count`` independent two-texture images."""
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    return [texture_image(size, rng) for _ in range(count)]


def flat_image(size: int, value: float = 1.0) -> np.ndarray:
    """A constant image, the degenerate member of any class."""
    return np.full((size, size), float(value))
