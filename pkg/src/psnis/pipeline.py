"""Whole-image denoising: peak scaling, patch sweep, overlap averaging, PSNR.

Images are 2-D float arrays of nonnegative intensities (row, column order).
The peak convention: a clean test image is scaled so its maximum equals the
configured peak before Poisson counts are synthesized, and PSNR is computed
after rescaling both reference and estimate to [0, 255] by 255/peak with
``data_max = 255``, which puts results at different peaks on one dB scale.

Patch extraction starts at positions 0, stride, 2*stride, ... and clamps the
final position to ``dim - patch_size``, so the image edges are always covered
and, for stride <= patch_size, every pixel belongs to at least one patch.
Denoised patches are returned to their positions and averaged where they
overlap.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .denoiser import SamplerState, denoise_patch
from .patches import PriorModel
from .poisson import DEFAULT_EPSILON_FLOOR, NoisyPatch

__all__ = [
    "DenoiseConfig",
    "scale_to_peak",
    "extract_patches",
    "aggregate_patches",
    "psnr",
    "denoise_image",
    "denoise_image_patches",
]


@dataclass(frozen=True)
class DenoiseConfig:
    """All tunables of the training and denoising pipeline.

    Defaults follow the working settings for photon-limited class imagery:
    K=20 clusters, 300 samples for estimation, 30 per cluster for selection,
    2 outer rounds, 8x8 patches extracted every 2 pixels.
    """

    peak: float
    k_count: int = 20
    n1: int = 300
    n2: int = 30
    outer_iters: int = 2
    patch_size: int = 8
    stride: int = 2
    seed: int = 0
    epsilon_floor: float = DEFAULT_EPSILON_FLOOR
    epsilon_ridge_scale: float = 1e-3
    cem_iters: int = 10

    def __post_init__(self):
        if self.peak <= 0:
            raise ValueError("peak must be positive")
        if self.patch_size < 1:
            raise ValueError("patch_size must be at least 1")
        if not 1 <= self.stride <= self.patch_size:
            raise ValueError("stride must satisfy 1 <= stride <= patch_size (full coverage)")
        if min(self.n1, self.n2, self.k_count) < 1:
            raise ValueError("n1, n2 and k_count must be at least 1")
        if self.outer_iters < 1:
            raise ValueError("outer_iters must be at least 1")
        if self.cem_iters < 1:
            raise ValueError("cem_iters must be at least 1")
        if self.seed < 0:
            raise ValueError("seed must be nonnegative")
        if self.epsilon_floor <= 0 or self.epsilon_ridge_scale <= 0:
            raise ValueError("epsilon settings must be positive")


def _check_image(img: np.ndarray) -> np.ndarray:
    img = np.asarray(img, dtype=float)
    if img.ndim != 2:
        raise ValueError(f"expected a 2-D grayscale image, got shape {img.shape}")
    if not np.all(np.isfinite(img)):
        raise ValueError("image contains non-finite pixels")
    if np.any(img < 0):
        raise ValueError("image contains negative pixels")
    return img


def scale_to_peak(img: np.ndarray, peak: float) -> np.ndarray:
    """Scale an image linearly so its maximum pixel equals ``peak``."""
    img = _check_image(img)
    if peak <= 0:
        raise ValueError("peak must be positive")
    top = float(img.max())
    if top <= 0:
        raise ValueError("cannot peak-scale an all-zero image")
    return img * (peak / top)


def _grid_positions(dim: int, patch_size: int, stride: int) -> list[int]:
    """Start offsets 0, stride, ... with the last clamped to dim - patch_size."""
    last = dim - patch_size
    positions = list(range(0, last + 1, stride))
    if positions[-1] != last:
        positions.append(last)
    return positions


def extract_patches(
    img: np.ndarray, patch_size: int, stride: int
) -> tuple[np.ndarray, np.ndarray]:
    """Slice an image into flattened patches on a clamped stride grid.

    Parameters
    ----------
    img : ndarray, shape (h, w)
    patch_size : int
    stride : int

    Returns
    -------
    (values, positions)
      ``values`` is ``(n, patch_size**2)`` in raster order of the start
      positions; ``positions`` is ``(n, 2)`` of (row, col) starts.
    """
    img = np.asarray(img)
    if img.ndim != 2:
        raise ValueError(f"expected a 2-D image, got shape {img.shape}")
    h, w = img.shape
    if h < patch_size or w < patch_size:
        raise ValueError(f"image {h}x{w} is smaller than the patch size {patch_size}")
    rows = _grid_positions(h, patch_size, stride)
    cols = _grid_positions(w, patch_size, stride)
    values = np.empty((len(rows) * len(cols), patch_size * patch_size), dtype=img.dtype)
    positions = np.empty((len(rows) * len(cols), 2), dtype=np.int64)
    i = 0
    for r in rows:
        for c in cols:
            values[i] = img[r : r + patch_size, c : c + patch_size].ravel()
            positions[i] = (r, c)
            i += 1
    return values, positions


def aggregate_patches(
    values: np.ndarray, positions: np.ndarray, height: int, width: int
) -> np.ndarray:
    """Average patch values back onto the image grid.

    Every output pixel is the mean of all patch values covering it; every
    pixel must be covered at least once.
    """
    values = np.asarray(values, dtype=float)
    positions = np.asarray(positions, dtype=np.int64)
    patch_size = int(round(math.sqrt(values.shape[1])))
    if patch_size * patch_size != values.shape[1]:
        raise ValueError("patch values are not square patches")
    total = np.zeros((height, width), dtype=float)
    cover = np.zeros((height, width), dtype=float)
    for vals, (r, c) in zip(values, positions):
        total[r : r + patch_size, c : c + patch_size] += vals.reshape(patch_size, patch_size)
        cover[r : r + patch_size, c : c + patch_size] += 1.0
    if np.any(cover == 0):
        raise RuntimeError("aggregation left uncovered pixels; extraction grid is inconsistent")
    return total / cover


def psnr(estimate: np.ndarray, reference: np.ndarray, data_max: float) -> float:
    """Peak signal-to-noise ratio in dB: ``10 log10(data_max^2 / MSE)``.

    Identical inputs return ``math.inf`` (reported as "inf").
    """
    estimate = np.asarray(estimate, dtype=float)
    reference = np.asarray(reference, dtype=float)
    if estimate.shape != reference.shape:
        raise ValueError(f"shape mismatch: {estimate.shape} vs {reference.shape}")
    if data_max <= 0:
        raise ValueError("data_max must be positive")
    mse = float(np.mean((estimate - reference) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(data_max * data_max / mse)


def denoise_image_patches(
    noisy: np.ndarray,
    model: PriorModel,
    cfg: DenoiseConfig,
    workers: int = 1,
) -> tuple[list, np.ndarray]:
    """Denoise every patch of a count image; return estimates and positions.

    Patches are extracted at ``cfg.stride`` and each is denoised with a
    sampler state derived from ``(cfg.seed, raster index)``, so the result
    does not depend on processing order or on ``workers``.

    Returns
    -------
    (estimates, positions)
      ``estimates`` is a list of :class:`~psnis.denoiser.PatchEstimate` in
      raster order; ``positions`` is the matching ``(n, 2)`` start array.
    """
    noisy = np.asarray(noisy)
    if model.patch_size != cfg.patch_size:
        raise ValueError(
            f"model patch size ({model.patch_size}) does not match config ({cfg.patch_size})"
        )
    counts, positions = extract_patches(noisy, cfg.patch_size, cfg.stride)

    def run(index: int):
        patch = NoisyPatch(counts[index], int(positions[index, 0]), int(positions[index, 1]))
        state = SamplerState(cfg.seed, index)
        return denoise_patch(patch, model, cfg, state)

    if workers <= 1:
        estimates = [run(i) for i in range(len(counts))]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            estimates = list(pool.map(run, range(len(counts))))
    return estimates, positions


def denoise_image(
    noisy: np.ndarray,
    model: PriorModel,
    cfg: DenoiseConfig,
    workers: int = 1,
) -> np.ndarray:
    """Denoise a whole count image patch by patch.

    Extracts noisy patches at ``cfg.stride``, denoises each, and averages the
    estimates where patches overlap.  Results are bit-identical for any
    ``workers`` value because every patch's sample streams depend only on its
    raster index.

    Parameters
    ----------
    noisy : ndarray, shape (h, w)
      Nonnegative integer photon counts.
    model : PriorModel
    cfg : DenoiseConfig
    workers : int
      Size of the thread pool for the patch sweep.

    Returns
    -------
    ndarray, shape (h, w)
      Nonnegative intensity estimate at the model's peak scale.
    """
    noisy = np.asarray(noisy)
    estimates, positions = denoise_image_patches(noisy, model, cfg, workers)
    values = np.asarray([e.values for e in estimates])
    return aggregate_patches(values, positions, *noisy.shape)
