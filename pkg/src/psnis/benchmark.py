"""Multi-peak benchmark protocol over a directory of class images.

Given any directory of clean grayscale images of one class, this harness
splits off a random test set, trains a prior per peak on the remaining
images, synthesizes Poisson counts at each peak, denoises them, and reports
mean PSNR of the noisy counts and of the denoised estimates.  It exists so
results on a user-supplied dataset (e.g. a face or text collection) can be
produced with one call; nothing here depends on any particular dataset.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .clustering import TrainingSet, learn_prior
from .image_io import read_image
from .pipeline import DenoiseConfig, denoise_image, extract_patches, psnr, scale_to_peak
from .poisson import sample_poisson_image

__all__ = ["PeakResult", "run_class_benchmark", "build_training_set"]

IMAGE_SUFFIXES = (".png", ".pgm", ".txt")


@dataclass(frozen=True)
class PeakResult:
    """Mean PSNR over the test images at one peak value."""

    peak: float
    noisy_db: float
    denoised_db: float
    test_count: int


def build_training_set(
    images: list[np.ndarray],
    peak: float,
    patch_size: int,
    stride: int = 1,
    max_patches: int | None = 100_000,
    seed: int = 0,
) -> TrainingSet:
    """Extract a training pool from clean images scaled to ``peak``.

    Training uses stride 1 to maximize the pool; when the pool exceeds
    ``max_patches`` it is subsampled without replacement (seeded), keeping
    the cost of clustering bounded on large datasets.
    """
    pools = []
    for img in images:
        scaled = scale_to_peak(img, peak)
        values, _ = extract_patches(scaled, patch_size, stride)
        pools.append(values)
    patches = np.concatenate(pools, axis=0)
    if max_patches is not None and patches.shape[0] > max_patches:
        rng = np.random.default_rng(np.random.SeedSequence(seed))
        keep = rng.choice(patches.shape[0], size=max_patches, replace=False)
        patches = patches[np.sort(keep)]
    return TrainingSet(patches=patches, source_count=len(images))


def run_class_benchmark(
    data_dir,
    peaks: tuple[float, ...] = (2.0, 5.0, 10.0, 15.0),
    test_count: int = 5,
    seed: int = 0,
    workers: int = 1,
    config: DenoiseConfig | None = None,
    max_train_patches: int | None = 100_000,
    verbose: bool = True,
) -> list[PeakResult]:
    """Run the split/train/corrupt/denoise/score protocol on a dataset.

    Parameters
    ----------
    data_dir : path-like
      Directory of clean grayscale images (png/pgm/txt).
    peaks : tuple of float
      Peak values to evaluate.
    test_count : int
      Images held out (randomly, seeded) as the test set.
    seed : int
      Controls the split, the noise draws, and the denoiser streams.
    workers : int
      Thread count for the patch sweep.
    config : DenoiseConfig, optional
      Template config; its ``peak`` is overridden per evaluated peak.
    max_train_patches : int or None
      Cap on the training pool size (None = no cap).
    verbose : bool
      Print one progress line per (peak, image).

    Returns
    -------
    list of PeakResult, one per peak.
    """
    data_dir = Path(data_dir)
    files = sorted(p for p in data_dir.iterdir() if p.suffix.lower() in IMAGE_SUFFIXES)
    if len(files) < test_count + 1:
        raise ValueError(
            f"{data_dir}: need at least {test_count + 1} images, found {len(files)}"
        )
    rng = np.random.default_rng(np.random.SeedSequence([seed, len(files)]))
    order = rng.permutation(len(files))
    test_files = [files[i] for i in sorted(order[:test_count])]
    train_files = [files[i] for i in sorted(order[test_count:])]
    train_images = [read_image(p) for p in train_files]
    test_images = [read_image(p) for p in test_files]

    results = []
    for peak_index, peak in enumerate(peaks):
        if config is None:
            cfg = DenoiseConfig(peak=float(peak), seed=seed)
        else:
            cfg = DenoiseConfig(**{**config.__dict__, "peak": float(peak), "seed": seed})
        train = build_training_set(
            train_images, cfg.peak, cfg.patch_size, stride=1,
            max_patches=max_train_patches, seed=seed,
        )
        model = learn_prior(
            train, cfg.k_count, cfg.cem_iters, seed, cfg.epsilon_ridge_scale
        )
        to_display = 255.0 / cfg.peak
        noisy_scores, denoised_scores = [], []
        for image_index, clean in enumerate(test_images):
            clean_peak = scale_to_peak(clean, cfg.peak)
            noise_seed = int(
                np.random.SeedSequence([seed, peak_index, image_index]).generate_state(1)[0]
            )
            counts = sample_poisson_image(clean_peak, noise_seed)
            estimate = denoise_image(counts, model, cfg, workers=workers)
            reference = clean_peak * to_display
            noisy_scores.append(psnr(counts * to_display, reference, 255.0))
            denoised_scores.append(psnr(estimate * to_display, reference, 255.0))
            if verbose:
                print(
                    f"peak {peak:g} image {test_files[image_index].name}: "
                    f"noisy {noisy_scores[-1]:.2f} dB -> denoised {denoised_scores[-1]:.2f} dB"
                )
        results.append(
            PeakResult(
                peak=float(peak),
                noisy_db=float(np.mean(noisy_scores)),
                denoised_db=float(np.mean(denoised_scores)),
                test_count=test_count,
            )
        )
        if verbose:
            r = results[-1]
            print(f"peak {peak:g}: mean noisy {r.noisy_db:.2f} dB, mean denoised {r.denoised_db:.2f} dB")
    return results
