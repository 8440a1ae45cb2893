"""End-to-end denoising walkthrough on the synthetic texture class.

Train a prior from clean class images, corrupt an unseen image at several
peaks, denoise each, and report PSNR before and after.  Every denoised patch
alternates two steps: pick the cluster whose roster samples best explain the
counts (smallest estimated squared error), then average fresh roster samples
with Poisson-likelihood weights.  Overlapping patch estimates are averaged
back onto the grid.
"""

from pathlib import Path

import numpy as np

from psnis import DenoiseConfig, denoise_image, learn_prior, psnr, sample_poisson_image, scale_to_peak
from psnis.benchmark import build_training_set
from psnis.image_io import write_image_u8
from psnis.synthetic import make_texture_corpus

OUT = Path(__file__).parent / "output"
OUT.mkdir(exist_ok=True)

train_images = make_texture_corpus(12, 64, seed=21)
test_image = make_texture_corpus(1, 64, seed=99)[0]

print(f"{'peak':>6} {'noisy dB':>9} {'denoised dB':>12} {'gain dB':>8}")
for peak in (2.0, 5.0, 10.0):
    cfg = DenoiseConfig(peak=peak, seed=1)
    train = build_training_set(train_images, peak, cfg.patch_size, stride=2, max_patches=None)
    model = learn_prior(train, cfg.k_count, cfg.cem_iters, seed=0)

    clean = scale_to_peak(test_image, peak)
    counts = sample_poisson_image(clean, seed=5)
    estimate = denoise_image(counts, model, cfg)

    scale = 255.0 / peak
    noisy_db = psnr(counts * scale, clean * scale, 255.0)
    denoised_db = psnr(estimate * scale, clean * scale, 255.0)
    print(f"{peak:>6g} {noisy_db:>9.2f} {denoised_db:>12.2f} {denoised_db - noisy_db:>8.2f}")

    panel = np.hstack([clean, np.minimum(counts, peak * 2.0), estimate]) * scale
    write_image_u8(OUT / f"peak{peak:g}_clean_noisy_denoised.png", panel)

print(f"\nside-by-side panels (clean | noisy | denoised) -> {OUT}/")
print("gains are largest at low peaks, where the Poisson noise bites hardest")
