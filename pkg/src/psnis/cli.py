"""Command-line entry points: train, synth, denoise, evaluate.

Exit codes: 0 success, 1 usage error, 2 data error, 3 model error.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .benchmark import IMAGE_SUFFIXES
from .clustering import TrainingSet, learn_prior
from .image_io import read_counts, read_image, write_counts, write_image_u8
from .model_io import ModelFormatError, load_model, save_model
from .patches import ModelDegenerateError
from .pipeline import (
    DenoiseConfig,
    aggregate_patches,
    denoise_image_patches,
    extract_patches,
    psnr,
    scale_to_peak,
)
from .poisson import sample_poisson_image

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_MODEL = 3


class _Parser(argparse.ArgumentParser):
    """argparse exits with 2 on usage errors; this tool reserves 2 for data errors."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


@dataclass
class RunReport:
    """Structured summary of one denoise run."""

    config: DenoiseConfig
    wall_seconds: float
    mean_ess: float
    psnr_noisy_db: float | None = None
    psnr_denoised_db: float | None = None

    def to_dict(self) -> dict:
        payload = {
            "config": asdict(self.config),
            "wall_seconds": self.wall_seconds,
            "mean_ess": self.mean_ess,
        }
        if self.psnr_noisy_db is not None:
            payload["psnr_noisy_db"] = _db(self.psnr_noisy_db)
            payload["psnr_denoised_db"] = _db(self.psnr_denoised_db)
        return payload

    def to_text(self) -> str:
        lines = []
        for key, value in asdict(self.config).items():
            lines.append(f"config.{key}: {value}")
        lines.append(f"wall_seconds: {self.wall_seconds:.3f}")
        lines.append(f"mean_ess: {self.mean_ess:.3f}")
        if self.psnr_noisy_db is not None:
            lines.append(f"psnr_noisy_db: {_fmt_db(self.psnr_noisy_db)}")
            lines.append(f"psnr_denoised_db: {_fmt_db(self.psnr_denoised_db)}")
        lines.append("json: " + json.dumps(self.to_dict(), sort_keys=True))
        return "\n".join(lines)


def _db(value: float):
    return "inf" if np.isinf(value) else value


def _fmt_db(value: float) -> str:
    return "inf" if np.isinf(value) else f"{value:.2f}"


def cmd_train(args) -> int:
    data_dir = Path(args.data_dir)
    if not data_dir.is_dir():
        print(f"error: {data_dir} is not a directory", file=sys.stderr)
        return EXIT_DATA
    pools = []
    used = 0
    for path in sorted(data_dir.iterdir()):
        if path.suffix.lower() not in IMAGE_SUFFIXES:
            continue
        try:
            img = read_image(path)
            scaled = scale_to_peak(img, args.peak)
            values, _ = extract_patches(scaled, args.patch_size, args.train_stride)
        except Exception as exc:
            print(f"warning: skipping {path.name}: {exc}", file=sys.stderr)
            continue
        pools.append(values)
        used += 1
    if not pools:
        print("error: no usable training patches", file=sys.stderr)
        return EXIT_DATA
    patches = np.concatenate(pools, axis=0)
    if args.max_train_patches and patches.shape[0] > args.max_train_patches:
        rng = np.random.default_rng(np.random.SeedSequence(args.seed))
        keep = rng.choice(patches.shape[0], size=args.max_train_patches, replace=False)
        patches = patches[np.sort(keep)]
    train = TrainingSet(patches=patches, source_count=used)
    model = learn_prior(train, args.k, args.cem_iters, args.seed, args.epsilon_ridge_scale)
    save_model(model, args.out)
    print(f"trained on {patches.shape[0]} patches from {used} image(s); model -> {args.out}")
    print("cluster sizes:")
    for j, cluster in enumerate(model.clusters):
        print(f"  cluster {j:2d}: {cluster.size:7d} patches")
    return EXIT_OK


def cmd_synth(args) -> int:
    clean = read_image(args.image)
    scaled = scale_to_peak(clean, args.peak)
    counts = sample_poisson_image(scaled, args.seed)
    write_counts(args.out, counts)
    print(f"wrote counts (max {int(counts.max())}) -> {args.out}")
    return EXIT_OK


def cmd_denoise(args) -> int:
    model = load_model(args.model)
    if args.patch_size is not None and args.patch_size != model.patch_size:
        print(
            f"error: model patch size {model.patch_size} does not match "
            f"--patch-size {args.patch_size}",
            file=sys.stderr,
        )
        return EXIT_MODEL
    cfg = DenoiseConfig(
        peak=args.peak,
        k_count=model.k_count,
        n1=args.n1,
        n2=args.n2,
        outer_iters=args.iters,
        patch_size=model.patch_size,
        stride=args.stride,
        seed=args.seed,
        epsilon_floor=args.epsilon_floor,
        epsilon_ridge_scale=model.epsilon_ridge,
        cem_iters=args.cem_iters,
    )
    noisy = read_counts(args.image)
    start = time.perf_counter()
    estimates, positions = denoise_image_patches(noisy, model, cfg, workers=args.workers)
    values = np.asarray([e.values for e in estimates])
    estimate = aggregate_patches(values, positions, *noisy.shape)
    wall = time.perf_counter() - start

    to_display = 255.0 / cfg.peak
    write_image_u8(args.out, estimate * to_display)
    report = RunReport(
        config=cfg,
        wall_seconds=wall,
        mean_ess=float(np.mean([e.ess for e in estimates])),
    )
    if args.reference is not None:
        reference = scale_to_peak(read_image(args.reference), 255.0)
        report.psnr_noisy_db = psnr(noisy * to_display, reference, 255.0)
        report.psnr_denoised_db = psnr(estimate * to_display, reference, 255.0)
    text = report.to_text()
    print(text)
    if args.report is not None:
        Path(args.report).write_text(text + "\n")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    estimate = read_image(args.estimate)
    reference = scale_to_peak(read_image(args.reference), 255.0)
    if estimate.shape != reference.shape:
        print(
            f"error: shape mismatch {estimate.shape} vs {reference.shape}",
            file=sys.stderr,
        )
        return EXIT_DATA
    if args.peak is not None:
        estimate = estimate * (255.0 / args.peak)
    print(f"PSNR: {_fmt_db(psnr(estimate, reference, 255.0))} dB")
    return EXIT_OK


def _add_common_seed(parser):
    parser.add_argument("--seed", type=int, default=0, help="deterministic seed (default 0)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="psnis", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", parents=[], help="learn a prior model from clean class images")
    p.add_argument("--data-dir", required=True, help="directory of clean grayscale images")
    p.add_argument("--out", required=True, help="output model file")
    p.add_argument("--k", type=int, default=20, help="number of clusters (default 20)")
    p.add_argument("--patch-size", type=int, default=8)
    p.add_argument("--peak", type=float, required=True, help="training peak intensity")
    p.add_argument("--train-stride", type=int, default=1, help="patch extraction stride (default 1)")
    p.add_argument("--cem-iters", type=int, default=10)
    p.add_argument("--epsilon-ridge-scale", type=float, default=1e-3)
    p.add_argument("--max-train-patches", type=int, default=0,
                   help="subsample the pool to this many patches (0 = keep all)")
    _add_common_seed(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("synth", help="corrupt a clean image with Poisson noise")
    p.add_argument("image", help="clean input image")
    p.add_argument("--peak", type=float, required=True, help="intensity the image max is scaled to")
    p.add_argument("--out", required=True, help="output count image (.png 16-bit or .txt)")
    _add_common_seed(p)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("denoise", help="denoise a Poisson count image with a trained model")
    p.add_argument("image", help="noisy count image (16-bit png or .txt)")
    p.add_argument("--model", required=True, help="trained model file")
    p.add_argument("--out", required=True, help="output 8-bit image (png/pgm)")
    p.add_argument("--peak", type=float, required=True, help="peak the counts were synthesized at")
    p.add_argument("--n1", type=int, default=300, help="samples for the patch estimate (default 300)")
    p.add_argument("--n2", type=int, default=30, help="samples per cluster for selection (default 30)")
    p.add_argument("--iters", type=int, default=2, help="outer alternation rounds (default 2)")
    p.add_argument("--stride", type=int, default=2, help="noisy patch extraction stride (default 2)")
    p.add_argument("--patch-size", type=int, default=None,
                   help="must match the model when given (sanity check)")
    p.add_argument("--workers", type=int, default=1, help="patch sweep threads (default 1)")
    p.add_argument("--epsilon-floor", type=float, default=1e-6)
    p.add_argument("--cem-iters", type=int, default=10)
    p.add_argument("--reference", default=None, help="clean reference; adds PSNR to the report")
    p.add_argument("--report", default=None, help="also write the run report to this file")
    _add_common_seed(p)
    p.set_defaults(func=cmd_denoise)

    p = sub.add_parser("evaluate", help="print PSNR between an estimate and a clean reference")
    p.add_argument("estimate", help="estimate image (8-bit display scale unless --peak is given)")
    p.add_argument("reference", help="clean reference image")
    p.add_argument("--peak", type=float, default=None,
                   help="peak scale of the estimate file; rescales it by 255/peak")
    p.set_defaults(func=cmd_evaluate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ModelFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MODEL
    except ModelDegenerateError as exc:
        print(f"error: degenerate model: {exc}", file=sys.stderr)
        return EXIT_MODEL
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
