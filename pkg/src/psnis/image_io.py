"""Grayscale image file handling.

Supported formats:

- 8-bit grayscale PNG (display-scale images, denoised outputs),
- plain PGM, both ASCII "P2" and binary "P5",
- 16-bit grayscale PNG and whitespace-separated text grids for photon count
  images, which regularly exceed 255 and must round-trip losslessly.

Pixels are mapped to plain floats on load; writers quantize with
round-half-up.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from PIL import Image

__all__ = [
    "read_image",
    "write_image_u8",
    "write_pgm",
    "read_counts",
    "write_counts",
]

_SIXTEEN_BIT_MODES = {"I", "I;16", "I;16B", "I;16L", "I;16N"}


def quantize_u8(img: np.ndarray) -> np.ndarray:
    """Round half up and clamp to [0, 255] as uint8."""
    img = np.asarray(img, dtype=float)
    return np.clip(np.floor(img + 0.5), 0, 255).astype(np.uint8)


def _read_pgm(path: Path) -> np.ndarray:
    data = path.read_bytes()

    tokens: list[bytes] = []
    pos = 0
    while len(tokens) < 4 and pos < len(data):
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos : pos + 1] == b"#":
            while pos < len(data) and data[pos] != 0x0A:
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        tokens.append(data[start:pos])
    if len(tokens) < 4:
        raise ValueError(f"{path}: truncated PGM header")
    magic = tokens[0]
    width, height, maxval = (int(t) for t in tokens[1:4])
    if maxval <= 0 or maxval > 65535:
        raise ValueError(f"{path}: unsupported PGM maxval {maxval}")

    if magic == b"P2":
        values = np.array(data[pos:].split(), dtype=np.int64)
        if values.size != width * height:
            raise ValueError(f"{path}: PGM sample count mismatch")
        return values.reshape(height, width).astype(float)
    if magic == b"P5":
        pos += 1  # single whitespace byte after maxval
        dtype = np.dtype(">u2") if maxval > 255 else np.uint8
        raw = np.frombuffer(data, dtype=dtype, count=width * height, offset=pos)
        return raw.reshape(height, width).astype(float)
    raise ValueError(f"{path}: not a P2/P5 PGM file (magic {magic!r})")


def read_image(path) -> np.ndarray:
    """Read a grayscale image as a 2-D float array.

    PNG (8-bit or 16-bit grayscale; other modes are converted to grayscale),
    PGM (P2 or P5), or a whitespace text grid (``.txt``).
    """
    path = Path(path)
    suffix = path.suffix.lower()
    if suffix == ".txt":
        return np.loadtxt(path, dtype=float, ndmin=2)
    if suffix == ".pgm":
        return _read_pgm(path)
    with Image.open(path) as im:
        if im.mode in _SIXTEEN_BIT_MODES:
            return np.asarray(im, dtype=float)
        if im.mode != "L":
            im = im.convert("L")
        return np.asarray(im, dtype=float)


def write_pgm(path, img: np.ndarray, ascii_format: bool = False) -> None:
    """Write an 8-bit PGM; binary P5 by default, ASCII P2 on request."""
    path = Path(path)
    pixels = quantize_u8(img)
    h, w = pixels.shape
    if ascii_format:
        lines = [f"P2\n{w} {h}\n255\n"]
        for row in pixels:
            lines.append(" ".join(str(int(v)) for v in row) + "\n")
        path.write_text("".join(lines))
    else:
        path.write_bytes(b"P5\n%d %d\n255\n" % (w, h) + pixels.tobytes())


def write_image_u8(path, img: np.ndarray) -> None:
    """Write an image as 8-bit grayscale (PNG or binary PGM by extension)."""
    path = Path(path)
    pixels = quantize_u8(img)
    if path.suffix.lower() == ".pgm":
        write_pgm(path, pixels)
    else:
        Image.fromarray(pixels, mode="L").save(path)


def write_counts(path, counts: np.ndarray) -> None:
    """Persist an integer count image losslessly.

    ``.txt`` writes a whitespace grid (any count magnitude); ``.png`` writes
    16-bit grayscale, so counts above 65535 are rejected.  Other suffixes are
    refused rather than silently clipped to 8 bits.
    """
    path = Path(path)
    counts = np.asarray(counts)
    as_float = counts.astype(float)
    if np.any(as_float != np.round(as_float)) or np.any(as_float < 0):
        raise ValueError("counts must be nonnegative integers")
    suffix = path.suffix.lower()
    if suffix == ".txt":
        np.savetxt(path, counts.astype(np.int64), fmt="%d")
        return
    if suffix != ".png":
        raise ValueError(f"count images must be .png or .txt, got {path.name}")
    if as_float.max(initial=0) > 65535:
        raise ValueError("counts exceed 16-bit range; use a .txt grid instead")
    Image.fromarray(counts.astype(np.uint16)).save(path)


def read_counts(path) -> np.ndarray:
    """Read a count image written by :func:`write_counts` as int64."""
    img = read_image(path)
    if np.any(img != np.round(img)) or np.any(img < 0):
        raise ValueError(f"{path}: not an integer count image")
    return img.astype(np.int64)
