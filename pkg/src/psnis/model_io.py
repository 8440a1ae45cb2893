"""Binary persistence of learned prior models.

Layout (all multi-byte values little-endian):

==========  =====================================================
bytes       content
==========  =====================================================
7           magic ``PSNISM1``
8 x 3       header ints: patch_size, k_count, m
8 x k       per-cluster member counts
8           training seed (int64)
8           epsilon_ridge (float64)
per cluster mean (m f64), covariance (m*m f64), members (count*m f64)
4           CRC-32 of every preceding byte
==========  =====================================================

Member rosters are stored in full (not just the Gaussian parameters) because
denoising samples the raw rosters.  The Cholesky factor is not stored; it is
recomputed once at load time from the covariance and the recorded ridge
scale, so ``load(save(model))`` reproduces the model bit-exactly.
"""

from __future__ import annotations

import struct
import zlib
from pathlib import Path

import numpy as np

from .patches import ClusterModel, PriorModel, ridge_value

__all__ = ["ModelFormatError", "MAGIC", "save_model", "load_model"]

MAGIC = b"PSNISM1"
_DIMS = struct.Struct("<qqq")  # patch_size, k_count, m
_TRAILER = struct.Struct("<qd")  # training seed, epsilon_ridge


class ModelFormatError(ValueError):
    """The model file is corrupt or structurally inconsistent."""


def save_model(model: PriorModel, path) -> None:
    """Serialize a prior model; see the module docstring for the layout."""
    if model.patch_size < 1:
        raise ValueError("only models with a real patch grid can be persisted")
    if model.k_count < 1:
        raise ValueError("model has no clusters")
    m = model.dim
    parts = [MAGIC]
    parts.append(_DIMS.pack(model.patch_size, model.k_count, m))
    counts = np.array([c.size for c in model.clusters], dtype="<i8")
    parts.append(counts.tobytes())
    parts.append(_TRAILER.pack(model.training_seed, model.epsilon_ridge))
    for cluster in model.clusters:
        parts.append(cluster.mean.astype("<f8").tobytes())
        parts.append(cluster.covariance.astype("<f8").tobytes())
        parts.append(cluster.members.astype("<f8").tobytes())
    body = b"".join(parts)
    crc = zlib.crc32(body) & 0xFFFFFFFF
    Path(path).write_bytes(body + struct.pack("<I", crc))


def load_model(path) -> PriorModel:
    """Load a model written by :func:`save_model`, validating the CRC.

    Raises
    ------
    ModelFormatError
      On bad magic, failed CRC, or any header/payload inconsistency.
    """
    data = Path(path).read_bytes()
    if len(data) < len(MAGIC) + _DIMS.size + _TRAILER.size + 4:
        raise ModelFormatError(f"{path}: file too short to be a model")
    body, stored = data[:-4], struct.unpack("<I", data[-4:])[0]
    if zlib.crc32(body) & 0xFFFFFFFF != stored:
        raise ModelFormatError(f"{path}: corrupt model (CRC mismatch)")
    if body[: len(MAGIC)] != MAGIC:
        raise ModelFormatError(f"{path}: not a model file (bad magic)")

    offset = len(MAGIC)
    patch_size, k_count, m = _DIMS.unpack_from(body, offset)
    offset += _DIMS.size
    if patch_size < 1 or k_count < 1 or m != patch_size * patch_size:
        raise ModelFormatError(f"{path}: inconsistent header dimensions")
    if len(body) < offset + 8 * k_count + _TRAILER.size:
        raise ModelFormatError(f"{path}: truncated header")
    counts = np.frombuffer(body, dtype="<i8", count=k_count, offset=offset)
    offset += 8 * k_count
    if np.any(counts < 1):
        raise ModelFormatError(f"{path}: empty cluster roster in header")
    seed, epsilon_ridge = _TRAILER.unpack_from(body, offset)
    offset += _TRAILER.size

    expected = offset + sum(8 * (m + m * m + int(n) * m) for n in counts)
    if expected != len(body):
        raise ModelFormatError(f"{path}: payload length does not match header")

    clusters = []
    for n in counts:
        n = int(n)
        mean = np.frombuffer(body, dtype="<f8", count=m, offset=offset).copy()
        offset += 8 * m
        cov = np.frombuffer(body, dtype="<f8", count=m * m, offset=offset).reshape(m, m).copy()
        offset += 8 * m * m
        members = np.frombuffer(body, dtype="<f8", count=n * m, offset=offset).reshape(n, m).copy()
        offset += 8 * n * m
        clusters.append(ClusterModel.build(mean, cov, members, ridge_value(cov, epsilon_ridge)))
    return PriorModel(
        clusters=tuple(clusters),
        patch_size=patch_size,
        k_count=k_count,
        training_seed=seed,
        epsilon_ridge=epsilon_ridge,
    )
