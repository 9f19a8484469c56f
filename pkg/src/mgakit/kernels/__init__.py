"""PCM sample kernels with a compiled core and a portable fallback.

The Cython extension is used when its build artifact is importable;
otherwise the numpy implementation takes over transparently.  Setting
MGAKIT_PURE_PYTHON=1 forces the fallback, which the benchmark and the
backend-equivalence tests use to compare both paths.
"""

from __future__ import annotations

import os

import numpy as np

from . import _pcm_numpy

_backend = _pcm_numpy
if not os.environ.get("MGAKIT_PURE_PYTHON"):
    try:
        from . import _pcm_cython as _backend  # type: ignore[no-redef]
    except ImportError:
        pass


def backend_name() -> str:
    return _backend.NAME


def decode_pcm(data: bytes, bits: int) -> np.ndarray:
    """Interleaved PCM bytes -> 1-D float64 array scaled to [-1, 1)."""
    return np.asarray(_backend.decode(data, bits), dtype=np.float64)


def encode_pcm(samples: np.ndarray, bits: int) -> bytes:
    """1-D float64 samples -> interleaved little-endian PCM bytes."""
    flat = np.ascontiguousarray(samples, dtype=np.float64).reshape(-1)
    return _backend.encode(flat, bits)


def equal_power_gains(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Fade-out/fade-in gain vectors: (cos t, sin t) at frame centers.

    The angle runs 0..pi/2 across the join, so the two gains always sum
    to unit power.  Computed here once so both backends mix with
    bit-identical coefficients.
    """
    theta = (np.arange(n, dtype=np.float64) + 0.5) / n * (np.pi / 2)
    return np.cos(theta), np.sin(theta)


def equal_power_crossfade(tail: np.ndarray, head: np.ndarray) -> np.ndarray:
    """Mix a fade-out block into a fade-in block, equal-power law."""
    tail = np.ascontiguousarray(tail, dtype=np.float64)
    head = np.ascontiguousarray(head, dtype=np.float64)
    fade_out, fade_in = equal_power_gains(tail.shape[0])
    return np.asarray(
        _backend.crossfade(tail, head, fade_out, fade_in), dtype=np.float64
    )
