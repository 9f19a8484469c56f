"""Vectorized PCM sample kernels (portable fallback backend).

Samples are exchanged as float64 in [-1, 1), scaled by 2^(bits-1), so
integer PCM survives a decode/encode round trip bit-exact.  Encoding
rounds half away from zero, and crossfade gains are supplied by the
caller; both backends therefore produce byte-identical output.
"""

from __future__ import annotations

import numpy as np

NAME = "numpy"


def decode(data: bytes, bits: int) -> np.ndarray:
    """Interleaved little-endian PCM bytes -> 1-D float64 samples."""
    if bits == 16:
        ints = np.frombuffer(data, dtype="<i2").astype(np.int64)
    elif bits == 32:
        ints = np.frombuffer(data, dtype="<i4").astype(np.int64)
    elif bits == 24:
        raw = np.frombuffer(data, dtype=np.uint8).astype(np.int64)
        if len(raw) % 3:
            raise ValueError("24-bit payload length is not a multiple of 3")
        ints = raw[0::3] | (raw[1::3] << 8) | (raw[2::3] << 16)
        ints = (ints ^ 0x800000) - 0x800000  # sign extension
    else:
        raise ValueError(f"unsupported bit depth {bits}")
    return ints.astype(np.float64) / float(1 << (bits - 1))


def encode(samples: np.ndarray, bits: int) -> bytes:
    """1-D float64 samples -> interleaved little-endian PCM bytes."""
    if bits not in (16, 24):
        raise ValueError(f"unsupported output bit depth {bits}")
    scale = float(1 << (bits - 1))
    scaled = np.asarray(samples, dtype=np.float64) * scale
    rounded = np.where(scaled >= 0, np.floor(scaled + 0.5), np.ceil(scaled - 0.5))
    ints = np.clip(rounded, -scale, scale - 1).astype(np.int64)
    if bits == 16:
        return ints.astype("<i2").tobytes()
    out = np.empty(len(ints) * 3, dtype=np.uint8)
    unsigned = ints & 0xFFFFFF
    out[0::3] = unsigned & 0xFF
    out[1::3] = (unsigned >> 8) & 0xFF
    out[2::3] = (unsigned >> 16) & 0xFF
    return out.tobytes()


def crossfade(
    tail: np.ndarray, head: np.ndarray, fade_out: np.ndarray, fade_in: np.ndarray
) -> np.ndarray:
    """Mix two (frames, channels) blocks under per-frame gain vectors."""
    if tail.shape != head.shape:
        raise ValueError(f"shape mismatch {tail.shape} vs {head.shape}")
    return tail * fade_out[:, np.newaxis] + head * fade_in[:, np.newaxis]
