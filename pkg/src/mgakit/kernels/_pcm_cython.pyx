# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled PCM sample kernels.

Same contract as _pcm_numpy: float64 samples scaled by 2^(bits-1),
encode rounds half away from zero, so outputs are byte-identical across
backends.  Buffers are exchanged as memoryviews; the package shim wraps
them into numpy arrays.
"""

from cython cimport view
from libc.math cimport floor, ceil

NAME = "cython"


def decode(const unsigned char[::1] data, int bits):
    """Interleaved little-endian PCM bytes -> 1-D float64 samples."""
    if bits not in (16, 24, 32):
        raise ValueError(f"unsupported bit depth {bits}")
    cdef Py_ssize_t width = bits // 8
    cdef Py_ssize_t n = data.shape[0] // width
    if data.shape[0] % width:
        raise ValueError(f"{bits}-bit payload length is not a multiple of {width}")
    out_arr = view.array(shape=(max(n, 1),), itemsize=8, format="d")
    cdef double[::1] out = out_arr
    # shift in 64-bit: 1 << 31 would overflow a C int
    cdef double scale = <double>(<long long>1 << (bits - 1))
    cdef Py_ssize_t i
    cdef long long v
    if bits == 16:
        for i in range(n):
            v = data[2 * i] | (data[2 * i + 1] << 8)
            if v >= 0x8000:
                v -= 0x10000
            out[i] = v / scale
    elif bits == 24:
        for i in range(n):
            v = data[3 * i] | (data[3 * i + 1] << 8) | (data[3 * i + 2] << 16)
            if v >= 0x800000:
                v -= 0x1000000
            out[i] = v / scale
    else:
        for i in range(n):
            v = (
                data[4 * i]
                | (data[4 * i + 1] << 8)
                | (data[4 * i + 2] << 16)
                | (<long long>data[4 * i + 3] << 24)
            )
            if v >= 0x80000000:
                v -= 0x100000000
            out[i] = v / scale
    return out_arr[:n]


def encode(const double[::1] samples, int bits):
    """1-D float64 samples -> interleaved little-endian PCM bytes."""
    if bits not in (16, 24):
        raise ValueError(f"unsupported output bit depth {bits}")
    cdef Py_ssize_t n = samples.shape[0]
    cdef Py_ssize_t width = bits // 8
    cdef bytearray buf = bytearray(n * width)
    cdef unsigned char[::1] out = buf
    cdef double scale = <double>(<long long>1 << (bits - 1))
    cdef double scaled
    cdef double limit_hi = scale - 1
    cdef double limit_lo = -scale
    cdef long long v
    cdef Py_ssize_t i
    for i in range(n):
        scaled = samples[i] * scale
        if scaled >= 0:
            scaled = floor(scaled + 0.5)
        else:
            scaled = ceil(scaled - 0.5)
        if scaled > limit_hi:
            scaled = limit_hi
        elif scaled < limit_lo:
            scaled = limit_lo
        v = <long long>scaled
        if bits == 16:
            out[2 * i] = v & 0xFF
            out[2 * i + 1] = (v >> 8) & 0xFF
        else:
            out[3 * i] = v & 0xFF
            out[3 * i + 1] = (v >> 8) & 0xFF
            out[3 * i + 2] = (v >> 16) & 0xFF
    return bytes(buf)


def crossfade(
    const double[:, ::1] tail,
    const double[:, ::1] head,
    const double[::1] fade_out,
    const double[::1] fade_in,
):
    """Mix two (frames, channels) blocks under per-frame gain vectors."""
    if tail.shape[0] != head.shape[0] or tail.shape[1] != head.shape[1]:
        raise ValueError("shape mismatch between tail and head")
    cdef Py_ssize_t n = tail.shape[0]
    cdef Py_ssize_t channels = tail.shape[1]
    out_arr = view.array(
        shape=(max(n, 1), max(channels, 1)), itemsize=8, format="d"
    )
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t i, c
    cdef double g_out, g_in
    for i in range(n):
        g_out = fade_out[i]
        g_in = fade_in[i]
        for c in range(channels):
            out[i, c] = tail[i, c] * g_out + head[i, c] * g_in
    return out_arr[:n, :channels]
