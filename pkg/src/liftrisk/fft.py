"""Iterative radix-2 Cooley-Tukey FFT, vectorised over leading axes."""

from __future__ import annotations

import numpy as np


def next_pow2(n: int) -> int:
    if n < 1:
        raise ValueError("length must be >= 1")
    return 1 << (n - 1).bit_length()


def _bit_reverse(n: int) -> np.ndarray:
    bits = n.bit_length() - 1
    idx = np.arange(n)
    rev = np.zeros(n, dtype=np.intp)
    for b in range(bits):
        rev |= ((idx >> b) & 1) << (bits - 1 - b)
    return rev


def fft(x: np.ndarray) -> np.ndarray:
    """DFT along the last axis; that axis must have power-of-two length.

    Uses the ``exp(-2j*pi*k*n/N)`` sign convention, unnormalised.
    """
    x = np.asarray(x, dtype=complex)
    n = x.shape[-1]
    if n < 1 or n & (n - 1):
        raise ValueError(f"radix-2 FFT needs a power-of-two length, got {n}")
    lead = x.shape[:-1]
    out = x[..., _bit_reverse(n)].reshape(-1, n)
    m = 2
    while m <= n:
        half = m // 2
        twiddle = np.exp(-2j * np.pi * np.arange(half) / m)
        blocks = out.reshape(out.shape[0], n // m, m)
        even = blocks[..., :half]
        odd = blocks[..., half:] * twiddle
        out = np.concatenate((even + odd, even - odd), axis=-1).reshape(-1, n)
        m *= 2
    return out.reshape(*lead, n)


def rfft_padded(x: np.ndarray, n: int | None = None) -> np.ndarray:
    """Zero-pad the last axis to ``n`` (default: next power of two) and return bins 0..n/2."""
    x = np.asarray(x, dtype=float)
    length = x.shape[-1]
    n = next_pow2(length) if n is None else n
    if n < length or n & (n - 1):
        raise ValueError(f"pad length {n} must be a power of two >= {length}")
    if n > length:
        pad = [(0, 0)] * (x.ndim - 1) + [(0, n - length)]
        x = np.pad(x, pad)
    return fft(x)[..., : n // 2 + 1]
