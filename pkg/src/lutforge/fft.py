"""Mixed-radix FFT with a Bluestein fallback for large prime lengths.

Transforms act along one axis of an arbitrary batch. Composite lengths are
split by decimation in time using a radix of 8, 4 or the smallest prime
factor; each radix-p butterfly is one dense p x p matrix product over the
whole batch. Lengths up to ``_DIRECT_MAX`` are done as a dense DFT, and
prime lengths above it go through Bluestein's chirp-z convolution on a
power-of-two grid.

The forward transform is unnormalized, the inverse carries the 1/n factor.
"""

from functools import lru_cache

import numpy as np

_DIRECT_MAX = 32


def _smallest_factor(n):
    if n % 2 == 0:
        return 2
    f = 3
    while f * f <= n:
        if n % f == 0:
            return f
        f += 2
    return n


def _radix(n):
    for p in (8, 4):
        if n % p == 0 and n > p:
            return p
    return _smallest_factor(n)


@lru_cache(maxsize=None)
def _dft_matrix(n):
    k = np.arange(n)
    # reduce the exponent mod n before scaling so large products stay exact
    return np.exp(-2j * np.pi * (np.outer(k, k) % n) / n)


@lru_cache(maxsize=None)
def _twiddles(p, m):
    n = p * m
    return np.exp(-2j * np.pi * (np.outer(np.arange(p), np.arange(m)) % n) / n)


@lru_cache(maxsize=None)
def _bluestein_plan(n):
    size = 1 << (2 * n - 2).bit_length()
    k = np.arange(n)
    chirp = np.exp(-1j * np.pi * ((k * k) % (2 * n)) / n)
    kernel = np.zeros(size, dtype=complex)
    kernel[:n] = np.conj(chirp)
    kernel[size - n + 1:] = np.conj(chirp[1:][::-1])
    return size, chirp, _fft_last(kernel[None])[0]


def _fft_last(x):
    """Forward FFT along the last axis of a 2D (batch, n) complex array."""
    batch, n = x.shape
    if n == 1:
        return x.copy()
    if n <= _DIRECT_MAX:
        return x @ _dft_matrix(n)  # symmetric matrix
    p = _radix(n)
    if p == n:
        return _bluestein(x)
    m = n // p
    # x[j * p + r] -> subsequence r, element j
    sub = x.reshape(batch, m, p).transpose(0, 2, 1).reshape(batch * p, m)
    y = _fft_last(sub).reshape(batch, p, m) * _twiddles(p, m)
    # X[q * m + k] = sum_r y[r, k] * W_p^(r q)
    y = y.transpose(1, 0, 2).reshape(p, batch * m)
    out = _dft_matrix(p) @ y
    return out.reshape(p, batch, m).transpose(1, 0, 2).reshape(batch, n)


def _bluestein(x):
    batch, n = x.shape
    size, chirp, kernel_f = _bluestein_plan(n)
    a = np.zeros((batch, size), dtype=complex)
    a[:, :n] = x * chirp
    conv = _ifft_last(_fft_last(a) * kernel_f)
    return conv[:, :n] * chirp


def _ifft_last(x):
    return np.conj(_fft_last(np.conj(x))) / x.shape[-1]


def _along_axis(func, x, axis):
    x = np.asarray(x, dtype=complex)
    moved = np.moveaxis(x, axis, -1)
    shape = moved.shape
    flat = np.ascontiguousarray(moved).reshape(-1, shape[-1])
    return np.moveaxis(func(flat).reshape(shape), -1, axis)


def fft(x, axis=-1):
    """Unnormalized forward DFT of ``x`` along ``axis``."""
    return _along_axis(_fft_last, x, axis)


def ifft(x, axis=-1):
    """Inverse DFT (with 1/n) of ``x`` along ``axis``."""
    return _along_axis(_ifft_last, x, axis)


def fft2(x, axes=(0, 1)):
    return fft(fft(x, axes[1]), axes[0])


def ifft2(x, axes=(0, 1)):
    return ifft(ifft(x, axes[1]), axes[0])
