"""Arbitrary-length DFT: naive O(N^2) sum and Bluestein chirp-z.

Both compute the *unnormalized* forward transform
``X[j] = sum_t x[t] exp(-2j*pi*j*t/N)``; callers apply their own scaling.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

# Below this length the direct sum is cheaper than three padded FFTs.
NAIVE_MAX = 64
# Row block for the naive transform so the N x N kernel is never materialized.
_NAIVE_BLOCK = 256


def naive_dft(x) -> np.ndarray:
    x = np.asarray(x, dtype=np.complex128)
    N = x.shape[0]
    if N == 0:
        return x.copy()
    t = np.arange(N, dtype=np.int64)
    out = np.empty(N, dtype=np.complex128)
    for s in range(0, N, _NAIVE_BLOCK):
        j = t[s : s + _NAIVE_BLOCK]
        # reduce j*t mod N in integers so the phase stays accurate for large N
        r = np.outer(j, t) % N
        out[s : s + _NAIVE_BLOCK] = np.exp(r * (-2j * np.pi / N)) @ x
    return out


@lru_cache(maxsize=64)
def _chirp(N: int):
    t = np.arange(N, dtype=np.int64)
    # exp(-i*pi*t^2/N) is periodic in t^2 with period 2N
    w = np.exp((t * t % (2 * N)) * (-1j * np.pi / N))
    M = 1 << int(2 * N - 1).bit_length()
    b = np.zeros(M, dtype=np.complex128)
    b[:N] = np.conj(w)
    b[M - N + 1 :] = np.conj(w[1:][::-1])
    return w, M, np.fft.fft(b)


def bluestein_dft(x) -> np.ndarray:
    """Chirp-z evaluation of the DFT for any length, via a power-of-two convolution."""
    x = np.asarray(x, dtype=np.complex128)
    N = x.shape[0]
    if N <= 1:
        return x.copy()
    w, M, B = _chirp(N)
    a = np.zeros(M, dtype=np.complex128)
    a[:N] = x * w
    conv = np.fft.ifft(np.fft.fft(a) * B)
    return w * conv[:N]


def dft(x, naive_max: int = NAIVE_MAX) -> np.ndarray:
    x = np.asarray(x, dtype=np.complex128)
    if x.shape[0] <= naive_max:
        return naive_dft(x)
    return bluestein_dft(x)
