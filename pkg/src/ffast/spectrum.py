"""Sparse spectra, time-domain synthesis and the brute-force DFT oracle.

Normalization: synthesis carries no factor,
``x[p] = sum_l X[l] exp(2j*pi*l*p/n)``, and every forward transform carries
``1/length``. With this choice a length-f DFT of an n/f-subsampled stream
returns plain sums of aliased coefficients.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from functools import lru_cache

import numba
import numpy as np

from .dft import dft, naive_dft

# Largest n for which a dense time buffer may be allocated.
DENSE_CAP = 1 << 24
# oracle_dft switches from the direct sum to chirp-z above this length.
ORACLE_NAIVE_MAX = 4096
# Products l*p stay below 2**63 when n is at most this.
_FAST_MULMOD_MAX = 3037000499
# The split-product fallback in _mulmod is exact below this length.
MAX_N = 1 << 41


class ResourceLimitError(RuntimeError):
    pass


@dataclass(frozen=True)
class SparseSpectrum:
    """k-sparse length-n spectrum stored as sorted locations and complex values."""

    n: int
    locations: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        n = int(self.n)
        if not 1 <= n < MAX_N:
            raise ValueError(f"n must be in [1, 2**41), got {n}")
        loc = np.asarray(self.locations, dtype=np.int64).reshape(-1)
        val = np.asarray(self.values, dtype=np.complex128).reshape(-1)
        if loc.shape != val.shape:
            raise ValueError("locations and values differ in length")
        if loc.size and (loc.min() < 0 or loc.max() >= n):
            raise ValueError(f"locations must lie in [0, {n})")
        order = np.argsort(loc, kind="stable")
        loc, val = loc[order], val[order]
        if loc.size > 1 and np.any(np.diff(loc) == 0):
            raise ValueError("duplicate locations")
        if np.any(val == 0) or not np.all(np.isfinite(val)):
            raise ValueError("values must be finite and non-zero")
        loc.setflags(write=False)
        val.setflags(write=False)
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "locations", loc)
        object.__setattr__(self, "values", val)

    @classmethod
    def from_dict(cls, n: int, entries: dict) -> "SparseSpectrum":
        locs = list(entries)
        return cls(n, np.array(locs, dtype=np.int64), np.array([entries[l] for l in locs], dtype=np.complex128))

    @classmethod
    def empty(cls, n: int) -> "SparseSpectrum":
        return cls(n, np.zeros(0, np.int64), np.zeros(0, np.complex128))

    def as_dict(self) -> dict[int, complex]:
        return {int(l): complex(v) for l, v in zip(self.locations, self.values)}

    @property
    def k(self) -> int:
        return int(self.locations.size)

    def __len__(self):
        return self.k

    def matches(self, other: "SparseSpectrum", rtol: float = 1e-8) -> bool:
        """Same support and values within ``rtol`` (relative to the largest magnitude)."""
        if self.n != other.n or not np.array_equal(self.locations, other.locations):
            return False
        if self.k == 0:
            return True
        scale = max(np.max(np.abs(self.values)), np.max(np.abs(other.values)))
        return bool(np.max(np.abs(self.values - other.values)) <= rtol * scale)


@dataclass(frozen=True)
class TimeSignal:
    """Dense length-n time signal."""

    samples: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=np.complex128).reshape(-1)
        s.setflags(write=False)
        object.__setattr__(self, "samples", s)

    @property
    def n(self) -> int:
        return int(self.samples.shape[0])

    def at(self, positions) -> np.ndarray:
        positions = _check_positions(positions, self.n)
        return self.samples[positions]


@dataclass(frozen=True)
class SpectrumSignal:
    """Lazy time signal backed by a sparse spectrum; samples are synthesized on demand."""

    spectrum: SparseSpectrum

    @property
    def n(self) -> int:
        return self.spectrum.n

    def at(self, positions) -> np.ndarray:
        return synthesize_at(self.spectrum, positions)


@dataclass(frozen=True)
class ValueModel:
    """How non-zero amplitudes are drawn.

    ``unit-phase``: magnitude 1, uniform phase. ``pm-constant``: +c or -c with
    equal probability.
    """

    kind: str = "unit-phase"
    c: float = 10.0

    def __post_init__(self):
        if self.kind not in ("unit-phase", "pm-constant"):
            raise ValueError(f"unknown value model {self.kind!r}")

    def draw(self, rng: np.random.Generator, k: int) -> np.ndarray:
        if self.kind == "unit-phase":
            return np.exp(2j * np.pi * rng.random(k))
        return self.c * rng.choice(np.array([-1.0, 1.0]), size=k).astype(np.complex128)


def _check_positions(positions, n: int) -> np.ndarray:
    pos = np.asarray(positions, dtype=np.int64).reshape(-1)
    if pos.size and (pos.min() < 0 or pos.max() >= n):
        raise ValueError(f"positions must lie in [0, {n})")
    return pos


@lru_cache(maxsize=8)
def _twiddle_tables(n: int):
    """Two-level table of n-th roots of unity: w^r = hi[r >> shift] * lo[r & mask]."""
    shift = max(1, (int(n - 1).bit_length() + 1) // 2)
    lo = np.exp(2j * np.pi * (np.arange(1 << shift, dtype=np.float64) / n))
    hi_idx = np.arange(((n - 1) >> shift) + 1, dtype=np.int64) << shift
    hi = np.exp(2j * np.pi * ((hi_idx % n) / n))
    return hi, lo, shift


@numba.njit(cache=True)
def _mulmod(a, b, n, fast):
    if fast:
        prod = a * b
        q = np.int64(float(a) * float(b) / float(n))
        r = prod - q * n
        while r < 0:
            r += n
        while r >= n:
            r -= n
        return r
    # n < 2**41: split b so each partial product stays below 2**63
    b_hi = b >> 20
    b_lo = b & ((1 << 20) - 1)
    r = (a * b_hi) % n
    r = (r * (1 << 20)) % n
    return (r + (a * b_lo) % n) % n


@numba.njit(cache=True)
def _synth_kernel(locs, vals, pos, n, hi, lo, shift, fast):
    out = np.empty(pos.shape[0], dtype=np.complex128)
    mask = (1 << shift) - 1
    for t in range(pos.shape[0]):
        p = pos[t]
        acc = 0j
        for q in range(locs.shape[0]):
            r = _mulmod(locs[q], p, n, fast)
            acc += vals[q] * (hi[r >> shift] * lo[r & mask])
        out[t] = acc
    return out


def synthesize_at(X: SparseSpectrum, positions) -> np.ndarray:
    """x[p] at the requested positions only; O(k * len(positions)) work."""
    pos = _check_positions(positions, X.n)
    if X.k == 0 or pos.size == 0:
        return np.zeros(pos.size, dtype=np.complex128)
    hi, lo, shift = _twiddle_tables(X.n)
    return _synth_kernel(
        X.locations, X.values, pos, np.int64(X.n), hi, lo, shift, X.n <= _FAST_MULMOD_MAX
    )


def synthesize_full(X: SparseSpectrum, cap: int = DENSE_CAP) -> TimeSignal:
    if X.n > cap:
        raise ResourceLimitError(
            f"n={X.n} exceeds the dense cap {cap}; use synthesize_at / SpectrumSignal instead"
        )
    return TimeSignal(synthesize_at(X, np.arange(X.n, dtype=np.int64)))


def random_sparse_spectrum(n: int, k: int, model: ValueModel | None = None, seed=None) -> SparseSpectrum:
    """k distinct uniformly random locations with values drawn from ``model``.

    ``seed`` may be anything ``np.random.default_rng`` accepts, including a
    Generator. The support is drawn before the values, so
    ``random_support(n, k, seed)`` reproduces it.
    """
    n, k = int(n), int(k)
    if not 0 <= k <= n:
        raise ValueError(f"need 0 <= k <= n, got k={k}, n={n}")
    model = model or ValueModel()
    rng = np.random.default_rng(seed)
    locs = _draw_support(rng, n, k)
    return SparseSpectrum(n, locs, model.draw(rng, k))


def random_support(n: int, k: int, seed=None) -> np.ndarray:
    rng = np.random.default_rng(seed)
    return _draw_support(rng, int(n), int(k))


def _draw_support(rng: np.random.Generator, n: int, k: int) -> np.ndarray:
    return rng.choice(n, size=k, replace=False).astype(np.int64)


def oracle_dft(x: TimeSignal, drop_tol: float = 1e-9) -> SparseSpectrum:
    """Full n-point DFT scaled by 1/n, entries below ``drop_tol * max|X|`` dropped."""
    s = x.samples
    n = s.shape[0]
    X = (naive_dft(s) if n <= ORACLE_NAIVE_MAX else dft(s)) / n
    mag = np.abs(X)
    peak = mag.max() if n else 0.0
    if peak == 0.0:
        return SparseSpectrum.empty(n)
    keep = np.flatnonzero(mag > drop_tol * peak)
    return SparseSpectrum(n, keep, X[keep])


def example_spectrum() -> SparseSpectrum:
    """The 20-point, 5-sparse worked example used throughout the docs and tests."""
    return SparseSpectrum.from_dict(20, {1: 1, 3: 4, 5: 2, 10: 3, 13: 7})


# ---------------------------------------------------------------------------
# CSV formats

def write_spectrum_csv(path, X: SparseSpectrum) -> None:
    with open(path, "w", newline="") as fh:
        fh.write("location,re,im\n")
        for l, v in zip(X.locations, X.values):
            fh.write(f"{int(l)},{float(v.real)!r},{float(v.imag)!r}\n")


def read_spectrum_csv(path, n: int) -> SparseSpectrum:
    locs, vals = [], []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["location", "re", "im"]:
            raise ValueError(f"{path}: expected header 'location,re,im'")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 3:
                raise ValueError(f"{path}:{lineno}: expected 3 fields")
            loc = int(row[0])
            if locs and loc <= locs[-1]:
                raise ValueError(f"{path}:{lineno}: locations must be strictly increasing")
            locs.append(loc)
            vals.append(complex(float(row[1]), float(row[2])))
    return SparseSpectrum(n, np.array(locs, dtype=np.int64), np.array(vals, dtype=np.complex128))


def write_signal_csv(path, x: TimeSignal) -> None:
    with open(path, "w", newline="") as fh:
        fh.write("index,re,im\n")
        for i, v in enumerate(x.samples):
            fh.write(f"{i},{float(v.real)!r},{float(v.imag)!r}\n")


def read_signal_csv(path) -> TimeSignal:
    samples = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["index", "re", "im"]:
            raise ValueError(f"{path}: expected header 'index,re,im'")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 3 or int(row[0]) != len(samples):
                raise ValueError(f"{path}:{lineno}: expected consecutive index rows")
            samples.append(complex(float(row[1]), float(row[2])))
    return TimeSignal(np.array(samples, dtype=np.complex128))
