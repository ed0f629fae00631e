"""Subsampling front-end: d stages, each with an unshifted and a 1-advanced delay chain.

Stage i reads ``f_i`` samples at period ``n / f_i`` from both chains and takes
a length-``f_i`` DFT (scaled by ``1/f_i``) of each stream. Bin j of stage i is
then the 2-vector

    y = (sum X[l], sum X[l] * exp(2j*pi*l/n))   over l == j (mod f_i).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .dft import dft

# Two delay chains per stage: plain and advanced by one sample.
SHIFTS = (0, 1)


@dataclass(frozen=True)
class Stage:
    f: int
    period: int
    shifts: tuple[int, ...] = SHIFTS


@dataclass(frozen=True)
class FrontendPlan:
    n: int
    stages: tuple[Stage, ...]
    P: int = 1

    def __post_init__(self):
        if len(self.stages) < 2:
            raise ValueError("a plan needs at least two stages")
        for st in self.stages:
            if st.f < 1 or st.period * st.f != self.n:
                raise ValueError(f"stage size {st.f} does not divide n={self.n}")
            if tuple(st.shifts) != SHIFTS:
                raise ValueError("only the (0, 1) delay-chain pair is supported")

    @classmethod
    def from_sizes(cls, n: int, sizes, P: int = 1) -> "FrontendPlan":
        n = int(n)
        stages = []
        for f in sizes:
            f = int(f)
            if f < 1 or n % f:
                raise ValueError(f"stage size {f} does not divide n={n}")
            stages.append(Stage(f, n // f))
        return cls(n, tuple(stages), int(P))

    @property
    def d(self) -> int:
        return len(self.stages)

    @property
    def sizes(self) -> list[int]:
        return [st.f for st in self.stages]

    def sample_indices(self) -> np.ndarray:
        """Sorted distinct time indices read by all delay chains."""
        parts = [
            (np.arange(st.f, dtype=np.int64) * st.period + s) % self.n
            for st in self.stages
            for s in st.shifts
        ]
        return np.unique(np.concatenate(parts))

    @property
    def m(self) -> int:
        return int(self.sample_indices().size)

    # key-value text serialization
    def dumps(self) -> str:
        lines = [f"n={self.n}", f"d={self.d}", f"P={self.P}"]
        for i, st in enumerate(self.stages):
            lines.append(f"stage.{i}.f={st.f}")
            lines.append(f"stage.{i}.period={st.period}")
        return "\n".join(lines) + "\n"

    @classmethod
    def loads(cls, text: str) -> "FrontendPlan":
        kv = parse_key_values(text)
        try:
            n, d = int(kv["n"]), int(kv["d"])
            sizes = [int(kv[f"stage.{i}.f"]) for i in range(d)]
            periods = [int(kv.get(f"stage.{i}.period", n // f)) for i, f in enumerate(sizes)]
        except KeyError as exc:
            raise ValueError(f"plan is missing key {exc.args[0]}") from None
        plan = cls.from_sizes(n, sizes, int(kv.get("P", 1)))
        if [st.period for st in plan.stages] != periods:
            raise ValueError("stage periods inconsistent with n / f")
        return plan


def parse_key_values(text: str) -> dict[str, str]:
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected key=value, got {raw!r}")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out


@dataclass
class ObservationSet:
    """Per-stage arrays of shape (f_i, 2): column 0 from shift 0, column 1 from shift 1."""

    bins: list[np.ndarray]
    m: int = 0
    sample_indices: np.ndarray | None = field(default=None, repr=False)

    def copy(self) -> "ObservationSet":
        return ObservationSet([b.copy() for b in self.bins], self.m, self.sample_indices)

    def observation(self, stage: int, j: int) -> np.ndarray:
        return self.bins[stage][j]

    def dump_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["stage", "bin", "re0", "im0", "re1", "im1"])
            for i, b in enumerate(self.bins):
                for j, (y0, y1) in enumerate(b):
                    w.writerow([i, j, repr(y0.real), repr(y0.imag), repr(y1.real), repr(y1.imag)])


def subsample(x, period: int, shift: int = 0) -> np.ndarray:
    """output[t] = x[(t*period + shift) mod n] for t < n/period.

    ``x`` is anything with ``n`` and ``at(positions)``: a dense TimeSignal or
    a spectrum-backed lazy view.
    """
    n = x.n
    period, shift = int(period), int(shift)
    if period < 1 or n % period:
        raise ValueError(f"period {period} does not divide n={n}")
    if not 0 <= shift < n:
        raise ValueError(f"shift {shift} outside [0, {n})")
    idx = (np.arange(n // period, dtype=np.int64) * period + shift) % n
    return x.at(idx)


def short_dft(stream) -> np.ndarray:
    """Length-f DFT scaled by 1/f; any f >= 1."""
    stream = np.asarray(stream, dtype=np.complex128)
    f = stream.shape[0]
    if f < 1:
        raise ValueError("empty stream")
    return dft(stream) / f


def compute_observations(x, plan: FrontendPlan) -> ObservationSet:
    if x.n != plan.n:
        raise ValueError(f"signal length {x.n} does not match plan n={plan.n}")
    # every index is read once, then scattered to the chains that use it
    idx = plan.sample_indices()
    samples = x.at(idx)
    bins = []
    for st in plan.stages:
        streams = []
        for s in st.shifts:
            want = (np.arange(st.f, dtype=np.int64) * st.period + s) % plan.n
            streams.append(short_dft(samples[np.searchsorted(idx, want)]))
        bins.append(np.stack(streams, axis=1))
    return ObservationSet(bins, int(idx.size), idx)


def expected_observations(locations, values, plan: FrontendPlan) -> ObservationSet:
    """Bin observations predicted directly from a spectrum, without sampling.

    Used for re-encoding checks and as the independent side of the aliasing
    identity.
    """
    locs = np.asarray(locations, dtype=np.int64)
    vals = np.asarray(values, dtype=np.complex128)
    shifted = vals * np.exp(2j * np.pi * (locs / plan.n))
    bins = []
    for st in plan.stages:
        b = np.zeros((st.f, 2), dtype=np.complex128)
        q = locs % st.f
        np.add.at(b[:, 0], q, vals)
        np.add.at(b[:, 1], q, shifted)
        bins.append(b)
    return ObservationSet(bins, 0)
