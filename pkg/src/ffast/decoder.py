"""Ratio-test bin classification and the iterative peeling decoder."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .frontend import FrontendPlan, ObservationSet, compute_observations, expected_observations
from .spectrum import SparseSpectrum, SpectrumSignal


class BinKind(str, Enum):
    ZERO = "zero-ton"
    SINGLE = "single-ton"
    MULTI = "multi-ton"


_ZERO, _SINGLE, _MULTI = 0, 1, 2
_KINDS = {_ZERO: BinKind.ZERO, _SINGLE: BinKind.SINGLE, _MULTI: BinKind.MULTI}


@dataclass(frozen=True)
class DecoderConfig:
    """Decoder limits and tolerances.

    zero_energy_tol: a bin is a zero-ton when its energy is at most this
        fraction of the largest bin energy its stage had when decoding began.
    singleton_residual_tol: relative misfit allowed between a bin and the
        single exponential the ratio test proposes for it.
    angle_tol: allowed ratio-test phase error as a fraction of a full turn,
        i.e. the location estimate may sit up to ``angle_tol * n`` away from
        an integer.
    """

    max_iterations: int = 64
    zero_energy_tol: float = 1e-18
    singleton_residual_tol: float = 1e-11
    angle_tol: float = 1e-6
    reencode_tol: float = 1e-9
    stage_order: str = "ascending"

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        for name in ("zero_energy_tol", "singleton_residual_tol", "angle_tol", "reencode_tol"):
            v = getattr(self, name)
            if not 0.0 < v < 1.0:
                raise ValueError(f"{name} must be in (0, 1), got {v}")
        if self.stage_order not in ("ascending", "descending"):
            raise ValueError("stage_order must be 'ascending' or 'descending'")


@dataclass(frozen=True)
class BinVerdict:
    kind: BinKind
    location: int | None = None
    value: complex | None = None
    raw_location: float | None = None


@dataclass
class DecodeReport:
    spectrum: SparseSpectrum
    status: str
    iterations: int
    residual_bins: int
    peel_order: list[int]
    m: int = 0
    exact: bool | None = None
    history: list[int] = field(default_factory=list)
    reencode_error: float | None = None

    @property
    def success(self) -> bool:
        return self.status == "success"

    def summary_line(self) -> str:
        return f"{self.status},{self.iterations},{self.residual_bins},{self.m}"

    def write(self, spectrum_path, summary_path) -> None:
        from .spectrum import write_spectrum_csv

        write_spectrum_csv(spectrum_path, self.spectrum)
        with open(summary_path, "w") as fh:
            fh.write("status,iterations,residual_bins,m\n")
            fh.write(self.summary_line() + "\n")


def raw_location(y, n: int):
    """Ratio-test location estimate (n/2pi) * arg(y1 * conj(y0)), mapped into [0, n)."""
    y = np.asarray(y, dtype=np.complex128)
    ang = np.angle(y[..., 1] * np.conj(y[..., 0]))
    ang = np.where(ang < 0, ang + 2 * np.pi, ang)
    return ang * (n / (2 * np.pi))


def _classify(ys: np.ndarray, n: int, f: int, bin_idx: np.ndarray, cfg: DecoderConfig, ref_energy: float):
    """Vectorized ratio test over rows of ``ys`` (shape (b, 2)). Returns (kind, p, v, lhat)."""
    y0, y1 = ys[:, 0], ys[:, 1]
    energy = (y0 * y0.conj()).real + (y1 * y1.conj()).real
    kind = np.full(ys.shape[0], _MULTI, dtype=np.int8)
    zero = energy <= cfg.zero_energy_tol * ref_energy
    kind[zero] = _ZERO

    lhat = raw_location(ys, n)
    rounded = np.rint(lhat)
    p = rounded.astype(np.int64) % n
    norm = np.sqrt(energy)
    tol = cfg.singleton_residual_tol * norm
    on_grid = np.abs(lhat - rounded) <= cfg.angle_tol * n
    same_mag = np.abs(np.abs(y1) - np.abs(y0)) <= tol
    in_bin = (p % f) == bin_idx
    misfit = np.abs(y1 - y0 * np.exp(2j * np.pi * (p / n)))
    fits = misfit <= tol
    single = ~zero & on_grid & same_mag & in_bin & fits & (np.abs(y0) > 0)
    kind[single] = _SINGLE
    return kind, p, y0.copy(), lhat


def classify_bin(y, n: int, stage_f: int, bin_index: int, cfg: DecoderConfig | None = None,
                 reference_energy: float = 1.0) -> BinVerdict:
    cfg = cfg or DecoderConfig()
    ys = np.asarray(y, dtype=np.complex128).reshape(1, 2)
    kind, p, v, lhat = _classify(ys, int(n), int(stage_f), np.array([bin_index]), cfg, reference_energy)
    k = _KINDS[int(kind[0])]
    if k is BinKind.SINGLE:
        return BinVerdict(k, int(p[0]), complex(v[0]), float(lhat[0]))
    if k is BinKind.MULTI:
        return BinVerdict(k, raw_location=float(lhat[0]))
    return BinVerdict(k)


def peel_contribution(obs: ObservationSet, p, v, plan: FrontendPlan) -> None:
    """Subtract v * (1, exp(2j*pi*p/n)) from bin p mod f_s of every stage, in place.

    ``p`` and ``v`` may be arrays, in which case all contributions are removed.
    """
    p = np.atleast_1d(np.asarray(p, dtype=np.int64))
    v = np.atleast_1d(np.asarray(v, dtype=np.complex128))
    if p.size and (p.min() < 0 or p.max() >= plan.n):
        raise ValueError("peel location out of range")
    contrib = np.stack([v, v * np.exp(2j * np.pi * (p / plan.n))], axis=1)
    for st, b in zip(plan.stages, obs.bins):
        q = p % st.f
        np.subtract.at(b[:, 0], q, contrib[:, 0])
        np.subtract.at(b[:, 1], q, contrib[:, 1])


def _stage_energy(b: np.ndarray) -> np.ndarray:
    return (b * b.conj()).real.sum(axis=1)


def decode(obs: ObservationSet, plan: FrontendPlan, cfg: DecoderConfig | None = None) -> DecodeReport:
    """Peel single-tons stage by stage until every bin is empty or a sweep finds nothing.

    Single-tons of one stage always sit in distinct bins and never touch other
    bins of that stage, so classifying a whole stage at once and peeling its
    single-tons together matches a bin-by-bin sweep exactly.
    """
    cfg = cfg or DecoderConfig()
    original = obs
    obs = obs.copy()
    n = plan.n
    ref = [float(_stage_energy(b).max()) if b.size else 0.0 for b in obs.bins]
    bin_idx = [np.arange(st.f) for st in plan.stages]
    order = list(range(plan.d))
    if cfg.stage_order == "descending":
        order.reverse()

    estimate: dict[int, complex] = {}
    peel_order: list[int] = []
    history: list[int] = []
    status = "stalled"
    iterations = 0
    nonzero = sum(int(b.shape[0]) for b in obs.bins)
    for iterations in range(1, cfg.max_iterations + 1):
        found = 0
        for s in order:
            st = plan.stages[s]
            kind, p, v, _ = _classify(obs.bins[s], n, st.f, bin_idx[s], cfg, ref[s])
            hit = np.flatnonzero(kind == _SINGLE)
            if hit.size == 0:
                continue
            ps, vs = p[hit], v[hit]
            peel_contribution(obs, ps, vs, plan)
            for pi, vi in zip(ps.tolist(), vs.tolist()):
                if pi in estimate:
                    estimate[pi] += vi
                else:
                    estimate[pi] = vi
                    peel_order.append(pi)
            found += hit.size
        nonzero = sum(
            int(np.count_nonzero(_stage_energy(b) > cfg.zero_energy_tol * r)) for b, r in zip(obs.bins, ref)
        )
        history.append(nonzero)
        if nonzero == 0:
            status = "success"
            break
        if found == 0:
            break

    # a false single-ton that later peels back leaves a round-off remnant; drop anything
    # that would count as an empty bin on its own
    floor = cfg.zero_energy_tol * max(ref, default=0.0)
    estimate = {p: v for p, v in estimate.items() if v != 0 and 2 * abs(v) ** 2 > floor}
    spectrum = SparseSpectrum.from_dict(n, estimate) if estimate else SparseSpectrum.empty(n)
    reencode_error = None
    if status == "success":
        predicted = expected_observations(spectrum.locations, spectrum.values, plan)
        scale = max((float(np.abs(b).max()) for b in original.bins if b.size), default=0.0)
        reencode_error = max(
            (float(np.abs(a - b).max()) for a, b in zip(predicted.bins, original.bins) if a.size), default=0.0
        )
        if reencode_error > cfg.reencode_tol * max(scale, np.finfo(float).tiny):
            status = "stalled"
    return DecodeReport(
        spectrum=spectrum,
        status=status,
        iterations=iterations,
        residual_bins=nonzero,
        peel_order=peel_order,
        m=original.m,
        history=history,
        reencode_error=reencode_error,
    )


def full_pipeline(source, plan: FrontendPlan, cfg: DecoderConfig | None = None) -> DecodeReport:
    """Front-end followed by decode.

    ``source`` is a SparseSpectrum (synthesized lazily, and used as ground
    truth for the ``exact`` flag), a SpectrumSignal, or a dense TimeSignal.
    """
    truth = None
    if isinstance(source, SparseSpectrum):
        truth = source
        source = SpectrumSignal(source)
    elif isinstance(source, SpectrumSignal):
        truth = source.spectrum
    obs = compute_observations(source, plan)
    report = decode(obs, plan, cfg)
    if truth is not None:
        report.exact = report.success and report.spectrum.matches(truth, rtol=1e-8)
    return report
