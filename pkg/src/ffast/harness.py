"""Monte-Carlo trial runners: seeded per trial, optionally parallel, order-independent."""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .decoder import DecoderConfig, full_pipeline
from .frontend import FrontendPlan
from .graphs import crt_graph, peel_graph
from .spectrum import (
    DENSE_CAP,
    ResourceLimitError,
    SparseSpectrum,
    ValueModel,
    oracle_dft,
    random_sparse_spectrum,
    random_support,
    synthesize_full,
)

log = logging.getLogger("ffast")

SWEEP_HEADER = "eta,k,n,d,trials,successes,mean_iterations,mean_residual_on_failure"


def trial_rng(master_seed: int, k: int, trial: int) -> np.random.Generator:
    """Independent stream per (master seed, k, trial); the same in every mode."""
    return np.random.default_rng(np.random.SeedSequence([int(master_seed), int(k), int(trial)]))


@dataclass(frozen=True)
class TrialResult:
    trial: int
    success: bool
    iterations: int
    residual: int
    # decoder status; a "success" that does not match the truth counts as a failure above
    status: str = ""


def unrecovered(truth: SparseSpectrum, estimate: SparseSpectrum, rtol: float = 1e-8) -> int:
    """Number of true coefficients missing from the estimate or recovered with the wrong value."""
    est = estimate.as_dict()
    scale = float(np.max(np.abs(truth.values))) if truth.k else 1.0
    missing = 0
    for l, v in zip(truth.locations.tolist(), truth.values.tolist()):
        w = est.get(l)
        if w is None or abs(w - v) > rtol * scale:
            missing += 1
    return missing


def signal_trial(plan: FrontendPlan, k: int, seed: int, trial: int, model: ValueModel,
                 cfg: DecoderConfig) -> TrialResult:
    X = random_sparse_spectrum(plan.n, k, model, trial_rng(seed, k, trial))
    report = full_pipeline(X, plan, cfg)
    return TrialResult(trial, bool(report.exact), report.iterations, unrecovered(X, report.spectrum), report.status)


def graph_trial(plan: FrontendPlan, k: int, seed: int, trial: int, max_iters: int) -> TrialResult:
    support = random_support(plan.n, k, trial_rng(seed, k, trial))
    out = peel_graph(crt_graph(support, plan.n, plan.sizes), max_iters)
    return TrialResult(trial, out.success, out.iterations, out.residual_variables, "success" if out.success else "stalled")


def _run_chunk(args) -> list[TrialResult]:
    mode, plan, k, seed, trials, model, cfg = args
    if mode == "graph":
        return [graph_trial(plan, k, seed, t, cfg.max_iterations) for t in trials]
    return [signal_trial(plan, k, seed, t, model, cfg) for t in trials]


def run_trials(plan: FrontendPlan, k: int, trials: int, seed: int = 0, mode: str = "signal",
               model: ValueModel | None = None, cfg: DecoderConfig | None = None,
               jobs: int = 1) -> list[TrialResult]:
    """Results for trials 0..trials-1, in trial order whatever the job count."""
    if mode not in ("signal", "graph"):
        raise ValueError(f"unknown mode {mode!r}")
    if trials < 1:
        raise ValueError("trials must be >= 1")
    model = model or ValueModel()
    cfg = cfg or DecoderConfig()
    if jobs <= 1:
        return _run_chunk((mode, plan, k, seed, range(trials), model, cfg))
    size = max(1, math.ceil(trials / (4 * jobs)))
    chunks = [range(s, min(trials, s + size)) for s in range(0, trials, size)]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        parts = pool.map(_run_chunk, [(mode, plan, k, seed, c, model, cfg) for c in chunks])
        results = [r for part in parts for r in part]
    return sorted(results, key=lambda r: r.trial)


@dataclass(frozen=True)
class SweepRow:
    eta: float
    k: int
    n: int
    d: int
    trials: int
    successes: int
    mean_iterations: float
    mean_residual_on_failure: float
    max_iterations: int = 0

    @classmethod
    def from_results(cls, plan: FrontendPlan, k: int, results: list[TrialResult]) -> "SweepRow":
        ok = [r for r in results if r.success]
        bad = [r for r in results if not r.success]
        eta = sum(plan.sizes) / (plan.d * k) if k else math.inf
        return cls(
            eta=eta,
            k=k,
            n=plan.n,
            d=plan.d,
            trials=len(results),
            successes=len(ok),
            mean_iterations=float(np.mean([r.iterations for r in ok])) if ok else math.nan,
            mean_residual_on_failure=float(np.mean([r.residual for r in bad])) if bad else math.nan,
            max_iterations=max((r.iterations for r in ok), default=0),
        )

    @property
    def failure_rate(self) -> float:
        return 1.0 - self.successes / self.trials

    def csv(self) -> str:
        return (
            f"{self.eta:.6f},{self.k},{self.n},{self.d},{self.trials},{self.successes},"
            f"{self.mean_iterations:.4f},{self.mean_residual_on_failure:.4f}"
        )


def sweep(plan: FrontendPlan, ks, trials: int, seed: int = 0, mode: str = "signal",
          model: ValueModel | None = None, cfg: DecoderConfig | None = None, jobs: int = 1) -> list[SweepRow]:
    rows = []
    for k in ks:
        res = run_trials(plan, int(k), trials, seed, mode, model, cfg, jobs)
        row = SweepRow.from_results(plan, int(k), res)
        log.info("k=%d successes=%d/%d max_iterations=%d", row.k, row.successes, row.trials, row.max_iterations)
        rows.append(row)
    return rows


def format_sweep(rows) -> str:
    return SWEEP_HEADER + "\n" + "".join(r.csv() + "\n" for r in rows)


@dataclass
class VerifyReport:
    trials: int
    successes: int
    support_mismatches: int
    max_value_error: float
    failed_trials: list[int]

    @property
    def success_rate(self) -> float:
        return self.successes / self.trials if self.trials else 1.0

    def csv(self) -> str:
        return (
            "trials,successes,support_mismatches,max_value_error\n"
            f"{self.trials},{self.successes},{self.support_mismatches},{self.max_value_error!r}\n"
        )


def verify(plan: FrontendPlan, k: int, trials: int, seed: int = 0, model: ValueModel | None = None,
           cfg: DecoderConfig | None = None) -> VerifyReport:
    """Decode dense signals and compare every success against the full-length DFT oracle.

    The decoder sees only the dense time samples, never the generating
    spectrum. Value error is relative to the oracle's largest magnitude.
    """
    if plan.n > DENSE_CAP:
        raise ResourceLimitError(f"n={plan.n} exceeds dense cap {DENSE_CAP}")
    model = model or ValueModel()
    successes = mismatches = 0
    worst = 0.0
    failed = []
    for t in range(trials):
        X = random_sparse_spectrum(plan.n, k, model, trial_rng(seed, k, t))
        x = synthesize_full(X)
        report = full_pipeline(x, plan, cfg)
        if not report.success:
            failed.append(t)
            continue
        successes += 1
        ref = oracle_dft(x)
        if not np.array_equal(ref.locations, report.spectrum.locations):
            mismatches += 1
            continue
        if ref.k:
            err = float(np.max(np.abs(ref.values - report.spectrum.values)) / np.max(np.abs(ref.values)))
            worst = max(worst, err)
    return VerifyReport(trials, successes, mismatches, worst, failed)
