"""Density evolution for d-left-regular alias graphs and its convergence threshold."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

BISECTION_BRACKET = (0.05, 2.5)
DEFAULT_ITERATIONS = 10_000

# Dense grid over (0, 1]: log-spaced near zero, where d=2 is decided, then linear.
_GRID = np.concatenate([np.logspace(-14, -3, 2000, endpoint=False), np.linspace(1e-3, 1.0, 200_001)])


@dataclass(frozen=True)
class DensityEvolutionParams:
    eta: float
    d: int
    iterations: int = DEFAULT_ITERATIONS

    def __post_init__(self):
        if not self.eta > 0:
            raise ValueError("eta must be positive")
        if self.d < 2:
            raise ValueError("d must be >= 2")
        if self.iterations < 0:
            raise ValueError("iterations must be >= 0")


def _step(p, eta: float, d: int):
    return (-np.expm1(-p / eta)) ** (d - 1)


def density_trace(params: DensityEvolutionParams) -> np.ndarray:
    """p_0 = 1, p_1, ..., p_iterations."""
    out = np.empty(params.iterations + 1)
    p = 1.0
    out[0] = p
    for j in range(1, params.iterations + 1):
        p = float(_step(p, params.eta, params.d))
        out[j] = p
    return out


def density_evolution(params: DensityEvolutionParams) -> float:
    """Undecoded-edge probability after exactly ``params.iterations`` rounds."""
    p = 1.0
    for _ in range(params.iterations):
        p = float(_step(p, params.eta, params.d))
        if p == 0.0:
            break
    return p


def de_converges(eta: float, d: int) -> bool:
    """True when the recursion has no fixed point in (0, 1], i.e. p_j -> 0.

    Decided on the map itself rather than on a finite iterate: at d = 2 the
    iterates approach 0 only algebraically near the threshold, so any fixed
    iteration cutoff biases the estimate upward.
    """
    return bool(np.all(_step(_GRID, eta, d) < _GRID))


def de_converges_iterate(eta: float, d: int, iterations: int = DEFAULT_ITERATIONS, cutoff: float = 1e-6) -> bool:
    """Finite-iterate criterion: p_iterations < cutoff."""
    return density_evolution(DensityEvolutionParams(eta, d, iterations)) < cutoff


def de_threshold(d: int, tol: float = 1e-6, criterion=de_converges) -> float:
    """Smallest eta for which density evolution converges, by bisection."""
    if d < 2:
        raise ValueError("d must be >= 2")
    if not tol > 0:
        raise ValueError("tol must be positive")
    lo, hi = BISECTION_BRACKET
    if not criterion(hi, d):
        raise RuntimeError(f"no convergence at eta={hi} for d={d}")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if criterion(mid, d):
            hi = mid
        else:
            lo = mid
    return hi


def threshold_table(ds=range(2, 10), tol: float = 1e-6) -> list[tuple[int, float, float]]:
    """Rows (d, eta*, d * eta*)."""
    rows = []
    for d in ds:
        eta = de_threshold(d, tol)
        rows.append((d, eta, d * eta))
    return rows


def write_trace_csv(path, trace) -> None:
    with open(path, "w") as fh:
        fh.write("j,p_j\n")
        for j, p in enumerate(trace):
            fh.write(f"{j},{float(p)!r}\n")
