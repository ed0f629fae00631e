"""Alias graphs: random ensembles, combinatorial peeling, expansion and degree diagnostics."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .crt import are_pairwise_coprime


@dataclass(frozen=True)
class AliasGraph:
    """d-left-regular bipartite graph: variable v sits in check adjacency[v, i] of stage i."""

    k: int
    stage_sizes: tuple[int, ...]
    adjacency: np.ndarray

    def __post_init__(self):
        sizes = tuple(int(f) for f in self.stage_sizes)
        if not sizes or any(f < 1 for f in sizes):
            raise ValueError("stage sizes must be positive")
        adj = np.asarray(self.adjacency, dtype=np.int64).reshape(-1, len(sizes))
        if adj.shape[0] != int(self.k):
            raise ValueError("adjacency row count differs from k")
        if adj.size and (np.any(adj < 0) or np.any(adj >= np.array(sizes))):
            raise ValueError("check index out of range")
        adj.setflags(write=False)
        object.__setattr__(self, "k", int(self.k))
        object.__setattr__(self, "stage_sizes", sizes)
        object.__setattr__(self, "adjacency", adj)

    @property
    def d(self) -> int:
        return len(self.stage_sizes)

    def check_degrees(self, stage: int) -> np.ndarray:
        return np.bincount(self.adjacency[:, stage], minlength=self.stage_sizes[stage])

    def dump_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("variable,stage,check\n")
            for v, row in enumerate(self.adjacency):
                for i, c in enumerate(row):
                    fh.write(f"{v},{i},{int(c)}\n")


def balls_and_bins_graph(k: int, stage_sizes, seed=None) -> AliasGraph:
    """Each variable picks one check per stage uniformly and independently."""
    if k < 0:
        raise ValueError("k must be >= 0")
    rng = np.random.default_rng(seed)
    sizes = [int(f) for f in stage_sizes]
    adj = np.stack([rng.integers(0, f, size=k) for f in sizes], axis=1) if k else np.zeros((0, len(sizes)))
    return AliasGraph(k, tuple(sizes), adj)


def crt_graph(support, n: int, stage_sizes) -> AliasGraph:
    """Variable for location v connects to check v mod f_i in stage i."""
    support = np.asarray(support, dtype=np.int64).reshape(-1)
    sizes = [int(f) for f in stage_sizes]
    if any(f < 1 or n % f for f in sizes):
        raise ValueError(f"every stage size must divide n={n}")
    if support.size and (support.min() < 0 or support.max() >= n):
        raise ValueError(f"support must lie in [0, {n})")
    adj = np.stack([support % f for f in sizes], axis=1) if support.size else np.zeros((0, len(sizes)))
    return AliasGraph(int(support.size), tuple(sizes), adj)


def row_major_labels(g: AliasGraph, factors, width: int) -> AliasGraph:
    """Relabel product-stage checks by their residue tuple.

    Stage i of a cyclic-product design has f_i = factors[i] * ... * factors[i+width-1];
    check c is relabeled to the row-major index of (c mod factors[i], c mod factors[i+1], ...).
    This is a bijection on each stage when the factors are pairwise co-prime.
    """
    factors = [int(p) for p in factors]
    if not are_pairwise_coprime(factors):
        raise ValueError("factors must be pairwise co-prime")
    d = len(factors)
    cols = []
    for i in range(g.d):
        label = np.zeros(g.k, dtype=np.int64)
        for j in range(width):
            p = factors[(i + j) % d]
            label = label * p + g.adjacency[:, i] % p
        cols.append(label)
    adj = np.stack(cols, axis=1) if g.k else g.adjacency
    return AliasGraph(g.k, g.stage_sizes, adj)


def trapping_pair(p1: int, n: int, stage_sizes) -> tuple[int, int]:
    """Two locations sharing every stage residue; exists iff lcm(stage sizes) < n."""
    L = math.lcm(*[int(f) for f in stage_sizes])
    if L >= n:
        raise ValueError("no collision: stage sizes already separate all locations")
    p1 = int(p1) % n
    return p1, (p1 + L) % n


@dataclass
class PeelOutcome:
    decoded_count: int
    residual_variables: int
    iterations: int
    residual: np.ndarray = field(repr=False, default_factory=lambda: np.zeros(0, np.int64))
    peel_order: np.ndarray = field(repr=False, default_factory=lambda: np.zeros(0, np.int64))

    @property
    def success(self) -> bool:
        return self.residual_variables == 0


def peel_graph(g: AliasGraph, max_iters: int = 64, stage_order: str = "ascending") -> PeelOutcome:
    """Iteratively remove variables sitting in degree-1 checks.

    Sweeps and iteration counts mirror the signal decoder: stages in order,
    all single-tons of a stage removed together, one iteration per sweep.
    Each check keeps its live degree and the sum of its live variable ids,
    so a degree-1 check names its variable directly.
    """
    k, d = g.k, g.d
    adj = g.adjacency
    ids = np.arange(k, dtype=np.int64)
    deg = [np.bincount(adj[:, i], minlength=f) for i, f in enumerate(g.stage_sizes)]
    csum = [np.bincount(adj[:, i], weights=ids, minlength=f).astype(np.int64) for i, f in enumerate(g.stage_sizes)]
    alive = np.ones(k, dtype=bool)
    remaining = k
    order = list(range(d)) if stage_order == "ascending" else list(range(d))[::-1]
    peeled = []
    iterations = 0
    for iterations in range(1, max_iters + 1):
        found = 0
        for s in order:
            singles = np.flatnonzero(deg[s] == 1)
            if singles.size == 0:
                continue
            vars_ = csum[s][singles]
            for t in range(d):
                c = adj[vars_, t]
                np.subtract.at(deg[t], c, 1)
                np.subtract.at(csum[t], c, vars_)
            alive[vars_] = False
            peeled.append(vars_)
            found += vars_.size
        remaining -= found
        if remaining == 0 or found == 0:
            break
    residual = np.flatnonzero(alive)
    order_arr = np.concatenate(peeled) if peeled else np.zeros(0, np.int64)
    return PeelOutcome(k - residual.size, int(residual.size), iterations, residual, order_arr)


@dataclass
class ExpanderResult:
    holds: bool
    witness: tuple[int, ...] | None
    exhaustive: bool
    subsets_checked: int
    # with sampling: a bad-subset fraction above this would have been seen with 95% confidence
    miss_bound: float = 0.0


def _expands(adj_rows: np.ndarray) -> bool:
    s = adj_rows.shape[0]
    best = max(np.unique(adj_rows[:, i]).size for i in range(adj_rows.shape[1]))
    return 2 * best > s


def expander_check(g: AliasGraph, max_set_size: int, samples: int = 100_000, seed=0,
                   exhaustive_limit: int = 200_000) -> ExpanderResult:
    """Check max_i |N_i(S)| > |S|/2 for all variable subsets with 1 <= |S| <= max_set_size.

    Enumerates every subset when there are at most ``exhaustive_limit`` of
    them, otherwise draws ``samples`` uniform subsets per size.
    """
    top = min(int(max_set_size), g.k)
    total = sum(math.comb(g.k, s) for s in range(1, top + 1))
    adj = g.adjacency
    if total <= exhaustive_limit:
        checked = 0
        for s in range(1, top + 1):
            for S in combinations(range(g.k), s):
                checked += 1
                if not _expands(adj[list(S)]):
                    return ExpanderResult(False, S, True, checked)
        return ExpanderResult(True, None, True, checked)
    rng = np.random.default_rng(seed)
    checked = 0
    for s in range(1, top + 1):
        draws = min(samples, math.comb(g.k, s))
        for _ in range(draws):
            S = np.sort(rng.choice(g.k, size=s, replace=False))
            checked += 1
            if not _expands(adj[S]):
                return ExpanderResult(False, tuple(int(v) for v in S), False, checked)
    return ExpanderResult(True, None, False, checked, miss_bound=3.0 / samples)


@dataclass
class DegreeReport:
    histograms: list[np.ndarray]
    means: list[float]
    variances: list[float]
    poisson_means: list[float]
    max_edge_deviation: float


def empirical_degree_distribution(g: AliasGraph) -> DegreeReport:
    """Per-stage check-degree histograms against the Poisson(k/f) limit.

    The edge-perspective fraction of edges landing in degree-i checks is
    compared with lam^(i-1) exp(-lam) / (i-1)!, lam = k/f.
    """
    hists, means, vars_, lams = [], [], [], []
    dev = 0.0
    for i, f in enumerate(g.stage_sizes):
        deg = g.check_degrees(i)
        h = np.bincount(deg)
        lam = g.k / f
        hists.append(h)
        means.append(float(deg.mean()))
        vars_.append(float(deg.var()))
        lams.append(lam)
        if g.k:
            degrees = np.arange(h.size)
            edge_frac = degrees * h / g.k
            top = max(h.size, int(lam + 10 * math.sqrt(lam) + 10))
            j = np.arange(1, top)
            rho = np.exp((j - 1) * math.log(lam) - lam - np.array([math.lgamma(x) for x in j]))
            emp = np.zeros(top)
            emp[: edge_frac.size] = edge_frac
            dev = max(dev, float(np.max(np.abs(emp[1:] - rho))))
    return DegreeReport(hists, means, vars_, lams, dev)


@dataclass
class EnsembleReport:
    P: int
    tuples: int
    all_equal_P: bool
    min_preimages: int
    max_preimages: int
    chi2: float | None = None
    p_value: float | None = None


def _tuple_index(values: np.ndarray, sizes) -> np.ndarray:
    idx = np.zeros(values.shape, dtype=np.int64)
    for f in sizes:
        idx = idx * f + values % f
    return idx


def ensemble_equivalence_check(k: int, n: int, stage_sizes, trials: int = 0, seed=None,
                               exhaustive_cap: int = 1 << 24) -> EnsembleReport:
    """Every residue tuple over co-prime stage sizes has exactly n / prod(f) preimages.

    With ``trials`` > 0, also runs a chi-square test that the neighbor tuple of
    a CRT graph built on a uniform random k-support is uniform over all tuples.
    """
    sizes = [int(f) for f in stage_sizes]
    if not are_pairwise_coprime(sizes):
        raise ValueError("stage sizes must be pairwise co-prime")
    prod = math.prod(sizes)
    if n % prod:
        raise ValueError(f"product of stage sizes {prod} does not divide n={n}")
    if n > exhaustive_cap:
        raise ValueError(f"n={n} above the exhaustive cap {exhaustive_cap}")
    P = n // prod
    counts = np.bincount(_tuple_index(np.arange(n, dtype=np.int64), sizes), minlength=prod)
    report = EnsembleReport(P, prod, bool(np.all(counts == P)), int(counts.min()), int(counts.max()))
    if trials > 0 and k > 0:
        from scipy.stats import chisquare

        from .spectrum import random_support

        ss = np.random.SeedSequence(seed)
        hits = np.zeros(prod, dtype=np.int64)
        for child in ss.spawn(trials):
            support = random_support(n, k, np.random.default_rng(child))
            hits += np.bincount(_tuple_index(support, sizes), minlength=prod)
        res = chisquare(hits)
        report.chi2, report.p_value = float(res.statistic), float(res.pvalue)
    return report
