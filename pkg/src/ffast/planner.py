"""Front-end designs for the very-sparse and less-sparse regimes."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .crt import are_pairwise_coprime, cyclic_products, generate_coprime_set
from .frontend import FrontendPlan

# Minimum bins-per-coefficient ratio for density evolution to converge, by stage count.
ETA_THRESHOLD = {2: 1.0000, 3: 0.4073, 4: 0.3237, 5: 0.2850, 6: 0.2616, 7: 0.2456, 8: 0.2336, 9: 0.2244}
# A plan is refused when its realized ratio drops this far below the threshold.
ETA_SLACK = 0.01


class PlanRefused(ValueError):
    pass


@dataclass(frozen=True)
class RegimeSpec:
    delta: float
    d: int
    eta: float
    r: float
    P: int = 1
    construction: str = "coprime"
    width: int = 1


def regime_table(delta: float) -> RegimeSpec:
    """Stage count, ratio and oversampling for sparsity index delta (k ~ n^delta)."""
    delta = float(delta)
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must be in (0, 1), got {delta}")
    if delta <= 1 / 3:
        return RegimeSpec(delta, 3, ETA_THRESHOLD[3], 2.45, construction="coprime")
    if delta < 0.73:
        return RegimeSpec(delta, 6, ETA_THRESHOLD[6], 3.14, construction="disjoint-pair", width=2)
    return RegimeSpec(delta, 8, ETA_THRESHOLD[8], 3.74, construction="cyclic-product", width=3)


@dataclass(frozen=True)
class Design:
    """A plan plus the largest sparsity it is sized for.

    ``k_capacity`` is floor(mean stage size / eta_threshold): the largest k
    at which the realized ratio still meets the density-evolution threshold.
    """

    plan: FrontendPlan
    eta_threshold: float
    k_capacity: int

    @property
    def n(self) -> int:
        return self.plan.n

    @property
    def d(self) -> int:
        return self.plan.d

    @property
    def m(self) -> int:
        return self.plan.m

    def eta(self, k: int) -> float:
        """Realized bins per coefficient: mean stage size over k."""
        return sum(self.plan.sizes) / (self.d * k)

    def oversampling(self, k: int | None = None) -> float:
        return self.m / (k or self.k_capacity)

    def check(self, k: int) -> None:
        if self.eta(k) < self.eta_threshold - ETA_SLACK:
            raise PlanRefused(
                f"realized eta {self.eta(k):.4f} below threshold {self.eta_threshold:.4f} - {ETA_SLACK}"
            )


def _design(n: int, sizes, P: int) -> Design:
    plan = FrontendPlan.from_sizes(n, sizes, P)
    eta = ETA_THRESHOLD.get(plan.d, ETA_THRESHOLD[9])
    mean_f = sum(sizes) / len(sizes)
    return Design(plan, eta, max(1, math.floor(mean_f / eta)))


def plan_coprime(factors, P: int = 1) -> Design:
    """Stages of pairwise co-prime sizes, n = P * prod(factors)."""
    factors = [int(f) for f in factors]
    if P < 1:
        raise ValueError("P must be >= 1")
    if not are_pairwise_coprime(factors):
        raise ValueError(f"stage sizes {factors} are not pairwise co-prime")
    return _design(P * math.prod(factors), factors, P)


def plan_very_sparse(k_target: int, P: int = 1, eta: float = ETA_THRESHOLD[3]) -> Design:
    """Three co-prime stages of size about eta * k_target each.

    Uses a, a + 1, a + 2 with a odd (always pairwise co-prime), taking the
    smallest such triple whose mean reaches eta * k_target. A greedy co-prime
    search can skip several integers and overshoot the sample budget.
    """
    base = math.ceil(eta * k_target)
    if base < 16:
        raise ValueError(f"k_target={k_target} too small: stage size {base} < 16")
    a = base - 1 if base % 2 == 0 else base
    design = plan_coprime([a, a + 1, a + 2], P)
    design.check(k_target)
    return design


def plan_less_sparse(primes, width: int, P: int = 1) -> Design:
    """Stage i has size P times the product of ``width`` cyclically consecutive primes from i."""
    primes = [int(p) for p in primes]
    if not are_pairwise_coprime(primes):
        raise ValueError(f"{primes} are not pairwise co-prime")
    if not 2 <= width <= len(primes) - 1:
        raise ValueError(f"width must be in [2, {len(primes) - 1}]")
    if P < 1:
        raise ValueError("P must be >= 1")
    sizes = [P * f for f in cyclic_products(primes, width)]
    return _design(P * math.prod(primes), sizes, P)


def plan_disjoint_cyclic(groups, width: int, P: int = 1) -> Design:
    """Union of independent cyclic-product designs, one per group of co-prime factors.

    Two groups of three with width 2 give the d = 6 design; two groups of four
    with width 3 give the d = 8 design.
    """
    groups = [[int(p) for p in g] for g in groups]
    flat = [p for g in groups for p in g]
    if not are_pairwise_coprime(flat):
        raise ValueError("all factors across groups must be pairwise co-prime")
    if P < 1:
        raise ValueError("P must be >= 1")
    sizes = []
    for g in groups:
        if not 2 <= width <= len(g) - 1:
            raise ValueError(f"width must be in [2, {len(g) - 1}] for group {g}")
        sizes += [P * f for f in cyclic_products(g, width)]
    return _design(P * math.prod(flat), sizes, P)


def plan_for_delta(delta: float, k_target: int, P: int = 1) -> Design:
    """Pick the regime for ``delta`` and size its stages for ``k_target`` coefficients."""
    regime = regime_table(delta)
    if regime.d == 3:
        return plan_very_sparse(k_target, P, regime.eta)
    group = regime.width + 1
    base = max(2, math.ceil((regime.eta * k_target / P) ** (1.0 / regime.width)))
    factors = generate_coprime_set(base, 2 * group)
    # interleave so both groups get factors of similar size
    design = plan_disjoint_cyclic([factors[0::2], factors[1::2]], regime.width, P)
    design.check(k_target)
    return design
