"""Modular arithmetic helpers: co-primality, CRT reconstruction, co-prime factor sets."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import reduce
from itertools import combinations
from typing import Iterable, Sequence

# Greedy co-prime search looks at most this many offsets per requested modulus.
WINDOW_PER_MODULUS = 64


class ConstructionError(RuntimeError):
    """No admissible parameter set was found inside the search window."""


@dataclass(frozen=True)
class ModulusSet:
    moduli: tuple[int, ...]

    def __post_init__(self):
        if not self.moduli:
            raise ValueError("modulus set must be non-empty")
        if any(int(m) < 2 for m in self.moduli):
            raise ValueError(f"all moduli must be >= 2, got {self.moduli}")
        object.__setattr__(self, "moduli", tuple(int(m) for m in self.moduli))

    @property
    def product(self) -> int:
        return reduce(lambda a, b: a * b, self.moduli, 1)

    @property
    def pairwise_coprime(self) -> bool:
        return are_pairwise_coprime(self.moduli)

    def __len__(self):
        return len(self.moduli)

    def __iter__(self):
        return iter(self.moduli)


def _as_moduli(m) -> tuple[int, ...]:
    if isinstance(m, ModulusSet):
        return m.moduli
    return ModulusSet(tuple(m)).moduli


def are_pairwise_coprime(moduli: Sequence[int]) -> bool:
    """True iff gcd(m_i, m_j) == 1 for every pair i != j."""
    moduli = _as_moduli(moduli)
    return all(math.gcd(a, b) == 1 for a, b in combinations(moduli, 2))


def egcd(a: int, b: int) -> tuple[int, int, int]:
    """Extended Euclid: returns (g, x, y) with a*x + b*y == g == gcd(a, b)."""
    x0, y0, x1, y1 = 1, 0, 0, 1
    while b:
        q, a, b = a // b, b, a % b
        x0, x1 = x1, x0 - q * x1
        y0, y1 = y1, y0 - q * y1
    return a, x0, y0


def modinv(a: int, m: int) -> int:
    g, x, _ = egcd(a % m, m)
    if g != 1:
        raise ValueError(f"{a} is not invertible modulo {m}")
    return x % m


def residues(a: int, m) -> list[int]:
    """Residue vector of ``a`` with respect to each modulus."""
    moduli = _as_moduli(m)
    a = int(a)
    N = reduce(lambda x, y: x * y, moduli, 1)
    if not 0 <= a < N:
        raise ValueError(f"a={a} outside [0, {N})")
    return [a % mi for mi in moduli]


def crt_reconstruct(r: Sequence[int], m) -> int:
    """Unique a in [0, prod(m)) with a % m_i == r_i.

    Accumulates one congruence at a time (Garner-style), so each step needs a
    single modular inverse and Python ints keep every intermediate exact.
    """
    moduli = _as_moduli(m)
    r = [int(v) for v in r]
    if len(r) != len(moduli):
        raise ValueError("residue vector and modulus set differ in length")
    if not are_pairwise_coprime(moduli):
        raise ValueError(f"moduli {moduli} are not pairwise co-prime")
    for ri, mi in zip(r, moduli):
        if not 0 <= ri < mi:
            raise ValueError(f"residue {ri} out of range for modulus {mi}")

    a, M = r[0], moduli[0]
    for ri, mi in zip(r[1:], moduli[1:]):
        # a + M*t == ri (mod mi)
        t = ((ri - a) * modinv(M, mi)) % mi
        a += M * t
        M *= mi
    return a


def generate_coprime_set(base: int, d: int, window: int | None = None) -> list[int]:
    """``d`` pairwise co-prime integers, scanning upward from ``base``.

    For d == 3 and a base divisible by 30 the triple (F+2, F+3, F+5) is
    returned directly; it is co-prime for every such F. Otherwise greedy:
    accept the next integer that is co-prime to everything accepted so far.
    Deterministic; raises ConstructionError if the window of
    ``WINDOW_PER_MODULUS * d`` offsets is exhausted.
    """
    base, d = int(base), int(d)
    if base < 2 or d < 2:
        raise ValueError("need base >= 2 and d >= 2")
    if d == 3 and base % 30 == 0:
        return [base + 2, base + 3, base + 5]
    window = WINDOW_PER_MODULUS * d if window is None else int(window)
    chosen: list[int] = []
    for c in range(base, base + window + 1):
        if all(math.gcd(c, a) == 1 for a in chosen):
            chosen.append(c)
            if len(chosen) == d:
                return chosen
    raise ConstructionError(f"no {d} co-prime integers in [{base}, {base + window}]")


def cyclic_products(factors: Iterable[int], width: int) -> list[int]:
    """Products of ``width`` cyclically consecutive factors, one per start index."""
    factors = [int(f) for f in factors]
    d = len(factors)
    if not 1 <= width <= d:
        raise ValueError(f"width must be in [1, {d}]")
    return [reduce(lambda a, b: a * b, (factors[(i + j) % d] for j in range(width)), 1) for i in range(d)]
