"""Density 2/3: multiples-of-3 complements versus primes 1 mod 3.

When ``3 | N`` the complement of the multiples of 3 has Lambda_3 exactly 2/9.
For primes ``p = 1 mod 3`` a set of size ``(2p+1)/3`` has Lambda_3 above 0.23
once ``p`` is large, through the complement identity and a bound on sums of
the representation function over the doubled complement.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from sympy import isprime

from ap3.rho_search import rho_descent, rho_exact_sets
from ap3.zn_core import (
    ResidueSet,
    cyclic_autoconvolution,
    dft,
    fraction_to_json,
    lambda3_exact,
    progression_count,
)

SPREAD_CONSTANT = 0.93
PRIME_THRESHOLD = 0.23


@dataclass(frozen=True, eq=False)
class ConvolutionCounts:
    modulus: int
    source: ResidueSet
    counts: np.ndarray

    def __getitem__(self, n):
        return int(self.counts[n % self.modulus])

    def total_over(self, T: ResidueSet) -> int:
        return int(self.counts[list(T.members)].sum()) if len(T) else 0


def complement_identity_check(A: ResidueSet, N: int | None = None) -> Fraction:
    """``Lambda_3(A) + Lambda_3(A') - (3 u^2 - 3 u + 1)`` with ``u = |A|/N``, exactly."""
    if N is not None and N != A.modulus:
        raise ValueError(f"set lives in Z_{A.modulus}, not Z_{N}")
    N = A.modulus
    if N < 3 or N % 2 == 0:
        raise ValueError(f"complement identity needs odd N >= 3, got {N}")
    u = A.density
    return lambda3_exact(A) + lambda3_exact(A.complement()) - (3 * u * u - 3 * u + 1)


def sumset_counts(S: ResidueSet) -> ConvolutionCounts:
    counts = cyclic_autoconvolution(S.members, S.modulus)
    if int(counts.sum()) != len(S) ** 2:
        raise ArithmeticError("representation counts do not sum to |S|^2")
    return ConvolutionCounts(S.modulus, S, counts)


def doubling_set(S: ResidueSet) -> ResidueSet:
    if S.modulus % 2 == 0:
        raise ValueError("doubling is not a bijection for even modulus")
    return S.dilate(2)


def interval_extremal(size: int, p: int) -> float:
    """``sin(pi |S| / p) / sin(pi / p)``, the largest ``|S^(a)|``, ``a != 0``, for an interval."""
    return abs(math.sin(math.pi * size / p)) / abs(math.sin(math.pi / p))


@dataclass(frozen=True)
class SpreadReport:
    lhs: int
    rhs: float
    holds: bool
    max_nonzero_coeff: float
    interval_extremal: float

    def to_json(self) -> dict:
        return {"lhs": self.lhs, "rhs": self.rhs, "holds": self.holds,
                "max_nonzero_coeff": self.max_nonzero_coeff,
                "interval_extremal": self.interval_extremal}


def spread_bound_check(S: ResidueSet, T: ResidueSet) -> SpreadReport:
    """Compare ``sum_{n in T} r(n)`` with ``0.93 |S| (|S| |T|)^(1/2)``."""
    p = S.modulus
    if T.modulus != p:
        raise ValueError("S and T must share a modulus")
    if not isprime(p):
        raise ValueError(f"{p} is not prime")
    if not p < 3 * len(S) < 3 * p * 2 / 5:
        raise ValueError(f"|S| = {len(S)} must satisfy p/3 < |S| < 2p/5 for p = {p}")
    lhs = sumset_counts(S).total_over(T)
    rhs = SPREAD_CONSTANT * len(S) * math.sqrt(len(S) * len(T))
    coeffs = np.abs(dft(S.as_function()).coefficients[1:])
    return SpreadReport(lhs, rhs, lhs < rhs, float(coeffs.max()),
                        interval_extremal(len(S), p))


def middle_term_identity(S: ResidueSet) -> tuple[int, int]:
    """Progression count of ``2S`` and ``sum_{n in 2S} r_S(n)``; they must agree."""
    T = doubling_set(S)
    return progression_count(T), sumset_counts(S).total_over(T)


def prime_two_thirds_experiment(p: int, A: ResidueSet | None = None, seed: int = 0) -> dict:
    """Audit the density-2/3 argument at the prime ``p = 1 mod 3``.

    Without ``A`` a uniformly random set of size ``(2p+1)/3`` is used.
    """
    if p % 3 != 1:
        raise ValueError(f"p = {p} is not 1 mod 3")
    if not isprime(p):
        raise ValueError(f"{p} is not prime")
    size = (2 * p + 1) // 3
    if A is None:
        rng = np.random.default_rng(seed)
        A = ResidueSet.from_residues(p, rng.choice(p, size, replace=False))
    if A.modulus != p or len(A) != size:
        raise ValueError(f"A must be a subset of Z_{p} of size {size}")
    S = A.complement()
    T = doubling_set(S)
    count_T, rep_sum = middle_term_identity(S)
    lam_T = Fraction(count_T, p * p)
    u = A.density
    lam_A = 3 * u * u - 3 * u + 1 - lambda3_exact(S)
    direct_A = lambda3_exact(A)
    spread_bound = SPREAD_CONSTANT * len(S) * math.sqrt(len(S) * len(T)) / p ** 2
    return {
        "p": p,
        "size_A": len(A),
        "size_S": len(S),
        "size_S_ok": len(S) == (p - 1) // 3,
        "lambda_T": fraction_to_json(lam_T),
        "rep_sum_over_T": rep_sum,
        "middle_term_identity": count_T == rep_sum,
        "lambda_T_eq_lambda_S": lam_T == lambda3_exact(S),
        "spread_bound": spread_bound,
        "spread_holds": float(lam_T) < spread_bound,
        "spread_bound_limit": SPREAD_CONSTANT / 9,
        "lambda_A": fraction_to_json(lam_A),
        "lambda_A_direct_match": lam_A == direct_A,
        "lambda_A_above_threshold": float(lam_A) > PRIME_THRESHOLD,
        "two_ninths": float(Fraction(2, 9)),
    }


def multiples_of_three_complement(N: int) -> ResidueSet:
    if N % 3:
        raise ValueError(f"3 does not divide {N}")
    return ResidueSet(N, tuple(x for x in range(N) if x % 3))


def two_ninths_chain(u: Fraction = Fraction(2, 3)) -> Fraction:
    """``3u^2 - 3u + 1 - (1 - u)^2``, which equals ``2u^2 - u``."""
    return 3 * u * u - 3 * u + 1 - (1 - u) ** 2


def residue_class(N: int) -> str:
    if N % 3 == 0:
        return "3|N"
    if isprime(N):
        return "prime_1mod3" if N % 3 == 1 else "prime_2mod3"
    return "composite_coprime_3"


def oscillation_table(odd_max: int, exact_max: int = 21, restarts: int = 2,
                      seed: int = 0) -> list[dict]:
    """Best known Lambda_3 minimum at density 2/3 for odd ``3 <= N <= odd_max``.

    Exact set minima up to ``exact_max``; beyond that a descent upper bound
    on the function minimum.
    """
    u = Fraction(2, 3)
    rows = []
    for N in range(3, odd_max + 1, 2):
        if N <= exact_max:
            res = rho_exact_sets(N, u)
            rows.append({"N": N, "class": residue_class(N), "kind": "exact_sets",
                         "value": float(res.value), "exact": str(res.value)})
        else:
            res = rho_descent(N, u, restarts=restarts, seed=seed)
            rows.append({"N": N, "class": residue_class(N), "kind": "descent_upper",
                         "value": float(res.value), "exact": ""})
    return rows
