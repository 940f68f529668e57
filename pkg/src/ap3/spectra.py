"""Large Fourier coefficients and Lambda_3 stability under spectral perturbation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ap3.zn_core import (
    DegenerateFunctionError,
    GridFunction,
    ResidueSet,
    dft,
    lambda3_spectral,
)


class BoundViolation(AssertionError):
    """A proven inequality failed on concrete data."""


@dataclass(frozen=True)
class LargeSpectrumReport:
    threshold_beta: float
    large_set: ResidueSet
    bound: float

    def to_json(self) -> dict:
        return {"threshold_beta": self.threshold_beta,
                "large_set": self.large_set.to_json(),
                "size": len(self.large_set),
                "bound": self.bound}


@dataclass(frozen=True)
class SameFourierReport:
    beta: float
    lambda_gap: float
    bound_holds: bool

    def to_json(self) -> dict:
        return {"beta": self.beta, "lambda_gap": self.lambda_gap,
                "bound": 12 * self.beta, "bound_holds": self.bound_holds}


def _check_range(f: GridFunction, lo: float, hi: float, what: str):
    if f.values.min() < lo or f.values.max() > hi:
        raise ValueError(f"{what} must map into [{lo}, {hi}]")


def large_spectrum(h: GridFunction, beta: float) -> LargeSpectrumReport:
    """Frequencies ``a`` with ``|h^(a)| >= beta h^(0)``.

    The set has at most ``(beta h^(0))^-2 N^2`` elements by Parseval; this is
    checked before returning.
    """
    if not 0 < beta < 1:
        raise ValueError(f"beta must lie in (0, 1), got {beta}")
    _check_range(h, 0.0, 1.0, "h")
    coeffs = dft(h).coefficients
    mass = coeffs[0].real
    if mass <= 0:
        raise DegenerateFunctionError("degenerate function: h^(0) = 0")
    members = np.flatnonzero(np.abs(coeffs) >= beta * mass)
    large = ResidueSet(h.modulus, tuple(int(a) for a in members))
    bound = (beta * mass) ** -2 * h.modulus ** 2
    if len(large) > bound:
        raise BoundViolation(f"|C| = {len(large)} exceeds {bound:.6g}")
    return LargeSpectrumReport(float(beta), large, float(bound))


def fourier_distance(f: GridFunction, g: GridFunction) -> float:
    """``max_a |f^(a) - g^(a)|`` (unnormalized)."""
    if f.modulus != g.modulus:
        raise ValueError(f"modulus mismatch: {f.modulus} vs {g.modulus}")
    diff = dft(f).coefficients - dft(g).coefficients
    return float(np.max(np.abs(diff)))


def check_same_fourier_bound(f: GridFunction, g: GridFunction) -> SameFourierReport:
    """Check ``|Lambda_3(f) - Lambda_3(g)| < 12 beta`` with ``beta = ||f^ - g^||_inf / N``."""
    for name, fn in (("f", f), ("g", g)):
        lo, hi = fn.declared_range
        if lo < -2 or hi > 2:
            raise ValueError(f"{name} declared range [{lo}, {hi}] exceeds [-2, 2]")
    beta = fourier_distance(f, g) / f.modulus
    gap = abs(lambda3_spectral(f) - lambda3_spectral(g))
    holds = gap < 12 * beta or (beta == 0 and gap == 0)
    if not holds:
        raise BoundViolation(f"Lambda_3 gap {gap:.6g} >= 12 * beta = {12 * beta:.6g}")
    return SameFourierReport(beta, gap, holds)
