"""Moving a low-Lambda_3 function from Z_p to a much larger Z_r.

Pipeline: find the large spectrum of ``f``, smooth with a Fejer weight, dilate
so the relevant frequencies become small integers, truncate to a sparse
trigonometric polynomial ``g``, sample ``g`` on the finer grid ``Z_r``, clip
into ``[0, 1]`` and restore the mean.

Each stage records the identities and inequalities it is supposed to satisfy
in an :class:`Audit`.  Structural identities are *hard* and abort the run;
the quantitative bounds (25 eps, 73 eps) are only proven for large ``p`` and
are *soft*: recorded and flagged, never raised.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from sympy import isprime

from ap3.kernels import WeightConstruction, build_weight
from ap3.spectra import fourier_distance
from ap3.zn_core import (
    DegenerateFunctionError,
    GridFunction,
    ResidueSet,
    dft,
    expectation,
    lambda3_spectral,
    signed_residue,
)

TOL = 1e-9
MEAN_TOL = 1e-12
MAX_EPSILON = 0.5


class TransferError(RuntimeError):
    """A hard assertion failed; ``audit`` holds everything recorded so far."""

    def __init__(self, message, audit=None):
        super().__init__(message)
        self.audit = audit


class PigeonholeFailure(TransferError):
    pass


@dataclass
class Check:
    stage: str
    name: str
    kind: str
    value: float
    bound: float | None
    holds: bool

    def to_json(self) -> dict:
        return {"stage": self.stage, "name": self.name, "kind": self.kind,
                "value": self.value, "bound": self.bound, "holds": self.holds}


@dataclass
class Audit:
    checks: list[Check] = field(default_factory=list)

    def hard(self, stage, name, value, bound, holds):
        self.checks.append(Check(stage, name, "hard", float(value),
                                 None if bound is None else float(bound), bool(holds)))
        if not holds:
            raise TransferError(
                f"[{stage}] {name}: value {value:.6g} vs bound {bound}", self)

    def soft(self, stage, name, value, bound, holds):
        self.checks.append(Check(stage, name, "soft", float(value),
                                 None if bound is None else float(bound), bool(holds)))

    @property
    def soft_violations(self) -> list[Check]:
        return [c for c in self.checks if c.kind == "soft" and not c.holds]

    def to_json(self) -> list[dict]:
        return [c.to_json() for c in self.checks]


@dataclass(frozen=True)
class SpectralSupport:
    prime_modulus: int
    epsilon: float
    set_B: ResidueSet
    set_Bprime: ResidueSet
    dilation_s: int
    frequencies: tuple[int, ...]

    @property
    def t(self) -> int:
        return len(self.set_B)

    @property
    def m(self) -> int:
        return len(self.set_Bprime)

    def to_json(self) -> dict:
        return {"prime_modulus": self.prime_modulus, "epsilon": self.epsilon,
                "B": list(self.set_B.members), "t": self.t,
                "Bprime": list(self.set_Bprime.members), "m": self.m,
                "dilation_s": self.dilation_s,
                "frequencies": list(self.frequencies)}


@dataclass(frozen=True, eq=False)
class SparseTrigPoly:
    """``g(alpha) = p^-1 sum_i coeff_i exp(-2 pi i c_i alpha / p)`` for real alpha."""

    prime_modulus: int
    frequencies: tuple[int, ...]
    coefficients: tuple[complex, ...]

    def __post_init__(self):
        if len(self.frequencies) != len(self.coefficients):
            raise ValueError("one coefficient per frequency")
        if len(set(self.frequencies)) != len(self.frequencies):
            raise ValueError("frequencies must be distinct")

    @property
    def _terms(self) -> dict[int, complex]:
        return dict(zip(self.frequencies, self.coefficients))

    def evaluate(self, alpha, tol: float = TOL) -> np.ndarray:
        alpha = np.asarray(alpha, dtype=float)
        c = np.asarray(self.frequencies, dtype=float)
        z = np.asarray(self.coefficients, dtype=complex)
        phases = np.exp(-2j * np.pi * np.multiply.outer(alpha, c) / self.prime_modulus)
        vals = phases @ z / self.prime_modulus
        if np.max(np.abs(vals.imag), initial=0.0) > tol:
            raise ValueError("sparse polynomial is not real-valued")
        return vals.real

    def mean(self) -> float:
        """Average over the integers 0..p-1 (only the zero frequency survives)."""
        return float(self._terms.get(0, 0).real) / self.prime_modulus

    def lambda3(self, wrap: bool = True) -> float:
        """Sparse spectral Lambda_3.

        With ``wrap`` the sum matches ``-2 c_i`` against the frequencies modulo
        ``p``, giving Lambda_3 of ``g`` restricted to Z_p.  Without it the match
        is between integers, which is Lambda_3 of ``g`` sampled on any Z_r with
        ``r > 3 max|c_i|``.
        """
        p = self.prime_modulus
        key = (lambda c: c % p) if wrap else (lambda c: c)
        table = {}
        for c, z in self._terms.items():
            table[key(c)] = table.get(key(c), 0) + z
        total = sum(z ** 2 * table.get(key(-2 * c), 0) for c, z in table.items())
        total = complex(total) / p ** 3
        if abs(total.imag) > TOL:
            raise ValueError(f"sparse Lambda_3 has imaginary part {total.imag:.3e}")
        return total.real

    def to_json(self) -> dict:
        return {"prime_modulus": self.prime_modulus,
                "terms": [[int(c), float(z.real), float(z.imag)]
                          for c, z in zip(self.frequencies, self.coefficients)]}


@dataclass(eq=False)
class TransferResult:
    source: GridFunction
    epsilon: float
    target_modulus: int
    support: SpectralSupport
    weight: WeightConstruction
    smoothed: GridFunction
    sparse: SparseTrigPoly
    lifted: GridFunction
    clipped: GridFunction
    final: GridFunction
    lambda_f: float
    lambda_g: float
    lambda_g_lifted: float
    lambda_ell: float
    audit: Audit

    @property
    def soft_violations(self) -> list[Check]:
        return self.audit.soft_violations

    def to_json(self, include_functions: bool = False) -> dict:
        out = {
            "p": self.source.modulus,
            "r": self.target_modulus,
            "epsilon": self.epsilon,
            "support": self.support.to_json(),
            "window_halfwidth": self.weight.window_halfwidth,
            "sparse": self.sparse.to_json(),
            "mean_f": expectation(self.source),
            "mean_ell": expectation(self.final),
            "lambda_f": self.lambda_f,
            "lambda_g": self.lambda_g,
            "lambda_g_lifted": self.lambda_g_lifted,
            "lambda_h_r": lambda3_spectral(self.lifted),
            "lambda_ell": self.lambda_ell,
            "audit": self.audit.to_json(),
            "soft_violations": [c.name for c in self.soft_violations],
        }
        if include_functions:
            out["functions"] = {name: fn.to_json() for name, fn in (
                ("f", self.source), ("h", self.smoothed), ("h_r", self.lifted),
                ("ell0", self.clipped), ("ell", self.final))}
        return out


def extract_support(f: GridFunction, epsilon: float) -> tuple[ResidueSet, ResidueSet]:
    """Large spectrum ``B`` of ``f`` and its enlargement ``B'``.

    ``B = {a : |f^(a)| > eps f^(0)}``; with ``t = |B|``,
    ``B' = {a : |f^(a)| or |f^(-2a)| > eps (eps/6)^t f^(0)}``.
    """
    p = f.modulus
    mean = expectation(f)
    if mean <= 0:
        raise DegenerateFunctionError("degenerate function: zero mean")
    mag = np.abs(dft(f).coefficients)
    mass = mean * p
    B = ResidueSet(p, tuple(int(a) for a in np.flatnonzero(mag > epsilon * mass)))
    t = len(B)
    beta = epsilon * (epsilon / 6) ** t
    doubled = mag[(-2 * np.arange(p)) % p]
    Bp = ResidueSet(p, tuple(int(a) for a in
                             np.flatnonzero((mag > beta * mass) | (doubled > beta * mass))))
    if not set(B.members) <= set(Bp.members):
        raise TransferError("B is not contained in B'")
    bound = (beta * mean) ** -2
    if len(Bp) > bound:
        raise TransferError(f"|B'| = {len(Bp)} exceeds large-values bound {bound:.6g}")
    return B, Bp


def _below_root(c: int, p: int, m: int) -> bool:
    # |c| < p^(1 - 1/m), compared exactly as |c|^m < p^(m-1)
    return abs(c) ** m < p ** (m - 1)


def find_dilation(p: int, Bprime: ResidueSet, m: int | None = None) -> tuple[int, tuple[int, ...]]:
    """Smallest ``s`` with every ``b`` in ``B'`` equal to ``s c`` for a small signed ``c``."""
    m = len(Bprime) if m is None else m
    if m < 1:
        raise ValueError("B' must be nonempty")
    members = Bprime.members
    for s in range(1, p):
        s_inv = pow(s, -1, p)
        freqs = tuple(signed_residue(s_inv * b, p) for b in members)
        if all(_below_root(c, p, m) for c in freqs):
            return s, freqs
    raise PigeonholeFailure(f"pigeonhole failure: no dilation found for p = {p}, m = {m}")


def smooth_and_dilate(f: GridFunction, mu, s: int) -> GridFunction:
    """``h`` with ``h^(a) = mu^(s a) f^(s a)``.

    In the time domain this is ``h(n) = (mu * f)(s^-1 n)``.
    """
    weight = mu.weight if isinstance(mu, WeightConstruction) else mu
    p = f.modulus
    if weight.modulus != p:
        raise ValueError(f"modulus mismatch: {weight.modulus} vs {p}")
    if math.gcd(s, p) != 1:
        raise ValueError(f"dilation {s} is not invertible mod {p}")
    mu_hat = dft(weight).coefficients
    f_hat = dft(f).coefficients
    conv = np.fft.fft(mu_hat * f_hat).real / p
    s_inv = pow(s, -1, p)
    h = GridFunction(p, conv[(s_inv * np.arange(p)) % p])
    scaled = (s * np.arange(p)) % p
    gap = np.max(np.abs(dft(h).coefficients - mu_hat[scaled] * f_hat[scaled]))
    if gap > TOL * p:
        raise TransferError(f"spectral identity for h off by {gap:.3e}")
    return h


def truncate_to_sparse(h: GridFunction, freqs) -> SparseTrigPoly:
    """Keep only the Fourier coefficients of ``h`` at the given signed frequencies."""
    coeffs = dft(h).coefficients
    freqs = tuple(int(c) for c in freqs)
    return SparseTrigPoly(h.modulus, freqs,
                          tuple(complex(coeffs[c % h.modulus]) for c in freqs))


def lift_to_target(g: SparseTrigPoly, r: int, epsilon: float | None = None,
                   allow_small_r: bool = False) -> GridFunction:
    """Sample ``g`` on Z_r: ``h_r(alpha) = g(alpha p / r)``."""
    p = g.prime_modulus
    if not allow_small_r and r <= p ** 3:
        raise ValueError(f"r = {r} must exceed p^3 = {p ** 3}")
    if not isprime(r):
        raise ValueError(f"r = {r} is not prime")
    top = max(abs(c) for c in g.frequencies)
    if 2 * top >= r / 2:
        raise TransferError(
            f"frequency wraparound on Z_{r}: max|c| = {top}, need 2 max|c| < r/2")
    c = np.asarray(g.frequencies, dtype=float)
    z = np.asarray(g.coefficients, dtype=complex)
    alpha = np.arange(r)
    # phase exp(-2 pi i c alpha / r), computed with exact integer reduction
    phase_idx = np.mod(np.multiply.outer(alpha, c.astype(np.int64)), r)
    vals = (np.exp(-2j * np.pi * phase_idx / r) @ z) / p
    if np.max(np.abs(vals.imag)) > TOL:
        raise TransferError("lifted function is not real")
    vals = vals.real
    lo, hi = float(vals.min()), float(vals.max())
    if epsilon is not None:
        lo, hi = min(lo, -2 * epsilon), max(hi, 1 + 2 * epsilon)
    return GridFunction(r, vals, (lo, hi))


def clip_and_rebalance(h_r: GridFunction, target_mean: float) -> GridFunction:
    """Clip into [0, 1], then move mass to hit ``target_mean``.

    Surplus mass is removed by zeroing entries equal to 1 in increasing index
    order; a deficit is filled by raising entries equal to 0.  One further
    entry absorbs the fractional remainder.  When there are too few entries
    at 1 (or 0), as happens for functions that are far from indicators, the
    rest of the gap is taken from the remaining entries, again in index
    order, each moved as far as it can go.  The total L1 change always equals
    the clipped mean error, which is all the Fourier bound needs.
    """
    if not 0 <= target_mean <= 1:
        raise ValueError(f"target mean {target_mean} not in [0, 1]")
    r = h_r.modulus
    ell = np.clip(h_r.values, 0.0, 1.0)
    target = target_mean * r
    excess = float(ell.sum()) - target
    src, dst = (1.0, 0.0) if excess > 0 else (0.0, 1.0)
    candidates = np.flatnonzero(ell == src)
    whole = min(int(math.floor(abs(excess))), len(candidates))
    ell[candidates[:whole]] = dst
    order = np.concatenate([candidates[whole:],
                            np.flatnonzero((ell != src) & (ell != dst))])
    for _ in range(2):
        for k in order:
            remainder = float(ell.sum()) - target
            if remainder == 0:
                break
            ell[k] = min(1.0, max(0.0, ell[k] - remainder))
        if float(ell.sum()) == target:
            break
        # float residue can be left after many moves; spend it anywhere with room
        order = np.arange(r)
    out = GridFunction(r, ell)
    resid = abs(expectation(out) - target_mean)
    if resid > MEAN_TOL:
        raise TransferError(f"impossible rebalance: mean off by {resid:.3e}")
    return out


def transfer_pipeline(f: GridFunction, r: int, epsilon: float,
                      allow_small_r: bool = False) -> TransferResult:
    """Run every stage from ``f`` on Z_p to ``ell`` on Z_r and audit the bounds."""
    p = f.modulus
    if not isprime(p):
        raise ValueError(f"p = {p} is not prime")
    if not 0 < epsilon <= MAX_EPSILON:
        raise ValueError(f"epsilon must lie in (0, {MAX_EPSILON}], got {epsilon}")
    if f.values.min() < 0 or f.values.max() > 1:
        raise ValueError("f must map into [0, 1]")
    audit = Audit()
    mean_f = expectation(f)
    lam_f = lambda3_spectral(f)

    B, Bp = extract_support(f, epsilon)
    audit.hard("support", "B_subset_Bprime", len(B), len(Bp), len(B) <= len(Bp))

    degenerate = epsilon * p < 10
    audit.soft("weight", "window_nondegenerate", epsilon * p, 10, not degenerate)
    weight = build_weight(p, [b for b in B.members if b != 0], epsilon,
                          allow_degenerate_window=degenerate)

    s, freqs = find_dilation(p, Bp)
    support = SpectralSupport(p, float(epsilon), B, Bp, s, freqs)
    zero_ok = dict(zip(Bp.members, freqs)).get(0) == 0
    audit.hard("dilation", "zero_frequency_paired", 0, None, zero_ok)
    pairs_ok = all((s * c - b) % p == 0 and _below_root(c, p, len(Bp))
                   for b, c in zip(Bp.members, freqs))
    audit.hard("dilation", "pairing_and_size", max(abs(c) for c in freqs),
               p ** (1 - 1 / len(Bp)), pairs_ok)

    h = smooth_and_dilate(f, weight, s)
    audit.hard("smooth", "mean_h", abs(expectation(h) - mean_f), TOL,
               abs(expectation(h) - mean_f) < TOL)

    g = truncate_to_sparse(h, freqs)
    on_grid = g.evaluate(np.arange(p))
    audit.hard("sparse", "mean_g", abs(g.mean() - mean_f), TOL,
               abs(g.mean() - mean_f) < TOL)
    dev = float(np.max(np.abs(on_grid - h.values)))
    audit.soft("sparse", "grid_deviation", dev, epsilon + TOL, dev < epsilon + TOL)
    fine = g.evaluate(np.linspace(0, p, 64 * p, endpoint=False))
    lo, hi = float(fine.min()), float(fine.max())
    audit.soft("sparse", "range_low", lo, -2 * epsilon - TOL, lo >= -2 * epsilon - TOL)
    audit.soft("sparse", "range_high", hi, 1 + 2 * epsilon + TOL,
               hi <= 1 + 2 * epsilon + TOL)
    lam_g = g.lambda3(wrap=True)
    lam_g_lifted = g.lambda3(wrap=False)
    audit.soft("sparse", "lambda_g_vs_f", abs(lam_g - lam_f), 25 * epsilon,
               abs(lam_g - lam_f) < 25 * epsilon + TOL)
    audit.soft("sparse", "no_wraparound_on_Zp", abs(lam_g - lam_g_lifted), TOL,
               abs(lam_g - lam_g_lifted) < TOL)

    h_r = lift_to_target(g, r, epsilon, allow_small_r=allow_small_r)
    lifted_hat = dft(h_r).coefficients
    expected = np.zeros(r, dtype=complex)
    for c, z in zip(g.frequencies, g.coefficients):
        expected[c % r] = r * z / p
    spec_gap = float(np.max(np.abs(lifted_hat - expected)))
    audit.hard("lift", "spectrum_support", spec_gap, TOL * r, spec_gap < TOL * r)
    audit.hard("lift", "mean_h_r", abs(expectation(h_r) - mean_f), TOL,
               abs(expectation(h_r) - mean_f) < TOL)
    lam_hr = lambda3_spectral(h_r)
    audit.hard("lift", "lambda_h_r_eq_g", abs(lam_hr - lam_g_lifted), TOL,
               abs(lam_hr - lam_g_lifted) < TOL)

    ell0 = GridFunction(r, np.clip(h_r.values, 0.0, 1.0))
    ell = clip_and_rebalance(h_r, mean_f)
    audit.hard("rebalance", "mean_ell", abs(expectation(ell) - mean_f), MEAN_TOL,
               abs(expectation(ell) - mean_f) < MEAN_TOL)
    audit.hard("rebalance", "ell_in_unit_interval", float(ell.values.max()), 1.0,
               ell.values.min() >= 0 and ell.values.max() <= 1)
    clip_dist = fourier_distance(ell0, h_r)
    audit.soft("rebalance", "clip_fourier_distance", clip_dist, 2 * epsilon * r,
               clip_dist < 2 * epsilon * r)
    dist = fourier_distance(ell, h_r)
    audit.hard("rebalance", "ell_fourier_distance", dist, 4 * epsilon * r,
               dist < 4 * epsilon * r + TOL * r)
    lam_ell = lambda3_spectral(ell)
    audit.soft("rebalance", "lambda_ell_vs_h_r", abs(lam_ell - lam_hr), 48 * epsilon,
               abs(lam_ell - lam_hr) < 48 * epsilon + TOL)
    audit.soft("result", "lambda_ell_below_f_plus_73eps", lam_ell, lam_f + 73 * epsilon,
               lam_ell < lam_f + 73 * epsilon)

    return TransferResult(f, float(epsilon), r, support, weight, h, g, h_r, ell0, ell,
                          lam_f, lam_g, lam_g_lifted, lam_ell, audit)
