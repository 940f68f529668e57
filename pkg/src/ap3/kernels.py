"""Fejer-type smoothing weights with prescribed near-unit Fourier coefficients.

For targets ``b_1..b_t`` in Z_p and ``0 < eps < 1`` we build

* ``y_i`` with nonnegative spectrum ``(2L+1)^-1 D(a c_i)^2``, where
  ``c_i = b_i^-1 mod p``, ``L = floor(eps p / 10)`` and ``D`` is the
  Dirichlet sum over ``|j| <= L``;
* ``v = y_1 * ... * y_t`` (pointwise);
* ``mu = v / sum(v)``, so that ``mu^(0) = 1``.

The resulting weight satisfies ``|mu^(b_i) - 1| < eps^2`` and
``sum_a |mu^(a)| <= (6/eps)^t``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from sympy import isprime

from ap3.zn_core import GridFunction, Spectrum, dft, idft, signed_residue

BULLET_TOL = 1e-12
IMAG_TOL = 1e-9


class KernelError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class WeightConstruction:
    prime_modulus: int
    epsilon: float
    targets: tuple[int, ...]
    window_halfwidth: int
    inverses: tuple[int, ...]
    kernel_factors: tuple[GridFunction, ...]
    product: GridFunction
    weight: GridFunction
    weight_spectrum: Spectrum
    checks: dict = field(default_factory=dict)

    @property
    def t(self) -> int:
        return len(self.targets)

    def to_json(self, include_spectra: bool = True) -> dict:
        out = {
            "prime_modulus": self.prime_modulus,
            "epsilon": self.epsilon,
            "targets": list(self.targets),
            "window_halfwidth": self.window_halfwidth,
            "inverses": list(self.inverses),
            "checks": self.checks,
            "weight": self.weight.to_json(),
            "product": self.product.to_json(),
        }
        if include_spectra:
            out["kernel_factors"] = [y.to_json() for y in self.kernel_factors]
            out["kernel_spectra"] = [dft(y).to_json() for y in self.kernel_factors]
            out["weight_spectrum"] = self.weight_spectrum.to_json()
        return out


def fejer_sq_spectrum(p: int, c: int, L: int) -> Spectrum:
    """``(2L+1)^-1 (sum_{|j|<=L} e^{2 pi i a c j / p})^2`` for every ``a``."""
    if L < 0:
        raise KernelError(f"window half-width must be nonnegative, got {L}")
    if 2 * L + 1 > p:
        raise KernelError(f"window too large: 2L+1 = {2 * L + 1} > p = {p}")
    if c % p and math.gcd(c, p) != 1:
        raise KernelError(f"{c} is not invertible mod {p}")
    phase = 2 * np.pi * ((np.arange(p) * c) % p) / p
    j = np.arange(1, L + 1)
    # the sum is symmetric in j, hence real
    dirichlet = 1.0 + 2.0 * np.cos(np.outer(phase, j)).sum(axis=1)
    coeffs = dirichlet ** 2 / (2 * L + 1)
    assert np.all(coeffs >= 0)
    return Spectrum(p, coeffs)


def build_weight(p: int, targets, epsilon: float,
                 allow_degenerate_window: bool = False) -> WeightConstruction:
    """Construct the smoothing weight ``mu`` for the given targets and check its properties.

    ``eps * p >= 10`` is required so the window half-width ``L`` is at least 1.
    With ``allow_degenerate_window`` the construction proceeds at ``L = 0``,
    where every kernel factor is a point mass at 0; the checks still run.
    """
    if not isprime(p):
        raise KernelError(f"{p} is not prime")
    if not 0 < epsilon < 1:
        raise KernelError(f"epsilon must lie in (0, 1), got {epsilon}")
    if epsilon * p < 10 and not allow_degenerate_window:
        raise KernelError(
            f"modulus too small for window: eps * p = {epsilon * p:.4g} < 10")
    targets = tuple(int(b) % p for b in targets)
    if len(set(targets)) != len(targets):
        raise KernelError("targets must be distinct")
    if any(b == 0 for b in targets):
        raise KernelError("targets must be nonzero (0 is not invertible)")
    L = math.floor(epsilon * p / 10)
    inverses = tuple(pow(b, -1, p) for b in targets)

    factors = []
    product = np.ones(p)
    for c in inverses:
        raw = idft(fejer_sq_spectrum(p, c, L)).values * (2 * L + 1)
        # exact values are pair counts over 2L+1; snap off the FFT rounding
        counts = np.round(raw)
        if np.max(np.abs(raw - counts)) > 1e-6:
            raise KernelError("kernel inverse transform is not integral")
        y = GridFunction(p, counts / (2 * L + 1))
        factors.append(y)
        product = product * y.values
    v = GridFunction(p, product)
    v_mass = float(product.sum())
    mu = GridFunction(p, product / v_mass)
    mu_hat = dft(mu)

    t = len(targets)
    bound_l1 = (6 / epsilon) ** t
    l1 = float(np.sum(np.abs(mu_hat.coefficients)))
    at_targets = [mu_hat[b] for b in targets]
    checks = {
        "mu_hat_zero": mu_hat[0].real,
        "mu_hat_zero_ok": abs(mu_hat[0] - 1) < BULLET_TOL,
        "max_target_defect": max((abs(z - 1) for z in at_targets), default=0.0),
        "target_defect_bound": epsilon ** 2,
        "targets_ok": all(abs(z - 1) < epsilon ** 2 for z in at_targets),
        "targets_real": all(abs(z.imag) < IMAG_TOL for z in at_targets),
        "l1_normalized": l1 / p,
        "l1_normalized_bound": bound_l1 / p,
        "l1_ok": l1 <= bound_l1 * (1 + BULLET_TOL),
        "v_hat_zero": v_mass,
        "v_hat_zero_lower": (epsilon / 6) ** t * p,
        # with no targets v = 1 and the lower bound is attained
        "v_hat_zero_ok": v_mass > (epsilon / 6) ** t * p if t else v_mass == p,
    }
    checks["support_ok"] = _support_ok(v.values, targets, L, p)
    failed = [k for k, ok in checks.items() if k.endswith("_ok") and not ok]
    failed += [] if checks["targets_real"] else ["targets_real"]
    if failed:
        raise KernelError(f"weight construction failed checks {failed}: {checks}")
    return WeightConstruction(p, float(epsilon), targets, L, inverses,
                              tuple(factors), v, mu, mu_hat, checks)


def _support_ok(v: np.ndarray, targets, L: int, p: int) -> bool:
    support = np.flatnonzero(v > 0)
    for b in targets:
        if np.any(np.abs(signed_residue(b * support, p)) > 2 * L):
            return False
    return True
