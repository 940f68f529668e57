"""Randomized property suites, one per identity or inequality."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from sympy import nextprime

from ap3.kernels import KernelError, build_weight
from ap3.oscillation import complement_identity_check, doubling_set, spread_bound_check
from ap3.seeding import rng_for
from ap3.spectra import BoundViolation, check_same_fourier_bound, large_spectrum
from ap3.transfer import TransferError, transfer_pipeline
from ap3.zn_core import GridFunction, ResidueSet, dft, idft

SUITES = ("parseval", "large-values", "same-fourier", "flatten", "measure-prop",
          "spread", "complement")


@dataclass
class SuiteResult:
    name: str
    trials: int
    hard_failures: list = field(default_factory=list)
    soft_flags: list = field(default_factory=list)
    stats: dict = field(default_factory=dict)

    @property
    def exit_code(self) -> int:
        if self.hard_failures:
            return 1
        return 3 if self.soft_flags else 0

    def to_json(self) -> dict:
        return {"suite": self.name, "trials": self.trials,
                "hard_failures": self.hard_failures[:20],
                "n_hard_failures": len(self.hard_failures),
                "soft_flags": self.soft_flags[:20],
                "n_soft_flags": len(self.soft_flags),
                "stats": self.stats, "exit_code": self.exit_code}


def suite_parseval(trials, seed, tol=1e-9):
    res = SuiteResult("parseval", trials)
    worst_rel, worst_rt = 0.0, 0.0
    for i in range(trials):
        rng = rng_for(seed, 0, i)
        N = int(rng.integers(2, 513))
        f = GridFunction.from_values(rng.uniform(-1, 1, N))
        F = dft(f)
        energy = float(np.sum(np.abs(F.coefficients) ** 2))
        target = N * float(np.sum(f.values ** 2))
        rel = abs(energy - target) / target
        rt = float(np.max(np.abs(idft(F).values - f.values)))
        worst_rel, worst_rt = max(worst_rel, rel), max(worst_rt, rt)
        if rel >= tol or rt >= tol:
            res.hard_failures.append({"trial": i, "N": N, "parseval_rel": rel,
                                      "roundtrip": rt})
    res.stats = {"max_parseval_rel": worst_rel, "max_roundtrip": worst_rt}
    return res


def suite_large_values(trials, seed, N=101, betas=(0.05, 0.1, 0.3)):
    res = SuiteResult("large-values", trials)
    worst = 0.0
    for i in range(trials):
        rng = rng_for(seed, 1, i)
        h = GridFunction(N, rng.random(N) ** rng.uniform(0.2, 5))
        for beta in betas:
            try:
                rep = large_spectrum(h, beta)
            except BoundViolation as exc:
                res.hard_failures.append({"trial": i, "beta": beta, "error": str(exc)})
                continue
            worst = max(worst, len(rep.large_set) / rep.bound)
    res.stats = {"max_size_over_bound": worst}
    return res


def random_pair(rng, N):
    """A pair of functions into [-2, 2] whose spectra differ by a random amount."""
    kind = int(rng.integers(4))
    f = rng.uniform(-2, 2, N) if kind % 2 else rng.random(N)
    scale = 10.0 ** rng.uniform(-4, 0.5)
    if kind < 2:
        g = np.clip(f + rng.normal(0, scale, N), -2, 2)
    else:
        g = np.clip(f + scale * np.cos(2 * np.pi * int(rng.integers(N)) * np.arange(N) / N),
                    -2, 2)
    return (GridFunction(N, f, (-2.0, 2.0)), GridFunction(N, g, (-2.0, 2.0)))


def suite_same_fourier(trials, seed, moduli=(64, 101)):
    res = SuiteResult("same-fourier", trials)
    worst = 0.0
    for i in range(trials):
        rng = rng_for(seed, 2, i)
        N = moduli[i % len(moduli)]
        f, g = random_pair(rng, N)
        try:
            rep = check_same_fourier_bound(f, g)
        except BoundViolation as exc:
            res.hard_failures.append({"trial": i, "N": N, "error": str(exc)})
            continue
        if rep.beta > 0:
            worst = max(worst, rep.lambda_gap / (12 * rep.beta))
    res.stats = {"max_gap_over_bound": worst}
    return res


def suite_flatten(trials, seed, primes=(101, 499)):
    res = SuiteResult("flatten", trials)
    for i in range(trials):
        rng = rng_for(seed, 3, i)
        p = primes[i % len(primes)]
        t = int(rng.integers(0, 4))
        targets = [int(b) for b in rng.choice(np.arange(1, p), t, replace=False)]
        eps = float(rng.uniform(0.3, 0.9))
        try:
            w = build_weight(p, targets, eps)
        except KernelError as exc:
            res.hard_failures.append({"trial": i, "p": p, "targets": targets,
                                      "eps": eps, "error": str(exc)})
            continue
        if not all(w.checks[k] for k in ("mu_hat_zero_ok", "targets_ok", "l1_ok")):
            res.hard_failures.append({"trial": i, "checks": w.checks})
    return res


def suite_measure_prop(trials, seed, primes=(11, 13)):
    res = SuiteResult("measure-prop", trials)
    for i in range(trials):
        rng = rng_for(seed, 4, i)
        p = primes[i % len(primes)]
        r = int(nextprime(p ** 3))
        eps = float(rng.uniform(0.1, 0.5))
        k = int(rng.integers(1, p + 1))
        start = int(rng.integers(p))
        vals = np.zeros(p)
        vals[(start + np.arange(k)) % p] = 1.0
        if i % 3 == 2:
            vals = rng.random(p)
        try:
            out = transfer_pipeline(GridFunction(p, vals), r, eps)
        except TransferError as exc:
            res.hard_failures.append({"trial": i, "p": p, "error": str(exc)})
            continue
        for c in out.soft_violations:
            res.soft_flags.append({"trial": i, "p": p, "check": c.name})
    return res


def suite_spread(trials, seed, p=10007):
    res = SuiteResult("spread", trials)
    lo, hi = p // 3 + 1, (2 * p - 1) // 5
    worst = 0.0
    for i in range(trials):
        rng = rng_for(seed, 5, i)
        size = int(rng.integers(lo, hi + 1))
        if i % 2:
            S = ResidueSet(p, tuple(range(size)))
        else:
            S = ResidueSet.from_residues(p, rng.choice(p, size, replace=False))
        rep = spread_bound_check(S, doubling_set(S))
        worst = max(worst, rep.lhs / rep.rhs)
        if not rep.holds:
            res.hard_failures.append({"trial": i, **rep.to_json()})
    res.stats = {"max_lhs_over_rhs": worst}
    return res


def suite_complement(trials, seed, odd_max=999):
    res = SuiteResult("complement", trials)
    for i in range(trials):
        rng = rng_for(seed, 6, i)
        N = 2 * int(rng.integers(1, (odd_max - 1) // 2 + 1)) + 1
        A = ResidueSet.from_indicator(rng.random(N) < rng.random())
        resid = complement_identity_check(A, N)
        if resid != 0:
            res.hard_failures.append({"trial": i, "N": N, "residual": str(resid)})
    return res


RUNNERS = {
    "parseval": suite_parseval,
    "large-values": suite_large_values,
    "same-fourier": suite_same_fourier,
    "flatten": suite_flatten,
    "measure-prop": suite_measure_prop,
    "spread": suite_spread,
    "complement": suite_complement,
}


def run_suite(name: str, trials: int, seed: int) -> list[SuiteResult]:
    if name == "all":
        return [RUNNERS[n](trials, seed) for n in SUITES]
    if name not in RUNNERS:
        raise KeyError(f"unknown suite {name!r}; choose from {', '.join(SUITES)} or all")
    return [RUNNERS[name](trials, seed)]
