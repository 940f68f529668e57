"""Minimizing Lambda_3 at fixed density, over sets and over [0, 1]-valued functions."""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from ap3.zn_core import (
    GridFunction,
    ResidueSet,
    expectation,
    fraction_to_json,
    lambda3_exact,
    lambda3_spectral,
)

DEFAULT_BUDGET = 10 ** 8


class BudgetExceededError(RuntimeError):
    pass


@dataclass(eq=False)
class RhoResult:
    modulus: int
    density: Fraction
    mode: str
    value: Fraction | float
    witness: ResidueSet | GridFunction
    search_stats: dict = field(default_factory=dict)
    wall_time: float = 0.0

    def to_json(self) -> dict:
        """Deterministic payload; wall time is kept out so reruns compare equal."""
        if self.mode == "exact_sets":
            value = fraction_to_json(self.value)
        else:
            value = float(self.value)
        return {"modulus": self.modulus,
                "density": fraction_to_json(self.density),
                "mode": self.mode,
                "value": value,
                "witness": self.witness.to_json(),
                "search_stats": self.search_stats}


def as_density(upsilon) -> Fraction:
    q = Fraction(upsilon).limit_denominator(10 ** 6) if isinstance(upsilon, float) \
        else Fraction(upsilon)
    if not 0 < q <= 1:
        raise ValueError(f"density must lie in (0, 1], got {upsilon}")
    return q


def required_size(N: int, upsilon) -> int:
    return math.ceil(as_density(upsilon) * N)


def _progression_masks(N: int) -> list[list[int]]:
    """Bitmasks of the progressions (n, d), grouped by their largest element.

    Each (n, d) pair gets its own entry, so pairs sharing an element set are
    counted separately, as Lambda_3 requires.
    """
    charged = [[] for _ in range(N)]
    for n in range(N):
        for d in range(N):
            terms = (n, (n + d) % N, (n + 2 * d) % N)
            charged[max(terms)].append((1 << terms[0]) | (1 << terms[1]) | (1 << terms[2]))
    return charged


def rho_exact_sets(N: int, upsilon, budget: int = DEFAULT_BUDGET,
                   use_translation: bool = True) -> RhoResult:
    """Exact minimum of Lambda_3 over subsets of size ``ceil(upsilon N)``.

    Depth-first search over subsets in lexicographic order.  Adding the
    element ``x`` adds exactly the progressions whose largest element is ``x``
    and whose other elements are already present, so the count is updated
    incrementally; since counts only grow, any branch whose partial count
    reaches the best total is cut.  The first minimizer found is therefore
    the lexicographically smallest.

    With ``use_translation`` the search fixes ``0`` in the set.  Every set
    has a translate containing 0 and sets containing 0 precede all others
    lexicographically, so neither the minimum nor the witness changes.
    """
    start = time.perf_counter()
    q = as_density(upsilon)
    k = required_size(N, q)
    total = math.comb(N, k)
    if total > budget:
        raise BudgetExceededError(
            f"C({N}, {k}) = {total} subsets exceeds budget {budget}; use descent mode")
    charged = _progression_masks(N)
    best = [N * N + 1, None]
    nodes = 0

    def dfs(next_elem: int, chosen: list[int], mask: int, count: int):
        nonlocal nodes
        nodes += 1
        if len(chosen) == k:
            if count < best[0]:
                best[0], best[1] = count, list(chosen)
            return
        remaining = k - len(chosen)
        for x in range(next_elem, N - remaining + 1):
            new_mask = mask | (1 << x)
            added = sum(1 for m in charged[x] if m & new_mask == m)
            if count + added >= best[0]:
                continue
            chosen.append(x)
            dfs(x + 1, chosen, new_mask, count + added)
            chosen.pop()

    if use_translation:
        dfs(1, [0], 1, sum(1 for m in charged[0] if m == 1))
    else:
        dfs(0, [], 0, 0)
    witness = ResidueSet(N, tuple(best[1]))
    value = lambda3_exact(witness)
    assert value == Fraction(best[0], N * N)
    return RhoResult(N, q, "exact_sets", value, witness,
                     {"nodes": nodes, "subsets": total, "size": k,
                      "use_translation": use_translation},
                     time.perf_counter() - start)


def lambda3_gradient(f) -> GridFunction:
    """Gradient of Lambda_3 with respect to each value ``f(m)``.

    ``N^-2 [sum_d f(m+d) f(m+2d) + f(m-d) f(m+d) + f(m-2d) f(m-d)]``, evaluated
    through the spectrum: with ``F = f^`` it equals
    ``N^-2 [2 G(-m) + H(2m)]`` where ``G`` and ``H`` are the inverse transforms
    of ``F(a) F(-2a)`` and ``F(a)^2``.
    """
    vals = f.values if isinstance(f, GridFunction) else np.asarray(f, dtype=float)
    N = len(vals)
    F = N * np.fft.ifft(vals)
    idx = np.arange(N)
    G = np.fft.fft(F * F[(-2 * idx) % N]) / N
    H = np.fft.fft(F * F) / N
    grad = (2 * G[(-idx) % N] + H[(2 * idx) % N]).real / N ** 2
    return GridFunction.from_values(grad)


def project_box_mean(x: np.ndarray, mean: float, tol: float = 1e-13) -> np.ndarray:
    """Euclidean projection onto ``{0 <= f <= 1, E f = mean}``.

    The projection is ``clip(x - tau, 0, 1)`` for the unique shift ``tau``
    making the mean right; ``tau`` is found by bisection.
    """
    lo, hi = float(x.min()) - 1.0, float(x.max())
    for _ in range(200):
        tau = 0.5 * (lo + hi)
        m = np.clip(x - tau, 0.0, 1.0).mean()
        if m > mean:
            lo = tau
        else:
            hi = tau
        if hi - lo < tol:
            break
    out = np.clip(x - 0.5 * (lo + hi), 0.0, 1.0)
    # spread the remaining float gap over interior entries
    interior = (out > 0) & (out < 1)
    gap = mean * len(x) - out.sum()
    if interior.any() and gap:
        out[interior] = np.clip(out[interior] + gap / interior.sum(), 0.0, 1.0)
    return out


def _descend(x0: np.ndarray, mean: float, max_iter: int = 10 ** 4,
             armijo: float = 1e-4, min_step: float = 1e-12) -> tuple[np.ndarray, float, int, bool]:
    x = project_box_mean(x0, mean)
    fx = lambda3_spectral(x)
    converged = False
    it = 0
    N = len(x)
    for it in range(1, max_iter + 1):
        g = lambda3_gradient(x).values
        # gradient for the uniform probability measure on Z_N
        direction = N * g
        step = 1.0
        accepted = False
        while step >= min_step:
            y = project_box_mean(x - step * direction, mean)
            fy = lambda3_spectral(y)
            if fy <= fx + armijo * float(g @ (y - x)):
                accepted = True
                break
            step *= 0.5
        if not accepted or np.max(np.abs(y - x)) < 1e-12:
            converged = True
            break
        x, fx = y, min(fx, fy)
    return x, lambda3_spectral(x), it, converged


def rho_descent(N: int, upsilon, restarts: int = 4, seed: int = 0,
                init: GridFunction | ResidueSet | None = None,
                max_iter: int = 10 ** 4, threads: int = 1,
                budget: int = 10 ** 5) -> RhoResult:
    """Upper bound on the function minimum by projected gradient descent.

    Runs ``restarts`` random starts (per-restart generators spawned from
    ``seed``) plus one start from ``init`` or, when the set problem is small
    enough (``budget`` subsets), from the exact set minimizer.  The mean is
    held at exactly ``upsilon``.
    """
    start = time.perf_counter()
    if N < 3:
        raise ValueError("N must be at least 3")
    q = as_density(upsilon)
    mean = float(q)
    starts = []
    children = np.random.SeedSequence(seed).spawn(restarts)
    for child in children:
        starts.append(("random", np.random.default_rng(child).random(N)))
    if init is None and math.comb(N, required_size(N, q)) <= budget:
        init = rho_exact_sets(N, q).witness
    if init is not None:
        vals = init.indicator().astype(float) if isinstance(init, ResidueSet) \
            else np.asarray(init.values, dtype=float)
        starts.append(("seeded", vals))

    def run(item):
        label, x0 = item
        x, val, iters, conv = _descend(x0, mean, max_iter=max_iter)
        return label, x, val, iters, conv

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            runs = list(pool.map(run, starts))
    else:
        runs = [run(s) for s in starts]
    # strict improvement keeps the earliest run on ties
    best = min(range(len(runs)), key=lambda i: (runs[i][2], i))
    label, x, val, _, _ = runs[best]
    witness = GridFunction(N, x)
    stats = {"seed": seed, "restarts": restarts,
             "runs": [{"start": r[0], "value": r[2], "iterations": r[3],
                       "converged": r[4]} for r in runs],
             "best_start": label,
             "mean_residual": expectation(witness) - mean,
             "constraint": "mean == upsilon"}
    return RhoResult(N, q, "descent_functions", float(val), witness, stats,
                     time.perf_counter() - start)


def round_to_set(f: GridFunction, upsilon, seed: int = 0) -> ResidueSet:
    """Random set with ``P(n in S) = f(n)``, topped up to ``ceil(upsilon N)`` elements.

    Missing elements are added in increasing index order.
    """
    rng = np.random.default_rng(seed)
    inside = rng.random(f.modulus) < f.values
    need = required_size(f.modulus, upsilon) - int(inside.sum())
    if need > 0:
        outside = np.flatnonzero(~inside)
        inside[outside[:need]] = True
    return ResidueSet.from_indicator(inside)


def affine_equivalent(S: ResidueSet, T: ResidueSet) -> tuple[int, int] | None:
    """Some ``(a, b)`` with ``a S + b = T`` and ``gcd(a, N) = 1``, or ``None``."""
    N = S.modulus
    if T.modulus != N or len(S) != len(T):
        return None
    for a in range(1, N):
        if math.gcd(a, N) != 1:
            continue
        for b in range(N):
            if S.affine_image(a, b) == T:
                return a, b
    return None
