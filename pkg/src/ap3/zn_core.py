"""Fourier analysis on Z_N and the three-term progression density Lambda_3.

Conventions: the forward transform is ``F(a) = sum_n f(n) exp(+2 pi i a n / N)``
and the inverse is ``f(n) = N^-1 sum_a exp(-2 pi i a n / N) F(a)``.  Both are
computed with numpy's FFT (``F = N * ifft(f)``, ``f = fft(F) / N``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property, lru_cache
from typing import Iterable, Sequence

import numpy as np

TRANSFORM_TOL = 1e-9
EXACT_TOL = 1e-12
# slack for values that land a few ulps outside their declared range
RANGE_SLACK = 1e-12


class DegenerateFunctionError(ValueError):
    """Raised when an operation needs positive mass and gets none."""


class CrossCheckError(ArithmeticError):
    """Two evaluation routes that must agree did not."""


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Real-valued function on Z_N together with a promised value range."""

    modulus: int
    values: np.ndarray
    declared_range: tuple[float, float] = (0.0, 1.0)

    def __post_init__(self):
        vals = np.array(self.values, dtype=float).reshape(-1)
        if self.modulus < 2:
            raise ValueError(f"modulus must be >= 2, got {self.modulus}")
        if vals.shape[0] != self.modulus:
            raise ValueError(
                f"expected {self.modulus} values, got {vals.shape[0]}")
        if not np.all(np.isfinite(vals)):
            raise ValueError("values must be finite")
        lo, hi = (float(x) for x in self.declared_range)
        if lo > hi:
            raise ValueError(f"empty declared range [{lo}, {hi}]")
        if vals.min() < lo - RANGE_SLACK or vals.max() > hi + RANGE_SLACK:
            raise ValueError(
                f"values span [{vals.min():.6g}, {vals.max():.6g}], "
                f"outside declared range [{lo:.6g}, {hi:.6g}]")
        vals = np.clip(vals, lo, hi)
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "declared_range", (lo, hi))

    @classmethod
    def from_values(cls, values, declared_range=None) -> "GridFunction":
        """Build from raw values; the range defaults to the actual extent."""
        vals = np.asarray(values, dtype=float)
        if declared_range is None:
            declared_range = (float(vals.min()), float(vals.max()))
        return cls(len(vals), vals, declared_range)

    @classmethod
    def constant(cls, modulus: int, c: float) -> "GridFunction":
        return cls(modulus, np.full(modulus, float(c)),
                   (min(0.0, c), max(1.0, c)))

    def __len__(self):
        return self.modulus

    def to_json(self) -> dict:
        return {"modulus": self.modulus,
                "values": [float(v) for v in self.values],
                "declared_range": list(self.declared_range)}

    @classmethod
    def from_json(cls, obj: dict) -> "GridFunction":
        values = obj["values"]
        if int(obj["modulus"]) != len(values):
            raise ValueError(
                f"modulus {obj['modulus']} does not match {len(values)} values")
        rng = obj.get("declared_range")
        return cls.from_values(values, tuple(rng) if rng else None)


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Fourier coefficients ``F(a)`` for ``a`` in Z_N."""

    modulus: int
    coefficients: np.ndarray

    def __post_init__(self):
        coeffs = np.array(self.coefficients, dtype=complex).reshape(-1)
        if coeffs.shape[0] != self.modulus:
            raise ValueError(
                f"expected {self.modulus} coefficients, got {coeffs.shape[0]}")
        coeffs.setflags(write=False)
        object.__setattr__(self, "coefficients", coeffs)

    def __getitem__(self, a: int) -> complex:
        return complex(self.coefficients[a % self.modulus])

    def is_conjugate_symmetric(self, tol: float = TRANSFORM_TOL) -> bool:
        c = self.coefficients
        mirrored = np.conj(c[(-np.arange(self.modulus)) % self.modulus])
        return bool(np.max(np.abs(c - mirrored)) <= tol * self.modulus)

    def to_json(self) -> dict:
        return {"modulus": self.modulus,
                "coefficients": [[float(z.real), float(z.imag)]
                                 for z in self.coefficients]}


@dataclass(frozen=True)
class ResidueSet:
    """A subset of Z_N, stored as its sorted members."""

    modulus: int
    members: tuple[int, ...] = field(default_factory=tuple)

    def __post_init__(self):
        if self.modulus < 1:
            raise ValueError(f"modulus must be positive, got {self.modulus}")
        mem = tuple(sorted(int(x) for x in self.members))
        if any(x < 0 or x >= self.modulus for x in mem):
            raise ValueError(f"members must lie in [0, {self.modulus})")
        if any(a == b for a, b in zip(mem, mem[1:])):
            raise ValueError("members must be distinct")
        object.__setattr__(self, "members", mem)

    @classmethod
    def from_residues(cls, modulus: int, residues: Iterable[int]) -> "ResidueSet":
        """Reduce arbitrary integers mod N and drop duplicates."""
        return cls(modulus, tuple(sorted({int(x) % modulus for x in residues})))

    @classmethod
    def full(cls, modulus: int) -> "ResidueSet":
        return cls(modulus, tuple(range(modulus)))

    @classmethod
    def from_indicator(cls, indicator) -> "ResidueSet":
        ind = np.asarray(indicator)
        return cls(len(ind), tuple(int(i) for i in np.flatnonzero(ind)))

    def __len__(self):
        return len(self.members)

    def __contains__(self, x):
        return (int(x) % self.modulus) in self._lookup

    def __iter__(self):
        return iter(self.members)

    @cached_property
    def _lookup(self) -> frozenset:
        return frozenset(self.members)

    @property
    def density(self) -> Fraction:
        return Fraction(len(self.members), self.modulus)

    def indicator(self) -> np.ndarray:
        ind = np.zeros(self.modulus, dtype=np.int64)
        ind[list(self.members)] = 1
        return ind

    def as_function(self) -> GridFunction:
        return GridFunction(self.modulus, self.indicator().astype(float))

    def complement(self) -> "ResidueSet":
        inside = self._lookup
        return ResidueSet(self.modulus,
                          tuple(x for x in range(self.modulus) if x not in inside))

    def dilate(self, k: int) -> "ResidueSet":
        return ResidueSet.from_residues(self.modulus, (k * x for x in self.members))

    def affine_image(self, a: int, b: int) -> "ResidueSet":
        return ResidueSet.from_residues(self.modulus,
                                        (a * x + b for x in self.members))

    def to_json(self) -> dict:
        return {"modulus": self.modulus, "members": list(self.members)}

    @classmethod
    def from_json(cls, obj: dict) -> "ResidueSet":
        return cls(int(obj["modulus"]), tuple(obj["members"]))


def fraction_to_json(q: Fraction) -> dict:
    return {"num": q.numerator, "den": q.denominator, "decimal": float(q)}


def fraction_from_json(obj: dict) -> Fraction:
    return Fraction(int(obj["num"]), int(obj["den"]))


def load_input(obj: dict) -> GridFunction | ResidueSet:
    """Parse a JSON object as a ResidueSet (``members``) or GridFunction (``values``)."""
    if "members" in obj:
        return ResidueSet.from_json(obj)
    if "values" in obj:
        return GridFunction.from_json(obj)
    raise ValueError("input needs either 'members' or 'values'")


def signed_residue(x, modulus: int):
    """Representative of ``x mod modulus`` in ``(-modulus/2, modulus/2]``."""
    r = np.mod(x, modulus)
    if isinstance(r, np.ndarray):
        return np.where(2 * r > modulus, r - modulus, r)
    return int(r - modulus) if 2 * r > modulus else int(r)


def _values(f) -> np.ndarray:
    return f.values if isinstance(f, GridFunction) else np.asarray(f, dtype=float)


def dft(f: GridFunction) -> Spectrum:
    """Forward transform ``F(a) = sum_n f(n) e^{2 pi i a n / N}``."""
    vals = _values(f)
    n = len(vals)
    return Spectrum(n, n * np.fft.ifft(vals))


def idft(spectrum: Spectrum, tol: float = TRANSFORM_TOL) -> GridFunction:
    """Inverse transform; the spectrum must come from a real function."""
    vals = np.fft.fft(spectrum.coefficients) / spectrum.modulus
    if np.max(np.abs(vals.imag), initial=0.0) > tol:
        raise ValueError("spectrum is not conjugate symmetric; inverse is not real")
    return GridFunction.from_values(vals.real)


def expectation(f) -> float:
    return float(np.mean(_values(f)))


def norm(f, t: float = 2.0) -> float:
    """``(E|f|^t)^{1/t}`` under the uniform probability measure."""
    if t < 1:
        raise ValueError(f"norm exponent must be >= 1, got {t}")
    vals = np.abs(_values(f))
    if math.isinf(t):
        return float(vals.max())
    return float(np.mean(vals ** t) ** (1.0 / t))


@lru_cache(maxsize=64)
def _progression_indices(n: int) -> tuple[np.ndarray, np.ndarray]:
    base = np.arange(n)
    idx1 = (base[:, None] + base[None, :]) % n
    idx2 = (base[:, None] + 2 * base[None, :]) % n
    idx1.setflags(write=False)
    idx2.setflags(write=False)
    return idx1, idx2


def lambda3_direct(f) -> float:
    """``N^-2 sum_{n,d} f(n) f(n+d) f(n+2d)`` over all N^2 pairs."""
    vals = _values(f)
    n = len(vals)
    idx1, idx2 = _progression_indices(n)
    total = np.sum(vals[:, None] * vals[idx1] * vals[idx2])
    return float(total) / n ** 2


def lambda3_spectral(f, tol: float = TRANSFORM_TOL) -> float:
    """``N^-3 sum_a F(a)^2 F(-2a)``; the imaginary residue must vanish."""
    vals = _values(f)
    n = len(vals)
    coeffs = n * np.fft.ifft(vals)
    total = np.sum(coeffs ** 2 * coeffs[(-2 * np.arange(n)) % n]) / n ** 3
    if abs(total.imag) > tol:
        raise CrossCheckError(
            f"spectral Lambda_3 has imaginary part {total.imag:.3e}")
    return float(total.real)


def lambda3_from_spectrum(spectrum: Spectrum) -> complex:
    c = spectrum.coefficients
    n = spectrum.modulus
    return complex(np.sum(c ** 2 * c[(-2 * np.arange(n)) % n]) / n ** 3)


def cyclic_autoconvolution(members: Sequence[int], modulus: int) -> np.ndarray:
    """Exact ``r(n) = #{(s1, s2) in S x S : s1 + s2 = n mod N}``.

    Uses Kronecker substitution: the indicator is packed into one big integer
    with fixed-width digits, squared with Python's integer multiply, and
    unpacked.  No floating point is involved.
    """
    members = np.asarray(members, dtype=np.int64)
    out = np.zeros(modulus, dtype=np.int64)
    k = len(members)
    if k == 0:
        return out
    # linear-convolution coefficients are at most k
    width = max(1, (k.bit_length() + 7) // 8)
    packed = np.zeros(modulus * width, dtype=np.uint8)
    packed[members * width] = 1
    x = int.from_bytes(packed.tobytes(), "little")
    sq = x * x
    raw = np.frombuffer(sq.to_bytes(2 * modulus * width, "little"), dtype=np.uint8)
    digits = raw.reshape(2 * modulus, width).astype(np.int64)
    linear = digits @ (256 ** np.arange(width, dtype=np.int64))
    out += linear[:modulus]
    out += linear[modulus:]
    return out


def progression_count(S: ResidueSet) -> int:
    """Number of pairs (n, d) with n, n+d, n+2d all in S (d = 0 included).

    Each progression is determined by its first two terms x, y, the third
    being 2y - x, so the count is ``sum_{y in S} r(2y)``.
    """
    if not S.members:
        return 0
    r = cyclic_autoconvolution(S.members, S.modulus)
    mids = (2 * np.asarray(S.members, dtype=np.int64)) % S.modulus
    return int(r[mids].sum())


def lambda3_exact(S: ResidueSet) -> Fraction:
    return Fraction(progression_count(S), S.modulus ** 2)
