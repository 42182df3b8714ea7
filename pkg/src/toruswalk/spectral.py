"""Fourier coefficients of atomic and self-similar Bernoulli measures,
convolution, exact-zero detection, and the index classification that routes
every nonzero frequency to a vanishing factor in the Haar counterexample.

Coefficient functions are lazy (n -> value) with memoization; values carry a
certified error bound and an `exact_zero` flag.  Exact zeros are detected
only through the equal-weight two-atom cosine criterion (n * (a2 - a1) *
D^-s in 1/2 + Z), which covers every exact claim needed; all other small
values are reported as numerically below the certified error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Sequence

import mpmath

__all__ = [
    "FourierValue",
    "DiscreteMeasure",
    "SelfSimilarSpec",
    "CoefficientFunction",
    "fourier_discrete",
    "fourier_selfsimilar",
    "convolve",
    "classify_index",
    "is_haar_up_to",
]

_Q0 = Fraction(0)
_HALF = Fraction(1, 2)


@dataclass(frozen=True)
class FourierValue:
    """One Fourier coefficient with certified absolute error."""

    value: complex
    error: float
    exact_zero: bool = False

    def provably_zero(self) -> bool:
        return self.exact_zero or abs(self.value) < self.error


def _frac(q: Fraction) -> Fraction:
    return q - (q.numerator // q.denominator)


def _character_sum(
    pairs: Iterable[tuple[Fraction, Fraction]], prec: int = 96
) -> complex:
    """sum w * e^{2 pi i a} for rational (w, a), at `prec` working bits."""
    with mpmath.workprec(prec):
        total = mpmath.mpc(0)
        two_pi = 2 * mpmath.pi
        for w, a in pairs:
            af = _frac(a)
            ang = two_pi * mpmath.mpf(af.numerator) / af.denominator
            weight = mpmath.mpf(w.numerator) / w.denominator
            total += weight * mpmath.mpc(mpmath.cos(ang), mpmath.sin(ang))
        return complex(total)


class DiscreteMeasure:
    """Finitely supported probability measure on T^1 with rational data."""

    __slots__ = ("atoms", "weights")

    def __init__(self, atoms: Sequence[Fraction], weights: Sequence[Fraction]):
        if len(atoms) != len(weights):
            raise ValueError("atoms and weights must align")
        merged: dict[Fraction, Fraction] = {}
        for a, w in zip(atoms, weights):
            w = Fraction(w)
            if w < 0:
                raise ValueError("weights must be nonnegative")
            if w == 0:
                continue
            key = _frac(Fraction(a))
            merged[key] = merged.get(key, _Q0) + w
        if not merged or sum(merged.values()) != 1:
            raise ValueError("weights must sum to 1")
        items = sorted(merged.items())
        self.atoms = tuple(a for a, _ in items)
        self.weights = tuple(w for _, w in items)

    @classmethod
    def point_mass(cls, atom: Fraction = _Q0) -> "DiscreteMeasure":
        return cls([atom], [Fraction(1)])

    @classmethod
    def uniform(cls, atoms: Sequence[Fraction]) -> "DiscreteMeasure":
        k = len(atoms)
        return cls(list(atoms), [Fraction(1, k)] * k)

    def fourier(self, n: int) -> FourierValue:
        return fourier_discrete(self, n)

    def coefficients(self) -> "CoefficientFunction":
        return CoefficientFunction(self.fourier, name="discrete")

    def __repr__(self) -> str:
        pairs = ", ".join(f"{a}:{w}" for a, w in zip(self.atoms, self.weights))
        return f"DiscreteMeasure({pairs})"


def fourier_discrete(measure: DiscreteMeasure, n: int) -> FourierValue:
    """Character average sum_j w_j e^{2 pi i n a_j} at high working precision.

    exact_zero fires on the equal-weight two-atom criterion
    n (a2 - a1) in 1/2 + Z.
    """
    if n == 0:
        return FourierValue(1.0 + 0j, 0.0, exact_zero=False)
    if len(measure.atoms) == 2 and measure.weights[0] == measure.weights[1]:
        gap = _frac((measure.atoms[1] - measure.atoms[0]) * n)
        if gap == _HALF:
            return FourierValue(0j, 0.0, exact_zero=True)
    val = _character_sum((w, a * n) for a, w in zip(measure.atoms, measure.weights))
    # the 96-bit internal sum is exact at this scale; the final conversion to
    # a 53-bit complex dominates the certified error
    return FourierValue(val, (len(measure.atoms) + 2) * 2.0 ** -52, exact_zero=False)


@dataclass(frozen=True)
class SelfSimilarSpec:
    """Bernoulli measure on the attractor of x -> x/D + Delta_i (1-dim).

    The Fourier transform is the infinite product over scales s >= 0 of the
    one-step character averages sum_i p_i e^{2 pi i n D^-s Delta_i}.
    """

    base: int
    atoms: tuple[Fraction, ...]
    weights: tuple[Fraction, ...]

    def __post_init__(self) -> None:
        if abs(self.base) < 2:
            raise ValueError("base must have absolute value >= 2")
        if len(self.atoms) != len(self.weights):
            raise ValueError("atoms and weights must align")
        if any(w <= 0 for w in self.weights) or sum(self.weights) != 1:
            raise ValueError("weights must be positive and sum to 1")

    @classmethod
    def create(cls, base: int, atoms, weights=None) -> "SelfSimilarSpec":
        atoms = tuple(Fraction(a) for a in atoms)
        if weights is None:
            weights = [Fraction(1, len(atoms))] * len(atoms)
        return cls(int(base), atoms, tuple(Fraction(w) for w in weights))

    def fourier(self, n: int, tol: float = 1e-9) -> FourierValue:
        return fourier_selfsimilar(self, n, tol)

    def coefficients(self, tol: float = 1e-9) -> "CoefficientFunction":
        return CoefficientFunction(lambda n: self.fourier(n, tol), name="selfsimilar")


def fourier_selfsimilar(spec: SelfSimilarSpec, n: int, tol: float = 1e-9) -> FourierValue:
    """Truncated infinite-product Fourier coefficient with certified tail.

    The factor at scale s differs from 1 by at most 2 pi |n| max|Delta| |D|^-s,
    so the truncation point S is chosen to make the neglected tail < tol.
    exact_zero fires when an equal-weight two-atom factor vanishes exactly.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if n == 0:
        return FourierValue(1.0 + 0j, 0.0, exact_zero=False)

    d_abs = abs(spec.base)
    delta_max = max(abs(a) for a in spec.atoms)
    if delta_max == 0:
        return FourierValue(1.0 + 0j, 0.0, exact_zero=False)

    # exact vanishing: some factor is an equal-weight antipodal pair
    if len(spec.atoms) == 2 and spec.weights[0] == spec.weights[1]:
        gap = (spec.atoms[1] - spec.atoms[0]) * n
        while abs(gap) >= _HALF:
            if (gap - _HALF).denominator == 1:
                return FourierValue(0j, 0.0, exact_zero=True)
            gap /= spec.base

    # truncation: sum_{s > S} 2 pi |n| delta_max |D|^-s < log1p(tol)
    lead = 2.0 * math.pi * abs(n) * float(delta_max)
    budget = math.log1p(tol)
    s_cut = 0
    while lead * d_abs ** (-s_cut - 1) / (1.0 - 1.0 / d_abs) >= budget:
        s_cut += 1

    prod = 1.0 + 0j
    scale = Fraction(n)
    for _ in range(s_cut + 1):
        factor = _character_sum(
            ((w, a * scale) for a, w in zip(spec.atoms, spec.weights))
        )
        prod *= factor
        scale /= spec.base
    tail_err = math.expm1(lead * d_abs ** (-s_cut - 1) / (1.0 - 1.0 / d_abs))
    # each factor arrives as a 53-bit complex; |factor| <= 1 keeps the
    # accumulated product rounding linear in the factor count
    round_err = (s_cut + 2) * (len(spec.atoms) + 2) * 2.0 ** -52
    return FourierValue(prod, tail_err + round_err, exact_zero=False)


class CoefficientFunction:
    """Lazy, memoized map n -> FourierValue.

    Memo insertion of identical values is idempotent, so concurrent readers
    are safe.
    """

    def __init__(self, fn: Callable[[int], FourierValue], name: str = ""):
        self._fn = fn
        self._memo: dict[int, FourierValue] = {}
        self.name = name

    def __call__(self, n: int) -> FourierValue:
        cached = self._memo.get(n)
        if cached is None:
            cached = self._fn(n)
            self._memo[n] = cached
        return cached

    @classmethod
    def haar(cls) -> "CoefficientFunction":
        return cls(
            lambda n: FourierValue(1.0 + 0j, 0.0)
            if n == 0
            else FourierValue(0j, 0.0, exact_zero=True),
            name="haar",
        )


def convolve(fa: CoefficientFunction, fb: CoefficientFunction) -> CoefficientFunction:
    """Coefficients of the convolution: pointwise product; exact zeros OR."""

    def fn(n: int) -> FourierValue:
        a = fa(n)
        if a.exact_zero:
            return FourierValue(0j, 0.0, exact_zero=True)
        b = fb(n)
        if b.exact_zero:
            return FourierValue(0j, 0.0, exact_zero=True)
        err = abs(a.value) * b.error + abs(b.value) * a.error + a.error * b.error
        return FourierValue(a.value * b.value, err, exact_zero=False)

    name = f"({fa.name})*({fb.name})"
    return CoefficientFunction(fn, name=name)


def classify_index(w: int) -> tuple[int, str, int]:
    """Unique (k, type, m) with w = 4^k (2m+1) or w = 4^k (4m+2), w != 0."""
    if w == 0:
        raise ValueError("index must be nonzero")
    k = 0
    while w % 4 == 0:
        w //= 4
        k += 1
    if w % 2:
        return k, "odd", (w - 1) // 2
    return k, "twice_odd", (w - 2) // 4


def is_haar_up_to(f: CoefficientFunction, n_max: int) -> bool:
    """True iff f(0) = 1 and every 1 <= |n| <= n_max coefficient is provably 0."""
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    zero = f(0)
    if abs(zero.value - 1.0) > max(zero.error, 1e-12):
        return False
    for n in range(1, n_max + 1):
        if not f(n).provably_zero() or not f(-n).provably_zero():
            return False
    return True
