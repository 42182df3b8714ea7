"""IFS attractors, coding maps, Bernoulli sampling, expanding walk maps, and
exact orbit identities.

The contracting system is f_i(x) = D^{-r_i} x + t_i for an expanding integer
matrix D; the matching walk maps are h_i(x) = D^{r_i}(x + t_i).  All identity
checks run on matched finite prefixes so both sides are exact Scalars; long
orbits for statistics use a fixed-point integer path whose precision budget
is computed from the word length.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from math import gcd
from typing import Sequence

import numpy as np

from .exactcore import (
    AdaptedNorm,
    IntMatrix,
    IrrationalBasis,
    Scalar,
    TorusPoint,
    adapted_norm,
    commute,
    is_expanding,
    mat_apply,
)

__all__ = [
    "AffineIFS",
    "AffineEndo",
    "Word",
    "NumericOrbit",
    "WindowUnavailableError",
    "PrecisionExceededError",
    "code_prefix",
    "coding_tail_bound",
    "sample_word",
    "walk_trajectory",
    "h_word_at_zero",
    "orbit_identity_check",
    "kappa_ell_s",
    "repetition_weight",
    "precision_budget",
    "walk_orbit_fixed",
    "code_prefix_fixed",
]

logger = logging.getLogger(__name__)

_Q0 = Fraction(0)


class WindowUnavailableError(ValueError):
    """Not enough symbols around the index to resolve the repetition count."""


class PrecisionExceededError(ArithmeticError):
    """Accumulated error exhausted the precision budget."""


@dataclass(frozen=True)
class Word:
    """Finite word over the alphabet {1, ..., k}."""

    letters: tuple[int, ...]
    alphabet: int

    def __post_init__(self) -> None:
        if any(not 1 <= a <= self.alphabet for a in self.letters):
            raise ValueError("letters out of range")

    def __len__(self) -> int:
        return len(self.letters)

    def __getitem__(self, i):
        return self.letters[i]


def _letters(w) -> tuple[int, ...]:
    return w.letters if isinstance(w, Word) else tuple(int(a) for a in w)


@dataclass(frozen=True)
class AffineEndo:
    """Affine toral endomorphism x -> Lx + offset (mod Z^d)."""

    linear: IntMatrix
    offset: tuple[Scalar, ...]

    def __post_init__(self) -> None:
        if self.linear.dimension != len(self.offset):
            raise ValueError("offset dimension does not match matrix")

    @property
    def dimension(self) -> int:
        return self.linear.dimension

    def __call__(self, point: TorusPoint) -> TorusPoint:
        img = self.linear.apply(point.coords)
        return TorusPoint([a + b for a, b in zip(img, self.offset)]).reduced()


@dataclass(frozen=True)
class AffineIFS:
    """Contracting system f_i(x) = D^{-r_i} x + t_i with selection law P.

    Exponents are normalized so gcd(r_1, ..., r_k) = 1, replacing D by the
    appropriate power when needed (a notice is logged).
    """

    d_matrix: IntMatrix
    exponents: tuple[int, ...]
    translations: tuple[TorusPoint, ...]
    probabilities: tuple[Fraction, ...]

    def __post_init__(self) -> None:
        k = len(self.exponents)
        if k == 0 or len(self.translations) != k or len(self.probabilities) != k:
            raise ValueError("exponents, translations, probabilities must align")
        if any(r < 1 for r in self.exponents):
            raise ValueError("exponents must be positive integers")
        d = self.d_matrix.dimension
        for t in self.translations:
            if t.dimension != d:
                raise ValueError("translation dimension mismatch")
        if any(p <= 0 for p in self.probabilities) or sum(self.probabilities) != 1:
            raise ValueError("probabilities must be positive and sum to 1")
        g = gcd(*self.exponents)
        if g > 1:
            logger.info("normalizing exponents by gcd %d (D -> D^%d)", g, g)
            object.__setattr__(self, "d_matrix", self.d_matrix ** g)
            object.__setattr__(
                self, "exponents", tuple(r // g for r in self.exponents)
            )
        if not is_expanding(self.d_matrix):
            raise ValueError("D must be expanding")

    @classmethod
    def create(
        cls,
        d_matrix,
        exponents: Sequence[int],
        translations,
        probabilities=None,
        basis: IrrationalBasis | None = None,
    ) -> "AffineIFS":
        """Convenience constructor accepting ints / nested lists / strings."""
        if isinstance(d_matrix, int):
            d_matrix = IntMatrix.from_rows([[d_matrix]])
        elif not isinstance(d_matrix, IntMatrix):
            d_matrix = IntMatrix.from_rows(d_matrix)
        k = len(exponents)
        if probabilities is None:
            probabilities = [Fraction(1, k)] * k
        trans = []
        for t in translations:
            if isinstance(t, TorusPoint):
                trans.append(t)
            elif isinstance(t, Scalar):
                trans.append(TorusPoint([t]))
            else:
                seq = t if isinstance(t, (list, tuple)) else [t]
                coords = []
                for c in seq:
                    if isinstance(c, Scalar):
                        coords.append(c)
                    else:
                        coords.append(
                            Scalar.rational(Fraction(c), basis or IrrationalBasis())
                        )
                trans.append(TorusPoint(coords))
        return cls(
            d_matrix,
            tuple(int(r) for r in exponents),
            tuple(trans),
            tuple(Fraction(p) for p in probabilities),
        )

    @property
    def alphabet(self) -> int:
        return len(self.exponents)

    @property
    def dimension(self) -> int:
        return self.d_matrix.dimension

    @property
    def basis(self) -> IrrationalBasis:
        return self.translations[0].basis

    @cached_property
    def adapted(self) -> AdaptedNorm:
        return adapted_norm([self.d_matrix])

    @cached_property
    def _inverse_powers(self) -> dict[int, tuple[tuple[Fraction, ...], ...]]:
        return {
            r: (self.d_matrix ** r).inverse_rational() for r in set(self.exponents)
        }

    def apply_map(self, letter: int, point: Sequence[Scalar]) -> list[Scalar]:
        """f_letter acting on a lift, exactly."""
        inv = self._inverse_powers[self.exponents[letter - 1]]
        img = mat_apply(inv, list(point))
        t = self.translations[letter - 1].coords
        return [a + b for a, b in zip(img, t)]

    def walk_maps(self) -> list[AffineEndo]:
        """The expanding companions h_i(x) = D^{r_i}(x + t_i)."""
        out = []
        for r, t in zip(self.exponents, self.translations):
            power = self.d_matrix ** r
            out.append(AffineEndo(power, tuple(power.apply(t.coords))))
        return out


# ---------------------------------------------------------------------------
# exact coding and orbit identities


def code_prefix(ifs: AffineIFS, w) -> list[Scalar]:
    """Exact lift of f_{w_1} o ... o f_{w_n}(0)."""
    letters = _letters(w)
    zero = Scalar.rational(0, ifs.basis)
    v: list[Scalar] = [zero] * ifs.dimension
    for a in reversed(letters):
        v = ifs.apply_map(a, v)
    return v


def coding_tail_bound(ifs: AffineIFS, n: int) -> float:
    """Adapted-norm distance bound between any coded point and the value of
    its length-n prefix: M * c^n with c the certified contraction factor."""
    if n < 0:
        raise ValueError("n must be >= 0")
    norm = ifs.adapted
    rmin = min(ifs.exponents)
    contraction = norm.rho_certified ** (-rmin)
    t_norms = []
    for t in ifs.translations:
        vec = np.array([float(c) for c in t.coords])
        t_norms.append(float(norm.norm(vec)))
    diameter = max(t_norms) / (1.0 - contraction) if max(t_norms) > 0 else 1.0
    return diameter * contraction ** n


def sample_word(ifs: AffineIFS, rng: np.random.Generator, n: int) -> Word:
    """n i.i.d. letters with law P from a seeded generator."""
    p = np.array([float(q) for q in ifs.probabilities])
    p /= p.sum()
    letters = rng.choice(np.arange(1, ifs.alphabet + 1), size=n, p=p)
    return Word(tuple(int(a) for a in letters), ifs.alphabet)


def walk_trajectory(
    endos: Sequence[AffineEndo], x0: TorusPoint, w
) -> list[TorusPoint]:
    """Exact points h_{w_n} o ... o h_{w_1}(x0) mod Z^d for n = 1..len(w)."""
    letters = _letters(w)
    if letters and not all(1 <= a <= len(endos) for a in letters):
        raise ValueError("letters must index the map family (1-based)")
    for i, a in enumerate(endos):
        for b in endos[i + 1 :]:
            if not commute(a.linear, b.linear):
                raise ValueError("walk maps must have commuting linear parts")
    out = []
    current = x0.reduced()
    for a in letters:
        current = endos[a - 1](current)
        out.append(current)
    return out


def h_word_at_zero(ifs: AffineIFS, w) -> TorusPoint:
    """Exact value of h_{w_n} o ... o h_{w_1}(0) via the power-sum formula
    sum_j D^{r_{w_j} + ... + r_{w_n}} t_{w_j} (independent of composition)."""
    letters = _letters(w)
    zero = Scalar.rational(0, ifs.basis)
    acc: list[Scalar] = [zero] * ifs.dimension
    suffix = 0  # r_{w_{j+1}} + ... + r_{w_n}, built from the right
    powers: dict[int, IntMatrix] = {}
    for a in reversed(letters):
        exp = suffix + ifs.exponents[a - 1]
        if exp not in powers:
            powers[exp] = ifs.d_matrix ** exp
        term = powers[exp].apply(ifs.translations[a - 1].coords)
        acc = [x + y for x, y in zip(acc, term)]
        suffix = exp
    return TorusPoint(acc).reduced()


def orbit_identity_check(ifs: AffineIFS, w, n: int) -> tuple[TorusPoint, TorusPoint]:
    """Both sides of D^{R_n} x = (walk sum) + (coded tail) on matched finite
    prefixes; with x, tail coded from the same word they are exactly equal
    mod Z^d."""
    letters = _letters(w)
    if not 0 <= n <= len(letters):
        raise ValueError("need 0 <= n <= len(word)")
    r_n = sum(ifs.exponents[a - 1] for a in letters[:n])
    x = code_prefix(ifs, letters)
    lhs = TorusPoint((ifs.d_matrix ** r_n).apply(x)).reduced()
    walk_part = h_word_at_zero(ifs, letters[:n])
    tail = TorusPoint(code_prefix(ifs, letters[n:]))
    rhs = (walk_part + tail).reduced()
    return lhs, rhs


# ---------------------------------------------------------------------------
# exponent bookkeeping for the general-exponent reduction


def kappa_ell_s(exponents: Sequence[int], w) -> tuple[int, int]:
    """(ell, s) with rbar(ell-1) < r_{w_1}+...+r_{w_n} <= rbar*ell and
    s = rbar*ell - sum, so Dbar^ell = D_{w_1}...D_{w_n} D^s exactly."""
    letters = _letters(w)
    rbar = max(exponents)
    total = sum(exponents[a - 1] for a in letters)
    ell = -(-total // rbar)  # ceil
    s = rbar * ell - total
    return ell, s


def repetition_weight(exponents: Sequence[int], w, n: int) -> Fraction:
    """Reciprocal multiplicity of ell at 1-based index n along the word.

    Raises WindowUnavailableError when the run of equal ell values may extend
    past the available symbols.
    """
    letters = _letters(w)
    if not 1 <= n <= len(letters):
        raise ValueError("index out of range")
    rbar = max(exponents)
    rmin = min(exponents)
    totals = [0]
    for a in letters:
        totals.append(totals[-1] + exponents[a - 1])
    ell = [-(-t // rbar) for t in totals[1:]]  # ell[m-1] for m = 1..len
    target = ell[n - 1]
    lo = n
    while lo > 1 and ell[lo - 2] == target:
        lo -= 1
    hi = n
    while hi < len(letters) and ell[hi] == target:
        hi += 1
    if hi == len(letters) and rbar * target - totals[hi] >= rmin:
        raise WindowUnavailableError(
            f"run of ell={target} may extend beyond the {len(letters)} known symbols"
        )
    return Fraction(1, hi - lo + 1)


# ---------------------------------------------------------------------------
# fixed-point numeric orbits


def precision_budget(
    matrices: Sequence[IntMatrix], steps: int, guard_bits: int = 96
) -> int:
    """Bits needed so a length-`steps` orbit keeps per-point error < 2^-32.

    Error grows by at most the max absolute row sum per step; the budget is
    ceil(steps * log2(amplification)) + guard_bits.
    """
    amp = 1
    for m in matrices:
        amp = max(amp, max(sum(abs(x) for x in row) for row in m.rows))
    if amp <= 1:
        return 64 + guard_bits
    return math.ceil(steps * math.log2(amp)) + guard_bits


@dataclass(frozen=True)
class NumericOrbit:
    """Float view of a certified fixed-point orbit."""

    points: np.ndarray  # (N, d) in [0, 1)
    error_bound: float  # uniform per-point bound
    precision_bits: int

    @property
    def dimension(self) -> int:
        return self.points.shape[1]


def _error_to_float(err_ulps: int, bits: int) -> float:
    if err_ulps <= 0:
        return 0.0
    shift = err_ulps.bit_length()
    return float(2.0 ** (shift - bits))


def walk_orbit_fixed(
    endos: Sequence[AffineEndo],
    x0: TorusPoint,
    w,
    guard_bits: int = 96,
    precision_bits: int | None = None,
) -> NumericOrbit:
    """Numeric trajectory of h_{w_n} o ... o h_{w_1}(x0) at certified precision.

    State is a vector of fixed-point integers modulo 2^p with p from
    precision_budget (or the explicit override); the initial rounding error
    is amplified explicitly and the run aborts if it ever threatens the
    guaranteed 2^-32 output accuracy.
    """
    letters = _letters(w)
    n_steps = len(letters)
    d = endos[0].dimension
    p = precision_bits or precision_budget([e.linear for e in endos], n_steps, guard_bits)
    if p < 64:
        raise ValueError("precision must be at least 64 bits")
    mask = (1 << p) - 1

    state: list[int] = []
    err = 1
    for s in x0.coords:
        x, e = s.fixed_point(p)
        state.append(x & mask)
        err = max(err, e)
    offsets: list[list[int]] = []
    offset_errs: list[int] = []
    amps: list[int] = []
    for endo in endos:
        off = []
        oe = 1
        for s in endo.offset:
            x, e = s.fixed_point(p)
            off.append(x)
            oe = max(oe, e)
        offsets.append(off)
        offset_errs.append(oe)
        amps.append(max(sum(abs(x) for x in row) for row in endo.linear.rows))

    out = np.empty((n_steps, d), dtype=float)
    errs_bits_limit = 1 << (p - 33)
    take = p - 53
    scale = float(2.0 ** -53)
    rows_list = [e.linear.rows for e in endos]
    for i, a in enumerate(letters):
        rows = rows_list[a - 1]
        off = offsets[a - 1]
        new = []
        for r in range(d):
            acc = off[r]
            row = rows[r]
            for c in range(d):
                m = row[c]
                if m:
                    acc += m * state[c]
            new.append(acc & mask)
        state = new
        err = err * amps[a - 1] + offset_errs[a - 1]
        if err >= errs_bits_limit:
            raise PrecisionExceededError(
                f"error budget exhausted at step {i + 1} of {n_steps}"
            )
        for r in range(d):
            out[i, r] = (state[r] >> take) * scale
    bound = _error_to_float(err, p) + d * 2.0 ** -53
    return NumericOrbit(points=out, error_bound=bound, precision_bits=p)


def code_prefix_fixed(ifs: AffineIFS, w, bits: int) -> tuple[int, int, int]:
    """Fixed-point value of a one-dimensional coded prefix.

    Returns (X, E, bits): X / 2^bits approximates f_{w_1} o...o f_{w_n}(0)
    with error at most E ulps (word-truncation error not included; see
    coding_tail_bound).
    """
    if ifs.dimension != 1:
        raise ValueError("fixed-point coding path is one-dimensional")
    letters = _letters(w)
    d_scalar = ifs.d_matrix.rows[0][0]
    t_fixed = []
    t_err = 1
    for t in ifs.translations:
        x, e = t.coords[0].fixed_point(bits)
        t_fixed.append(x)
        t_err = max(t_err, e)
    v = 0
    err = 0
    for a in reversed(letters):
        div = d_scalar ** ifs.exponents[a - 1]
        # floor division keeps |true - v| within 1 ulp for either sign of div
        v = v // div + t_fixed[a - 1]
        err = -(-err // abs(div)) + 1 + t_err
    return v, err, bits


def walk_letter_stream(
    probabilities: Sequence[Fraction], rng: np.random.Generator, n: int
) -> np.ndarray:
    """n i.i.d. 1-based letters with the given law (shared sampling helper)."""
    p = np.array([float(q) for q in probabilities])
    p /= p.sum()
    return rng.choice(np.arange(1, len(probabilities) + 1), size=n, p=p)
