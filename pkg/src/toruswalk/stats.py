"""Equidistribution diagnostics: Weyl sums, star discrepancy, digit-block
frequencies, and subsequence/Cesaro comparisons.

Orbit samples carry a per-point error bound from their producer; every
statistic refuses samples whose bound exceeds 2^-32.  Floating-point
reductions go through numpy's pairwise summation, so partial results combine
reproducibly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np

from .exactcore import NearIntegerError, Scalar

__all__ = [
    "OrbitSample",
    "SubsequenceReport",
    "KOKSMA_CONSTANT",
    "character_means",
    "weyl_sums",
    "star_discrepancy_1d",
    "extract_digits",
    "digits_from_fixed",
    "block_frequencies",
    "digit_block_freqs",
    "block_deviations",
    "all_blocks",
    "subsequence_compare",
    "compare_to_fourier",
    "koksma_bound",
]

ERROR_CEILING = 2.0 ** -32
#: constant in |S_N(k)| <= KOKSMA_CONSTANT * |k| * D_N^* (variation of e^{2 pi i k x})
KOKSMA_CONSTANT = 2.0 * math.pi


@dataclass(frozen=True)
class OrbitSample:
    """Numeric torus points with provenance.

    `points` has shape (N, d) with all coordinates in [0, 1); `error_bound`
    is a uniform per-point accuracy bound and must stay below 2^-32 for the
    statistics in this module to accept the sample.
    """

    points: np.ndarray
    error_bound: float
    precision_bits: int

    def __post_init__(self) -> None:
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.ndim != 2 or pts.shape[0] == 0:
            raise ValueError("points must be a nonempty (N, d) array")
        if np.any(pts < 0.0) or np.any(pts >= 1.0):
            raise ValueError("coordinates must lie in [0, 1)")
        object.__setattr__(self, "points", pts)

    @property
    def size(self) -> int:
        return self.points.shape[0]

    @property
    def dimension(self) -> int:
        return self.points.shape[1]

    def _require_accuracy(self) -> None:
        if not self.error_bound < ERROR_CEILING:
            raise ValueError(
                f"per-point error {self.error_bound:.3e} exceeds 2^-32; "
                "recompute the orbit at higher precision"
            )


def _frequency_grid(k_max: int, dim: int) -> list[tuple[int, ...]]:
    if k_max < 1:
        raise ValueError("K must be >= 1")
    if dim == 1:
        return [(k,) for k in range(-k_max, k_max + 1) if k != 0]
    grid: list[tuple[int, ...]] = []

    def rec(prefix: tuple[int, ...]) -> None:
        if len(prefix) == dim:
            if any(prefix):
                grid.append(prefix)
            return
        for k in range(-k_max, k_max + 1):
            rec(prefix + (k,))

    rec(())
    return grid


def character_means(sample: OrbitSample, k_max: int) -> dict[tuple[int, ...], complex]:
    """Empirical characters (1/N) sum e^{2 pi i k.x} for 0 < ||k||_inf <= K."""
    sample._require_accuracy()
    pts = sample.points
    out: dict[tuple[int, ...], complex] = {}
    if sample.dimension == 1:
        z = np.exp(2j * np.pi * pts[:, 0])
        power = np.ones_like(z)
        for k in range(1, k_max + 1):
            power = power * z
            mean = complex(np.mean(power))
            out[(k,)] = mean
            out[(-k,)] = mean.conjugate()
        return out
    for k in _frequency_grid(k_max, sample.dimension):
        phase = pts @ np.asarray(k, dtype=float)
        out[k] = complex(np.mean(np.exp(2j * np.pi * phase)))
    return out


def weyl_sums(sample: OrbitSample, k_max: int) -> dict[tuple[int, ...], float]:
    """|S_N(k)| for every nonzero k with ||k||_inf <= K."""
    return {k: abs(v) for k, v in character_means(sample, k_max).items()}


def star_discrepancy_1d(sample: OrbitSample) -> float:
    """Exact order-statistics star discrepancy of a 1-dim sample."""
    sample._require_accuracy()
    if sample.dimension != 1:
        raise ValueError("star discrepancy implemented for d = 1 only")
    xs = np.sort(sample.points[:, 0])
    n = len(xs)
    idx = np.arange(1, n + 1)
    return float(np.max(np.maximum(idx / n - xs, xs - (idx - 1) / n)))


def koksma_bound(k: int, discrepancy: float) -> float:
    """Denjoy-Koksma style bound on |S_N(k)| from the star discrepancy."""
    return KOKSMA_CONSTANT * abs(k) * discrepancy


# ---------------------------------------------------------------------------
# digits


def _digits_of_rational(value: Fraction, base: int, count: int) -> list[int]:
    num = value.numerator % value.denominator
    den = value.denominator
    out = []
    for _ in range(count):
        num *= base
        out.append(num // den)
        num %= den
    return out


def extract_digits(x: Scalar, base: int, count: int) -> list[int]:
    """First `count` greedy base-D digits of frac(x), certified.

    Rational scalars use exact long division after rejecting D-adic values
    (their expansion terminates, so no digit frequency statement applies).
    Irrational scalars run in fixed point at the orbit precision budget,
    refusing any digit the tracked error cannot certify.
    """
    if base < 2:
        raise ValueError("base must be >= 2")
    if count < 1:
        raise ValueError("need at least one digit")
    if x.is_rational():
        frac = x.rational_part
        frac = frac - (frac.numerator // frac.denominator)
        # pow(b, c, 1) == 0 covers frac == 0; otherwise den | base^count
        if pow(base, count, frac.denominator) == 0:
            raise ValueError(
                f"value is a base-{base} rational terminating within {count} digits"
            )
        return _digits_of_rational(frac, base, count)

    bits = math.ceil(count * math.log2(base)) + 96
    fixed, err = x.fixed_point(bits)
    digits, _ = digits_from_fixed(fixed, err, bits, base, count)
    return digits


def digits_from_fixed(
    fixed: int, err_ulps: int, bits: int, base: int, count: int
) -> tuple[list[int], np.ndarray]:
    """Certified digits of a fixed-point value, plus the orbit points.

    Returns (digits, points) where digits[m-1] = floor(D * frac(D^(m-1) x))
    and points[m-1] = frac(D^m x) as floats, for m = 1..count.  Raises
    NearIntegerError when the amplified error no longer certifies a digit.
    """
    mask = (1 << bits) - 1
    frac_fixed = fixed & mask
    err = max(1, err_ulps)
    take = bits - 53
    scale = 2.0 ** -53
    digits = []
    points = np.empty(count, dtype=float)
    for i in range(count):
        frac_fixed *= base
        err *= base
        digit = frac_fixed >> bits
        frac_fixed &= mask
        if frac_fixed < err or frac_fixed > mask - err:
            raise NearIntegerError(
                f"digit {i + 1} not certifiable at {bits} bits; raise precision"
            )
        digits.append(digit)
        points[i] = (frac_fixed >> take) * scale
    return digits, points


def block_frequencies(
    digits: Sequence[int], max_len: int
) -> dict[tuple[int, ...], float]:
    """Sliding-window frequencies of all blocks of length <= max_len."""
    count = len(digits)
    if max_len < 1 or max_len > count:
        raise ValueError("need 1 <= max_len <= len(digits)")
    freqs: dict[tuple[int, ...], float] = {}
    for length in range(1, max_len + 1):
        windows = count - length + 1
        counts: dict[tuple[int, ...], int] = {}
        for i in range(windows):
            block = tuple(digits[i : i + length])
            counts[block] = counts.get(block, 0) + 1
        for block, c in counts.items():
            freqs[block] = c / windows
    return freqs


def digit_block_freqs(
    x: Scalar, base: int, count: int, max_len: int
) -> dict[tuple[int, ...], float]:
    """Sliding-window frequencies of all digit blocks of length <= max_len
    among the first `count` digits of frac(x) in the given base."""
    return block_frequencies(extract_digits(x, base, count), max_len)


def block_deviations(
    freqs: Mapping[tuple[int, ...], float], base: int, max_len: int
) -> dict[int, float]:
    """Per-length max |observed - base^-len| over all blocks (absent = 0)."""
    out = {}
    for length in range(1, max_len + 1):
        expected = base ** -length
        worst = 0.0
        for block in all_blocks(base, length):
            worst = max(worst, abs(freqs.get(block, 0.0) - expected))
        out[length] = worst
    return out


def all_blocks(base: int, length: int):
    if length == 1:
        for d in range(base):
            yield (d,)
        return
    for rest in all_blocks(base, length - 1):
        for d in range(base):
            yield (d,) + rest


# ---------------------------------------------------------------------------
# subsequences and predicted coefficients


@dataclass(frozen=True)
class SubsequenceReport:
    modulus: int
    full: dict[tuple[int, ...], float]
    classes: tuple[dict[tuple[int, ...], float], ...]
    max_deviation: float


def subsequence_compare(sample: OrbitSample, p: int, k_max: int) -> SubsequenceReport:
    """Weyl sums of the full orbit against each residue-class subsequence
    (indices n = j mod p), reporting the worst absolute difference."""
    if p < 1:
        raise ValueError("p must be >= 1")
    if sample.size < p:
        raise ValueError("sample shorter than the modulus")
    full = weyl_sums(sample, k_max)
    classes = []
    worst = 0.0
    for j in range(p):
        sub = OrbitSample(
            points=sample.points[j::p],
            error_bound=sample.error_bound,
            precision_bits=sample.precision_bits,
        )
        ws = weyl_sums(sub, k_max)
        classes.append(ws)
        worst = max(worst, max(abs(ws[k] - full[k]) for k in full))
    return SubsequenceReport(
        modulus=p, full=full, classes=tuple(classes), max_deviation=worst
    )


def compare_to_fourier(sample: OrbitSample, coefficients, k_max: int) -> float:
    """max over 0 < |k| <= K of |empirical character - predicted coefficient|.

    One-dimensional: `coefficients` maps an integer n to an object with a
    `.value` complex attribute (a CoefficientFunction).
    """
    if sample.dimension != 1:
        raise ValueError("implemented for d = 1 only")
    means = character_means(sample, k_max)
    worst = 0.0
    for (k,), emp in means.items():
        worst = max(worst, abs(emp - coefficients(k).value))
    return worst
