"""Exact scalar arithmetic over the rationals extended by declared irrational
constants, integer matrices, expansion testing, and the adapted norm for
commuting expanding families.

Scalars are linear combinations q0 + q1*theta1 + ... with rational q_i over a
declared basis of irrational symbols.  Addition, negation, multiplication by
rationals and the action of rational matrices are closed and exact; numeric
values are produced on demand at any requested bit precision together with a
certified error bound.  Linear independence of {1, theta1, ...} over Q is
*declared*, never proved.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Sequence

import numpy as np

__all__ = [
    "BasisMismatchError",
    "NearIntegerError",
    "IndeterminateExpansionError",
    "IrrationalBasis",
    "Scalar",
    "TorusPoint",
    "IntMatrix",
    "AdaptedNorm",
    "register_irrational",
    "resolve_evaluator",
    "scalar_add",
    "scalar_scale",
    "mat_apply",
    "evaluate",
    "fractional_part",
    "is_expanding",
    "commute",
    "adapted_norm",
    "parse_scalar",
    "format_scalar",
]

Rational = Fraction | int
#: An evaluator maps a bit precision p >= 1 to (approximation, error bound),
#: both Fractions, with bound <= 2**(1-p).
Evaluator = Callable[[int], tuple[Fraction, Fraction]]


class BasisMismatchError(ValueError):
    """Operands do not share one IrrationalBasis."""


class NearIntegerError(ArithmeticError):
    """Value indistinguishable from an integer at the requested precision.

    The caller should retry at higher precision.
    """


class IndeterminateExpansionError(ArithmeticError):
    """An eigenvalue modulus lies within the decision margin of 1."""


# ---------------------------------------------------------------------------
# evaluator registry


def _sqrt_evaluator(n: int) -> Evaluator:
    def ev(p: int) -> tuple[Fraction, Fraction]:
        if p < 1:
            raise ValueError("precision must be >= 1 bit")
        # floor(2^p * sqrt(n)) is exact; the truncation error is < 2^-p.
        num = math.isqrt(n << (2 * p))
        return Fraction(num, 1 << p), Fraction(1, 1 << p)

    return ev


def _mpmath_evaluator(expr: str) -> Evaluator:
    def ev(p: int) -> tuple[Fraction, Fraction]:
        if p < 1:
            raise ValueError("precision must be >= 1 bit")
        import mpmath

        with mpmath.workprec(p + 16):
            sign, man, exp, _ = mpmath.mpf(getattr(mpmath, expr))._mpf_
        approx = Fraction(man) * Fraction(2) ** exp
        if sign:
            approx = -approx
        # mpmath constants are correct to within a few ulps at p+16 bits.
        return approx, Fraction(1, 1 << p)

    return ev


_REGISTRY: dict[str, Evaluator] = {
    "pi": _mpmath_evaluator("pi"),
    "e": _mpmath_evaluator("e"),
    "phi": _mpmath_evaluator("phi"),
}

_SQRT_NAME = re.compile(r"^sqrt([0-9]+)$")


def register_irrational(name: str, evaluator: Evaluator) -> None:
    """Register a named irrational constant with a certified evaluator."""
    if not name.isidentifier():
        raise ValueError(f"invalid symbol name {name!r}")
    _REGISTRY[name] = evaluator


def resolve_evaluator(name: str) -> Evaluator:
    """Look up an evaluator: registered names plus the sqrtN family."""
    if name in _REGISTRY:
        return _REGISTRY[name]
    m = _SQRT_NAME.match(name)
    if m:
        n = int(m.group(1))
        if n <= 0 or math.isqrt(n) ** 2 == n:
            raise ValueError(f"{name}: argument is a perfect square, not irrational")
        ev = _sqrt_evaluator(n)
        _REGISTRY[name] = ev
        return ev
    raise KeyError(f"unknown irrational symbol {name!r}")


# ---------------------------------------------------------------------------
# basis and scalars


@dataclass(frozen=True)
class IrrationalBasis:
    """A declared, Q-independent family of named irrational constants."""

    symbols: tuple[str, ...] = ()
    independence_declared: bool = True

    def __post_init__(self) -> None:
        if len(set(self.symbols)) != len(self.symbols):
            raise ValueError("symbol names must be unique")
        for name in self.symbols:
            resolve_evaluator(name)  # fail fast on unknown names

    def index(self, name: str) -> int:
        return self.symbols.index(name)

    def __len__(self) -> int:
        return len(self.symbols)


EMPTY_BASIS = IrrationalBasis()

_Q0 = Fraction(0)
_Q1 = Fraction(1)


@dataclass(frozen=True)
class Scalar:
    """Exact element a0 + a1*theta1 + ... over a shared IrrationalBasis.

    coeffs[0] is the rational part; coeffs[1 + i] multiplies basis.symbols[i].
    """

    basis: IrrationalBasis
    coeffs: tuple[Fraction, ...]

    def __post_init__(self) -> None:
        if len(self.coeffs) != 1 + len(self.basis):
            raise ValueError("coefficient count does not match basis size")

    # -- construction -------------------------------------------------------

    @classmethod
    def rational(cls, q: Rational, basis: IrrationalBasis = EMPTY_BASIS) -> "Scalar":
        coeffs = (Fraction(q),) + (_Q0,) * len(basis)
        return cls(basis, coeffs)

    @classmethod
    def symbol(cls, name: str, basis: IrrationalBasis, coeff: Rational = 1) -> "Scalar":
        i = basis.index(name)
        coeffs = [_Q0] * (1 + len(basis))
        coeffs[1 + i] = Fraction(coeff)
        return cls(basis, tuple(coeffs))

    # -- structure ----------------------------------------------------------

    @property
    def rational_part(self) -> Fraction:
        return self.coeffs[0]

    @property
    def irrational_coeffs(self) -> tuple[Fraction, ...]:
        return self.coeffs[1:]

    def is_rational(self) -> bool:
        return all(c == 0 for c in self.coeffs[1:])

    def _check_basis(self, other: "Scalar") -> None:
        if self.basis.symbols != other.basis.symbols:
            raise BasisMismatchError(
                f"bases differ: {self.basis.symbols} vs {other.basis.symbols}"
            )

    def _coerce(self, value: "Scalar | Rational") -> "Scalar":
        if isinstance(value, Scalar):
            self._check_basis(value)
            return value
        return Scalar.rational(value, self.basis)

    # -- exact arithmetic ---------------------------------------------------

    def __add__(self, other: "Scalar | Rational") -> "Scalar":
        o = self._coerce(other)
        return Scalar(self.basis, tuple(a + b for a, b in zip(self.coeffs, o.coeffs)))

    __radd__ = __add__

    def __sub__(self, other: "Scalar | Rational") -> "Scalar":
        o = self._coerce(other)
        return Scalar(self.basis, tuple(a - b for a, b in zip(self.coeffs, o.coeffs)))

    def __rsub__(self, other: "Scalar | Rational") -> "Scalar":
        return (-self) + other

    def __neg__(self) -> "Scalar":
        return Scalar(self.basis, tuple(-a for a in self.coeffs))

    def __mul__(self, q: Rational) -> "Scalar":
        if isinstance(q, Scalar):
            if q.is_rational():
                q = q.rational_part
            else:
                raise TypeError("Scalar*Scalar is not closed; scale by rationals only")
        q = Fraction(q)
        return Scalar(self.basis, tuple(a * q for a in self.coeffs))

    __rmul__ = __mul__

    def __truediv__(self, q: Rational) -> "Scalar":
        return self * (Fraction(1) / Fraction(q))

    # -- numerics -----------------------------------------------------------

    def evaluate(self, p: int) -> tuple[Fraction, Fraction]:
        """Dyadic approximation and certified error bound at p bits.

        The bound satisfies err <= 2**(1-p) * (1 + sum |coeffs|).
        """
        if p < 8:
            raise ValueError("precision must be >= 8 bits")
        val = self.coeffs[0]
        err = _Q0
        for name, c in zip(self.basis.symbols, self.coeffs[1:]):
            if c == 0:
                continue
            a, e = resolve_evaluator(name)(p)
            val += c * a
            err += abs(c) * e
        return val, err

    def fixed_point(self, bits: int) -> tuple[int, int]:
        """(X, E): X/2^bits approximates the value with error <= E ulps."""
        val, err = self.evaluate(bits + 8)
        scaled = val * (1 << bits)
        x = scaled.numerator // scaled.denominator
        e = err * (1 << bits)
        return x, 1 + (e.numerator // e.denominator) + 1

    def __float__(self) -> float:
        val, _ = self.evaluate(64)
        return float(val)

    def __str__(self) -> str:
        return format_scalar(self)


# ---------------------------------------------------------------------------
# module-level operation surface


def scalar_add(a: Scalar, b: Scalar) -> Scalar:
    return a + b


def scalar_scale(q: Rational, a: Scalar) -> Scalar:
    return a * q


def mat_apply(
    matrix: Sequence[Sequence[Rational]], vector: Sequence[Scalar]
) -> list[Scalar]:
    """Apply a rational matrix to a vector of Scalars, exactly."""
    if not vector:
        return []
    basis = vector[0].basis
    for v in vector[1:]:
        if v.basis.symbols != basis.symbols:
            raise BasisMismatchError("vector entries use different bases")
    out = []
    for row in matrix:
        if len(row) != len(vector):
            raise ValueError("matrix row length does not match vector length")
        acc = Scalar.rational(0, basis)
        for m, v in zip(row, vector):
            if m:
                acc = acc + v * m
        out.append(acc)
    return out


def evaluate(a: Scalar, p: int) -> tuple[Fraction, Fraction]:
    return a.evaluate(p)


def fractional_part(a: Scalar, p: int = 64) -> Fraction:
    """Fractional part of a Scalar with error <= 2**(4-p).

    Rational scalars take an exact path.  Otherwise the value is evaluated at
    a working precision chosen so the result carries the stated bound; if the
    value is closer than 2**(4-p) to an integer the call refuses rather than
    guess, and the caller should raise p.
    """
    if a.is_rational():
        q = a.rational_part
        return q - (q.numerator // q.denominator)
    if p < 8:
        raise ValueError("precision must be >= 8 bits")
    size = 1 + sum(abs(c) for c in a.coeffs)
    extra = max(8, size.numerator.bit_length() + 6)
    val, err = a.evaluate(p + extra)
    # err <= 2**(1-p-extra) * size <= 2**(-p-5)
    frac = val - (val.numerator // val.denominator)
    guard = Fraction(1, 1 << (p - 4))
    if frac <= guard or 1 - frac <= guard:
        raise NearIntegerError(
            f"value within 2^{4 - p} of an integer at precision {p}; raise p"
        )
    return frac


# ---------------------------------------------------------------------------
# integer matrices


@dataclass(frozen=True)
class IntMatrix:
    """Square integer matrix with exact products, powers and inverses."""

    rows: tuple[tuple[int, ...], ...]

    def __post_init__(self) -> None:
        d = len(self.rows)
        if d == 0 or any(len(r) != d for r in self.rows):
            raise ValueError("matrix must be square and nonempty")

    @classmethod
    def from_rows(cls, rows: Iterable[Iterable[int]]) -> "IntMatrix":
        return cls(tuple(tuple(int(x) for x in r) for r in rows))

    @classmethod
    def identity(cls, d: int) -> "IntMatrix":
        return cls(tuple(tuple(1 if i == j else 0 for j in range(d)) for i in range(d)))

    @classmethod
    def scalar(cls, value: int, d: int = 1) -> "IntMatrix":
        return cls(tuple(tuple(value if i == j else 0 for j in range(d)) for i in range(d)))

    @property
    def dimension(self) -> int:
        return len(self.rows)

    def __matmul__(self, other: "IntMatrix") -> "IntMatrix":
        if self.dimension != other.dimension:
            raise ValueError("dimension mismatch")
        d = self.dimension
        ot = tuple(zip(*other.rows))
        return IntMatrix(
            tuple(
                tuple(sum(a * b for a, b in zip(row, col)) for col in ot)
                for row in self.rows
            )
        )

    def __pow__(self, n: int) -> "IntMatrix":
        if n < 0:
            raise ValueError("negative powers are rational; use inverse_rational")
        result = IntMatrix.identity(self.dimension)
        base = self
        while n:
            if n & 1:
                result = result @ base
            base = base @ base
            n >>= 1
        return result

    def __add__(self, other: "IntMatrix") -> "IntMatrix":
        return IntMatrix(
            tuple(tuple(a + b for a, b in zip(r, s)) for r, s in zip(self.rows, other.rows))
        )

    def __sub__(self, other: "IntMatrix") -> "IntMatrix":
        return IntMatrix(
            tuple(tuple(a - b for a, b in zip(r, s)) for r, s in zip(self.rows, other.rows))
        )

    def det(self) -> int:
        """Exact determinant by fraction-free (Bareiss) elimination."""
        d = self.dimension
        m = [list(r) for r in self.rows]
        sign = 1
        prev = 1
        for k in range(d - 1):
            if m[k][k] == 0:
                for i in range(k + 1, d):
                    if m[i][k] != 0:
                        m[k], m[i] = m[i], m[k]
                        sign = -sign
                        break
                else:
                    return 0
            for i in range(k + 1, d):
                for j in range(k + 1, d):
                    m[i][j] = (m[i][j] * m[k][k] - m[i][k] * m[k][j]) // prev
                m[i][k] = 0
            prev = m[k][k]
        return sign * m[-1][-1]

    def inverse_rational(self) -> tuple[tuple[Fraction, ...], ...]:
        """Exact inverse as a Fraction matrix (Gauss-Jordan over Q)."""
        d = self.dimension
        aug = [
            [Fraction(x) for x in row] + [Fraction(int(i == j)) for j in range(d)]
            for i, row in enumerate(self.rows)
        ]
        for col in range(d):
            piv = next((r for r in range(col, d) if aug[r][col] != 0), None)
            if piv is None:
                raise ZeroDivisionError("matrix is singular")
            aug[col], aug[piv] = aug[piv], aug[col]
            inv = 1 / aug[col][col]
            aug[col] = [x * inv for x in aug[col]]
            for r in range(d):
                if r != col and aug[r][col] != 0:
                    f = aug[r][col]
                    aug[r] = [x - f * y for x, y in zip(aug[r], aug[col])]
        return tuple(tuple(row[d:]) for row in aug)

    def apply(self, vector: Sequence[Scalar]) -> list[Scalar]:
        return mat_apply(self.rows, vector)

    def apply_fractions(self, vector: Sequence[Fraction]) -> list[Fraction]:
        return [sum((Fraction(m) * v for m, v in zip(row, vector)), _Q0) for row in self.rows]

    def max_abs_entry(self) -> int:
        return max(abs(x) for row in self.rows for x in row)

    def commutes_with(self, other: "IntMatrix") -> bool:
        return (self @ other).rows == (other @ self).rows

    def as_array(self) -> np.ndarray:
        return np.array(self.rows, dtype=float)

    def __str__(self) -> str:
        return "[" + "; ".join(" ".join(str(x) for x in r) for r in self.rows) + "]"


def commute(a: IntMatrix, b: IntMatrix) -> bool:
    """Exact test of AB = BA."""
    if a.dimension != b.dimension:
        raise ValueError("dimension mismatch")
    return a.commutes_with(b)


_EXPANSION_MARGIN = 1e-9


def is_expanding(d_matrix: IntMatrix, margin: float = _EXPANSION_MARGIN) -> bool:
    """True iff every complex eigenvalue has modulus > 1.

    Integer-decidable obstructions (|det| < 2, or a root-of-unity eigenvalue
    detected by det(D^k - I) = 0 for k <= 12) return False exactly; the rest
    is decided numerically with the given margin, raising
    IndeterminateExpansionError inside the margin band.
    """
    if abs(d_matrix.det()) < 2:
        # all moduli > 1 forces |det| > 1 and det is an integer
        return False
    ident = IntMatrix.identity(d_matrix.dimension)
    power = ident
    for _ in range(12):
        power = power @ d_matrix
        if (power - ident).det() == 0:
            return False  # eigenvalue is a root of unity, modulus exactly 1
    eig = np.linalg.eigvals(d_matrix.as_array())
    low = float(np.min(np.abs(eig)))
    if low > 1.0 + margin:
        return True
    if low < 1.0 - margin:
        return False
    raise IndeterminateExpansionError(
        f"minimal eigenvalue modulus {low!r} within {margin} of 1"
    )


# ---------------------------------------------------------------------------
# torus points


class TorusPoint:
    """Vector of Scalars with mod-Z^d semantics.

    Equality is exact equality mod Z^d: identical irrational coefficient
    vectors and rational parts differing by integers.
    """

    __slots__ = ("coords",)

    def __init__(self, coords: Sequence[Scalar]):
        coords = tuple(coords)
        if not coords:
            raise ValueError("dimension must be >= 1")
        basis = coords[0].basis
        for c in coords[1:]:
            if c.basis.symbols != basis.symbols:
                raise BasisMismatchError("coordinates use different bases")
        self.coords = coords

    @classmethod
    def from_rationals(
        cls, values: Sequence[Rational], basis: IrrationalBasis = EMPTY_BASIS
    ) -> "TorusPoint":
        return cls([Scalar.rational(v, basis) for v in values])

    @property
    def dimension(self) -> int:
        return len(self.coords)

    @property
    def basis(self) -> IrrationalBasis:
        return self.coords[0].basis

    def reduced(self) -> "TorusPoint":
        """Canonical representative: rational parts reduced into [0, 1)."""
        out = []
        for s in self.coords:
            q = s.rational_part
            q -= q.numerator // q.denominator
            out.append(Scalar(s.basis, (q,) + s.coeffs[1:]))
        return TorusPoint(out)

    def __add__(self, other: "TorusPoint") -> "TorusPoint":
        return TorusPoint([a + b for a, b in zip(self.coords, other.coords)])

    def __sub__(self, other: "TorusPoint") -> "TorusPoint":
        return TorusPoint([a - b for a, b in zip(self.coords, other.coords)])

    def __neg__(self) -> "TorusPoint":
        return TorusPoint([-a for a in self.coords])

    def _key(self):
        out = []
        for s in self.coords:
            q = s.rational_part
            out.append((q - q.numerator // q.denominator, s.coeffs[1:]))
        return tuple(out)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, TorusPoint):
            return NotImplemented
        if self.dimension != other.dimension:
            return False
        if self.basis.symbols != other.basis.symbols:
            return False
        return self._key() == other._key()

    def __hash__(self) -> int:
        return hash(self._key())

    def __repr__(self) -> str:
        return "TorusPoint(" + ", ".join(format_scalar(s) for s in self.coords) + ")"


# ---------------------------------------------------------------------------
# adapted norm (commuting expanding families)


def _halton_unit_vectors(count: int, real_dim: int) -> np.ndarray:
    """Deterministic low-discrepancy sample of the unit sphere in R^real_dim.

    Halton points in the cube are mapped through Box-Muller to isotropic
    Gaussians and normalized.
    """
    primes = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37]
    pairs = (real_dim + 1) // 2
    dims = 2 * pairs
    if dims > len(primes):
        raise ValueError("sphere sampling supports dimension <= 12")

    def radical_inverse(base: int, n: np.ndarray) -> np.ndarray:
        out = np.zeros(len(n))
        f = 1.0 / base
        nn = n.copy()
        while nn.max() > 0:
            out += f * (nn % base)
            nn //= base
            f /= base
        return out

    idx = np.arange(1, count + 1)
    u = np.stack([radical_inverse(primes[j], idx) for j in range(dims)], axis=1)
    u = np.clip(u, 1e-12, 1 - 1e-12)
    g = np.empty_like(u)
    for j in range(pairs):
        r = np.sqrt(-2.0 * np.log(u[:, 2 * j]))
        g[:, 2 * j] = r * np.cos(2 * np.pi * u[:, 2 * j + 1])
        g[:, 2 * j + 1] = r * np.sin(2 * np.pi * u[:, 2 * j + 1])
    g = g[:, :real_dim]
    norms = np.linalg.norm(g, axis=1, keepdims=True)
    norms[norms == 0] = 1.0
    return g / norms


@dataclass(frozen=True)
class AdaptedNorm:
    """Norm on C^d making every matrix of a commuting expanding family expand.

    ||x|| = max_i weights[i] * |(Q^H x)_i| where Q unitarily triangularizes
    the family.  `rho` is the sampled minimum of ||Ax||/||x|| over the stored
    deterministic sphere sample (advisory); `rho_certified` is the exact-norm
    lower bound 1/max_A ||A^{-1}||_op, safe for contraction estimates.
    """

    change_of_basis: np.ndarray = field(repr=False)
    weights: tuple[int, ...]
    rho: float
    rho_certified: float
    sample_size: int
    matrices: tuple[IntMatrix, ...] = field(repr=False)
    precision: str = "float64"  # numeric fidelity of change_of_basis and rho

    def norm(self, x: np.ndarray) -> float | np.ndarray:
        """Adapted norm of a vector (or row-stacked vectors) in C^d."""
        x = np.asarray(x, dtype=complex)
        coords = x @ self.change_of_basis.conj()  # rows times Q-bar = (Q^H x)^T
        w = np.asarray(self.weights, dtype=float)
        vals = np.max(np.abs(coords) * w, axis=-1)
        return float(vals) if vals.ndim == 0 else vals


def adapted_norm(
    matrices: Sequence[IntMatrix], sample_size: int = 4096
) -> AdaptedNorm:
    """Construct the expansion-adapted norm for a commuting expanding family.

    Weights are m^(i-1) with m the smallest integer exceeding d*a/(lambda-1),
    where lambda is the smallest eigenvalue modulus over the family and a the
    largest entry modulus of the triangularized forms.
    """
    mats = list(matrices)
    if not mats:
        raise ValueError("need at least one matrix")
    d = mats[0].dimension
    for m in mats:
        if m.dimension != d:
            raise ValueError("dimension mismatch")
    for i, a in enumerate(mats):
        for b in mats[i + 1 :]:
            if not commute(a, b):
                raise ValueError(f"matrices do not commute: {a} vs {b}")
    for m in mats:
        if not is_expanding(m):
            raise ValueError(f"matrix is not expanding: {m}")

    arrays = [m.as_array() for m in mats]
    if d == 1:
        q = np.eye(1, dtype=complex)
        tris = [a.astype(complex) for a in arrays]
    else:
        q, tris = _simultaneous_schur(arrays)

    lam = min(
        float(np.min(np.abs(np.linalg.eigvals(a)))) for a in arrays
    )
    a_max = max(float(np.max(np.abs(t))) for t in tris)
    m_weight = math.floor(d * a_max / (lam - 1.0)) + 1
    weights = tuple(m_weight ** i for i in range(d))

    w = np.asarray(weights, dtype=float)
    rho_cert = math.inf
    for t in tris:
        b = (w[:, None] * np.linalg.inv(t)) / w[None, :]
        op = float(np.max(np.sum(np.abs(b), axis=1)))
        rho_cert = min(rho_cert, 1.0 / op)

    sphere = _halton_unit_vectors(sample_size, 2 * d)
    x = sphere[:, :d] + 1j * sphere[:, d:]
    norms_x = np.max(np.abs(x @ q.conj()) * w, axis=1)
    rho = math.inf
    for arr in arrays:
        ax = x @ arr.T
        norms_ax = np.max(np.abs(ax @ q.conj()) * w, axis=1)
        rho = min(rho, float(np.min(norms_ax / norms_x)))
    if not rho > 1.0:
        raise ArithmeticError(f"sampled expansion factor {rho} not > 1")
    return AdaptedNorm(
        change_of_basis=q,
        weights=weights,
        rho=rho,
        rho_certified=rho_cert,
        sample_size=sample_size,
        matrices=tuple(mats),
    )


def _simultaneous_schur(arrays: list[np.ndarray]) -> tuple[np.ndarray, list[np.ndarray]]:
    """Unitary Q triangularizing every member of a commuting family.

    Uses the Schur basis of a generic linear combination and verifies it
    triangularizes each matrix, retrying with other combinations if not.
    """
    from scipy.linalg import schur

    coeff_sets = [
        [1.618033988749895 ** i for i in range(len(arrays))],
        [math.pi ** (i + 1) % 7 + 0.5 for i in range(len(arrays))],
        [math.sin(3.7 * (i + 1)) + 2.0 for i in range(len(arrays))],
    ]
    scale = max(float(np.max(np.abs(a))) for a in arrays)
    for coeffs in coeff_sets:
        combo = sum(c * a for c, a in zip(coeffs, arrays))
        _, q = schur(combo.astype(complex), output="complex")
        tris = [q.conj().T @ a @ q for a in arrays]
        ok = all(
            float(np.max(np.abs(np.tril(t, -1)))) <= 1e-8 * max(scale, 1.0)
            for t in tris
        )
        if ok:
            tris = [np.triu(t) for t in tris]
            return q, tris
    raise ArithmeticError("could not simultaneously triangularize family")


# ---------------------------------------------------------------------------
# scalar text syntax: `a/b`, `a/b*name`, joined by `+` / `-`


_TERM = re.compile(
    r"^\s*(?P<num>[+-]?\d+)\s*(?:/\s*(?P<den>\d+))?\s*(?:\*\s*(?P<name>[A-Za-z_]\w*))?\s*$"
)


def parse_scalar(text: str, basis: IrrationalBasis) -> Scalar:
    """Parse the config syntax, e.g. ``1/3 + 2/3*sqrt2`` or ``-5/7``."""
    s = text.replace("−", "-").strip()
    if not s:
        raise ValueError("empty scalar string")
    # split into signed terms at top level
    terms: list[tuple[int, str]] = []
    sign, start = 1, 0
    if s[0] in "+-":
        sign = -1 if s[0] == "-" else 1
        start = 1
    buf = []
    cur_sign = sign
    i = start
    while i < len(s):
        ch = s[i]
        if ch in "+-":
            terms.append((cur_sign, "".join(buf)))
            buf = []
            cur_sign = -1 if ch == "-" else 1
        else:
            buf.append(ch)
        i += 1
    terms.append((cur_sign, "".join(buf)))

    coeffs = [_Q0] * (1 + len(basis))
    for sgn, term in terms:
        m = _TERM.match(term)
        if not m:
            raise ValueError(f"cannot parse scalar term {term!r} in {text!r}")
        num = int(m.group("num"))
        den = int(m.group("den") or 1)
        q = Fraction(sgn * num, den)
        name = m.group("name")
        if name is None:
            coeffs[0] += q
        else:
            try:
                idx = basis.index(name)
            except ValueError:
                raise BasisMismatchError(
                    f"symbol {name!r} not among declared irrationals {basis.symbols}"
                ) from None
            coeffs[1 + idx] += q
    return Scalar(basis, tuple(coeffs))


def format_scalar(s: Scalar) -> str:
    """Inverse of parse_scalar (canonical form)."""
    parts: list[str] = []

    def frac_str(q: Fraction) -> str:
        return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"

    if s.coeffs[0] != 0 or s.is_rational():
        parts.append(frac_str(s.coeffs[0]))
    for name, c in zip(s.basis.symbols, s.coeffs[1:]):
        if c == 0:
            continue
        term = f"{frac_str(abs(c))}*{name}"
        if not parts:
            parts.append(term if c > 0 else f"-{term}")
        else:
            parts.append(f"+ {term}" if c > 0 else f"- {term}")
    out = parts[0]
    for p in parts[1:]:
        out += " " + p if p.startswith(("+", "-")) else " + " + p
    return out
