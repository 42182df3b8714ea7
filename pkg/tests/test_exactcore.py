import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from toruswalk.exactcore import (
    BasisMismatchError,
    IndeterminateExpansionError,
    IntMatrix,
    IrrationalBasis,
    NearIntegerError,
    Scalar,
    TorusPoint,
    adapted_norm,
    commute,
    evaluate,
    format_scalar,
    fractional_part,
    is_expanding,
    mat_apply,
    parse_scalar,
    scalar_add,
    scalar_scale,
)
from conftest import random_expanding_matrix, random_scalar

ALPHA = IrrationalBasis(("sqrt2",))


def S(q, coeff=0):
    return Scalar(ALPHA, (Fraction(q), Fraction(coeff)))


def oracle_value(s: Scalar, dps=60) -> mpmath.mpf:
    with mpmath.workdps(dps):
        total = mpmath.mpf(s.coeffs[0].numerator) / s.coeffs[0].denominator
        for name, c in zip(s.basis.symbols, s.coeffs[1:]):
            assert name == "sqrt2"
            total += mpmath.mpf(c.numerator) / c.denominator * mpmath.sqrt(2)
        return total


class TestScalarArithmetic:
    def test_add_coefficientwise(self):
        a = S(Fraction(1, 2))
        b = Scalar(ALPHA, (Fraction(1, 3), Fraction(2)))
        out = scalar_add(a, b)
        assert out.coeffs == (Fraction(5, 6), Fraction(2))

    def test_scale_by_zero(self):
        any_scalar = Scalar(ALPHA, (Fraction(7, 3), Fraction(-5, 2)))
        out = scalar_scale(0, any_scalar)
        assert out.coeffs == (Fraction(0), Fraction(0))

    def test_mat_apply_1x1(self):
        v = [Scalar(ALPHA, (Fraction(1, 2), Fraction(1)))]
        out = mat_apply([[3]], v)
        assert out[0].coeffs == (Fraction(3, 2), Fraction(3))

    def test_basis_mismatch_raises(self):
        other = IrrationalBasis(("sqrt3",))
        with pytest.raises(BasisMismatchError):
            S(1) + Scalar(other, (Fraction(1), Fraction(0)))

    def test_scalar_times_scalar_rejected(self):
        with pytest.raises(TypeError):
            S(1, 1) * S(2, 1)

    @given(st.integers(-50, 50), st.integers(1, 20), st.integers(-50, 50),
           st.integers(1, 20), st.integers(-50, 50), st.integers(1, 20))
    def test_addition_associative(self, n1, d1, n2, d2, n3, d3):
        a = Scalar(ALPHA, (Fraction(n1, d1), Fraction(n2, d2)))
        b = Scalar(ALPHA, (Fraction(n2, d2), Fraction(n3, d3)))
        c = Scalar(ALPHA, (Fraction(n3, d3), Fraction(n1, d1)))
        assert ((a + b) + c).coeffs == (a + (b + c)).coeffs

    def test_mat_apply_composes(self, rng):
        m = rng.integers(-4, 5, size=(2, 2)).tolist()
        n = rng.integers(-4, 5, size=(2, 2)).tolist()
        v = [random_scalar(rng, ALPHA) for _ in range(2)]
        mn = (IntMatrix.from_rows(m) @ IntMatrix.from_rows(n)).rows
        lhs = mat_apply(mn, v)
        rhs = mat_apply(m, mat_apply(n, v))
        assert [x.coeffs for x in lhs] == [x.coeffs for x in rhs]


class TestEvaluation:
    def test_rational_exact(self):
        val, err = evaluate(S(Fraction(1, 2)), 64)
        assert val == Fraction(1, 2) and err == 0

    def test_sqrt2_against_oracle(self):
        s = Scalar(ALPHA, (Fraction(0), Fraction(1)))
        val, err = evaluate(s, 64)
        assert err <= Fraction(1, 2 ** 60)
        assert abs(float(val) - float(mpmath.sqrt(2))) <= float(err) + 1e-16

    def test_combination_within_stated_bound(self):
        s = Scalar(ALPHA, (Fraction(1), Fraction(2)))
        val, err = evaluate(s, 16)
        assert err <= Fraction(1, 2 ** 15) * (1 + 3)
        oracle = oracle_value(s)
        assert abs(mpmath.mpf(val.numerator) / val.denominator - oracle) <= mpmath.mpf(
            err.numerator
        ) / err.denominator

    def test_minimum_precision_enforced(self):
        with pytest.raises(ValueError):
            evaluate(S(1), 4)

    def test_soundness_bulk(self, rng):
        # spec invariant: random scalars and precisions stay within the bound
        for _ in range(1000):
            s = random_scalar(rng, ALPHA, denom_max=9)
            p = int(rng.integers(8, 120))
            val, err = evaluate(s, p)
            size = 1 + sum(abs(c) for c in s.coeffs)
            assert err <= Fraction(1, 2 ** (p - 1)) * size
            with mpmath.workdps(80):
                diff = abs(
                    mpmath.mpf(val.numerator) / val.denominator - oracle_value(s)
                )
                bound = mpmath.mpf(err.numerator) / err.denominator if err else 0
            assert diff <= bound + mpmath.mpf(10) ** -55


class TestFractionalPart:
    def test_rational_exact(self):
        assert fractional_part(S(Fraction(7, 3))) == Fraction(1, 3)

    def test_sqrt2_multiple_against_oracle(self):
        s = Scalar(ALPHA, (Fraction(0), Fraction(3)))
        out = fractional_part(s, 64)
        with mpmath.workdps(40):
            oracle = 3 * mpmath.sqrt(2) - 4
            diff = abs(mpmath.mpf(out.numerator) / out.denominator - oracle)
        assert diff <= mpmath.mpf(2) ** -60

    def test_exact_cancellation_to_integer(self):
        s = Scalar(ALPHA, (Fraction(0), Fraction(1)))
        combo = s - s + 1
        assert fractional_part(combo) == 0

    def test_near_integer_refusal(self):
        close = Fraction(141421356237309504880168, 10 ** 23)  # ~ sqrt(2) to 1e-24
        s = Scalar(ALPHA, (-close, Fraction(1)))
        with pytest.raises(NearIntegerError):
            fractional_part(s, 32)
        assert fractional_part(s, 128) > 0

    def test_negative_rational(self):
        assert fractional_part(S(Fraction(-7, 3))) == Fraction(2, 3)


class TestExpansion:
    def test_scalar_two(self):
        assert is_expanding(IntMatrix.from_rows([[2]]))

    def test_complex_pair_modulus_sqrt2(self):
        # characteristic polynomial x^2 + 2, both moduli sqrt(2) > 1
        assert is_expanding(IntMatrix.from_rows([[0, -2], [1, 0]]))

    def test_eigenvalue_one_is_false(self):
        assert not is_expanding(IntMatrix.from_rows([[1, 1], [0, 2]]))

    def test_rotation_root_of_unity_false(self):
        assert not is_expanding(IntMatrix.from_rows([[0, -1], [1, 0]]))

    def test_small_determinant_false(self):
        assert not is_expanding(IntMatrix.from_rows([[1, 0], [0, 5]]))

    def test_true_implies_det_at_least_two(self, rng):
        found = 0
        while found < 40:
            m = IntMatrix.from_rows(rng.integers(-5, 6, size=(2, 2)).tolist())
            try:
                expanding = is_expanding(m)
            except IndeterminateExpansionError:
                continue
            if expanding:
                assert abs(m.det()) >= 2
                found += 1


class TestCommute:
    def test_self(self):
        a = IntMatrix.from_rows([[1, 2], [3, 4]])
        assert commute(a, a)

    def test_diagonal(self):
        assert commute(
            IntMatrix.from_rows([[2, 0], [0, 3]]), IntMatrix.from_rows([[3, 0], [0, 2]])
        )

    def test_shears_do_not_commute(self):
        a = IntMatrix.from_rows([[1, 1], [0, 1]])
        b = IntMatrix.from_rows([[1, 0], [1, 1]])
        assert (a @ b).rows != (b @ a).rows
        assert not commute(a, b)


class TestAdaptedNorm:
    def test_one_dimensional(self):
        norm = adapted_norm([IntMatrix.from_rows([[2]])])
        assert norm.weights == (1,)
        assert norm.rho == pytest.approx(2.0)
        assert norm.rho_certified == pytest.approx(2.0)

    def test_diag_2_3_weights_and_rho(self):
        norm = adapted_norm([IntMatrix.from_rows([[2, 0], [0, 3]])])
        # lambda = 2, a = 3, d = 2: smallest integer above 6 is 7
        assert norm.weights == (1, 7)
        assert 2.0 <= norm.rho <= 2.0 + 1e-9

    def test_sampled_expansion_property(self, rng):
        mats = [IntMatrix.from_rows([[2, 1], [0, 3]])]
        norm = adapted_norm(mats, sample_size=512)
        x = rng.normal(size=(200, 2)) + 1j * rng.normal(size=(200, 2))
        nx = norm.norm(x)
        nax = norm.norm(x @ mats[0].as_array().T)
        assert np.all(nax >= norm.rho * nx * (1 - 1e-9))
        assert norm.rho > 1

    def test_rejects_non_commuting(self):
        a = IntMatrix.from_rows([[2, 1], [0, 3]])
        b = IntMatrix.from_rows([[3, 0], [1, 2]])
        with pytest.raises(ValueError):
            adapted_norm([a, b])

    def test_rejects_non_expanding(self):
        with pytest.raises(ValueError):
            adapted_norm([IntMatrix.from_rows([[1, 0], [0, 3]])])

    def test_power_family(self, rng):
        base = random_expanding_matrix(rng, 2, 3)
        norm = adapted_norm([base, base @ base], sample_size=1024)
        assert norm.rho > 1

    def test_defective_family(self, rng):
        # a Jordan block is not diagonalizable; the Schur route must still
        # produce a common triangularization for its powers
        jordan = IntMatrix.from_rows([[2, 1], [0, 2]])
        norm = adapted_norm([jordan, jordan @ jordan], sample_size=1024)
        assert norm.rho > 1
        x = rng.normal(size=(100, 2)) + 1j * rng.normal(size=(100, 2))
        for mat in (jordan, jordan @ jordan):
            assert np.all(
                norm.norm(x @ mat.as_array().T) >= norm.rho * norm.norm(x) * (1 - 1e-9)
            )


class TestTorusPoint:
    def test_mod_z_equality(self):
        a = TorusPoint([Scalar(ALPHA, (Fraction(7, 3), Fraction(1)))])
        b = TorusPoint([Scalar(ALPHA, (Fraction(1, 3), Fraction(1)))])
        c = TorusPoint([Scalar(ALPHA, (Fraction(1, 3), Fraction(2)))])
        assert a == b
        assert a != c
        assert hash(a) == hash(b)

    def test_reduced_canonical(self):
        a = TorusPoint([Scalar(ALPHA, (Fraction(-1, 3), Fraction(1)))])
        assert a.reduced().coords[0].rational_part == Fraction(2, 3)


class TestEvaluatorRegistry:
    def test_pi_constant(self):
        basis = IrrationalBasis(("pi",))
        s = Scalar.symbol("pi", basis)
        val, err = evaluate(s, 64)
        with mpmath.workdps(40):
            assert abs(mpmath.mpf(val.numerator) / val.denominator - mpmath.pi) <= (
                mpmath.mpf(err.numerator) / err.denominator
            )

    def test_sqrt_of_square_rejected(self):
        with pytest.raises(ValueError):
            IrrationalBasis(("sqrt9",))

    def test_unknown_name_rejected(self):
        with pytest.raises(KeyError):
            IrrationalBasis(("mystery",))

    def test_custom_evaluator(self):
        from toruswalk.exactcore import register_irrational

        def cbrt2(p):
            num = round(2 ** (1 / 3) * (1 << min(p, 40)))
            return Fraction(num, 1 << min(p, 40)), Fraction(1, 1 << min(p, 39))

        register_irrational("cbrt2_demo", cbrt2)
        basis = IrrationalBasis(("cbrt2_demo",))
        s = Scalar.symbol("cbrt2_demo", basis)
        val, _ = evaluate(s, 16)
        assert abs(float(val) - 2 ** (1 / 3)) < 1e-4


class TestTextSyntax:
    def test_documented_example(self):
        s = parse_scalar("1/3 + 2/3*sqrt2", ALPHA)
        assert s.coeffs == (Fraction(1, 3), Fraction(2, 3))

    def test_minus_and_bare_integers(self):
        s = parse_scalar("-2 + 1/2*sqrt2 - 1/6", ALPHA)
        assert s.coeffs == (Fraction(-13, 6), Fraction(1, 2))

    def test_unknown_symbol(self):
        with pytest.raises(BasisMismatchError):
            parse_scalar("1/2*sqrt3", ALPHA)

    def test_garbage_rejected(self):
        with pytest.raises(ValueError):
            parse_scalar("1//3 ++ sqrt2", ALPHA)

    def test_roundtrip_random(self, rng):
        for _ in range(200):
            s = random_scalar(rng, ALPHA, denom_max=12)
            assert parse_scalar(format_scalar(s), ALPHA).coeffs == s.coeffs

    @settings(max_examples=60)
    @given(st.text(max_size=20))
    def test_fuzz_never_crashes_uncontrolled(self, text):
        try:
            parse_scalar(text, ALPHA)
        except (ValueError, KeyError):
            pass
