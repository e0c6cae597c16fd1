from __future__ import annotations

from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from geonets.digits import (DigitVector, default_depth, digit_matrix_to_values, digits_to_value,
                            int_digit_matrix, int_to_digits, radical_inverse)


@pytest.mark.parametrize("i,b,K,expected", [(0, 2, 3, [0, 0, 0]), (5, 2, 3, [1, 0, 1]), (7, 3, 2, [1, 2])])
def test_int_to_digits_examples(i, b, K, expected):
    assert int_to_digits(i, b, K) == expected


def test_int_to_digits_overflow():
    with pytest.raises(OverflowError):
        int_to_digits(8, 2, 3)
    with pytest.raises(ValueError):
        int_to_digits(-1, 2, 3)


@pytest.mark.parametrize("i,b,expected", [(0, 2, 0.0), (1, 2, 0.5), (6, 2, 0.375)])
def test_radical_inverse_examples(i, b, expected):
    assert radical_inverse(i, b) == expected


def test_digits_to_value_examples():
    assert digits_to_value(DigitVector(2, (0, 0, 0))) == 0.0
    assert digits_to_value(DigitVector(2, (1, 1))) == 0.75
    assert abs(digits_to_value(DigitVector(3, (2,))) - 2 / 3) <= np.spacing(2 / 3)


@pytest.mark.parametrize("b", [2, 3, 5])
def test_round_trip_exhaustive(b):
    for K in range(1, 9):
        if b ** K > 5 ** 6:
            break
        for i in range(b ** K):
            d = DigitVector(b, tuple(reversed(int_to_digits(i, b, K))))
            assert sum(a * b ** k for k, a in enumerate(int_to_digits(i, b, K))) == i
            # digits of i reversed into fractional order give i / b^K, not phi_b(i);
            # phi_b(i) itself uses the least significant digit first
            assert d.exact() == Fraction(i, b ** K)
            assert digits_to_value(DigitVector(b, tuple(int_to_digits(i, b, K)))) == radical_inverse(i, b)


@pytest.mark.parametrize("b,m", [(2, 6), (3, 4), (5, 3)])
def test_radical_inverse_bijection(b, m):
    vals = {Fraction(radical_inverse(i, b)).limit_denominator(b ** m) * b ** m for i in range(b ** m)}
    assert vals == {Fraction(t) for t in range(b ** m)}


def test_default_depth():
    assert default_depth(2) == 52
    assert default_depth(3) == 32
    assert default_depth(4) == 26
    assert default_depth(5) == 22
    with pytest.raises(ValueError):
        default_depth(65)


def test_digit_vector_validation():
    with pytest.raises(ValueError):
        DigitVector(2, (0, 2))
    with pytest.raises(ValueError):
        DigitVector(1, (0,))
    assert DigitVector(3, (1, 2)) == DigitVector(3, [1, 2])
    assert DigitVector(3, (1, 2)).depth == 2


def test_from_value_is_canonical():
    # 1/2 in base 2 must be 0.1000..., never 0.0111...
    assert DigitVector.from_value(0.5, 2, 6).digits == (1, 0, 0, 0, 0, 0)
    with pytest.raises(ValueError):
        DigitVector.from_value(1.0, 2)


@given(st.integers(2, 64), st.data())
def test_from_value_round_trip(b, data):
    K = default_depth(b)
    digits = tuple(data.draw(st.lists(st.integers(0, b - 1), min_size=K, max_size=K)))
    d = DigitVector(b, digits)
    assert 0 <= d.value() < 1
    assert DigitVector.from_value(d.exact(), b, K) == d


@given(st.integers(2, 16), st.integers(0, 10 ** 6))
def test_int_digits_property(b, i):
    K = 1
    while b ** K <= i:
        K += 1
    out = int_to_digits(i, b, K)
    assert all(0 <= a < b for a in out)
    assert sum(a * b ** k for k, a in enumerate(out)) == i


def test_vectorised_helpers_agree():
    rng = np.random.default_rng(0)
    for b in (2, 3, 7):
        K = default_depth(b)
        D = rng.integers(0, b, size=(50, K))
        vals = digit_matrix_to_values(D, b)
        for row, v in zip(D, vals):
            assert v == pytest.approx(DigitVector(b, tuple(row)).value(), abs=2 ** -52)
    idx = np.arange(27)
    M = int_digit_matrix(idx, 3, 3)
    for i in idx:
        assert list(M[i]) == int_to_digits(int(i), 3, 3)
    with pytest.raises(OverflowError):
        int_digit_matrix(np.array([27]), 3, 3)
