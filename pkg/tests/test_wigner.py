from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import lpmv
from sympy.physics.wigner import wigner_3j, wigner_6j

from zeitlab.wigner import (
    HalfInt,
    SqrtRational,
    WignerInputError,
    assoc_legendre,
    six_j,
    six_j_float,
    three_j,
    three_j_float,
    triangle,
)

H = Fraction(1, 2)


def test_known_three_j():
    assert three_j(1, 1, 0, 0, 0, 0) == SqrtRational.from_square(-1, Fraction(1, 3))
    assert float(three_j(H, H, 1, H, -H, 0)) == pytest.approx(1 / np.sqrt(6))
    assert three_j_float(2, 2, 2, 0, 0, 0) == pytest.approx(-np.sqrt(2 / 35))


def test_selection_rules_give_exact_zero():
    assert three_j(1, 1, 1, 0, 0, 0) == 0  # odd sum with all m = 0
    assert three_j(1, 1, 3, 0, 0, 0) == 0  # triangle violation
    assert three_j(2, 2, 2, 1, 1, 1) == 0  # m sum
    assert three_j(1, 1, 1, 2, -2, 0) == 0  # |m| > j
    assert six_j(1, 1, 3, 1, 1, 1) == 0


def test_bad_arguments_raise():
    with pytest.raises(WignerInputError):
        three_j(1, 1, 1, H, -H, 0)
    with pytest.raises(WignerInputError):
        HalfInt.of(0.3)
    with pytest.raises(WignerInputError):
        six_j(-1, 1, 1, 1, 1, 1)


def test_triangle():
    assert triangle(1, 1, 2) and not triangle(1, 1, 3) and triangle(H, H, 1) and not triangle(H, 1, 1)


@settings(max_examples=60, deadline=None)
@given(
    st.integers(0, 6), st.integers(0, 6), st.integers(0, 12), st.integers(-6, 6), st.integers(-6, 6)
)
def test_three_j_matches_sympy(j1, j2, j3, m1, m2):
    m3 = -m1 - m2
    ours = three_j(j1, j2, j3, m1, m2, m3)
    ref = wigner_3j(j1, j2, j3, m1, m2, m3)
    assert float(ours) == pytest.approx(float(ref), abs=1e-15)
    assert ours.square == Fraction(str(ref**2))
    assert ours.sign == int(bool(ref > 0)) - int(bool(ref < 0))


@settings(max_examples=40, deadline=None)
@given(st.lists(st.integers(0, 5), min_size=6, max_size=6))
def test_six_j_matches_sympy(js):
    assert six_j_float(*js) == pytest.approx(float(wigner_6j(*js)), abs=1e-15)


def test_six_j_value_and_symmetry():
    assert six_j(1, 1, 1, 1, 1, 1) == SqrtRational(Fraction(1, 6))
    a = six_j(2, 3, 4, 3, 2, 3)
    assert a == six_j(3, 2, 4, 2, 3, 3) == six_j(3, 3, 3, 2, 2, 4)


def test_three_j_orthogonality():
    # sum_{j3, m3} (2 j3 + 1) (j1 j2 j3; m1 m2 m3)(j1 j2 j3; m1' m2' m3) = delta delta
    j1, j2 = 3, Fraction(5, 2)
    m2s = [Fraction(-5, 2) + k for k in range(6)]
    j3s = [Fraction(1, 2) + k for k in range(6)]
    for m1 in range(-3, 4):
        for m2 in m2s:
            for m1p in range(-3, 4):
                m2p = m1 + m2 - m1p
                if abs(m2p) > j2:
                    continue
                total = sum(
                    float(2 * j3 + 1)
                    * three_j_float(j1, j2, j3, m1, m2, -(m1 + m2))
                    * three_j_float(j1, j2, j3, m1p, m2p, -(m1 + m2))
                    for j3 in j3s
                )
                assert total == pytest.approx(1.0 if m1 == m1p else 0.0, abs=1e-13)


def test_large_arguments_are_exact():
    v = three_j(60, 60, 61, 3, -4, 1)
    w = wigner_3j(60, 60, 61, 3, -4, 1)
    assert float(v) == pytest.approx(float(w), rel=1e-14)


def test_assoc_legendre_matches_scipy():
    x = np.linspace(-1, 1, 41)
    for l in range(0, 9):
        for m in range(0, l + 1):
            np.testing.assert_allclose(assoc_legendre(l, m, x), lpmv(m, l, x), rtol=1e-11, atol=1e-11)
    with pytest.raises(ValueError):
        assoc_legendre(2, 3, 0.1)
