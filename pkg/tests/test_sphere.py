import numpy as np
import pytest

from zeitlab.estimates import leibniz_residual_cont, random_function
from zeitlab.sphere import (
    H1,
    HM1,
    L2,
    BandlimitedFunction,
    DomainError,
    coordinate_function,
    grad_perp,
    inner,
    inv_laplacian,
    laplacian,
    lm_index,
    multiply,
    n_coeffs,
    norm,
    poisson_bracket,
    power_integral,
    sph_eval,
    truncate_high,
    truncate_low,
)


def test_indexing():
    assert n_coeffs(3) == 16
    assert lm_index(0, 0) == 0 and lm_index(1, -1) == 1 and lm_index(3, 3) == 15


def test_pointwise_values():
    th, ph = np.array([0.3, 1.1, 2.5]), np.array([0.2, 4.0, 1.0])
    y10 = sph_eval(BandlimitedFunction.ylm(1, 0), th, ph)
    np.testing.assert_allclose(y10, np.sqrt(3 / (4 * np.pi)) * np.cos(th), atol=1e-15)
    y11 = sph_eval(BandlimitedFunction.ylm(1, 1), th, ph)
    np.testing.assert_allclose(y11, -np.sqrt(3 / (8 * np.pi)) * np.sin(th) * np.exp(1j * ph), atol=1e-15)
    x = coordinate_function(1)
    np.testing.assert_allclose(sph_eval(x, th, ph), np.sin(th) * np.cos(ph), atol=1e-15)


def test_real_harmonics_are_real_and_orthonormal():
    fs = [BandlimitedFunction.real_ylm(2, m) for m in range(-2, 3)]
    assert all(f.is_real() for f in fs)
    G = np.array([[inner(a, b) for b in fs] for a in fs])
    np.testing.assert_allclose(G, np.eye(5), atol=1e-15)


def test_coordinate_brackets_close_so3():
    x1, x2, x3 = (coordinate_function(i) for i in (1, 2, 3))
    assert poisson_bracket(x1, x2).allclose(x3, 1e-14)
    assert poisson_bracket(x2, x3).allclose(x1, 1e-14)
    assert poisson_bracket(x3, x1).allclose(x2, 1e-14)


def test_bracket_algebra(rng):
    f, g, h = (random_function(3, rng) for _ in range(3))
    assert poisson_bracket(f, g).allclose(-poisson_bracket(g, f), 1e-13)
    jac = (
        poisson_bracket(f, poisson_bracket(g, h))
        + poisson_bracket(g, poisson_bracket(h, f))
        + poisson_bracket(h, poisson_bracket(f, g))
    )
    assert norm(jac) < 1e-12
    assert poisson_bracket(f, f).allclose(BandlimitedFunction.zeros(6), 1e-14)


def test_bracket_backends_agree(pair):
    f, g = pair
    a = poisson_bracket(f, g)
    b = poisson_bracket(f, g, backend="structure")
    assert a.allclose(b, 1e-12)


def test_bracket_integrates_by_parts(pair):
    # int f {g, h} = int {f, g} h
    f, g = pair
    h = random_function(2, np.random.default_rng(5))
    assert inner(f, poisson_bracket(g, h)) == pytest.approx(inner(poisson_bracket(f, g), h), abs=1e-13)


def test_laplacian_pair(pair):
    f, _ = pair
    assert laplacian(BandlimitedFunction.ylm(3, 1)).allclose(BandlimitedFunction.ylm(3, 1) * -12.0)
    assert laplacian(inv_laplacian(f)).allclose(f, 1e-14)
    with pytest.raises(DomainError):
        inv_laplacian(BandlimitedFunction.ylm(0, 0))


def test_double_bracket_laplacian(pair):
    f, _ = pair
    total = BandlimitedFunction.zeros(f.L)
    for i in (1, 2, 3):
        x = coordinate_function(i)
        total = total + poisson_bracket(x, poisson_bracket(x, f))
    assert total.allclose(laplacian(f), 1e-13)


def test_grad_perp_matches_bracket(pair):
    f, _ = pair
    for i in (1, 2, 3):
        assert grad_perp(i, f).allclose(poisson_bracket(coordinate_function(i), f), 1e-14)


def test_bracket_l2_bounded_by_h1(rng):
    for _ in range(20):
        f, g = random_function(4, rng), random_function(4, rng)
        assert norm(poisson_bracket(f, g)) <= norm(f, H1) * norm(g, H1)


def test_leibniz_identity_needs_factor_two(pair):
    f, g = pair
    assert leibniz_residual_cont(f, g) < 1e-10
    assert leibniz_residual_cont(f, g, coeff=1.0) > 1e-2


def test_inner_products(pair):
    f, g = pair
    assert inner(f, g, H1) == pytest.approx(-inner(f, laplacian(g)))
    assert inner(f, g, HM1) == pytest.approx(-inner(f, inv_laplacian(g)))
    with pytest.raises(DomainError):
        inner(BandlimitedFunction.ylm(0, 0), f, H1)


def test_products_and_integrals(pair):
    f, g = pair
    assert inner(multiply(f, g), BandlimitedFunction.ylm(0, 0)) * np.sqrt(4 * np.pi) == pytest.approx(inner(f, g))
    assert power_integral(f, 2) == pytest.approx(inner(f, f, L2))
    assert power_integral(f, 1) == pytest.approx(0.0, abs=1e-14)


def test_truncation_partition(rng):
    f = random_function(10, rng)
    assert (truncate_low(f, 5) + truncate_high(f, 5)).allclose(f, 0.0)
    assert truncate_low(f, 5).band_limit() == 4


def test_json_roundtrip(tmp_path, pair):
    f, _ = pair
    f.save(tmp_path / "f.json")
    g = BandlimitedFunction.load(tmp_path / "f.json")
    assert g.allclose(f, 0.0)
    with pytest.raises(ValueError):
        BandlimitedFunction.from_json({"L_max": 1, "coeffs": [[2, 0, 1.0, 0.0]]})
