import json

import numpy as np
import pytest

from zeitlab.estimates import (
    casimir_identity_defect,
    inner_product_differences,
    leibniz_residual_N,
    norm_lemma_violations,
    random_function,
    random_su,
    relatedness_defect,
    roundtrip_defect,
    structure_closed_vs_direct,
    sup_norm,
)
from zeitlab.quantization import (
    QuantizedBasis,
    bracket_scaled,
    build_basis,
    check_su,
    embed,
    generators,
    grad_perp_N,
    hbar,
    inv_laplacian_N,
    laplacian_N,
    lie_scale,
    load_matrix,
    matrix_inner,
    matrix_norm,
    project,
    quant_structure_constant,
    save_matrix,
)
from zeitlab.sphere import BandlimitedFunction, DomainError, norm


def test_scales():
    assert hbar(9) == 0.25
    assert lie_scale(8) == pytest.approx(2 / np.sqrt(63))


@pytest.mark.parametrize("N", [2, 5, 16, 33])
def test_orthonormal(N):
    assert build_basis(N).orthonormality_defect() < 1e-12


def test_identity_harmonic_and_bands():
    b = build_basis(16)
    T00 = b.T(0, 0)
    np.testing.assert_allclose(np.abs(np.diag(T00)), 1 / np.sqrt(4 * np.pi), atol=1e-14)
    T = b.T(5, 2)
    k = np.nonzero(T)
    assert set(k[1] - k[0]) == {2}


@pytest.mark.parametrize("N", [8, 16, 32])
def test_construction_paths_agree(N):
    a, e = QuantizedBasis(N, "exact"), QuantizedBasis(N, "eigen")
    for m in range(-N + 1, N):
        np.testing.assert_allclose(a.bands[m], e.bands[m], atol=1e-13)


def test_projection_is_skew_and_lossless(pair):
    f, _ = pair
    F = project(f, 8)
    check_su(F)
    assert roundtrip_defect(f, 8) < 1e-12
    g = random_function(12, np.random.default_rng(1))
    assert roundtrip_defect(g, 8) < 1e-12  # truncates l >= 8
    assert norm(embed(F)) == pytest.approx(matrix_norm(F))
    assert np.all(project(BandlimitedFunction.ylm(9, 0), 8) == 0)
    assert embed(np.zeros((8, 8), complex)).allclose(BandlimitedFunction.zeros(7), 0.0)
    with pytest.raises(DomainError):
        project(BandlimitedFunction.ylm(1, 1), 8)


def test_projection_of_basis_element():
    b = build_basis(8)
    np.testing.assert_allclose(project(BandlimitedFunction.ylm(3, -2), b, check_real=False), 1j * b.T(3, -2))


def test_generators_and_laplacian(rng):
    N = 16
    assert casimir_identity_defect(N) < 1e-12
    X = generators(N)
    for i in (1, 2, 3):
        assert np.max(np.abs(grad_perp_N(i, X[i - 1]))) < 1e-14
    A = random_su(N, rng)
    assert np.max(np.abs(laplacian_N(A) - laplacian_N(A, "commutator"))) < 1e-10 * np.max(np.abs(laplacian_N(A)))
    T10 = build_basis(N).T(1, 0)
    np.testing.assert_allclose(laplacian_N(1j * T10), -2j * T10, atol=1e-13)
    np.testing.assert_allclose(laplacian_N(inv_laplacian_N(A)), A, atol=1e-12)
    with pytest.raises(DomainError):
        inv_laplacian_N(np.eye(N) * 1j)


def test_bracket_basics(rng):
    A = random_su(8, rng)
    assert np.all(bracket_scaled(A, A) == 0)
    D1, D2 = np.diag(1j * rng.standard_normal(8)), np.diag(1j * rng.standard_normal(8))
    assert np.all(bracket_scaled(D1, D2) == 0)
    with pytest.raises(ValueError):
        bracket_scaled(A, np.zeros((4, 4)))


@pytest.mark.parametrize("N", [8, 16, 32])
def test_p_N_relatedness(N, pair):
    assert relatedness_defect(pair[0], N) < 1e-10


@pytest.mark.parametrize("N", [8, 16, 32])
def test_quantized_leibniz(N, pair):
    F, G = project(pair[0], N), project(pair[1], N)
    assert leibniz_residual_N(F, G) < 1e-10
    assert leibniz_residual_N(F, G, coeff=1.0) > 1e-2


@pytest.mark.parametrize("N", [8, 32])
def test_norm_lemma(N):
    assert norm_lemma_violations(N, 25, seed=N) == []


def test_norm_kinds(rng):
    A = random_su(8, rng)
    assert matrix_norm(A, "L1") >= matrix_norm(A, "Linf") * 4 * np.pi / 8 - 1e-12
    assert matrix_inner(A, A, "H1") == pytest.approx(-matrix_inner(A, laplacian_N(A)))
    with pytest.raises(ValueError):
        matrix_norm(A, "H2")


def test_inner_products_exact_below_N(pair):
    f, g = pair
    assert max(inner_product_differences(f, g, 8).values()) < 1e-12


@pytest.mark.parametrize("N", [8, 16, 32])
def test_spectral_norm_below_sup(N, pair):
    f, _ = pair
    assert matrix_norm(project(f, N), "Linf") <= sup_norm(f) + 1e-12


def test_structure_constants_closed_form():
    assert structure_closed_vs_direct(8, 3) < 1e-9
    a, b, c = (2, 1), (3, -1), (3, 0)
    assert quant_structure_constant(8, a, b, c) == 0  # even degree sum
    a, b, c = (2, 1), (3, -1), (4, 0)
    assert quant_structure_constant(8, a, b, c) == pytest.approx(-quant_structure_constant(8, b, a, c))


def test_matrix_io(tmp_path, rng):
    A = random_su(6, rng)
    save_matrix(tmp_path / "a.mat", A)
    raw = (tmp_path / "a.mat").read_bytes()
    header = json.loads(raw.split(b"\n", 1)[0])
    assert header == {"N": 6, "format": "dense-complex"}
    assert np.array_equal(load_matrix(tmp_path / "a.mat"), A)
