import numpy as np
import pytest

from zeitlab.curvature import (
    b_operator_cont,
    curvature_convergence_sweep,
    curvature_rows,
    curvature_terms_cont,
    curvature_terms_quant,
    h1_basis_function,
    sectional_curvature_cont,
    sectional_curvature_milnor,
    sectional_curvature_quant,
)
from zeitlab.estimates import random_function
from zeitlab.quantization import build_basis, project
from zeitlab.sphere import H1, BandlimitedFunction, DomainError, coordinate_function, inner, norm, poisson_bracket
from zeitlab.structure import complex_table, real_table


def test_forms_agree(pair):
    f, g = pair
    h1 = sectional_curvature_cont(f, g, "H1")
    assert sectional_curvature_cont(f, g, "L2") == pytest.approx(h1, abs=1e-9)
    assert curvature_terms_cont(f, g, third="leibniz").total == pytest.approx(h1, abs=1e-9)


def test_symmetry_and_homogeneity(pair):
    f, g = pair
    assert sectional_curvature_cont(f, g) == pytest.approx(sectional_curvature_cont(g, f), abs=1e-10)
    lam = 1.7
    assert sectional_curvature_cont(f * lam, g * lam) == pytest.approx(lam**4 * sectional_curvature_cont(f, g), rel=1e-10)
    F, G = project(f, 16), project(g, 16)
    assert sectional_curvature_quant(F, G) == pytest.approx(sectional_curvature_quant(G, F), abs=1e-10)


def test_degenerate_planes(pair, zonal):
    f, _ = pair
    assert sectional_curvature_cont(f, f) == 0
    assert sectional_curvature_quant(project(f, 8), project(f, 8)) == 0
    z2 = BandlimitedFunction.from_modes({(3, 0): 0.4, (1, 0): 0.2})
    assert sectional_curvature_cont(zonal, z2) == 0
    with pytest.raises(DomainError):
        sectional_curvature_cont(f, f * 2.0, normalized=True)


def test_rotation_generators():
    # on the l = 1 span the metric is bi-invariant: C = |{f,g}|^2_H1 / 4
    f, g = coordinate_function(1), coordinate_function(2)
    fg = poisson_bracket(f, g)
    assert sectional_curvature_cont(f, g) == pytest.approx(0.25 * norm(fg, H1) ** 2, rel=1e-12)


def test_b_operator_is_adjoint(pair):
    f, g = pair
    h = random_function(3, np.random.default_rng(4))
    lhs = inner(b_operator_cont(f, g), h, H1)
    rhs = inner(f, poisson_bracket(g, h), H1)
    assert lhs == pytest.approx(rhs, abs=1e-12)


def test_quantized_leibniz_third_term(pair):
    F, G = project(pair[0], 16), project(pair[1], 16)
    a = curvature_terms_quant(F, G)
    b = curvature_terms_quant(F, G, third="leibniz")
    assert a.third == pytest.approx(b.third, rel=1e-10)


@pytest.mark.parametrize("planes", [[((1, 0), (2, 1)), ((2, -1), (3, 2)), ((1, 1), (2, -2))]])
def test_milnor_matches_direct(planes):
    Lw = 5
    tc = real_table(complex_table(Lw))
    N = 16
    basis = build_basis(N)
    tq = real_table(complex_table(Lw, N))
    for a, b in planes:
        fa, fb = h1_basis_function(*a), h1_basis_function(*b)
        assert sectional_curvature_milnor(tc, a, b) == pytest.approx(sectional_curvature_cont(fa, fb), abs=1e-8)
        q = sectional_curvature_quant(project(fa, basis), project(fb, basis), basis=basis)
        assert sectional_curvature_milnor(tq, a, b) == pytest.approx(q, abs=1e-8)


def test_sweep_rows_and_validation(pair):
    f, g = pair
    rows = curvature_rows(f, g, [8, 16, 32])
    assert [r["N"] for r in rows] == [8, 16, 32]
    assert rows[0]["error"] > rows[1]["error"] > rows[2]["error"]
    with pytest.raises(ValueError):
        curvature_rows(f, g, [6])


def test_sweep_of_equal_functions_is_exact(pair):
    rep = curvature_convergence_sweep(pair[0], pair[0], [8, 16, 32])
    assert all(r["error"] == 0 for r in rep.rows)
    assert rep.failures(0.9) == []
