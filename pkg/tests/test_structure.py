import numpy as np
import pytest

from zeitlab.estimates import admissible_triples, structure_closed_vs_direct, structure_rows
from zeitlab.harness import fit_convergence_rate
from zeitlab.structure import (
    bracket_by_structure_constants,
    complex_table,
    real_table,
    structure_constant_cont,
    structure_constant_direct,
)


def test_closed_form_matches_quadrature():
    assert structure_closed_vs_direct(None, 4) < 1e-12


def test_selection_rules():
    assert structure_constant_cont((1, 0), (2, 1), (2, 1)) != 0
    assert structure_constant_cont((1, 0), (2, 1), (3, 1)) == 0  # even sum
    assert structure_constant_cont((1, 0), (2, 1), (2, 0)) == 0  # m sum
    with pytest.raises(ValueError):
        structure_constant_cont((0, 0), (1, 0), (1, 0))


@pytest.mark.parametrize("N", [None, 8])
def test_table_symmetries(N):
    t = complex_table(3, N)
    assert t.antisymmetry_defect() < 1e-14
    assert t.parity_defect() == 0
    direct = complex_table(3, N, source="direct")
    # the closed-form table is restricted to l <= 3 outputs, like the direct one
    assert np.max(np.abs(t.values - direct.values)) < 1e-12


def test_real_table_is_real_and_antisymmetric():
    r = real_table(complex_table(3))
    assert r.real
    assert r.antisymmetry_defect() < 1e-14


def test_bracket_by_contraction(pair):
    from zeitlab.sphere import poisson_bracket

    f, g = pair
    assert bracket_by_structure_constants(f, g).allclose(poisson_bracket(f, g), 1e-12)


def test_quantized_constants_converge_at_second_order():
    triples = admissible_triples(count=4, seed=3)
    rows = structure_rows(triples, [8, 16, 32, 64])
    for k in range(len(triples)):
        fit = fit_convergence_rate([r["inv_N"] for r in rows], [r[f"err_{k}"] for r in rows])
        assert fit.slope > 1.8


def test_l1_triples_are_exact():
    a, b, c = (1, 0), (3, 2), (3, 2)
    assert abs(structure_constant_direct(a, b, c, 8) - structure_constant_cont(a, b, c)) < 1e-13
