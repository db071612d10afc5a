"""Lemma-level checks: bracket and norm estimates, structural identities, structure constants.

Each check returns plain numbers so the CLI and the tests can share them.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .quantization import (
    bracket_scaled,
    build_basis,
    embed,
    generators,
    grad_perp_N,
    hbar,
    inv_laplacian_N,
    laplacian_N,
    lie_scale,
    matrix_inner,
    matrix_norm,
    project,
    quant_structure_constant,
)
from .sphere import (
    H1,
    HM1,
    L2,
    BandlimitedFunction,
    Sobolev,
    grad_perp,
    inner,
    laplacian,
    lm_table,
    n_coeffs,
    norm,
    poisson_bracket,
    truncate_low,
)
from .structure import structure_constant_cont, structure_constant_direct, window_indices

LEIBNIZ_COEFF = 2.0


# ---------------------------------------------------------------------------
# random inputs


def random_function(L: int, rng: np.random.Generator, decay: float = 1.0) -> BandlimitedFunction:
    """Real mean-zero function with |f^lm| ~ (l(l+1))^-decay for 1 <= l <= L."""
    ls, _ = lm_table(L)
    w = np.zeros(n_coeffs(L))
    w[1:] = (ls[1:] * (ls[1:] + 1.0)) ** -decay
    c = (rng.standard_normal(n_coeffs(L)) + 1j * rng.standard_normal(n_coeffs(L))) * w
    f = BandlimitedFunction(L, c).realify()
    f.coeffs[0] = 0
    return f


def random_pair(L: int, seed: int) -> tuple[BandlimitedFunction, BandlimitedFunction]:
    rng = np.random.default_rng(seed)
    return random_function(L, rng), random_function(L, rng)


def random_su(N: int, rng: np.random.Generator) -> np.ndarray:
    """Random traceless skew-Hermitian matrix with Gaussian entries."""
    G = rng.standard_normal((N, N)) + 1j * rng.standard_normal((N, N))
    A = 0.5 * (G - G.conj().T)
    return A - np.trace(A) / N * np.eye(N)


# ---------------------------------------------------------------------------
# bracket estimate


def bracket_rows(f: BandlimitedFunction, g: BandlimitedFunction, N_list) -> list[dict]:
    """Operator-norm error of the matrix bracket against p_N{f, g}.

    ``error`` divides the commutator by hbar(N) = 2/(N-1); ``error_lie`` by
    lie_scale(N), the scale under which p_N is exactly a Lie morphism on l = 1.
    """
    fg = poisson_bracket(f, g)
    rows = []
    for N in N_list:
        basis = build_basis(N)
        F, G = project(f, basis), project(g, basis)
        ref = project(fg, basis)
        err = matrix_norm(bracket_scaled(F, G, hbar(N)) - ref, "Linf")
        err_lie = matrix_norm(bracket_scaled(F, G, lie_scale(N)) - ref, "Linf")
        rows.append(
            {
                "N": int(N),
                "hbar": hbar(N),
                "error": err,
                "ratio": err / hbar(N),
                "error_lie": err_lie,
                "ratio_lie": err_lie / hbar(N),
            }
        )
    return rows


def ratio_spread(rows, column: str = "ratio") -> float:
    vals = np.array([r[column] for r in rows])
    return float(vals.max() / vals.min())


def sup_norm(f: BandlimitedFunction, n: int = 200) -> float:
    """max |f| on a dense latitude-longitude grid (an estimate from below)."""
    from .sphere import sph_eval

    th = np.linspace(0, np.pi, n)
    ph = np.linspace(0, 2 * np.pi, 2 * n, endpoint=False)
    T, P = np.meshgrid(th, ph, indexing="ij")
    return float(np.max(np.abs(sph_eval(f, T, P))))


# ---------------------------------------------------------------------------
# inner-product convergence


_KINDS = {"L2": (L2, "L2", 0.0), "H-1": (HM1, "H-1", 1.0), "H1": (H1, "H1", -1.0)}


def inner_product_differences(f: BandlimitedFunction, g: BandlimitedFunction, N: int) -> dict:
    """|<p_N f, p_N g>_{kind_N} - <f, g>_kind| for kind in L2, H-1, H1."""
    basis = build_basis(N)
    F, G = project(f, basis), project(g, basis)
    out = {}
    for name, (kc, kq, _) in _KINDS.items():
        if name == "H-1":
            q = matrix_inner(F - np.trace(F) / N * np.eye(N), G - np.trace(G) / N * np.eye(N), kq, basis)
        else:
            q = matrix_inner(F, G, kq, basis)
        out[name] = abs(q - inner(f, g, kc))
    return out


def tail_bounds(f: BandlimitedFunction, g: BandlimitedFunction, N: int, s: float = 2.0) -> dict:
    """{kind: (difference, 2 hbar^(s + shift) |f|_Hs |g|_Hs)} with shift 0, +1, -1."""
    diffs = inner_product_differences(f, g, N)
    fs = norm(f, Sobolev(s)) * norm(g, Sobolev(s))
    h = hbar(N)
    return {name: (diffs[name], 2 * h ** (s + shift) * fs) for name, (_, _, shift) in _KINDS.items()}


# ---------------------------------------------------------------------------
# norm comparison lemma


def norm_lemma_values(A: np.ndarray, B: np.ndarray, basis=None) -> dict:
    """{name: (lhs, rhs)} for the five matrix-norm inequalities (lhs <= rhs)."""
    N = A.shape[0]
    basis = build_basis(N) if basis is None else basis
    l2 = matrix_norm(A, "L2")
    l1 = matrix_norm(A, "L1")
    linf = matrix_norm(A, "Linf")
    return {
        "hm1_le_l2": (matrix_norm(A, "H-1", basis), l2 / np.sqrt(2)),
        "inv_laplacian_l2": (matrix_norm(inv_laplacian_N(A, basis=basis)), 0.5 * l2),
        "laplacian_l2": (matrix_norm(laplacian_N(A, basis=basis)), N * (N + 1) * l2),
        "l1_le_l2": (l1, np.sqrt(4 * np.pi) * l2),
        "l2_le_linf": (np.sqrt(4 * np.pi) * l2, 4 * np.pi * linf),
        "holder": (abs(matrix_inner(A, B)), linf * matrix_norm(B, "L1")),
    }


def norm_lemma_violations(N: int, n_samples: int = 100, seed: int = 0, tol: float = 1e-12) -> list[tuple]:
    """(sample, name, lhs, rhs) for every inequality violated beyond ``tol`` (relative)."""
    rng = np.random.default_rng(seed)
    basis = build_basis(N)
    bad = []
    for k in range(n_samples):
        A, B = random_su(N, rng), random_su(N, rng)
        for name, (lhs, rhs) in norm_lemma_values(A, B, basis).items():
            if lhs > rhs * (1 + tol) + tol:
                bad.append((k, name, lhs, rhs))
    return bad


# ---------------------------------------------------------------------------
# structural identities


def relatedness_defect(f: BandlimitedFunction, N: int) -> float:
    """max_i ||p_N grad_perp_i f - grad_perp_N,i p_N f||_{L2_N}."""
    basis = build_basis(N)
    F = project(f, basis)
    return max(
        matrix_norm(project(grad_perp(i, f), basis) - grad_perp_N(i, F)) for i in (1, 2, 3)
    )


def leibniz_residual_N(F: np.ndarray, G: np.ndarray, coeff: float = LEIBNIZ_COEFF) -> float:
    """Relative residual of Delta_N[F,G] = [Delta_N F,G] + [F,Delta_N G] + coeff sum_i [grad_i F, grad_i G]."""
    lhs = laplacian_N(bracket_scaled(F, G))
    terms = [bracket_scaled(laplacian_N(F), G), bracket_scaled(F, laplacian_N(G))]
    terms += [coeff * bracket_scaled(grad_perp_N(i, F), grad_perp_N(i, G)) for i in (1, 2, 3)]
    scale = max(matrix_norm(lhs), *(matrix_norm(t) for t in terms))
    return matrix_norm(lhs - sum(terms)) / scale


def leibniz_residual_cont(f: BandlimitedFunction, g: BandlimitedFunction, coeff: float = LEIBNIZ_COEFF) -> float:
    lhs = laplacian(poisson_bracket(f, g))
    terms = [poisson_bracket(laplacian(f), g), poisson_bracket(f, laplacian(g))]
    terms += [poisson_bracket(grad_perp(i, f), grad_perp(i, g)) * coeff for i in (1, 2, 3)]
    total = terms[0]
    for t in terms[1:]:
        total = total + t
    scale = max(norm(lhs), *(norm(t) for t in terms))
    return norm(lhs - total) / scale


def casimir_identity_defect(N: int) -> float:
    """Distance of sum_i (X^i_N)^2 from -I (X^i_N = p_N x^i)."""
    X = generators(N)
    S = sum(x @ x for x in X)
    return float(np.max(np.abs(S + np.eye(N))))


def hoppe_yau_defect(A: np.ndarray) -> float:
    """Relative distance between the eigen and double-commutator Laplacians."""
    a = laplacian_N(A, "eigen")
    b = laplacian_N(A, "commutator")
    return float(np.max(np.abs(a - b)) / max(1.0, np.max(np.abs(a))))


def roundtrip_defect(f: BandlimitedFunction, N: int) -> float:
    back = embed(project(f, N))
    return norm(back - truncate_low(f, N).resize(back.L))


# ---------------------------------------------------------------------------
# structure constants


Triple = tuple[tuple[int, int], tuple[int, int], tuple[int, int]]


def admissible_triples(
    L: int = 4, count: int = 10, seed: int = 0, min_abs: float = 1e-3, l_min: int = 2
) -> list[Triple]:
    """``count`` index triples with l_min <= l <= L and continuous constant above ``min_abs``.

    Triples touching l = 1 are excluded by default: the l = 1 matrices act as
    exact so(3) generators, so those constants carry no discretization error.
    """
    idx = [lm for lm in window_indices(L) if lm[0] >= l_min]
    cands = []
    for a in idx:
        for b in idx:
            m3 = a[1] + b[1]
            for l3 in range(max(l_min, abs(a[0] - b[0]), abs(m3)), min(L, a[0] + b[0]) + 1):
                c = (l3, m3)
                if abs(structure_constant_cont(a, b, c)) > min_abs:
                    cands.append((a, b, c))
    rng = np.random.default_rng(seed)
    pick = rng.choice(len(cands), size=min(count, len(cands)), replace=False)
    return [cands[i] for i in sorted(pick)]


def structure_rows(triples, N_list) -> list[dict]:
    """Rows N, hbar, inv_N and err_k = |f^N - f| for each triple k."""
    cont = [structure_constant_cont(*t) for t in triples]
    rows = []
    for N in N_list:
        row = {"N": int(N), "hbar": hbar(N), "inv_N": 1.0 / N}
        for k, (t, fc) in enumerate(zip(triples, cont)):
            row[f"err_{k}"] = abs(quant_structure_constant(N, *t) - fc)
        rows.append(row)
    return rows


def structure_closed_vs_direct(N: int | None, L: int = 3) -> float:
    """max |closed - direct| over all triples with l <= L."""
    idx = window_indices(L)
    worst = 0.0
    for a in idx:
        for b in idx:
            m3 = a[1] + b[1]
            for l3 in range(max(1, abs(m3)), L + 1):
                c = (l3, m3)
                if N is None:
                    closed = structure_constant_cont(a, b, c)
                else:
                    closed = quant_structure_constant(N, a, b, c)
                worst = max(worst, abs(closed - structure_constant_direct(a, b, c, N)))
    return worst


# ---------------------------------------------------------------------------
# verify battery


@dataclass(frozen=True)
class Check:
    name: str
    value: float
    tol: float

    @property
    def passed(self) -> bool:
        return bool(self.value <= self.tol)


def verify_battery(N: int, seed: int = 0) -> list[Check]:
    """All lemma-level invariants at one N; every value should be <= tol."""
    from .curvature import h1_basis_function, sectional_curvature_cont, sectional_curvature_milnor
    from .jacobi import is_stationary_quant
    from .structure import complex_table, real_table

    rng = np.random.default_rng(seed)
    basis = build_basis(N)
    L = min(3, (N - 1) // 2)
    f, g = random_function(L, rng), random_function(L, rng)
    F, G = project(f, basis), project(g, basis)
    A = random_su(N, rng)
    checks = [
        Check("orthonormality", basis.orthonormality_defect(), 1e-12),
        Check("casimir_identity", casimir_identity_defect(N), 1e-12),
        Check("hoppe_yau", hoppe_yau_defect(A), 1e-10),
        Check("roundtrip", roundtrip_defect(f, N), 1e-12),
        Check("relatedness", relatedness_defect(f, N), 1e-10),
        Check("leibniz_quantized", leibniz_residual_N(F, G), 1e-10),
        Check("leibniz_continuous", leibniz_residual_cont(f, g), 1e-10),
        Check("norm_lemma_violations", float(len(norm_lemma_violations(N, 20, seed))), 0.0),
        Check("inner_products_exact", max(inner_product_differences(f, g, N).values()), 1e-12),
        Check("structure_closed_vs_direct", structure_closed_vs_direct(N, min(3, N - 1)), 1e-9),
    ]
    zonal = project(BandlimitedFunction.from_modes({(2, 0): 1.0, (3, 0): 0.5}), basis)
    checks.append(Check("zonal_stationary", is_stationary_quant(zonal)[1], 1e-10))
    if N >= 5:
        Lw = 4
        tq = real_table(complex_table(Lw, N))
        tc = real_table(complex_table(Lw))
        worst = 0.0
        for a, b in (((1, 0), (2, 1)), ((2, -1), (2, 2)), ((1, 1), (2, -2))):
            fa, fb = h1_basis_function(*a), h1_basis_function(*b)
            worst = max(worst, abs(sectional_curvature_milnor(tc, a, b) - sectional_curvature_cont(fa, fb)))
            from .curvature import sectional_curvature_quant

            q = sectional_curvature_quant(project(fa, basis), project(fb, basis), basis=basis)
            worst = max(worst, abs(sectional_curvature_milnor(tq, a, b) - q))
        checks.append(Check("milnor_vs_direct", worst, 1e-8))
    return checks


__all__ = [
    "Check",
    "LEIBNIZ_COEFF",
    "admissible_triples",
    "bracket_rows",
    "casimir_identity_defect",
    "hoppe_yau_defect",
    "inner_product_differences",
    "leibniz_residual_N",
    "leibniz_residual_cont",
    "norm_lemma_values",
    "norm_lemma_violations",
    "random_function",
    "random_pair",
    "random_su",
    "ratio_spread",
    "relatedness_defect",
    "roundtrip_defect",
    "structure_closed_vs_direct",
    "structure_rows",
    "sup_norm",
    "tail_bounds",
    "verify_battery",
]
