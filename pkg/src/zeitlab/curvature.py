"""Sectional curvature of the vorticity Lie algebra and of its su(N) model.

The metric is H1 on stream functions (L2 on velocities).  Every curvature
is returned as the quadratic form from Arnold's formula; ``normalized=True``
divides by the Gram determinant of the plane.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .quantization import (
    bracket_scaled,
    build_basis,
    grad_perp_N,
    hbar,
    inv_laplacian_N,
    laplacian_N,
    matrix_inner,
    project,
)
from .sphere import (
    H1,
    L2,
    BandlimitedFunction,
    DomainError,
    grad_perp,
    inner,
    inv_laplacian,
    laplacian,
    poisson_bracket,
)
from .structure import StructureTable, window_indices

GRAM_TOL = 1e-12
TERM_NAMES = ("first", "second", "third", "fourth")


@dataclass(frozen=True)
class CurvatureTerms:
    """The four terms of the L2 form; ``total`` is their sum."""

    first: float
    second: float
    third: float
    fourth: float

    @property
    def total(self) -> float:
        return self.first + self.second + self.third + self.fourth

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.first, self.second, self.third, self.fourth)


def _real_mean_zero(f: BandlimitedFunction) -> None:
    if not f.is_real():
        raise DomainError("curvature is defined for real functions")
    f.require_mean_zero(tol=1e-14)


def b_operator_cont(f: BandlimitedFunction, g: BandlimitedFunction) -> BandlimitedFunction:
    """B(f, g) = Delta^-1 {Delta f, g}, the H1-adjoint of the bracket."""
    return inv_laplacian(_drop_mean(poisson_bracket(laplacian(f), g)))


def _drop_mean(f: BandlimitedFunction) -> BandlimitedFunction:
    # brackets have zero mean analytically; clear round-off in the l=0 slot
    out = f.copy()
    out.coeffs[0] = 0
    return out


def _gram(uu: float, vv: float, uv: float) -> float:
    d = uu * vv - uv * uv
    if d <= GRAM_TOL * max(uu * vv, 1e-300):
        raise DomainError("plane is degenerate (Gram determinant ~ 0)")
    return d


def sectional_curvature_cont(
    f: BandlimitedFunction, g: BandlimitedFunction, form: str = "H1", normalized: bool = False
) -> float:
    """C(X_f, X_g) in the H1 form or the equivalent four-term L2 form."""
    _real_mean_zero(f)
    _real_mean_zero(g)
    if form == "H1":
        c = _curvature_h1(f, g)
    elif form == "L2":
        c = curvature_terms_cont(f, g).total
    else:
        raise ValueError(f"unknown form {form!r}")
    if normalized:
        c /= _gram(inner(f, f, H1), inner(g, g, H1), inner(f, g, H1))
    return c


def _curvature_h1(f, g) -> float:
    bfg, bgf = b_operator_cont(f, g), b_operator_cont(g, f)
    fg = _drop_mean(poisson_bracket(f, g))
    s = bfg + bgf
    d = bfg - bgf
    return (
        0.25 * inner(s, s, H1)
        + 0.5 * inner(fg, d, H1)
        - 0.75 * inner(fg, fg, H1)
        - inner(b_operator_cont(f, f), b_operator_cont(g, g), H1)
    )


def curvature_terms_cont(f: BandlimitedFunction, g: BandlimitedFunction, third: str = "direct") -> CurvatureTerms:
    """Four terms of the L2 form.  ``third='leibniz'`` expands Delta{f,g}."""
    lf, lg = laplacian(f), laplacian(g)
    a = _drop_mean(poisson_bracket(lf, g))  # {Lap f, g}
    b = _drop_mean(poisson_bracket(lg, f))  # {Lap g, f}
    fg = _drop_mean(poisson_bracket(f, g))
    s = a + b
    t1 = -0.25 * inner(s, inv_laplacian(s), L2)
    t2 = -0.5 * inner(fg, a - b, L2)
    if third == "direct":
        lap_fg = laplacian(fg)
    elif third == "leibniz":
        lap_fg = poisson_bracket(lf, g) + poisson_bracket(f, lg)
        for i in (1, 2, 3):
            lap_fg = lap_fg + 2.0 * poisson_bracket(grad_perp(i, f), grad_perp(i, g))
    else:
        raise ValueError(f"unknown third-term path {third!r}")
    t3 = 0.75 * inner(fg, lap_fg, L2)
    t4 = inner(_drop_mean(poisson_bracket(lf, f)), inv_laplacian(_drop_mean(poisson_bracket(lg, g))), L2)
    return CurvatureTerms(t1, t2, t3, t4)


# ---------------------------------------------------------------------------
# su(N)


def curvature_terms_quant(F: np.ndarray, G: np.ndarray, third: str = "direct", basis=None) -> CurvatureTerms:
    """Four terms of C_N(F, G) with brackets [.,.] / lie_scale(N)."""
    N = F.shape[0]
    basis = build_basis(N) if basis is None else basis
    lF = laplacian_N(F, basis=basis)
    lG = laplacian_N(G, basis=basis)
    a = bracket_scaled(lF, G)
    b = bracket_scaled(lG, F)
    fg = bracket_scaled(F, G)
    s = a + b
    t1 = -0.25 * matrix_inner(s, inv_laplacian_N(s, basis=basis))
    t2 = -0.5 * matrix_inner(fg, a - b)
    if third == "direct":
        lap_fg = laplacian_N(fg, basis=basis)
    elif third == "leibniz":
        lap_fg = bracket_scaled(lF, G) + bracket_scaled(F, lG)
        for i in (1, 2, 3):
            lap_fg = lap_fg + 2.0 * bracket_scaled(grad_perp_N(i, F), grad_perp_N(i, G))
    else:
        raise ValueError(f"unknown third-term path {third!r}")
    t3 = 0.75 * matrix_inner(fg, lap_fg)
    t4 = matrix_inner(bracket_scaled(lF, F), inv_laplacian_N(bracket_scaled(lG, G), basis=basis))
    return CurvatureTerms(t1, t2, t3, t4)


def sectional_curvature_quant(F: np.ndarray, G: np.ndarray, normalized: bool = False, basis=None) -> float:
    c = curvature_terms_quant(F, G, basis=basis).total
    if normalized:
        c /= _gram(
            matrix_inner(F, F, "H1", basis), matrix_inner(G, G, "H1", basis), matrix_inner(F, G, "H1", basis)
        )
    return c


# ---------------------------------------------------------------------------
# Milnor's formula from structure constants


def sectional_curvature_milnor(table: StructureTable, a: int | tuple, b: int | tuple) -> float:
    """Curvature of the plane of orthonormal basis elements a, b (real table).

    ``a`` and ``b`` are flat table indices or (l, m) pairs.  The sum over the
    third index runs over the whole table window, which must contain every
    degree up to l_a + l_b (the bracket's coupling range).
    """
    if not table.real:
        raise ValueError("Milnor's formula needs a real structure table")
    ia = table.index(*a) if isinstance(a, tuple) else int(a)
    ib = table.index(*b) if isinstance(b, tuple) else int(b)
    f = table.values
    total = 0.0
    for c in range(f.shape[0]):
        fabc = f[ia, ib, c]
        fbca = f[ib, c, ia]
        fcab = f[c, ia, ib]
        total += 0.5 * fabc * (-fabc + fbca + fcab)
        total -= 0.25 * (fabc - fbca + fcab) * (fabc + fbca - fcab)
        total -= f[c, ia, ia] * f[c, ib, ib]
    return float(total)


def h1_basis_function(l: int, m: int) -> BandlimitedFunction:
    """Real harmonic normalised in H1 (the e_a of the real structure table)."""
    return BandlimitedFunction.real_ylm(l, m) / np.sqrt(l * (l + 1.0))


# ---------------------------------------------------------------------------
# convergence sweep


def curvature_rows(f: BandlimitedFunction, g: BandlimitedFunction, N_list) -> list[dict]:
    """Per-N rows: continuous value, quantized value, total and per-term errors."""
    _real_mean_zero(f)
    _real_mean_zero(g)
    Lsum = f.band_limit() + g.band_limit()
    cont = curvature_terms_cont(f, g)
    rows = []
    for N in N_list:
        if N <= Lsum:
            raise ValueError(f"N={N} must exceed L_max(f) + L_max(g) = {Lsum}")
        basis = build_basis(N)
        quant = curvature_terms_quant(project(f, basis), project(g, basis), basis=basis)
        row = {
            "N": int(N),
            "hbar": hbar(N),
            "C": cont.total,
            "C_N": quant.total,
            "error": abs(quant.total - cont.total),
        }
        for name, qv, cv in zip(TERM_NAMES, quant.as_tuple(), cont.as_tuple()):
            row[f"error_{name}"] = abs(qv - cv)
        rows.append(row)
    return rows


def curvature_convergence_sweep(f: BandlimitedFunction, g: BandlimitedFunction, N_list=(8, 16, 32, 64, 128)):
    """Run the sweep and fit the rate of |C_N - C| against hbar."""
    from .harness import ConvergenceReport

    rows = curvature_rows(f, g, N_list)
    columns = ["error"] + [f"error_{n}" for n in TERM_NAMES]
    return ConvergenceReport.from_rows("curvature", rows, columns)


__all__ = [
    "CurvatureTerms",
    "b_operator_cont",
    "curvature_convergence_sweep",
    "curvature_rows",
    "curvature_terms_cont",
    "curvature_terms_quant",
    "h1_basis_function",
    "sectional_curvature_cont",
    "sectional_curvature_milnor",
    "sectional_curvature_quant",
    "window_indices",
]
