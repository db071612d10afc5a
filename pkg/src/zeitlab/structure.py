"""Structure constants of the H1-orthonormal harmonic bases.

Complex constants are indexed by (l, m) pairs and give the coefficient of
e_c in the bracket [e_a, e_b], where e_lm = Y_lm / sqrt(l(l+1)) on the
sphere and e_lm = p_N(Y_lm) / sqrt(l(l+1)) in su(N).  Real tables use the
real harmonics of ``BandlimitedFunction.real_ylm`` and feed Milnor's
curvature formula.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .quantization import build_basis, bracket_scaled, quant_structure_constant
from .sphere import BandlimitedFunction, lm_index, lm_table, n_coeffs, poisson_bracket
from .wigner import three_j

HALF = Fraction(1, 2)


@lru_cache(maxsize=None)
def structure_constant_cont(a: tuple[int, int], b: tuple[int, int], c: tuple[int, int]) -> complex:
    """Coefficient of e_c in {e_a, e_b}, closed form with two 3j symbols.

    Purely imaginary; zero unless m_a + m_b = m_c and l_a + l_b + l_c is odd.
    """
    (l1, m1), (l2, m2), (l3, m3) = a, b, c
    if min(l1, l2, l3) < 1:
        raise ValueError("structure constants are defined for l >= 1")
    if (l1 + l2 + l3) % 2 == 0 or m1 + m2 != m3 or not abs(l1 - l2) <= l3 <= l1 + l2:
        return 0j
    if max(abs(m1) - l1, abs(m2) - l2, abs(m3) - l3) > 0:
        return 0j
    w_top = float(three_j(l1 - HALF, l2 - HALF, l3, HALF, -HALF, 0))
    w_m = float(three_j(l1, l2, l3, m1, m2, -m3))
    pref = l3 * (l3 + 1) * (2 * l1 + 1) * (2 * l2 + 1) * (2 * l3 + 1)
    pref *= (l1 + l2 - l3) * (l1 + l2 + l3 + 1) / ((l1 + 1) * (l2 + 1))
    sign = -1.0 if m3 % 2 else 1.0
    return 1j * sign * np.sqrt(pref / (4 * np.pi)) * w_top * w_m


def structure_constant_direct(a, b, c, N: int | None = None) -> complex:
    """Same constant by direct evaluation: quadrature bracket, or matrix commutator for N."""
    (l1, m1), (l2, m2), (l3, m3) = a, b, c
    s1, s2, s3 = (np.sqrt(l * (l + 1.0)) for l in (l1, l2, l3))
    if N is None:
        br = poisson_bracket(BandlimitedFunction.ylm(l1, m1), BandlimitedFunction.ylm(l2, m2))
        return br.coeff(l3, m3) * s3 / (s1 * s2)
    basis = build_basis(N)
    A = 1j * basis.T(l1, m1)
    B = 1j * basis.T(l2, m2)
    coeffs = basis.matrix_to_coeffs(bracket_scaled(A, B))
    return coeffs[lm_index(l3, m3)] * s3 / (s1 * s2)


# ---------------------------------------------------------------------------
# tables over a degree window


def window_indices(L: int) -> list[tuple[int, int]]:
    """All (l, m) with 1 <= l <= L, in flat-index order."""
    ls, ms = lm_table(L)
    return [(int(l), int(m)) for l, m in zip(ls[1:], ms[1:])]


def real_to_complex(L: int) -> np.ndarray:
    """U with real_ylm(a) = sum_k U[a, k] Y_k over the window 1 <= l <= L."""
    idx = window_indices(L)
    U = np.zeros((len(idx), len(idx)), dtype=complex)
    for r, (l, m) in enumerate(idx):
        U[r] = BandlimitedFunction.real_ylm(l, m, L).coeffs[1:]
    return U


@dataclass(frozen=True)
class StructureTable:
    """Structure constants f[a, b, c] over 1 <= l <= L (flat order of window_indices).

    ``values[a, b, c]`` is the coefficient of e_c in [e_a, e_b]; ``N`` is None
    for the sphere.  With ``real=True`` the basis is the real harmonics and
    values[a, b, c] = <[e_a, e_b], e_c> is real.
    """

    L: int
    N: int | None
    real: bool
    values: np.ndarray

    def index(self, l: int, m: int) -> int:
        return lm_index(l, m) - 1

    def antisymmetry_defect(self) -> float:
        return float(np.max(np.abs(self.values + self.values.transpose(1, 0, 2)), initial=0.0))

    def parity_defect(self) -> float:
        """Largest entry whose degrees sum to an even number (should be 0)."""
        ls = np.array([l for l, _ in window_indices(self.L)])
        even = (ls[:, None, None] + ls[None, :, None] + ls[None, None, :]) % 2 == 0
        return float(np.max(np.abs(self.values[even]), initial=0.0))


def complex_table(L: int, N: int | None = None, source: str = "closed") -> StructureTable:
    """Complex constants over the window; source 'closed' (3j/6j) or 'direct'."""
    if N is not None and L > N - 1:
        raise ValueError(f"window L={L} exceeds N-1={N - 1}")
    idx = window_indices(L)
    n = len(idx)
    F = np.zeros((n, n, n), dtype=complex)
    if source == "direct":
        F = _direct_table(L, N)
        return StructureTable(L, N, False, F)
    if source != "closed":
        raise ValueError(f"unknown source {source!r}")
    pos = {lm: k for k, lm in enumerate(idx)}
    for ia, a in enumerate(idx):
        for ib, b in enumerate(idx):
            m3 = a[1] + b[1]
            for l3 in range(max(1, abs(a[0] - b[0]), abs(m3)), min(L, a[0] + b[0]) + 1):
                c = (l3, m3)
                if N is None:
                    v = structure_constant_cont(a, b, c)
                else:
                    v = quant_structure_constant(N, a, b, c)
                F[ia, ib, pos[c]] = v
    return StructureTable(L, N, False, F)


def _direct_table(L: int, N: int | None) -> np.ndarray:
    idx = window_indices(L)
    n = len(idx)
    lam = np.array([l * (l + 1.0) for l, _ in idx])
    F = np.zeros((n, n, n), dtype=complex)
    if N is None:
        for ia, (l1, m1) in enumerate(idx):
            for ib, (l2, m2) in enumerate(idx):
                br = poisson_bracket(BandlimitedFunction.ylm(l1, m1), BandlimitedFunction.ylm(l2, m2))
                F[ia, ib] = br.resize(L).coeffs[1:]
    else:
        basis = build_basis(N)
        mats = [1j * basis.T(l, m) for l, m in idx]
        for ia in range(n):
            for ib in range(n):
                F[ia, ib] = basis.matrix_to_coeffs(bracket_scaled(mats[ia], mats[ib]))[1 : n + 1]
    return F * np.sqrt(lam)[None, None, :] / np.sqrt(lam[:, None, None] * lam[None, :, None])


def real_table(table: StructureTable) -> StructureTable:
    """Convert complex constants to the real H1-orthonormal basis."""
    if table.real:
        return table
    U = real_to_complex(table.L)
    # e^R_a = sum_k U[a,k] e_k;  <[e^R_a, e^R_b], e^R_c> = sum F_kl^q U_ak U_bl conj(U_cq)
    R = np.einsum("ak,bl,klq,cq->abc", U, U, table.values, np.conj(U), optimize=True)
    if np.max(np.abs(R.imag), initial=0.0) > 1e-10 * max(1.0, np.max(np.abs(R.real), initial=0.0)):
        raise ArithmeticError("real-basis structure constants came out complex")
    return StructureTable(table.L, table.N, True, R.real)


# ---------------------------------------------------------------------------
# bracket by contraction


def bracket_by_structure_constants(f: BandlimitedFunction, g: BandlimitedFunction) -> BandlimitedFunction:
    """{f, g} assembled from the closed-form constants (modes l = 0 drop out)."""
    Lout = f.L + g.L
    out = np.zeros(n_coeffs(Lout), dtype=complex)
    lf, mf = lm_table(f.L)
    lg, mg = lm_table(g.L)
    for ka in np.flatnonzero(f.coeffs):
        l1, m1 = int(lf[ka]), int(mf[ka])
        if l1 == 0:
            continue
        for kb in np.flatnonzero(g.coeffs):
            l2, m2 = int(lg[kb]), int(mg[kb])
            if l2 == 0:
                continue
            m3 = m1 + m2
            w = f.coeffs[ka] * g.coeffs[kb] * np.sqrt(l1 * (l1 + 1.0) * l2 * (l2 + 1.0))
            for l3 in range(max(1, abs(l1 - l2), abs(m3)), l1 + l2 + 1):
                v = structure_constant_cont((l1, m1), (l2, m2), (l3, m3))
                if v:
                    out[lm_index(l3, m3)] += w * v / np.sqrt(l3 * (l3 + 1.0))
    return BandlimitedFunction(Lout, out)
