"""Hoppe quantization of the sphere: su(N) matrices standing in for functions.

Quantized harmonics T_lm live on a single diagonal of an N x N matrix.  We
store them in the orientation where row i carries the projection m2 = i - J
and column j carries m1 = j - J (J = (N-1)/2), so T_lm sits on numpy
diagonal ``k = m``.  In this orientation p_N maps the Poisson bracket to the
commutator with the same sign, i.e. [p_N f, p_N g] / lie_scale ~ p_N {f, g}.

Per diagonal m the band entries of T_lm for l = |m| .. N-1 form the rows of
a real matrix ``B_m`` (shape (N-|m|)^2, row index l - |m|).  All linear maps
(p_N, iota_N, Delta_N) are applied diagonal by diagonal.
"""

from __future__ import annotations

import json
from fractions import Fraction
import threading
from collections import OrderedDict
from functools import lru_cache
from pathlib import Path

import numpy as np
from scipy import sparse
from scipy.linalg import eigh_tridiagonal

from .sphere import BandlimitedFunction, DomainError, lm_index, lm_table, n_coeffs
from .wigner import six_j, three_j

SKEW_TOL = 1e-12
EXACT_MAX_N = 32


def hbar(N: int) -> float:
    """Nominal quantization parameter 2/(N-1); used as the abscissa of rate fits."""
    return 2.0 / (N - 1)


def lie_scale(N: int) -> float:
    """Scale of the matrix Lie bracket [A, B] / lie_scale(N).

    Equal to 2/sqrt(N^2-1) = hbar(N) * sqrt((N-1)/(N+1)); with it the
    coordinate matrices satisfy sum X_i^2 = -I, Delta_N equals the
    double-commutator formula, and p_N intertwines {x_i, .} exactly.
    """
    return 2.0 / np.sqrt(N * N - 1.0)


# ---------------------------------------------------------------------------
# basis construction


def _band_positions(N: int, m: int) -> tuple[np.ndarray, np.ndarray]:
    n = N - abs(m)
    p = np.arange(n)
    return p + max(0, -m), p + max(0, m)


def _exact_entry(N: int, l: int, m: int, i: int, j: int) -> float:
    J = Fraction(N - 1, 2)
    m2, m1 = i - J, j - J
    w = three_j(J, l, J, -m1, m, m2)
    phase = -1.0 if (N - 1 - j) % 2 else 1.0
    return phase * float(w) * np.sqrt((2 * l + 1) * N / (4 * np.pi))


def _exact_band(N: int, m: int) -> np.ndarray:
    rows, cols = _band_positions(N, m)
    B = np.zeros((N - abs(m), N - abs(m)))
    for r, l in enumerate(range(abs(m), N)):
        for p, (i, j) in enumerate(zip(rows, cols)):
            B[r, p] = _exact_entry(N, l, m, i, j)
    return B


def _casimir_band(N: int, m: int) -> tuple[np.ndarray, np.ndarray]:
    """Tridiagonal matrix of -sum_k ad(J_k)^2 restricted to diagonal m."""
    J = (N - 1) / 2
    rows, cols = _band_positions(N, m)
    mu_i, mu_j = rows - J, cols - J
    diag = -2 * J * (J + 1) + 2 * mu_i * mu_j
    a = lambda mu: np.sqrt(np.maximum((J - mu) * (J + mu + 1), 0.0))
    off = a(mu_i[:-1]) * a(mu_j[:-1])
    return diag, off


def _eigen_band(N: int, m: int) -> np.ndarray:
    diag, off = _casimir_band(N, m)
    if len(diag) == 1:
        vecs = np.ones((1, 1))
        vals = diag
    else:
        vals, vecs = eigh_tridiagonal(diag, off)
    # eigenvalues are -l(l+1), ascending in magnitude from the top
    order = np.argsort(-vals)
    vecs = vecs[:, order].T * np.sqrt(N / (4 * np.pi))
    rows, cols = _band_positions(N, m)
    for r, l in enumerate(range(abs(m), N)):
        p = int(np.argmax(np.abs(vecs[r])))
        if np.sign(_exact_entry(N, l, m, rows[p], cols[p])) != np.sign(vecs[r, p]):
            vecs[r] = -vecs[r]
    return vecs


class QuantizedBasis:
    """All T_lm for l <= N-1, stored as real band matrices per diagonal."""

    def __init__(self, N: int, method: str = "auto"):
        if N < 2:
            raise ValueError("N must be at least 2")
        if method == "auto":
            method = "exact" if N <= 12 else "eigen"
        if method not in ("exact", "eigen"):
            raise ValueError(f"unknown construction method {method!r}")
        self.N = int(N)
        self.method = method
        self.bands: dict[int, np.ndarray] = {}
        build = _exact_band if method == "exact" else _eigen_band
        for m in range(N):
            B = build(N, m)
            self.bands[m] = B
            if m:
                # T_{l,-m} = (-1)^m T_lm^T in this orientation (same band values)
                self.bands[-m] = B * (-1.0) ** m
        self.positions = {m: _band_positions(N, m) for m in range(-N + 1, N)}
        # all diagonals concatenated: flat matrix positions and the (l, m)
        # coefficient index of each row of the block-diagonal band matrix
        order = range(-N + 1, N)
        self._rows = np.concatenate([self.positions[m][0] for m in order])
        self._cols = np.concatenate([self.positions[m][1] for m in order])
        ls = np.concatenate([np.arange(abs(m), N) for m in order])
        ms = np.concatenate([np.full(N - abs(m), m) for m in order])
        self._ls = ls
        self._coef_index = ls * ls + ls + ms
        self._block = sparse.block_diag([self.bands[m] for m in order], format="csr")
        self._block_T = self._block.T.tocsr()
        self._operators: dict = {}

    @property
    def hbar(self) -> float:
        return hbar(self.N)

    @property
    def lie_scale(self) -> float:
        return lie_scale(self.N)

    def T(self, l: int, m: int) -> np.ndarray:
        """Dense T_lm (complex dtype)."""
        if not (0 <= l < self.N and abs(m) <= l):
            raise ValueError(f"no quantized harmonic ({l}, {m}) at N={self.N}")
        out = np.zeros((self.N, self.N), dtype=complex)
        rows, cols = self.positions[m]
        out[rows, cols] = self.bands[m][l - abs(m)]
        return out

    def orthonormality_defect(self) -> float:
        """max |B_m B_m^T (4 pi / N) - I| over all diagonals."""
        worst = 0.0
        for B in self.bands.values():
            G = B @ B.T * (4 * np.pi / self.N)
            worst = max(worst, float(np.max(np.abs(G - np.eye(len(G))))))
        return worst

    # coefficient maps ---------------------------------------------------
    def coeffs_to_matrix(self, c: np.ndarray, L: int) -> np.ndarray:
        """sum_{l<N} c_lm i T_lm from a flat coefficient array of degree L."""
        N = self.N
        keep = self._ls <= L
        v = np.zeros(len(self._ls), dtype=complex)
        v[keep] = c[self._coef_index[keep]]
        A = np.zeros((N, N), dtype=complex)
        A[self._rows, self._cols] = 1j * (self._block_T @ v)
        return A

    def matrix_to_coeffs(self, A: np.ndarray) -> np.ndarray:
        """Flat coefficients (degree N-1) of A in the basis i T_lm."""
        N = self.N
        c = np.zeros(n_coeffs(N - 1), dtype=complex)
        c[self._coef_index] = -1j * (4 * np.pi / N) * (self._block @ A[self._rows, self._cols])
        return c

    def spectral_operator(self, key: str, weight) -> sparse.csr_matrix:
        """Cached block-diagonal matrix of the map (l, m)-component -> weight(l) * it."""
        op = self._operators.get(key)
        if op is None:
            w = sparse.diags(weight(self._ls.astype(float)))
            op = ((4 * np.pi / self.N) * (self._block_T @ w @ self._block)).tocsr()
            self._operators[key] = op
        return op

    def apply_spectral(self, A: np.ndarray, weight, key: str | None = None) -> np.ndarray:
        """Multiply the (l, m) component of A by weight(l); ``key`` caches the operator."""
        if key is None:
            B = self._block
            v = (4 * np.pi / self.N) * (self._block_T @ (weight(self._ls.astype(float)) * (B @ A[self._rows, self._cols])))
        else:
            v = self.spectral_operator(key, weight) @ A[self._rows, self._cols]
        out = np.zeros((self.N, self.N), dtype=complex)
        out[self._rows, self._cols] = v
        return out


_BASES: OrderedDict = OrderedDict()
_BASIS_CACHE = {"size": 16}
_BASIS_LOCK = threading.Lock()


def build_basis(N: int, method: str = "auto") -> QuantizedBasis:
    """Cached basis per (N, method); bases are treated as immutable."""
    key = (int(N), method)
    with _BASIS_LOCK:
        basis = _BASES.get(key)
        if basis is not None:
            _BASES.move_to_end(key)
            return basis
    basis = QuantizedBasis(N, method)
    with _BASIS_LOCK:
        _BASES[key] = basis
        while len(_BASES) > _BASIS_CACHE["size"]:
            _BASES.popitem(last=False)
    return basis


def set_basis_cache_size(n: int) -> None:
    """Keep at most n bases alive (n = 1 builds each N on demand during sweeps)."""
    if n < 1:
        raise ValueError("cache size must be >= 1")
    with _BASIS_LOCK:
        _BASIS_CACHE["size"] = int(n)
        while len(_BASES) > n:
            _BASES.popitem(last=False)


def _basis(obj) -> QuantizedBasis:
    return obj if isinstance(obj, QuantizedBasis) else build_basis(int(obj))


# ---------------------------------------------------------------------------
# su(N) validation


def is_skew_hermitian(A: np.ndarray, tol: float = SKEW_TOL) -> bool:
    scale = max(1.0, float(np.max(np.abs(A), initial=0.0)))
    return bool(np.max(np.abs(A + A.conj().T), initial=0.0) <= tol * scale)


def check_su(A: np.ndarray, tol: float = SKEW_TOL, traceless: bool = True) -> np.ndarray:
    """Return A as a complex array after asserting it lies in su(N) (or u(N))."""
    A = np.asarray(A, dtype=complex)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DomainError(f"expected a square matrix, got shape {A.shape}")
    if not is_skew_hermitian(A, tol):
        raise DomainError("matrix is not skew-Hermitian")
    scale = max(1.0, float(np.max(np.abs(A), initial=0.0)))
    if traceless and abs(np.trace(A)) > tol * scale * A.shape[0]:
        raise DomainError(f"matrix has nonzero trace {np.trace(A):.3g}")
    return A


def project_su(A: np.ndarray) -> np.ndarray:
    """Nearest element of su(N): skew-Hermitian part with the trace removed."""
    S = 0.5 * (A - A.conj().T)
    return S - (np.trace(S) / S.shape[0]) * np.eye(S.shape[0])


# ---------------------------------------------------------------------------
# projection and embedding


def project(f: BandlimitedFunction, N, check_real: bool = True) -> np.ndarray:
    """p_N f = sum_{l<N} f^lm i T_lm (modes l >= N are discarded)."""
    if check_real and not f.is_real():
        raise DomainError("p_N is defined on real functions only")
    basis = _basis(N)
    return basis.coeffs_to_matrix(f.coeffs, f.L)


def embed(A: np.ndarray, basis=None) -> BandlimitedFunction:
    """iota_N: the function whose coefficients are <i T_lm, A>_{L2_N}."""
    basis = _basis(A.shape[0] if basis is None else basis)
    return BandlimitedFunction(basis.N - 1, basis.matrix_to_coeffs(A))


def bracket_scaled(A: np.ndarray, B: np.ndarray, scale: float | None = None) -> np.ndarray:
    """(AB - BA) / scale; scale defaults to lie_scale(N)."""
    if A.shape != B.shape:
        raise ValueError(f"dimension mismatch {A.shape} vs {B.shape}")
    if scale is None:
        scale = lie_scale(A.shape[0])
    return (A @ B - B @ A) / scale


@lru_cache(maxsize=16)
def _generators(N: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    from .sphere import coordinate_function

    basis = build_basis(N)
    return tuple(basis.coeffs_to_matrix(coordinate_function(i).coeffs, 1) for i in (1, 2, 3))


def generators(N: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """X^i_N = p_N x^i for i = 1, 2, 3."""
    return tuple(X.copy() for X in _generators(int(N)))


def grad_perp_N(i: int, A: np.ndarray) -> np.ndarray:
    if i not in (1, 2, 3):
        raise ValueError("coordinate index must be 1, 2 or 3")
    X = _generators(A.shape[0])[i - 1]
    return bracket_scaled(X, A)


# ---------------------------------------------------------------------------
# quantized Laplacian


def _neg_lambda(l):
    return -(l * (l + 1.0))


def _neg_inv_lambda(l):
    lam = l * (l + 1.0)
    return np.where(lam > 0, -1.0 / np.where(lam > 0, lam, 1.0), 0.0)


def laplacian_N(A: np.ndarray, method: str = "eigen", basis=None) -> np.ndarray:
    """Delta_N: eigen scaling by -l(l+1), or the double-commutator formula."""
    N = A.shape[0]
    if method == "eigen":
        return _basis(N if basis is None else basis).apply_spectral(A, _neg_lambda, "lap")
    if method == "commutator":
        out = np.zeros_like(A, dtype=complex)
        s2 = lie_scale(N) ** 2
        for X in _generators(N):
            C = X @ A - A @ X
            out += X @ C - C @ X
        return out / s2
    raise ValueError(f"unknown Laplacian method {method!r}")


def inv_laplacian_N(A: np.ndarray, basis=None, tol: float = 1e-12) -> np.ndarray:
    N = A.shape[0]
    scale = max(1.0, float(np.max(np.abs(A), initial=0.0)))
    if abs(np.trace(A)) > tol * scale * N:
        raise DomainError(f"Delta_N is not invertible on matrices with trace {np.trace(A):.3g}")

    return _basis(N if basis is None else basis).apply_spectral(A, _neg_inv_lambda, "inv_lap")


# ---------------------------------------------------------------------------
# inner products and norms

NORM_KINDS = ("L2", "H1", "H-1", "L1", "Linf")


def matrix_inner(A: np.ndarray, B: np.ndarray, kind: str = "L2", basis=None) -> float:
    N = A.shape[0]
    if kind == "L2":
        return float(np.real(np.vdot(A, B)) * 4 * np.pi / N)
    if kind == "H1":
        return -matrix_inner(A, laplacian_N(B, basis=basis), "L2")
    if kind == "H-1":
        return -matrix_inner(A, inv_laplacian_N(B, basis=basis), "L2")
    raise ValueError(f"no inner product of kind {kind!r}")


def matrix_norm(A: np.ndarray, kind: str = "L2", basis=None) -> float:
    N = A.shape[0]
    if kind == "Linf":
        return float(np.linalg.norm(A, 2))
    if kind == "L1":
        # A skew-Hermitian: iA is Hermitian with real eigenvalues
        return float(4 * np.pi / N * np.sum(np.abs(np.linalg.eigvalsh(1j * A))))
    if kind in ("L2", "H1", "H-1"):
        return float(np.sqrt(max(matrix_inner(A, A, kind, basis), 0.0)))
    raise ValueError(f"unknown norm kind {kind!r}; expected one of {NORM_KINDS}")


# ---------------------------------------------------------------------------
# structure constants of the H1_N-orthonormal basis


def quant_structure_constant(N: int, a: tuple[int, int], b: tuple[int, int], c: tuple[int, int]) -> complex:
    """Structure constant of the H1_N-orthonormal matrices p_N(Y_lm / sqrt(l(l+1))).

    Returns the coefficient of the c-th basis matrix in [e_a, e_b] / lie_scale(N),
    evaluated in closed form from one 3j and one 6j symbol.  Nonzero only for
    m_a + m_b = m_c and odd l_a + l_b + l_c; the value is purely imaginary.
    """
    (l1, m1), (l2, m2), (l3, m3) = a, b, c
    if min(l1, l2, l3) < 1 or max(l1, l2, l3) >= N:
        raise ValueError("indices must satisfy 1 <= l <= N-1")
    if (l1 + l2 + l3) % 2 == 0 or m1 + m2 != m3 or max(abs(m1) - l1, abs(m2) - l2, abs(m3) - l3) > 0:
        return 0j
    J = Fraction(N - 1, 2)
    w3 = float(three_j(l1, l2, l3, m1, m2, -m3))
    w6 = float(six_j(l1, l2, l3, J, J, J))
    if w3 == 0.0 or w6 == 0.0:
        return 0j
    lam1, lam2, lam3 = l1 * (l1 + 1), l2 * (l2 + 1), l3 * (l3 + 1)
    val = 2.0 * np.sqrt(lam3 / (lam1 * lam2))
    val *= np.sqrt((2 * l1 + 1) * (2 * l2 + 1) * (2 * l3 + 1) * N / (4 * np.pi))
    val *= w3 * w6 / lie_scale(N)
    sign = (-1) ** (m3 + 1 + N)
    return 1j * sign * val


# ---------------------------------------------------------------------------
# matrix I/O


def save_matrix(path, A: np.ndarray) -> None:
    """JSON header line followed by row-major little-endian complex128 data."""
    A = np.ascontiguousarray(A, dtype="<c16")
    header = json.dumps({"N": int(A.shape[0]), "format": "dense-complex"}).encode()
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "wb") as fh:
        fh.write(header + b"\n")
        fh.write(A.tobytes(order="C"))
    tmp.replace(path)


def load_matrix(path) -> np.ndarray:
    with open(path, "rb") as fh:
        header = json.loads(fh.readline())
        if header.get("format") != "dense-complex":
            raise ValueError(f"unsupported matrix format {header.get('format')!r}")
        N = int(header["N"])
        data = np.frombuffer(fh.read(), dtype="<c16")
    if data.size != N * N:
        raise ValueError(f"expected {N * N} entries, found {data.size}")
    return data.reshape(N, N).astype(complex)
