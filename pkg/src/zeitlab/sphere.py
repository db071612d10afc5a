"""Band-limited functions on the unit sphere.

Functions are stored by their complex coefficients in the orthonormal basis
Y_lm (Condon-Shortley phase), flattened as ``index = l*l + l + m``.  Products
and brackets are evaluated on a Gauss-Legendre x uniform-longitude grid that
is large enough to make every transform exact for the degrees involved.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np

REAL_TOL = 1e-10


class DomainError(ValueError):
    """Operation undefined for this input (nonzero mean, non-real data, ...)."""


def n_coeffs(L: int) -> int:
    return (L + 1) ** 2


def lm_index(l: int, m: int) -> int:
    return l * l + l + m


@lru_cache(maxsize=None)
def lm_table(L: int) -> tuple[np.ndarray, np.ndarray]:
    """Arrays (l, m) for every flat index up to degree L."""
    ls = np.concatenate([np.full(2 * l + 1, l) for l in range(L + 1)])
    ms = np.concatenate([np.arange(-l, l + 1) for l in range(L + 1)])
    return ls, ms


@dataclass(frozen=True)
class Sobolev:
    """Sobolev weight ``(l(l+1))**s``; s = 0 is L2, 1 is H1, -1 is H^-1."""

    s: float = 0.0

    def weights(self, L: int) -> np.ndarray:
        ls, _ = lm_table(L)
        lam = (ls * (ls + 1)).astype(float)
        if self.s == 0:
            return np.ones_like(lam)
        w = np.zeros_like(lam)
        w[1:] = lam[1:] ** self.s
        return w


L2 = Sobolev(0.0)
H1 = Sobolev(1.0)
HM1 = Sobolev(-1.0)


class BandlimitedFunction:
    """Finite spherical-harmonic expansion ``sum coeffs[l,m] Y_lm``."""

    __slots__ = ("L", "coeffs")

    def __init__(self, L: int, coeffs=None, *, check_real: bool = False):
        if L < 0:
            raise ValueError("L must be non-negative")
        self.L = int(L)
        if coeffs is None:
            coeffs = np.zeros(n_coeffs(L), dtype=complex)
        coeffs = np.asarray(coeffs, dtype=complex)
        if coeffs.shape != (n_coeffs(L),):
            raise ValueError(f"expected {n_coeffs(L)} coefficients, got {coeffs.shape}")
        self.coeffs = coeffs
        if check_real and not self.is_real():
            raise DomainError("coefficients violate the real-valuedness symmetry")

    # construction -----------------------------------------------------
    @classmethod
    def zeros(cls, L: int) -> "BandlimitedFunction":
        return cls(L)

    @classmethod
    def from_modes(cls, modes: dict, L: int | None = None) -> "BandlimitedFunction":
        """From ``{(l, m): value}``; L defaults to the largest l present."""
        if L is None:
            L = max((l for l, _ in modes), default=0)
        c = np.zeros(n_coeffs(L), dtype=complex)
        for (l, m), v in modes.items():
            if abs(m) > l or l > L:
                raise ValueError(f"invalid mode ({l}, {m}) for L={L}")
            c[lm_index(l, m)] += v
        return cls(L, c)

    @classmethod
    def ylm(cls, l: int, m: int, L: int | None = None) -> "BandlimitedFunction":
        return cls.from_modes({(l, m): 1.0}, L if L is not None else l)

    @classmethod
    def real_ylm(cls, l: int, m: int, L: int | None = None) -> "BandlimitedFunction":
        """Real orthonormal harmonic: m>0 cosine-type, m<0 sine-type."""
        if m == 0:
            return cls.ylm(l, 0, L)
        a = abs(m)
        s = (-1) ** a
        if m > 0:
            modes = {(l, a): 1 / np.sqrt(2), (l, -a): s / np.sqrt(2)}
        else:
            modes = {(l, a): -1j / np.sqrt(2), (l, -a): 1j * s / np.sqrt(2)}
        return cls.from_modes(modes, L if L is not None else l)

    # basic structure ----------------------------------------------------
    def copy(self) -> "BandlimitedFunction":
        return BandlimitedFunction(self.L, self.coeffs.copy())

    def resize(self, L: int) -> "BandlimitedFunction":
        """Zero-pad or truncate to degree L."""
        c = np.zeros(n_coeffs(L), dtype=complex)
        n = min(n_coeffs(L), n_coeffs(self.L))
        c[:n] = self.coeffs[:n]
        return BandlimitedFunction(L, c)

    def coeff(self, l: int, m: int) -> complex:
        if l > self.L or abs(m) > l:
            return 0j
        return complex(self.coeffs[lm_index(l, m)])

    def reality_residual(self) -> float:
        _, ms = lm_table(self.L)
        idx = np.arange(len(ms))
        mirror = idx - 2 * ms  # index of (l, -m)
        sign = np.where(ms % 2, -1.0, 1.0)
        return float(np.max(np.abs(self.coeffs[mirror] - sign * np.conj(self.coeffs)), initial=0.0))

    def is_real(self, tol: float = REAL_TOL) -> bool:
        scale = max(1.0, float(np.max(np.abs(self.coeffs), initial=0.0)))
        return self.reality_residual() <= tol * scale

    def realify(self) -> "BandlimitedFunction":
        """Project onto real-valued functions (symmetrise the coefficients)."""
        _, ms = lm_table(self.L)
        mirror = np.arange(len(ms)) - 2 * ms
        sign = np.where(ms % 2, -1.0, 1.0)
        c = 0.5 * (self.coeffs + sign * np.conj(self.coeffs[mirror]))
        return BandlimitedFunction(self.L, c)

    @property
    def mean_zero(self) -> bool:
        return abs(self.coeffs[0]) == 0.0

    def require_mean_zero(self, tol: float = 0.0) -> None:
        if abs(self.coeffs[0]) > tol:
            raise DomainError(f"function has nonzero mean (Y_00 coefficient {self.coeffs[0]:.3g})")

    def band_limit(self, tol: float = 0.0) -> int:
        """Largest l carrying a coefficient above ``tol``."""
        ls, _ = lm_table(self.L)
        nz = np.flatnonzero(np.abs(self.coeffs) > tol)
        return int(ls[nz[-1]]) if len(nz) else 0

    # arithmetic ---------------------------------------------------------
    def _binary(self, other, op):
        if isinstance(other, BandlimitedFunction):
            L = max(self.L, other.L)
            return BandlimitedFunction(L, op(self.resize(L).coeffs, other.resize(L).coeffs))
        return NotImplemented

    def __add__(self, other):
        return self._binary(other, np.add)

    def __sub__(self, other):
        return self._binary(other, np.subtract)

    def __neg__(self):
        return BandlimitedFunction(self.L, -self.coeffs)

    def __mul__(self, scalar):
        if np.isscalar(scalar):
            return BandlimitedFunction(self.L, self.coeffs * scalar)
        return NotImplemented

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return BandlimitedFunction(self.L, self.coeffs / scalar)

    def allclose(self, other: "BandlimitedFunction", atol: float = 1e-12) -> bool:
        L = max(self.L, other.L)
        return bool(np.max(np.abs(self.resize(L).coeffs - other.resize(L).coeffs), initial=0.0) <= atol)

    def __repr__(self) -> str:
        return f"BandlimitedFunction(L={self.L})"

    # I/O ----------------------------------------------------------------
    def to_json(self) -> dict:
        ls, ms = lm_table(self.L)
        rows = [
            [int(l), int(m), float(c.real), float(c.imag)]
            for l, m, c in zip(ls, ms, self.coeffs)
            if c != 0
        ]
        return {"L_max": self.L, "coeffs": rows}

    @classmethod
    def from_json(cls, data: dict) -> "BandlimitedFunction":
        L = int(data["L_max"])
        c = np.zeros(n_coeffs(L), dtype=complex)
        for l, m, re, im in data["coeffs"]:
            l, m = int(l), int(m)
            if abs(m) > l or l > L:
                raise ValueError(f"invalid mode ({l}, {m}) for L_max={L}")
            c[lm_index(l, m)] = complex(re, im)
        return cls(L, c)

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_json()))

    @classmethod
    def load(cls, path) -> "BandlimitedFunction":
        return cls.from_json(json.loads(Path(path).read_text()))


# ---------------------------------------------------------------------------
# normalised Legendre tables and quadrature grids


def legendre_table(L: int, x: np.ndarray) -> np.ndarray:
    """theta-part of Y_lm at x = cos(theta): shape (len(x), (L+1)**2).

    Normalised recurrence; stable and overflow free for the degrees used here.
    Negative m filled from the parity relation.
    """
    x = np.asarray(x, dtype=float)
    s = np.sqrt((1.0 - x) * (1.0 + x))
    out = np.zeros((len(x), n_coeffs(L)))
    pmm = np.full_like(x, np.sqrt(1.0 / (4.0 * np.pi)))
    for m in range(L + 1):
        if m > 0:
            pmm = -np.sqrt((2 * m + 1) / (2 * m)) * s * pmm
        out[:, lm_index(m, m)] = pmm
        if m < L:
            p1 = x * np.sqrt(2 * m + 3) * pmm
            out[:, lm_index(m + 1, m)] = p1
            p0 = pmm
            for l in range(m + 2, L + 1):
                a = np.sqrt((4 * l * l - 1) / (l * l - m * m))
                b = np.sqrt(((l - 1) ** 2 - m * m) / (4 * (l - 1) ** 2 - 1))
                p2 = a * (x * p1 - b * p0)
                out[:, lm_index(l, m)] = p2
                p0, p1 = p1, p2
    for l in range(1, L + 1):
        for m in range(1, l + 1):
            out[:, lm_index(l, -m)] = (-1) ** m * out[:, lm_index(l, m)]
    return out


@dataclass(frozen=True)
class Grid:
    """Product quadrature: Gauss-Legendre in cos(theta), uniform in phi."""

    L: int  # highest degree represented
    theta: np.ndarray
    phi: np.ndarray
    weights: np.ndarray  # per-theta weights, include the 2*pi/n_phi factor
    P: np.ndarray  # (n_theta, (L+1)^2) theta-parts
    dP: np.ndarray  # d/dtheta of the theta-parts
    ephi: np.ndarray  # (n_phi, 2L+1) exp(i m phi)

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.theta), len(self.phi)


@lru_cache(maxsize=64)
def grid_for(L: int, n: int | None = None) -> Grid:
    """Grid exact for products of two degree-L functions (n defaults to 2(L+2))."""
    if n is None:
        n = 2 * (L + 2)
    x, w = np.polynomial.legendre.leggauss(n)
    theta = np.arccos(x)
    phi = 2 * np.pi * np.arange(n) / n
    P = legendre_table(L, x)
    ls, ms = lm_table(L)
    # d/dtheta Ytheta_lm = m cot(theta) Y_lm + sqrt((l-m)(l+m+1)) Y_{l,m+1}
    cot = x / np.sqrt((1 - x) * (1 + x))
    dP = ms[None, :] * cot[:, None] * P
    up = np.where(ms < ls)[0]
    coef = np.sqrt((ls[up] - ms[up]) * (ls[up] + ms[up] + 1.0))
    dP[:, up] += coef[None, :] * P[:, up + 1]
    ephi = np.exp(1j * np.outer(phi, np.arange(-L, L + 1)))
    return Grid(L, theta, phi, w * (2 * np.pi / n), P, dP, ephi)


def _to_2d(f: BandlimitedFunction, L: int) -> np.ndarray:
    ls, ms = lm_table(L)
    c = np.zeros((L + 1, 2 * L + 1), dtype=complex)
    c[ls, ms + L] = f.resize(L).coeffs
    return c


def synthesize(f: BandlimitedFunction, grid: Grid, table: np.ndarray | None = None) -> np.ndarray:
    """Values on the grid, shape (n_theta, n_phi). Complex."""
    L = grid.L
    P = grid.P if table is None else table
    ls, ms = lm_table(L)
    c = f.resize(L).coeffs
    # G[i, m] = sum_l P[i, (l,m)] c_lm
    G = np.zeros((P.shape[0], 2 * L + 1), dtype=complex)
    np.add.at(G.T, ms + L, (P * c[None, :]).T)
    return G @ grid.ephi.T


def analyze(values: np.ndarray, grid: Grid, L: int | None = None) -> BandlimitedFunction:
    """Coefficients up to degree L (<= grid.L) by exact quadrature."""
    L = grid.L if L is None else L
    H = (values @ np.conj(grid.ephi)) * grid.weights[:, None]  # (n_theta, 2Lg+1)
    ls, ms = lm_table(L)
    cols = lm_table(grid.L)[0] <= L
    P = grid.P[:, cols]
    c = np.einsum("ik,ik->k", P, H[:, ms + grid.L])
    return BandlimitedFunction(L, c)


# ---------------------------------------------------------------------------
# operators


def sph_eval(f: BandlimitedFunction, theta, phi) -> np.ndarray:
    """Pointwise evaluation at arrays (or scalars) theta, phi."""
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    phi = np.atleast_1d(np.asarray(phi, dtype=float))
    theta, phi = np.broadcast_arrays(theta, phi)
    P = legendre_table(f.L, np.cos(theta.ravel()))
    _, ms = lm_table(f.L)
    vals = (P * np.exp(1j * np.outer(phi.ravel(), ms))) @ f.coeffs
    vals = vals.reshape(theta.shape)
    return vals


def laplacian(f: BandlimitedFunction) -> BandlimitedFunction:
    ls, _ = lm_table(f.L)
    return BandlimitedFunction(f.L, -(ls * (ls + 1)) * f.coeffs)


def inv_laplacian(f: BandlimitedFunction) -> BandlimitedFunction:
    f.require_mean_zero(tol=1e-14 * max(1.0, float(np.max(np.abs(f.coeffs)))))
    ls, _ = lm_table(f.L)
    lam = (ls * (ls + 1)).astype(float)
    lam[0] = np.inf
    return BandlimitedFunction(f.L, -f.coeffs / lam)


def poisson_bracket(f: BandlimitedFunction, g: BandlimitedFunction, backend: str = "quadrature") -> BandlimitedFunction:
    """{f, g} = x . (grad f x grad g), exact for band-limited inputs."""
    if backend == "structure":
        from .structure import bracket_by_structure_constants

        return bracket_by_structure_constants(f, g)
    if backend != "quadrature":
        raise ValueError(f"unknown backend {backend!r}")
    Lout = f.L + g.L
    grid = grid_for(Lout)
    return analyze(_bracket_values(f, g, grid), grid, Lout)


def _bracket_values(f, g, grid: Grid) -> np.ndarray:
    L = grid.L
    _, ms = lm_table(L)
    fc, gc = f.resize(L), g.resize(L)
    ft = synthesize(fc, grid, grid.dP)
    gt = synthesize(gc, grid, grid.dP)
    fp = synthesize(BandlimitedFunction(L, 1j * ms * fc.coeffs), grid)
    gp = synthesize(BandlimitedFunction(L, 1j * ms * gc.coeffs), grid)
    sin = np.sin(grid.theta)[:, None]
    return (ft * gp - fp * gt) / sin


def multiply(f: BandlimitedFunction, g: BandlimitedFunction) -> BandlimitedFunction:
    Lout = f.L + g.L
    grid = grid_for(Lout)
    return analyze(synthesize(f, grid) * synthesize(g, grid), grid, Lout)


def power_integral(f: BandlimitedFunction, k: int) -> float:
    """Integral of f**k over the sphere, exact for band-limited f."""
    grid = grid_for(max(1, (k * f.L + 1) // 2))
    vals = synthesize(f, grid).real
    return float(np.sum((vals**k) * grid.weights[:, None]))


def inner(f: BandlimitedFunction, g: BandlimitedFunction, kind: Sobolev = L2) -> float:
    """Real part of sum w_l conj(f_lm) g_lm; equals the integral for real f, g."""
    if kind.s != 0:
        f.require_mean_zero(tol=1e-14)
        g.require_mean_zero(tol=1e-14)
    L = max(f.L, g.L)
    w = kind.weights(L)
    return float(np.real(np.sum(w * np.conj(f.resize(L).coeffs) * g.resize(L).coeffs)))


def norm(f: BandlimitedFunction, kind: Sobolev = L2) -> float:
    return float(np.sqrt(max(inner(f, f, kind), 0.0)))


def truncate_low(f: BandlimitedFunction, N: int) -> BandlimitedFunction:
    """Keep modes l <= N-1."""
    if N < 1:
        raise ValueError("N must be >= 1")
    ls, _ = lm_table(f.L)
    return BandlimitedFunction(f.L, np.where(ls <= N - 1, f.coeffs, 0))


def truncate_high(f: BandlimitedFunction, N: int) -> BandlimitedFunction:
    """Keep modes l >= N."""
    if N < 1:
        raise ValueError("N must be >= 1")
    ls, _ = lm_table(f.L)
    return BandlimitedFunction(f.L, np.where(ls >= N, f.coeffs, 0))


_C1 = np.sqrt(2 * np.pi / 3)


def coordinate_function(i: int) -> BandlimitedFunction:
    """Cartesian coordinate x^i restricted to the sphere (i in 1, 2, 3)."""
    if i == 3:
        return BandlimitedFunction.from_modes({(1, 0): np.sqrt(4 * np.pi / 3)}, 1)
    if i == 1:
        return BandlimitedFunction.from_modes({(1, -1): _C1, (1, 1): -_C1}, 1)
    if i == 2:
        return BandlimitedFunction.from_modes({(1, -1): 1j * _C1, (1, 1): 1j * _C1}, 1)
    raise ValueError("coordinate index must be 1, 2 or 3")


def grad_perp(i: int, f: BandlimitedFunction) -> BandlimitedFunction:
    """{x^i, f}: the rotation generator about axis i applied to f.

    Evaluated exactly in coefficient space through the angular-momentum
    ladder relations (same band limit as f); agrees with
    ``poisson_bracket(coordinate_function(i), f)``.
    """
    ls, ms = lm_table(f.L)
    c = f.coeffs
    if i == 3:
        return BandlimitedFunction(f.L, -1j * ms * c)
    # {x^1 +- i x^2, Y_lm} in terms of Y_{l, m+-1}
    up = np.zeros_like(c)  # L_+ applied
    dn = np.zeros_like(c)  # L_- applied
    idx = np.arange(len(c))
    a_up = np.sqrt(np.maximum((ls - ms) * (ls + ms + 1), 0))
    a_dn = np.sqrt(np.maximum((ls + ms) * (ls - ms + 1), 0))
    mask = ms < ls
    up[idx[mask] + 1] = a_up[mask] * c[mask]
    mask = ms > -ls
    dn[idx[mask] - 1] = a_dn[mask] * c[mask]
    # {x^k, .} = -i L_k with L_1 = (L+ + L-)/2, L_2 = (L+ - L-)/(2i)
    if i == 1:
        out = -0.5j * (up + dn)
    elif i == 2:
        out = -0.5 * (up - dn)
    else:
        raise ValueError("coordinate index must be 1, 2 or 3")
    return BandlimitedFunction(f.L, out)
