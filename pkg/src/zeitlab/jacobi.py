"""Reduced (split) Jacobi equations about stationary flows, continuous and su(N).

With psi0 = Delta^-1 omega0 the continuous system is

    d/dt upsilon = {psi0, upsilon} + Delta^-1 zeta
    d/dt zeta    = {psi0, zeta} + {Delta^-1 zeta, omega0}

and the su(N) system replaces {.,.} by [.,.] / lie_scale(N) and Delta by
Delta_N.  The continuous side is Galerkin-truncated at a degree L and
assembled as a sparse matrix on spherical-harmonic coefficients.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy import sparse
from scipy.linalg import expm
from scipy.sparse.linalg import LinearOperator, expm_multiply, gmres

from .dynamics import expm_skew, stationarity_residual_N, stationarity_residual_cont
from .quantization import (
    bracket_scaled,
    build_basis,
    embed,
    hbar,
    inv_laplacian_N,
    lie_scale,
    matrix_norm,
    project,
)
from .sphere import (
    H1,
    BandlimitedFunction,
    DomainError,
    grid_for,
    inv_laplacian,
    lm_table,
    n_coeffs,
    norm,
    poisson_bracket,
    synthesize,
)

STATIONARY_TOL = 1e-10
REF_TOL = 1e-10


class PreconditionError(ValueError):
    """A sweep or generator precondition failed (e.g. non-stationary base flow)."""


# ---------------------------------------------------------------------------
# stationarity


def is_stationary_cont(omega: BandlimitedFunction, tol: float = STATIONARY_TOL) -> tuple[bool, float]:
    r = stationarity_residual_cont(omega)
    return r <= tol, r


def is_stationary_quant(W: np.ndarray, tol: float = STATIONARY_TOL) -> tuple[bool, float]:
    r = stationarity_residual_N(W)
    return r <= tol, r


# ---------------------------------------------------------------------------
# states


@dataclass(frozen=True)
class JacobiState:
    """(upsilon, zeta) as functions, or (Y, Z) as su(N) matrices."""

    first: object
    second: object
    t: float = 0.0

    @property
    def is_matrix(self) -> bool:
        return isinstance(self.first, np.ndarray)

    def l2_norm(self) -> float:
        """sqrt(|first|^2 + |second|^2) in L2 (or L2_N)."""
        if self.is_matrix:
            return float(np.hypot(matrix_norm(self.first), matrix_norm(self.second)))
        return float(np.hypot(norm(self.first), norm(self.second)))


# ---------------------------------------------------------------------------
# Galerkin bracket operator


def bracket_operator(psi: BandlimitedFunction, L: int) -> sparse.csr_matrix:
    """Matrix of f -> {psi, f} truncated to degree L, on flat coefficients of degree L.

    Built by exact quadrature: for each azimuthal shift q the psi-derivatives
    are Fourier-analysed once, and each (m, m+q) block is a small matrix
    product over the colatitude nodes.
    """
    Lp = psi.band_limit()
    grid = grid_for(L + max(Lp, 1))
    Lg = grid.L
    _, ms_g = lm_table(Lg)
    pc = psi.resize(Lg)
    psi_t = synthesize(pc, grid, grid.dP)
    psi_p = synthesize(BandlimitedFunction(Lg, 1j * ms_g * pc.coeffs), grid)
    sin = np.sin(grid.theta)
    n_phi = len(grid.phi)
    # A[q][theta] = sum_phi psi_theta e^{-i q phi} / sin(theta), q = -Lp..Lp
    qs = np.arange(-Lp, Lp + 1)
    ph = np.exp(-1j * np.outer(grid.phi, qs))
    A = (psi_t @ ph) / sin[:, None]
    B = (psi_p @ ph) / sin[:, None]
    w = grid.weights
    rows, cols, vals = [], [], []
    start = lambda m: m * m  # noqa: E731  (first flat index with |m| <= l is l = |m|)
    for iq, q in enumerate(qs):
        for m in range(-L, L + 1):
            mo = m + q
            if abs(mo) > L:
                continue
            lin = np.arange(abs(m), L + 1)
            lout = np.arange(abs(mo), L + 1)
            kin = lin * lin + lin + m
            kout = lout * lout + lout + mo
            Pin = grid.P[:, kin]
            dPin = grid.dP[:, kin]
            Pout = grid.P[:, kout]
            inner_vals = (A[:, iq, None] * (1j * m) * Pin) - (B[:, iq, None] * dPin)
            block = (Pout * w[:, None]).T @ inner_vals
            r, c = np.meshgrid(kout, kin, indexing="ij")
            rows.append(r.ravel())
            cols.append(c.ravel())
            vals.append(block.ravel())
    n = n_coeffs(L)
    M = sparse.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n)
    ).tocsr()
    M.data[np.abs(M.data) < 1e-15] = 0
    M.eliminate_zeros()
    return M


def inv_laplacian_operator(L: int) -> sparse.dia_matrix:
    ls, _ = lm_table(L)
    lam = (ls * (ls + 1)).astype(float)
    d = np.zeros_like(lam)
    d[1:] = -1.0 / lam[1:]
    return sparse.diags(d)


# ---------------------------------------------------------------------------
# generators


class ContinuousJacobiGenerator:
    """The continuous block generator, Galerkin-truncated at degree L."""

    def __init__(self, omega0: BandlimitedFunction, L: int, check: bool = True, coupling: bool = True):
        omega0.require_mean_zero(tol=1e-14)
        if check:
            ok, r = is_stationary_cont(omega0)
            if not ok:
                raise PreconditionError(f"omega0 is not stationary (residual {r:.3e})")
        self.omega0 = omega0
        self.L = int(L)
        self.coupling = coupling
        n = n_coeffs(L)
        self.n = n
        self.transport = bracket_operator(inv_laplacian(omega0), L)
        D = inv_laplacian_operator(L)
        # {Delta^-1 zeta, omega0} = -{omega0, Delta^-1 zeta}
        self.coupling_zz = (-bracket_operator(omega0, L) @ D).tocsr()
        Z = sparse.csr_matrix((n, n))
        T, C = self.transport, self.coupling_zz
        if coupling:
            self.matrix = sparse.bmat([[T, D], [Z, T + C]], format="csr")
            self.coupling_part = sparse.bmat([[Z, D], [Z, C]], format="csr")
        else:
            self.matrix = sparse.bmat([[T, Z], [Z, T]], format="csr")
            self.coupling_part = sparse.csr_matrix((2 * n, 2 * n))
        self._transport_exp: dict = {}

    def pack(self, state: JacobiState) -> np.ndarray:
        return np.concatenate([state.first.resize(self.L).coeffs, state.second.resize(self.L).coeffs])

    def unpack(self, v: np.ndarray, t: float) -> JacobiState:
        n = self.n
        return JacobiState(BandlimitedFunction(self.L, v[:n].copy()), BandlimitedFunction(self.L, v[n:].copy()), t)

    def apply(self, v: np.ndarray) -> np.ndarray:
        return self.matrix @ v

    def apply_coupling(self, v: np.ndarray) -> np.ndarray:
        return self.coupling_part @ v

    def transport_flow(self, v: np.ndarray, tau: float) -> np.ndarray:
        E = self._transport_exp.get(tau)
        if E is None:
            E = expm(tau * self.transport.toarray())
            self._transport_exp[tau] = E
        n = self.n
        return np.concatenate([E @ v[:n], E @ v[n:]])


def apply_generator_cont(omega0: BandlimitedFunction, state: JacobiState) -> JacobiState:
    """Exact (untruncated) action of the continuous generator on band-limited functions."""
    psi0 = inv_laplacian(omega0)
    ups, zeta = state.first, state.second
    izeta = inv_laplacian(zeta)
    d_ups = poisson_bracket(psi0, ups) + izeta
    d_zeta = poisson_bracket(psi0, zeta) + poisson_bracket(izeta, omega0)
    d_ups.coeffs[0] = 0
    d_zeta.coeffs[0] = 0
    return JacobiState(d_ups, d_zeta, state.t)


class QuantizedJacobiGenerator:
    """The su(N) block generator about a stationary W0."""

    def __init__(self, W0: np.ndarray, check: bool = True, coupling: bool = True):
        if check:
            ok, r = is_stationary_quant(W0)
            if not ok:
                raise PreconditionError(f"W0 is not stationary at N={W0.shape[0]} (residual {r:.3e})")
        self.W0 = W0
        self.N = W0.shape[0]
        self.basis = build_basis(self.N)
        self.P0 = inv_laplacian_N(W0, basis=self.basis)
        self.scale = lie_scale(self.N)
        self.coupling = coupling
        self._transport_exp: dict = {}

    def pack(self, state: JacobiState) -> np.ndarray:
        return np.stack([state.first, state.second])

    def unpack(self, v: np.ndarray, t: float) -> JacobiState:
        return JacobiState(v[0].copy(), v[1].copy(), t)

    def _transport(self, X: np.ndarray) -> np.ndarray:
        return bracket_scaled(self.P0, X, self.scale)

    def apply(self, v: np.ndarray) -> np.ndarray:
        Y, Z = v
        out = np.stack([self._transport(Y), self._transport(Z)])
        if self.coupling:
            out += self.apply_coupling(v)
        return out

    def apply_coupling(self, v: np.ndarray) -> np.ndarray:
        if not self.coupling:
            return np.zeros_like(v)
        iz = inv_laplacian_N(v[1], basis=self.basis)
        return np.stack([iz, bracket_scaled(iz, self.W0, self.scale)])

    def transport_flow(self, v: np.ndarray, tau: float) -> np.ndarray:
        """Exact transport: conjugation by E = exp(tau P0 / lie_scale)."""
        E = self._transport_exp.get(tau)
        if E is None:
            E = expm_skew(tau * self.P0 / self.scale)
            self._transport_exp[tau] = E
        Eh = E.conj().T
        return np.stack([E @ v[0] @ Eh, E @ v[1] @ Eh])


def apply_generator_quant(gen: QuantizedJacobiGenerator, state: JacobiState) -> JacobiState:
    v = gen.apply(gen.pack(state))
    return JacobiState(v[0], v[1], state.t)


# ---------------------------------------------------------------------------
# time stepping


def _rk4(apply, v, dt):
    k1 = apply(v)
    k2 = apply(v + 0.5 * dt * k1)
    k3 = apply(v + 0.5 * dt * k2)
    k4 = apply(v + dt * k3)
    return v + (dt / 6) * (k1 + 2 * k2 + 2 * k3 + k4)


def evolve_jacobi(gen, state0: JacobiState, t_final: float, dt: float, scheme: str = "rk4", times=None):
    """Integrate the linear system; returns states at ``times`` (default: t_final).

    Schemes: 'rk4', 'strang' (half transport, coupling by RK4, half transport),
    and 'exact' (continuous generator only; sparse matrix exponential).
    Requested times are rounded to the step grid.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    times = [t_final] if times is None else sorted(float(t) for t in times)
    v = gen.pack(state0)
    if scheme == "exact":
        if not isinstance(gen, ContinuousJacobiGenerator):
            raise ValueError("scheme 'exact' is available for the continuous generator only")
        out = []
        t_prev = 0.0
        for t in times:
            if t > t_prev:
                v = expm_multiply((t - t_prev) * gen.matrix, v)
            out.append(gen.unpack(v, state0.t + t))
            t_prev = t
        return out
    if scheme == "rk4":
        step = lambda x: _rk4(gen.apply, x, dt)  # noqa: E731
    elif scheme == "strang":

        def step(x):
            x = gen.transport_flow(x, 0.5 * dt)
            x = _rk4(gen.apply_coupling, x, dt)
            return gen.transport_flow(x, 0.5 * dt)

    else:
        raise ValueError(f"unknown scheme {scheme!r}")
    out = []
    n_done = 0
    for t in times:
        n_target = int(round(t / dt))
        while n_done < n_target:
            v = step(v)
            n_done += 1
        out.append(gen.unpack(v, state0.t + n_done * dt))
    return out


def default_dt(omega0: BandlimitedFunction) -> float:
    return min(1e-2, 0.1 / (1.0 + norm(omega0, H1)))


def growth_rate(omega0: BandlimitedFunction) -> float:
    """c = sqrt(1/4 + |omega0|_H1^2 / 2), the semigroup growth bound."""
    return float(np.sqrt(0.25 + 0.5 * norm(omega0, H1) ** 2))


# ---------------------------------------------------------------------------
# continuous reference with adaptive truncation


@dataclass
class Reference:
    L_ref: int
    states: list
    change: float


def continuous_reference(
    omega0: BandlimitedFunction, xi0: JacobiState, times, tol: float = REF_TOL, L_start: int | None = None, L_max: int = 128
) -> Reference:
    """Galerkin solution at a degree L_ref for which doubling L_ref changes it by < tol."""
    L = L_start or max(16, 2 * (xi0.first.band_limit() + xi0.second.band_limit() + omega0.band_limit()))
    prev = None
    while True:
        gen = ContinuousJacobiGenerator(omega0, L)
        states = evolve_jacobi(gen, xi0, max(times), 1.0, "exact", times)
        if prev is not None:
            change = max(
                max(norm(a.first - b.first), norm(a.second - b.second)) for a, b in zip(prev.states, states)
            )
            if change < tol:
                return Reference(prev.L_ref, prev.states, change)
        prev = Reference(L, states, np.inf)
        if 2 * L > L_max:
            raise RuntimeError(f"reference did not converge below L={L_max}")
        L *= 2


# ---------------------------------------------------------------------------
# consistency checks


def consistency_residual(omega0: BandlimitedFunction, xi: JacobiState, N: int) -> float:
    """|| Lambda_N p_N xi - p_N L xi ||_{L2_N} (L applied exactly to band-limited xi)."""
    basis = build_basis(N)
    gen = QuantizedJacobiGenerator(project(omega0, basis), check=False)
    lhs = gen.apply(np.stack([project(xi.first, basis), project(xi.second, basis)]))
    Lxi = apply_generator_cont(omega0, xi)
    rhs = np.stack([project(Lxi.first, basis), project(Lxi.second, basis)])
    return float(np.hypot(matrix_norm(lhs[0] - rhs[0]), matrix_norm(lhs[1] - rhs[1])))


def resolvent_difference(omega0: BandlimitedFunction, xi: JacobiState, N: int, lam: float, L_ref: int) -> float:
    """|| (lam - L_N)^-1 xi - (lam - L)^-1 xi ||_{L2} for lam above the growth bound.

    L_N = iota_N Lambda_N p_N acts on coefficients of degree N-1 and the
    continuous resolvent uses the Galerkin truncation at L_ref.
    """
    if lam <= growth_rate(omega0):
        raise ValueError("lam must exceed the growth bound c")
    cont = ContinuousJacobiGenerator(omega0, L_ref)
    n = cont.n
    A = lam * sparse.identity(2 * n, format="csr") - cont.matrix
    b = cont.pack(xi)
    x_cont = sparse.linalg.spsolve(A.tocsc(), b)

    basis = build_basis(N)
    qgen = QuantizedJacobiGenerator(project(omega0, basis), check=False)
    nq = n_coeffs(N - 1)

    def matvec(v):
        Y = basis.coeffs_to_matrix(v[:nq], N - 1)
        Z = basis.coeffs_to_matrix(v[nq:], N - 1)
        d = qgen.apply(np.stack([Y, Z]))
        return lam * v - np.concatenate([basis.matrix_to_coeffs(d[0]), basis.matrix_to_coeffs(d[1])])

    op = LinearOperator((2 * nq, 2 * nq), matvec=matvec, dtype=complex)
    bq = np.concatenate([xi.first.resize(N - 1).coeffs, xi.second.resize(N - 1).coeffs])
    x_q, info = gmres(op, bq, rtol=1e-13, atol=0.0, restart=200, maxiter=2000)
    if info != 0:
        raise RuntimeError(f"GMRES did not converge (info={info})")
    # the tail of xi above N-1 is left untouched by L_N, so it scales by 1/lam
    tail = lambda f: (f.resize(L_ref) - f.resize(N - 1).resize(L_ref)) / lam  # noqa: E731
    up_q = BandlimitedFunction(N - 1, x_q[:nq]).resize(L_ref) + tail(xi.first)
    ze_q = BandlimitedFunction(N - 1, x_q[nq:]).resize(L_ref) + tail(xi.second)
    up_c = BandlimitedFunction(L_ref, x_cont[:n])
    ze_c = BandlimitedFunction(L_ref, x_cont[n:])
    return float(np.hypot(norm(up_q - up_c), norm(ze_q - ze_c)))


# ---------------------------------------------------------------------------
# convergence sweep


def jacobi_rows(
    omega0: BandlimitedFunction,
    xi0: JacobiState,
    t_grid=(0.5, 1.0, 2.0),
    N_list=(8, 16, 32, 64),
    dt: float | None = None,
    scheme: str = "rk4",
    ref_tol: float = REF_TOL,
) -> tuple[list[dict], dict]:
    """Rows (N, hbar, t, err_upsilon_L2, err_zeta_L2) and a manifest dict."""
    dt = default_dt(omega0) if dt is None else dt
    ok, r = is_stationary_cont(omega0)
    if not ok:
        raise PreconditionError(f"omega0 is not stationary (residual {r:.3e})")
    residuals = {"continuous": r}
    gens = {}
    for N in N_list:
        W0 = project(omega0, N)
        ok, rN = is_stationary_quant(W0)
        residuals[f"N={N}"] = rN
        if not ok:
            raise PreconditionError(f"p_N omega0 is not stationary at N={N} (residual {rN:.3e})")
        gens[N] = QuantizedJacobiGenerator(W0, check=False)
    ref = continuous_reference(omega0, xi0, t_grid, tol=ref_tol)
    rows = []
    for N in N_list:
        gen = gens[N]
        state0 = JacobiState(project(xi0.first, gen.basis), project(xi0.second, gen.basis))
        traj = evolve_jacobi(gen, state0, max(t_grid), dt, scheme, t_grid)
        for t, qs, cs in zip(t_grid, traj, ref.states):
            rows.append(
                {
                    "N": int(N),
                    "hbar": hbar(N),
                    "t": float(t),
                    "err_upsilon_L2": norm(embed(qs.first, gen.basis) - cs.first),
                    "err_zeta_L2": norm(embed(qs.second, gen.basis) - cs.second),
                }
            )
    manifest = {
        "dt": dt,
        "scheme": scheme,
        "L_ref": ref.L_ref,
        "reference_change": ref.change,
        "stationarity_residuals": residuals,
    }
    return rows, manifest


def jacobi_convergence_sweep(omega0, xi0, t_grid=(0.5, 1.0, 2.0), N_list=(8, 16, 32, 64), **kw):
    from .harness import ConvergenceReport

    rows, manifest = jacobi_rows(omega0, xi0, t_grid, N_list, **kw)
    report = ConvergenceReport.from_rows("jacobi", rows, ["err_upsilon_L2", "err_zeta_L2"], group_by="t")
    report.manifest.update(manifest)
    return report


__all__ = [
    "ContinuousJacobiGenerator",
    "JacobiState",
    "PreconditionError",
    "QuantizedJacobiGenerator",
    "apply_generator_cont",
    "apply_generator_quant",
    "bracket_operator",
    "consistency_residual",
    "continuous_reference",
    "default_dt",
    "evolve_jacobi",
    "growth_rate",
    "is_stationary_cont",
    "is_stationary_quant",
    "jacobi_convergence_sweep",
    "jacobi_rows",
    "resolvent_difference",
]
