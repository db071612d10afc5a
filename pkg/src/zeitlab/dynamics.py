"""Time integration of the Euler-Zeitlin flow and of the Galerkin vorticity equation."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .quantization import (
    build_basis,
    check_su,
    inv_laplacian_N,
    laplacian_N,
    lie_scale,
    matrix_inner,
    project_su,
    save_matrix,
)
from .sphere import HM1, BandlimitedFunction, inner, inv_laplacian, poisson_bracket, power_integral

FIXED_POINT_TOL = 1e-12
MAX_ITERS = 100


class SolverError(RuntimeError):
    """Fixed-point iteration did not converge; ``residual`` holds the last update size."""

    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (residual {residual:.3e})")
        self.residual = residual


# ---------------------------------------------------------------------------
# Euler-Zeitlin


@dataclass
class ZeitlinState:
    W: np.ndarray
    t: float = 0.0
    P: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        self.W = check_su(self.W)
        if self.P is None:
            self.P = inv_laplacian_N(self.W)

    @property
    def N(self) -> int:
        return self.W.shape[0]


def cayley(A: np.ndarray) -> np.ndarray:
    """(I - A)^-1 (I + A); unitary when A is skew-Hermitian."""
    eye = np.eye(A.shape[0])
    return np.linalg.solve(eye - A, eye + A)


def zeitlin_step(
    state: ZeitlinState, dt: float, tol: float = FIXED_POINT_TOL, max_iters: int = MAX_ITERS
) -> ZeitlinState:
    """Isospectral midpoint step W+ = Q W Q^dag, Q = Cayley(dt/2 * P_mid / lie_scale).

    P_mid = Delta_N^-1 ((W + W+)/2) is found by fixed-point iteration.  Since Q
    commutes with P_mid the discrete energy is conserved up to ``tol``.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    N = state.N
    basis = build_basis(N)
    h = lie_scale(N)
    W = state.W
    W_new = W
    P_mid = state.P
    change = np.inf
    for _ in range(max_iters):
        Q = cayley((0.5 * dt / h) * P_mid)
        W_next = Q @ W @ Q.conj().T
        change = float(np.max(np.abs(W_next - W_new)))
        W_new = W_next
        P_mid = inv_laplacian_N(0.5 * (W + W_new), basis=basis)
        if change <= tol * max(1.0, float(np.max(np.abs(W)))):
            break
    else:
        raise SolverError("midpoint fixed point did not converge", change)
    W_new = project_su(W_new)
    return ZeitlinState(W_new, state.t + dt, inv_laplacian_N(W_new, basis=basis))


def zeitlin_rhs(W: np.ndarray) -> np.ndarray:
    P = inv_laplacian_N(W)
    return (P @ W - W @ P) / lie_scale(W.shape[0])


def hamiltonian_N(W: np.ndarray) -> float:
    """H_N = 1/2 <W, -Delta_N^-1 W>_{L2_N}."""
    return 0.5 * matrix_inner(W, W, "H-1")


def casimir_N(W: np.ndarray, k: int) -> complex:
    """(4 pi / N) tr(W^k); real for even k, imaginary for odd k (W skew-Hermitian)."""
    if k < 1:
        raise ValueError("k must be >= 1")
    return complex(4 * np.pi / W.shape[0] * np.trace(np.linalg.matrix_power(W, k)))


def spectrum(W: np.ndarray) -> np.ndarray:
    """Sorted eigenvalues of the Hermitian matrix iW."""
    return np.linalg.eigvalsh(1j * W)


def stationarity_residual_N(W: np.ndarray) -> float:
    """|| [Delta_N^-1 W, W] / lie_scale ||_{L2_N} / ||W||^2_{L2_N}."""
    w2 = matrix_inner(W, W)
    if w2 == 0:
        return 0.0
    r = zeitlin_rhs(W)
    return float(np.sqrt(matrix_inner(r, r)) / w2)


# ---------------------------------------------------------------------------
# continuous (Galerkin) vorticity equation


@dataclass
class ContinuousState:
    omega: BandlimitedFunction
    t: float = 0.0

    def __post_init__(self):
        self.omega.require_mean_zero(tol=1e-12)

    @property
    def psi(self) -> BandlimitedFunction:
        return inv_laplacian(self.omega)


def vorticity_rhs(omega: BandlimitedFunction, L_gal: int) -> BandlimitedFunction:
    """Galerkin-truncated {psi, omega} at degree L_gal."""
    out = poisson_bracket(inv_laplacian(omega), omega).resize(L_gal)
    out.coeffs[0] = 0
    return out


def continuous_step(state: ContinuousState, dt: float, L_gal: int) -> ContinuousState:
    """One classical RK4 step of omega' = {psi, omega} truncated at L_gal."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    if L_gal < state.omega.band_limit():
        raise ValueError("L_gal must be at least the band limit of omega")
    w = state.omega.resize(L_gal)
    k1 = vorticity_rhs(w, L_gal)
    k2 = vorticity_rhs(w + k1 * (dt / 2), L_gal)
    k3 = vorticity_rhs(w + k2 * (dt / 2), L_gal)
    k4 = vorticity_rhs(w + k3 * dt, L_gal)
    w_new = w + (k1 + 2 * k2 + 2 * k3 + k4) * (dt / 6)
    return ContinuousState(w_new.realify(), state.t + dt)


def hamiltonian_cont(omega: BandlimitedFunction) -> float:
    """H = -1/2 int omega Delta^-1 omega."""
    return 0.5 * inner(omega, omega, HM1)


def casimir_cont(omega: BandlimitedFunction, k: int) -> float:
    """int omega^k by exact quadrature."""
    if k < 1:
        raise ValueError("k must be >= 1")
    return power_integral(omega, k)


def stationarity_residual_cont(omega: BandlimitedFunction) -> float:
    w2 = inner(omega, omega)
    if w2 == 0:
        return 0.0
    r = poisson_bracket(inv_laplacian(omega), omega)
    return float(np.sqrt(inner(r, r)) / w2)


# ---------------------------------------------------------------------------
# flow reconstruction


def expm_skew(A: np.ndarray) -> np.ndarray:
    """exp(A) for skew-Hermitian A through the eigendecomposition of iA."""
    lam, V = np.linalg.eigh(1j * A)
    return (V * np.exp(-1j * lam)) @ V.conj().T


@dataclass
class UnitaryFlow:
    G: np.ndarray
    t: float = 0.0

    def unitarity_defect(self) -> float:
        return float(np.max(np.abs(self.G.conj().T @ self.G - np.eye(self.G.shape[0]))))

    def det_defect(self) -> float:
        return float(abs(np.linalg.det(self.G) - 1.0))


def reconstruct_flow(P_samples, dt: float, G0: np.ndarray | None = None) -> UnitaryFlow:
    """Integrate G' = P(t) G with G_{n+1} = exp(dt (P_n + P_{n+1}) / 2) G_n.

    ``P_samples`` holds P at the grid times 0, dt, 2 dt, ...  The exponential
    of a traceless skew-Hermitian matrix is special unitary, so G stays in SU(N).
    """
    P_samples = list(P_samples)
    if not P_samples:
        raise ValueError("need at least one P sample")
    N = P_samples[0].shape[0]
    G = np.eye(N, dtype=complex) if G0 is None else np.array(G0, dtype=complex)
    for P0, P1 in zip(P_samples[:-1], P_samples[1:]):
        G = expm_skew(0.5 * dt * (P0 + P1)) @ G
    return UnitaryFlow(G, dt * (len(P_samples) - 1))


# ---------------------------------------------------------------------------
# trajectories and checkpoints


@dataclass
class Trajectory:
    times: list
    diagnostics: list
    final: ZeitlinState
    stream: list | None = None


def zeitlin_diagnostics(W: np.ndarray, spec0: np.ndarray | None = None) -> dict:
    spec = spectrum(W)
    out = {
        "energy": hamiltonian_N(W),
        "enstrophy": casimir_N(W, 2).real,
        "casimir4": casimir_N(W, 4).real,
    }
    if spec0 is not None:
        out["spectrum_drift"] = float(np.max(np.abs(spec - spec0)))
    return out


def run_zeitlin(
    W0: np.ndarray, dt: float, t_final: float, every: int = 1, keep_stream: bool = False
) -> Trajectory:
    """Integrate from W0 to t_final, recording diagnostics every ``every`` steps."""
    n_steps = int(round(t_final / dt))
    if n_steps < 1:
        raise ValueError("t_final must be at least one step")
    state = ZeitlinState(W0)
    spec0 = spectrum(state.W)
    times = [0.0]
    diags = [zeitlin_diagnostics(state.W, spec0)]
    stream = [state.P] if keep_stream else None
    for n in range(1, n_steps + 1):
        state = zeitlin_step(state, dt)
        state.t = n * dt  # avoid accumulated round-off in recorded times
        if keep_stream:
            stream.append(state.P)
        if n % every == 0 or n == n_steps:
            times.append(state.t)
            diags.append(zeitlin_diagnostics(state.W, spec0))
    return Trajectory(times, diags, state, stream)


def save_checkpoint(path, state: ZeitlinState, dt: float, diagnostics: dict | None = None) -> None:
    """Matrix file plus a JSON sidecar ``<path>.json``."""
    path = Path(path)
    save_matrix(path, state.W)
    meta = {"t": state.t, "dt": dt, "N": state.N, "diagnostics": diagnostics or {}}
    side = path.with_name(path.name + ".json")
    tmp = side.with_name(side.name + ".tmp")
    tmp.write_text(json.dumps(meta, indent=2))
    tmp.replace(side)


def load_checkpoint(path) -> tuple[ZeitlinState, dict]:
    from .quantization import load_matrix

    path = Path(path)
    meta = json.loads(path.with_name(path.name + ".json").read_text())
    return ZeitlinState(load_matrix(path), float(meta["t"])), meta


__all__ = [
    "ContinuousState",
    "SolverError",
    "Trajectory",
    "UnitaryFlow",
    "ZeitlinState",
    "casimir_N",
    "casimir_cont",
    "cayley",
    "continuous_step",
    "expm_skew",
    "hamiltonian_N",
    "hamiltonian_cont",
    "laplacian_N",
    "load_checkpoint",
    "reconstruct_flow",
    "run_zeitlin",
    "save_checkpoint",
    "spectrum",
    "stationarity_residual_N",
    "stationarity_residual_cont",
    "zeitlin_rhs",
    "zeitlin_step",
]
