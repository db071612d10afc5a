"""Acceptance criteria, one test each; every test prints a PASS/FAIL line."""

import time

import numpy as np
import pytest
from scipy.linalg import expm

from zeitlab.curvature import (
    curvature_convergence_sweep,
    h1_basis_function,
    sectional_curvature_cont,
    sectional_curvature_milnor,
    sectional_curvature_quant,
)
from zeitlab.dynamics import run_zeitlin, spectrum
from zeitlab.estimates import (
    admissible_triples,
    bracket_rows,
    inner_product_differences,
    leibniz_residual_N,
    norm_lemma_violations,
    random_function,
    random_pair,
    random_su,
    ratio_spread,
    relatedness_defect,
    structure_rows,
    tail_bounds,
)
from zeitlab.harness import fit_convergence_rate
from zeitlab.jacobi import (
    ContinuousJacobiGenerator,
    JacobiState,
    QuantizedJacobiGenerator,
    default_dt,
    evolve_jacobi,
    growth_rate,
    jacobi_convergence_sweep,
    jacobi_rows,
)
from zeitlab.quantization import build_basis, project
from zeitlab.sphere import BandlimitedFunction
from zeitlab.structure import complex_table, real_table
from zeitlab.wigner import six_j, three_j

N_SWEEP = (8, 16, 32, 64, 128)
ZONAL = BandlimitedFunction.from_modes({(2, 0): 1.0})


@pytest.fixture
def report(capsys):
    def emit(number: int, title: str, ok: bool, detail: str) -> None:
        with capsys.disabled():
            print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {number:2d} {title}: {detail}")
        assert ok, detail

    return emit


def test_curvature_convergence(report):
    t0 = time.perf_counter()
    slopes, monotone = [], True
    for seed in range(3):
        rep = curvature_convergence_sweep(*random_pair(3, seed), N_SWEEP)
        slopes.append(rep.fits["error"].slope)
        monotone &= rep.monotone("error")
    ok = min(slopes) >= 0.9 and monotone
    detail = f"slopes {', '.join(f'{s:.3f}' for s in slopes)}, monotone={monotone}, {time.perf_counter() - t0:.1f}s"
    report(1, "curvature convergence", ok, detail)


def test_jacobi_convergence(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(1)
    xi0 = JacobiState(random_function(3, rng), random_function(3, rng))
    rep = jacobi_convergence_sweep(ZONAL, xi0, (0.5, 1.0, 2.0), (8, 16, 32, 64))
    cols = ["err_upsilon_L2", "err_zeta_L2"]
    monotone = all(rep.monotone(c, t) for c in cols for t in (0.5, 1.0, 2.0))
    slopes = [rep.fits[f"{c}@t=1.0"].slope for c in cols]
    tail = rep.manifest["reference_change"]
    ok = monotone and min(slopes) >= 0.9 and tail < 1e-10
    detail = (
        f"slopes at t=1 {slopes[0]:.3f} / {slopes[1]:.3f}, monotone={monotone}, "
        f"L_ref={rep.manifest['L_ref']} change {tail:.1e}, {time.perf_counter() - t0:.1f}s"
    )
    report(2, "Jacobi convergence", ok, detail)


def test_bracket_estimate(report):
    spreads = [ratio_spread(bracket_rows(*random_pair(3, seed), N_SWEEP), "ratio") for seed in range(3)]
    report(3, "bracket estimate", max(spreads) <= 3.0, f"ratio spreads {', '.join(f'{s:.2f}' for s in spreads)}")


def test_norm_convergence(report):
    f, g = random_pair(3, 11)
    exact = max(max(inner_product_differences(f, g, N).values()) for N in (8, 16, 32))
    rng = np.random.default_rng(12)
    tf, tg = random_function(40, rng, decay=2.0), random_function(40, rng, decay=2.0)
    worst = 0.0
    for N in (8, 16, 32):
        for diff, bound in tail_bounds(tf, tg, N, s=2).values():
            worst = max(worst, diff / bound)
    ok = exact < 1e-12 and worst <= 1.0
    report(4, "norm convergence", ok, f"band-limited max diff {exact:.1e}, tail diff/bound max {worst:.2e}")


def test_five_norm_inequalities(report):
    bad = {N: norm_lemma_violations(N, n_samples=100, seed=N) for N in (8, 32)}
    n = sum(len(v) for v in bad.values())
    report(5, "five-norm inequalities", n == 0, f"{n} violations over 200 matrices")


def test_structural_lemmas(report):
    rng = np.random.default_rng(5)
    rel = leib = 0.0
    for N in (8, 16, 32):
        L = min(5, N - 2)
        for _ in range(3):
            rel = max(rel, relatedness_defect(random_function(L, rng), N))
            leib = max(leib, leibniz_residual_N(random_su(N, rng), random_su(N, rng)))
    report(6, "structural lemmas", max(rel, leib) < 1e-10, f"relatedness {rel:.1e}, Leibniz {leib:.1e}")


def test_structure_constants(report):
    triples = admissible_triples(L=4, count=10, seed=0)
    rows = structure_rows(triples, (8, 16, 32, 64, 128))
    x = [r["inv_N"] for r in rows]
    slopes = [fit_convergence_rate(x, [r[f"err_{k}"] for r in rows]).slope for k in range(len(triples))]
    planes = (((1, 0), (2, 1)), ((2, -1), (2, 2)), ((2, 0), (3, 1)), ((3, -2), (3, 3)))
    tc = real_table(complex_table(5))
    N = 16
    basis = build_basis(N)
    tq = real_table(complex_table(5, N))
    gap = 0.0
    for a, b in planes:
        fa, fb = h1_basis_function(*a), h1_basis_function(*b)
        gap = max(gap, abs(sectional_curvature_milnor(tc, a, b) - sectional_curvature_cont(fa, fb)))
        q = sectional_curvature_quant(project(fa, basis), project(fb, basis), basis=basis)
        gap = max(gap, abs(sectional_curvature_milnor(tq, a, b) - q))
    ok = len(triples) == 10 and min(slopes) >= 1.8 and gap < 1e-8
    report(7, "structure constants", ok, f"min slope {min(slopes):.3f} over {len(triples)} triples, Milnor gap {gap:.1e}")


def test_dynamics_preservation(report):
    t0 = time.perf_counter()
    W0 = project(random_function(4, np.random.default_rng(8)), 32)
    traj = run_zeitlin(W0, 1e-2, 10.0, every=100)
    drift = max(d["spectrum_drift"] for d in traj.diagnostics)
    dH = max(abs(d["energy"] - traj.diagnostics[0]["energy"]) for d in traj.diagnostics)
    band = BandlimitedFunction(2, np.r_[0, 0, 0, 0, np.random.default_rng(9).standard_normal(5)]).realify()
    moved = 0.0
    for w in (ZONAL, band):
        S0 = project(w, 32)
        moved = max(moved, float(np.max(np.abs(run_zeitlin(S0, 1e-2, 10.0, every=1000).final.W - S0))))
    ok = drift <= 1e-10 and dH <= 1e-8 and moved <= 1e-10
    assert traj.final.t == pytest.approx(10.0) and spectrum(traj.final.W).shape == (32,)
    detail = f"spectrum drift {drift:.1e}, |dH| {dH:.1e}, stationary motion {moved:.1e}, {time.perf_counter() - t0:.1f}s"
    report(8, "dynamics preservation", ok, detail)


def test_semigroup_bound(report):
    omega0 = ZONAL * 2.0
    c = growth_rate(omega0)
    dt = default_dt(omega0)
    times = np.arange(1, 11) * 0.5
    # continuous side: the operator norm of exp(tA) on the Galerkin space
    gen = ContinuousJacobiGenerator(omega0, 12)
    A = gen.matrix.toarray()
    worst_c = max(np.linalg.norm(expm(t * A), 2) / np.exp(c * t) for t in times)
    # quantized side: worst sampled amplification
    rng = np.random.default_rng(3)
    q = QuantizedJacobiGenerator(project(omega0, 16))
    worst_q = 0.0
    for _ in range(8):
        s0 = JacobiState(project(random_function(6, rng), 16), project(random_function(6, rng), 16))
        for t, s in zip(times, evolve_jacobi(q, s0, times[-1], dt, "rk4", list(times))):
            worst_q = max(worst_q, s.l2_norm() / s0.l2_norm() / np.exp(c * t))
    ok = max(worst_c, worst_q) <= 1 + 10 * dt**2
    report(9, "semigroup bound", ok, f"amplification / exp(ct): continuous {worst_c:.3f}, quantized {worst_q:.3f}")


def test_degenerate_battery(report):
    f, g = random_pair(3, 21)
    same = max(abs(sectional_curvature_cont(f, f)), abs(sectional_curvature_quant(project(f, 16), project(f, 16))))
    zonal_pair = (ZONAL, BandlimitedFunction.from_modes({(3, 0): 1.0}))
    zc = abs(sectional_curvature_cont(*zonal_pair))
    zq = abs(sectional_curvature_quant(project(zonal_pair[0], 16), project(zonal_pair[1], 16)))
    rows, _ = jacobi_rows(BandlimitedFunction.zeros(2), JacobiState(f, g), (0.5, 1.0, 2.0), (8, 16, 32))
    nil = max(max(r["err_upsilon_L2"], r["err_zeta_L2"]) for r in rows)
    zeros = [three_j(1, 1, 1, 1, 1, 0), three_j(1, 1, 3, 0, 0, 0), three_j(1, 1, 1, 0, 0, 0), six_j(1, 1, 3, 1, 1, 1)]
    selection = all(z == 0 for z in zeros)
    ok = same < 1e-12 and max(zc, zq) < 1e-12 and nil < 1e-12 and selection
    detail = f"C(f,f) {same:.1e}, zonal {max(zc, zq):.1e}, nilpotent {nil:.1e}, selection zeros {selection}"
    report(10, "degenerate battery", ok, detail)

