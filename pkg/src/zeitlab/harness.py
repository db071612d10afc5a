"""Command-line harness: run configuration, sweeps, rate fits and report files.

Every subcommand writes a CSV plus a JSON manifest into the output directory
and exits 0 when all thresholds pass, 1 on a threshold failure and 2 on
invalid input.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from .quantization import hbar

log = logging.getLogger("zeitlab")

OUT_ENV = "ZEITLAB_OUT"
ZERO_ATOL = 1e-13

DEFAULT_THRESHOLDS = {
    "slope": 0.9,
    "structure_slope": 1.8,
    "ratio_spread": 3.0,
    "spectrum_drift": 1e-10,
    "energy_drift": 1e-8,
}


class ConfigError(ValueError):
    """Invalid run configuration; the message names the offending field."""


class InsufficientDataError(ValueError):
    """Fewer than three usable rows for a rate fit."""


# ---------------------------------------------------------------------------
# rate fitting


@dataclass(frozen=True)
class FitResult:
    slope: float
    intercept: float
    r2: float
    n_used: int
    excluded: tuple = ()


def fit_convergence_rate(x, y, labels=None) -> FitResult:
    """OLS fit of log y = slope * log x + intercept.

    Rows with y <= 0 are excluded (their labels are reported in ``excluded``).
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    labels = list(range(len(x))) if labels is None else list(labels)
    keep = y > 0
    excluded = tuple(lab for lab, k in zip(labels, keep) if not k)
    if keep.sum() < 3:
        raise InsufficientDataError(f"need >= 3 rows with positive error, have {int(keep.sum())}")
    lx, ly = np.log(x[keep]), np.log(y[keep])
    A = np.vstack([lx, np.ones_like(lx)]).T
    (slope, intercept), *_ = np.linalg.lstsq(A, ly, rcond=None)
    resid = ly - (slope * lx + intercept)
    ss = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss if ss > 0 else 1.0
    return FitResult(float(slope), float(intercept), r2, int(keep.sum()), excluded)


# ---------------------------------------------------------------------------
# reports


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _write_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text)
    tmp.replace(path)


@dataclass
class ConvergenceReport:
    """Sweep rows, one rate fit per error column (and per group), and pass/fail."""

    name: str
    rows: list
    columns: list
    abscissa: str = "hbar"
    group_by: str | None = None
    fits: dict = field(default_factory=dict)
    notes: dict = field(default_factory=dict)
    manifest: dict = field(default_factory=dict)

    @classmethod
    def from_rows(cls, name, rows, columns, abscissa: str = "hbar", group_by: str | None = None):
        rows = [dict(r) for r in rows]
        for r in rows:
            r["hbar"] = hbar(r["N"])  # always derived from N
        rep = cls(name, rows, list(columns), abscissa, group_by)
        for key, sub in rep.groups().items():
            for col in rep.columns:
                label = col if key is None else f"{col}@{group_by}={key}"
                ys = [r[col] for r in sub]
                if all(abs(v) <= ZERO_ATOL for v in ys):
                    rep.notes[label] = "exact"
                    continue
                try:
                    rep.fits[label] = fit_convergence_rate(
                        [r[abscissa] for r in sub], ys, [r["N"] for r in sub]
                    )
                except InsufficientDataError as exc:
                    rep.notes[label] = str(exc)
        return rep

    def groups(self) -> dict:
        if self.group_by is None:
            return {None: self.rows}
        out: dict = {}
        for r in self.rows:
            out.setdefault(r[self.group_by], []).append(r)
        return out

    def monotone(self, column: str, key=None) -> bool:
        sub = sorted(self.groups()[key], key=lambda r: r["N"])
        ys = [r[column] for r in sub]
        if all(abs(v) <= ZERO_ATOL for v in ys):
            return True
        return all(b < a for a, b in zip(ys, ys[1:]))

    def failures(self, min_slope: float, columns=None, keys=None, require_monotone: bool = True) -> list[str]:
        """Human-readable reasons the report misses its thresholds (empty = pass)."""
        bad = []
        cols = self.columns if columns is None else columns
        groups = self.groups()
        for key in groups if keys is None else keys:
            for col in cols:
                label = col if key is None else f"{col}@{self.group_by}={key}"
                if self.notes.get(label) == "exact":
                    continue
                fit = self.fits.get(label)
                if fit is None:
                    bad.append(f"{label}: {self.notes.get(label, 'no fit')}")
                elif fit.slope < min_slope:
                    bad.append(f"{label}: slope {fit.slope:.3f} < {min_slope}")
                if require_monotone and not self.monotone(col, key):
                    bad.append(f"{label}: errors not monotone in N")
        return bad

    def summary(self) -> dict:
        return {
            "name": self.name,
            "abscissa": self.abscissa,
            "group_by": self.group_by,
            "columns": self.columns,
            "fits": {k: asdict(v) for k, v in self.fits.items()},
            "notes": self.notes,
            "manifest": self.manifest,
        }

    def csv_text(self) -> str:
        keys = list(self.rows[0]) if self.rows else []
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(keys)
        for r in self.rows:
            w.writerow([_fmt(r[k]) for k in keys])
        return buf.getvalue()

    def write(self, out_dir, stem: str | None = None) -> tuple[Path, Path]:
        out_dir = Path(out_dir)
        stem = stem or self.name
        csv_path, json_path = out_dir / f"{stem}.csv", out_dir / f"{stem}.json"
        _write_atomic(csv_path, self.csv_text())
        _write_atomic(json_path, json.dumps(self.summary(), indent=2, default=_json_default))
        return csv_path, json_path


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, Path):
        return str(o)
    if isinstance(o, complex):
        return [o.real, o.imag]
    raise TypeError(f"not serializable: {type(o)}")


# ---------------------------------------------------------------------------
# configuration

def _unwrap_config(d: dict) -> dict:
    """Accept a bare config, a run manifest or a report summary."""
    if "manifest" in d:
        d = d["manifest"]
    return dict(d.get("config", d))


COMMANDS = ("simulate", "curvature-sweep", "jacobi-sweep", "bracket-sweep", "structure-sweep", "verify")


@dataclass
class RunConfig:
    command: str
    N_list: list = field(default_factory=lambda: [8, 16, 32, 64, 128])
    N: int = 16
    t_final: float = 10.0
    dt: float | None = None
    t_grid: list = field(default_factory=lambda: [0.5, 1.0, 2.0])
    scheme: str = "rk4"
    inputs: dict = field(default_factory=dict)
    thresholds: dict = field(default_factory=dict)
    out: str | None = None
    seed: int = 0
    threads: int = 1
    lazy_basis: bool = False
    L_max: int = 3
    n_pairs: int = 3
    n_triples: int = 10

    def __post_init__(self):
        self.thresholds = {**DEFAULT_THRESHOLDS, **(self.thresholds or {})}

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        d = _unwrap_config(d)
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config field(s): {', '.join(sorted(unknown))}")
        if "command" not in d:
            raise ConfigError("command: missing")
        return cls(**d)

    def to_dict(self) -> dict:
        return asdict(self)

    def validate(self, input_L_max: int = 0) -> "RunConfig":
        if self.command not in COMMANDS:
            raise ConfigError(f"command: expected one of {COMMANDS}, got {self.command!r}")
        Ns = list(self.N_list)
        if len(Ns) == 0 or any(not isinstance(n, int) or isinstance(n, bool) for n in Ns):
            raise ConfigError("N_list: must be a non-empty list of integers")
        if any(b <= a for a, b in zip(Ns, Ns[1:])):
            raise ConfigError(f"N_list: must be strictly increasing, got {Ns}")
        if min(Ns) <= max(input_L_max, self.L_max if self.command != "structure-sweep" else 0):
            raise ConfigError(f"N_list: every N must exceed the input band limit {max(input_L_max, self.L_max)}")
        if not isinstance(self.N, int) or self.N < 2:
            raise ConfigError(f"N: must be an integer >= 2, got {self.N!r}")
        if self.dt is not None and not self.dt > 0:
            raise ConfigError(f"dt: must be positive, got {self.dt}")
        if not self.t_final > 0:
            raise ConfigError(f"t_final: must be positive, got {self.t_final}")
        if any(not t > 0 for t in self.t_grid):
            raise ConfigError("t_grid: times must be positive")
        if self.scheme not in ("rk4", "strang"):
            raise ConfigError(f"scheme: expected rk4 or strang, got {self.scheme!r}")
        if self.threads < 1:
            raise ConfigError("threads: must be >= 1")
        if self.L_max < 1:
            raise ConfigError("L_max: must be >= 1")
        for k, v in self.inputs.items():
            if not Path(v).is_file():
                raise ConfigError(f"inputs.{k}: no such file {v}")
        return self


# ---------------------------------------------------------------------------
# commands


@dataclass
class Outcome:
    failures: list
    artifacts: list


def _pmap(fn, items, threads: int):
    if threads <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(fn, items))


def _load_function(cfg: RunConfig, key: str):
    from .sphere import BandlimitedFunction

    path = cfg.inputs.get(key)
    return None if path is None else BandlimitedFunction.load(path)


def _manifest(cfg: RunConfig, **extra) -> dict:
    return {"config": cfg.to_dict(), **extra}


def run_curvature(cfg: RunConfig, out: Path) -> Outcome:
    from .curvature import curvature_convergence_sweep
    from .estimates import random_pair

    f, g = _load_function(cfg, "f"), _load_function(cfg, "g")
    if (f is None) != (g is None):
        raise ConfigError("inputs: give both f and g, or neither")
    pairs = [(f, g)] if f is not None else [random_pair(cfg.L_max, cfg.seed + k) for k in range(cfg.n_pairs)]
    reports = _pmap(lambda p: curvature_convergence_sweep(p[0], p[1], cfg.N_list), pairs, cfg.threads)
    failures, artifacts = [], []
    for k, ((f, g), rep) in enumerate(zip(pairs, reports)):
        stem = f"curvature_pair{k}"
        f.save(out / f"{stem}_f.json")
        g.save(out / f"{stem}_g.json")
        rep.manifest = _manifest(cfg, f=f"{stem}_f.json", g=f"{stem}_g.json")
        artifacts += rep.write(out, stem)
        failures += [f"pair {k}: {m}" for m in rep.failures(cfg.thresholds["slope"], ["error"])]
    return Outcome(failures, artifacts)


def run_jacobi(cfg: RunConfig, out: Path) -> Outcome:
    from .estimates import random_function
    from .jacobi import JacobiState, jacobi_convergence_sweep
    from .sphere import BandlimitedFunction

    omega0 = _load_function(cfg, "omega0")
    if omega0 is None:
        omega0 = BandlimitedFunction.from_modes({(2, 0): 1.0})
    ups, zeta = _load_function(cfg, "upsilon0"), _load_function(cfg, "zeta0")
    if ups is None or zeta is None:
        rng = np.random.default_rng(cfg.seed)
        ups = random_function(cfg.L_max, rng) if ups is None else ups
        zeta = random_function(cfg.L_max, rng) if zeta is None else zeta
    rep = jacobi_convergence_sweep(omega0, JacobiState(ups, zeta), cfg.t_grid, cfg.N_list, dt=cfg.dt, scheme=cfg.scheme)
    for name, fn in (("omega0", omega0), ("upsilon0", ups), ("zeta0", zeta)):
        fn.save(out / f"jacobi_{name}.json")
    rep.manifest.update(
        _manifest(cfg, omega0="jacobi_omega0.json", upsilon0="jacobi_upsilon0.json", zeta0="jacobi_zeta0.json")
    )
    rep.manifest["rate_note"] = "convergence at fixed t is proven without a rate; the O(hbar) slope threshold is an expected rate"
    artifacts = list(rep.write(out, "jacobi"))
    t_rate = min(cfg.t_grid, key=lambda t: abs(t - 1.0))
    failures = rep.failures(cfg.thresholds["slope"], keys=[t_rate], require_monotone=False)
    for t in cfg.t_grid:
        for col in rep.columns:
            if not rep.monotone(col, t):
                failures.append(f"{col}@t={t}: errors not monotone in N")
    return Outcome(failures, artifacts)


def run_bracket(cfg: RunConfig, out: Path) -> Outcome:
    from .estimates import bracket_rows, inner_product_differences, random_pair, ratio_spread, tail_bounds

    f, g = _load_function(cfg, "f"), _load_function(cfg, "g")
    pairs = [(f, g)] if f is not None and g is not None else [random_pair(cfg.L_max, cfg.seed + k) for k in range(cfg.n_pairs)]
    failures, artifacts = [], []
    for k, (f, g) in enumerate(pairs):
        rows = bracket_rows(f, g, cfg.N_list)
        for r in rows:
            diffs = inner_product_differences(f, g, r["N"])
            r.update({f"inner_{name}": v for name, v in diffs.items()})
        rep = ConvergenceReport.from_rows("bracket", rows, ["error", "error_lie"])
        spread = ratio_spread(rows)
        rep.manifest = _manifest(
            cfg,
            pair=k,
            ratio_spread=spread,
            ratio_spread_lie=ratio_spread(rows, "ratio_lie"),
            slope_note="rate gated on error_lie (commutator / lie_scale); error uses 2/(N-1) and gates the ratio spread",
        )
        stem = f"bracket_pair{k}"
        artifacts += rep.write(out, stem)
        if spread > cfg.thresholds["ratio_spread"]:
            failures.append(f"pair {k}: error/hbar spread {spread:.2f} > {cfg.thresholds['ratio_spread']}")
        failures += [f"pair {k}: {m}" for m in rep.failures(cfg.thresholds["slope"], ["error_lie"])]
        for r in rows:
            if r["N"] > f.L + g.L and max(r[f"inner_{n}"] for n in ("L2", "H-1", "H1")) > 1e-12:
                failures.append(f"pair {k}: inner products not exact at N={r['N']}")
    # tail regime: a function with modes above N
    rng = np.random.default_rng(cfg.seed)
    from .estimates import random_function

    ft, gt = random_function(2 * max(cfg.N_list), rng, 1.5), random_function(2 * max(cfg.N_list), rng, 1.5)
    tail = []
    for N in cfg.N_list:
        for name, (d, b) in tail_bounds(ft, gt, N).items():
            tail.append({"N": N, "hbar": hbar(N), "kind": name, "difference": d, "bound": b})
            if d > b:
                failures.append(f"tail bound violated for {name} at N={N}")
    path = out / "norm_tail.csv"
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(tail[0]), lineterminator="\n")
    w.writeheader()
    w.writerows(tail)
    _write_atomic(path, buf.getvalue())
    artifacts.append(path)
    return Outcome(failures, artifacts)


def run_structure(cfg: RunConfig, out: Path) -> Outcome:
    from .estimates import admissible_triples, structure_rows

    triples = admissible_triples(count=cfg.n_triples, seed=cfg.seed)
    rows = structure_rows(triples, cfg.N_list)
    cols = [f"err_{k}" for k in range(len(triples))]
    rep = ConvergenceReport.from_rows("structure", rows, cols, abscissa="inv_N")
    rep.manifest = _manifest(cfg, triples=[list(map(list, t)) for t in triples])
    artifacts = list(rep.write(out, "structure"))
    return Outcome(rep.failures(cfg.thresholds["structure_slope"]), artifacts)


def run_simulate(cfg: RunConfig, out: Path) -> Outcome:
    from .dynamics import ZeitlinState, run_zeitlin, save_checkpoint
    from .estimates import random_function
    from .quantization import project

    N = cfg.N
    omega0 = _load_function(cfg, "omega0")
    if omega0 is None:
        omega0 = random_function(cfg.L_max, np.random.default_rng(cfg.seed))
    if N <= omega0.band_limit():
        raise ConfigError(f"N: must exceed the band limit {omega0.band_limit()} of omega0")
    dt = 1e-2 if cfg.dt is None else cfg.dt
    traj = run_zeitlin(project(omega0, N), dt, cfg.t_final, every=max(1, int(round(0.1 / dt))))
    e0 = traj.diagnostics[0]["energy"]
    rows = [{"t": t, **d, "energy_drift": abs(d["energy"] - e0)} for t, d in zip(traj.times, traj.diagnostics)]
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: _fmt(v) for k, v in r.items()})
    csv_path = out / "simulate.csv"
    _write_atomic(csv_path, buf.getvalue())
    omega0.save(out / "simulate_omega0.json")
    ckpt = out / "simulate_final.mat"
    save_checkpoint(ckpt, ZeitlinState(traj.final.W, traj.final.t), dt, rows[-1])
    spec = max(r["spectrum_drift"] for r in rows)
    energy = max(r["energy_drift"] for r in rows)
    man = _manifest(cfg, omega0="simulate_omega0.json", spectrum_drift=spec, energy_drift=energy)
    _write_atomic(out / "simulate.json", json.dumps(man, indent=2, default=_json_default))
    failures = []
    if spec > cfg.thresholds["spectrum_drift"]:
        failures.append(f"spectrum drift {spec:.3e}")
    if energy > cfg.thresholds["energy_drift"]:
        failures.append(f"energy drift {energy:.3e}")
    return Outcome(failures, [csv_path, out / "simulate.json", ckpt])


def run_verify(cfg: RunConfig, out: Path) -> Outcome:
    from .estimates import verify_battery

    checks = verify_battery(cfg.N, cfg.seed)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["name", "value", "tol", "passed"])
    for c in checks:
        w.writerow([c.name, repr(float(c.value)), repr(c.tol), c.passed])
    path = out / f"verify_N{cfg.N}.csv"
    _write_atomic(path, buf.getvalue())
    man = _manifest(cfg, checks={c.name: {"value": float(c.value), "tol": c.tol, "passed": c.passed} for c in checks})
    _write_atomic(out / f"verify_N{cfg.N}.json", json.dumps(man, indent=2))
    return Outcome([f"{c.name}: {c.value:.3e} > {c.tol}" for c in checks if not c.passed], [path])


RUNNERS = {
    "simulate": run_simulate,
    "curvature-sweep": run_curvature,
    "jacobi-sweep": run_jacobi,
    "bracket-sweep": run_bracket,
    "structure-sweep": run_structure,
    "verify": run_verify,
}


def _input_L_max(cfg: RunConfig) -> int:
    from .sphere import BandlimitedFunction

    L = 0
    for path in cfg.inputs.values():
        L = max(L, BandlimitedFunction.load(path).band_limit())
    if cfg.command == "curvature-sweep" and cfg.inputs:
        # the sweep needs N > L(f) + L(g)
        L = sum(BandlimitedFunction.load(p).band_limit() for k, p in cfg.inputs.items() if k in ("f", "g"))
    return L


def run_command(cfg: RunConfig) -> int:
    """Validate, run and report; returns the process exit status."""
    from .jacobi import PreconditionError
    from .sphere import DomainError

    from .quantization import set_basis_cache_size

    try:
        cfg.validate(_input_L_max(cfg))
        set_basis_cache_size(1 if cfg.lazy_basis else 16)
        out = Path(cfg.out or os.environ.get(OUT_ENV) or "zeitlab_out")
        out.mkdir(parents=True, exist_ok=True)
        result = RUNNERS[cfg.command](cfg, out)
    except (ConfigError, DomainError, PreconditionError, FileNotFoundError, json.JSONDecodeError) as exc:
        log.error("input error: %s", exc)
        print(f"input error: {exc}", file=sys.stderr)
        return 2
    for path in result.artifacts:
        log.info("wrote %s", path)
    if result.failures:
        for msg in result.failures:
            print(f"FAIL {msg}", file=sys.stderr)
        return 1
    print(f"{cfg.command}: all thresholds passed ({out})")
    return 0


# ---------------------------------------------------------------------------
# argument parsing


def _int_list(s: str) -> list:
    return [int(x) for x in s.split(",") if x]


def _float_list(s: str) -> list:
    return [float(x) for x in s.split(",") if x]


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="zeitlab", description="su(N) quantized hydrodynamics lab")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config (or a previous manifest)")
    common.add_argument("--out", help=f"output directory (default ${OUT_ENV} or ./zeitlab_out)")
    common.add_argument("--seed", type=int, help="seed for random test functions")
    common.add_argument("--threads", type=int, help="worker threads for independent sweep cells")
    common.add_argument("--N-list", dest="N_list", type=_int_list, help="comma-separated N values")
    common.add_argument("--L-max", dest="L_max", type=int, help="band limit of random inputs")
    common.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", parents=[common], help="Euler-Zeitlin trajectory with diagnostics")
    s.add_argument("--N", type=int)
    s.add_argument("--dt", type=float)
    s.add_argument("--t-final", dest="t_final", type=float)
    s.add_argument("--omega0", help="coefficient JSON for the initial vorticity")

    s = sub.add_parser("curvature-sweep", parents=[common], help="curvature convergence sweep")
    s.add_argument("--f")
    s.add_argument("--g")
    s.add_argument("--pairs", dest="n_pairs", type=int)

    s = sub.add_parser("jacobi-sweep", parents=[common], help="Jacobi convergence sweep")
    s.add_argument("--omega0")
    s.add_argument("--upsilon0")
    s.add_argument("--zeta0")
    s.add_argument("--t-grid", dest="t_grid", type=_float_list)
    s.add_argument("--dt", type=float)
    s.add_argument("--scheme", choices=["rk4", "strang"])

    s = sub.add_parser("bracket-sweep", parents=[common], help="bracket and inner-product estimates")
    s.add_argument("--f")
    s.add_argument("--g")
    s.add_argument("--pairs", dest="n_pairs", type=int)

    s = sub.add_parser("structure-sweep", parents=[common], help="structure-constant convergence")
    s.add_argument("--triples", dest="n_triples", type=int)

    s = sub.add_parser("verify", parents=[common], help="lemma-level invariants at one N")
    s.add_argument("--N", type=int)
    return p


_INPUT_KEYS = ("f", "g", "omega0", "upsilon0", "zeta0")


def config_from_args(args: argparse.Namespace) -> RunConfig:
    base: dict = {}
    if args.config:
        try:
            base = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"config: cannot read {args.config}: {exc}") from exc
        base = _unwrap_config(base)
    base["command"] = args.command
    inputs = dict(base.get("inputs", {}))
    for key, val in vars(args).items():
        if key in ("config", "command", "verbose") or val is None:
            continue
        if key in _INPUT_KEYS:
            inputs[key] = val
        else:
            base[key] = val
    base["inputs"] = inputs
    return RunConfig.from_dict(base)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        cfg = config_from_args(args)
    except (ConfigError, TypeError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 2
    return run_command(cfg)


__all__ = [
    "COMMANDS",
    "ConfigError",
    "ConvergenceReport",
    "FitResult",
    "InsufficientDataError",
    "OUT_ENV",
    "RunConfig",
    "build_parser",
    "fit_convergence_rate",
    "main",
    "run_command",
]
