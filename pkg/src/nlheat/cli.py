"""Batch front end: solve | verify | family | sweep | extend | report.

Outputs are CSV tables (17 significant digits, round-trip exact for
64-bit floats) plus one JSON report per command.  Reports are
deterministic under a fixed config and seed; the only nondeterministic
field is the top-level "timestamp", which comparisons must drop.  Files
are written atomically (temp file + rename).

Exit codes: 0 success, 2 config/validation error, 3 solver failure,
4 verification failure (any check false).
"""

from __future__ import annotations

import argparse
import datetime
import json
import os
import sys
import tempfile
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .conditions import check_g2, lipschitz_estimate
from .config import ProblemConfig, load_config
from .errors import BlowUpError, ConfigError, SolverFailure
from .halfline import extend_periodic, verify_mild_extension
from .lp_space import Domain1D, GridFunction, lp_norm
from .nemytskii import check_growth, check_monotone, check_sign, vainberg_bound
from .oracle import FdOperator, expm_matrix
from .sampling import SampleSpec, TrajectorySampleSpec, smooth_grid_function
from .semigroup import SpectralOperator, apply_semigroup, smoothing_constant
from .solver import (
    approximation_family,
    benilan_gap,
    cauchy_solve,
    continuation_sweep,
    forcing_trajectory,
    solve_nonlocal,
    transversality_check,
)

OUTDIR_ENV = "NLHEAT_OUTDIR"

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3
EXIT_VERIFY = 4


# --- output helpers ---------------------------------------------------------

def _fmt(x) -> str:
    if isinstance(x, float):
        return format(x, ".17g")
    return str(x)


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _write_csv(path: Path, header, rows) -> None:
    lines = [",".join(header)]
    lines.extend(",".join(_fmt(v) for v in row) for row in rows)
    _atomic_write(path, "\n".join(lines) + "\n")


def _write_json(path: Path, doc: dict) -> None:
    _atomic_write(path, json.dumps(doc, sort_keys=True, indent=2) + "\n")


def _outdir(config_path: str, cli_outdir: Optional[str]) -> Path:
    env = os.environ.get(OUTDIR_ENV)
    if env:
        return Path(env)
    if cli_outdir:
        return Path(cli_outdir)
    return Path.cwd() / (Path(config_path).stem + ".out")


def _base_doc(command: str, cfg: ProblemConfig, seeds) -> dict:
    return {
        "schema": f"nlheat/{command}-report/v1",
        "version": __version__,
        "command": command,
        "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        "seeds": list(seeds),
        "config": cfg.resolved,
    }


def _effective_seeds(cfg: ProblemConfig, seed: Optional[int]):
    return (seed,) if seed is not None else cfg.sample_seeds


def _print_path(path: Path) -> None:
    print(f"wrote {path}")


# --- solve ------------------------------------------------------------------

def cmd_solve(config_path: str, outdir: Optional[str] = None,
              seed: Optional[int] = None) -> int:
    try:
        cfg = load_config(config_path)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = _outdir(config_path, outdir)
    seeds = _effective_seeds(cfg, seed)
    doc = _base_doc("solve", cfg, seeds)

    h = cfg.build_nonlinearity()
    cond = cfg.build_condition()
    op = cfg.build_operator()
    guess = cfg.build_initial_guess()

    code = EXIT_OK
    try:
        result = solve_nonlocal(h, cond, op, cfg.horizon, cfg.n_steps, cfg.solver,
                                initial_guess=guess)
        report = result.report
        traj = result.trajectory
    except SolverFailure as exc:
        doc["result"] = exc.report.to_dict() if exc.report else {"converged": False}
        doc["result"]["error"] = str(exc)
        _write_json(out / "report.json", doc)
        _print_path(out / "report.json")
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER

    doc["result"] = report.to_dict()
    doc["result"]["error"] = None

    times = traj.times
    nodes = traj.domain.nodes
    rows = []
    for j, t in enumerate(times):
        for i, x in enumerate(nodes):
            rows.append((t, x, traj.snapshots[j, i]))
    _write_csv(out / "trajectory.csv", ("t", "x", "u"), rows)
    norms = traj.snapshot_norms(cfg.p)
    _write_csv(out / "norms.csv", ("t", "norm"), list(zip(times, norms)))
    _write_csv(out / "residuals.csv", ("iteration", "residual", "sup_norm"),
               [(k + 1, r, s) for k, (r, s) in
                enumerate(zip(report.residuals, report.sup_norms))])
    _write_json(out / "report.json", doc)
    for name in ("trajectory.csv", "norms.csv", "residuals.csv", "report.json"):
        _print_path(out / name)
    final_sup = float(np.max(report.snapshot_norms))
    print(f"converged in {report.iterations} iterations; "
          f"solution sup norm {final_sup:.6g} (R_outer {cfg.solver.R_outer})")
    return code


# --- verify -----------------------------------------------------------------

def _merge_check(merged: dict, doc: dict) -> None:
    name = doc["name"]
    if name not in merged:
        merged[name] = doc
        return
    old = merged[name]
    old["pass"] = old["pass"] and doc["pass"]
    old["n_samples"] += doc["n_samples"]
    old["n_violations"] = old.get("n_violations", 0) + doc.get("n_violations", 0)
    if doc["margins"].get("max_violation", -np.inf) > old["margins"].get(
            "max_violation", -np.inf):
        old["margins"] = doc["margins"]
    if "witness" in doc and "witness" not in old:
        old["witness"] = doc["witness"]


def run_verification(cfg: ProblemConfig, seeds) -> list:
    """The full check battery; returns one merged entry per check name."""
    h = cfg.build_nonlinearity()
    cond = cfg.build_condition()
    op = cfg.build_operator()
    merged: dict = {}
    v_max = 8.0
    for seed in seeds:
        point_spec = SampleSpec(n_samples=4000, seed=seed, t_range=(0.0, cfg.horizon),
                                x_range=(0.0, cfg.domain.length), v_range=(-v_max, v_max))
        _merge_check(merged, check_growth(h, point_spec).to_dict())
        _merge_check(merged, check_sign(h, point_spec).to_dict())
        if h.claims.monotone:
            _merge_check(merged, check_monotone(h, point_spec).to_dict())

        traj_spec = TrajectorySampleSpec(cfg.domain, cfg.horizon, cfg.n_steps,
                                         n_samples=24, seed=seed)
        _merge_check(merged, check_g2(cond, cfg.solver.R_ball, cfg.p, traj_spec).to_dict())

        lip = lipschitz_estimate(cond, cfg.p, traj_spec)
        _merge_check(merged, {
            "name": "nonlocal_lipschitz",
            "pass": bool(lip <= 1.0 + 1e-10),
            "n_samples": traj_spec.n_samples,
            "margins": {"max_violation": lip - 1.0, "estimate": lip},
            "n_violations": 0,
        })

        _merge_check(merged, transversality_check(
            h, op, max(cfg.n_list), cfg.p, cfg.shell,
            SampleSpec(n_samples=200, seed=seed, t_range=(0.0, cfg.horizon)),
        ).to_dict())

        _merge_check(merged, _vainberg_check(cfg, h, seed))
        _merge_check(merged, _smoothing_check(cfg, op, seed))
        _merge_check(merged, _oracle_agreement_check(cfg, op, seed))
        _merge_check(merged, _oracle_positivity_check(cfg, seed))
        _merge_check(merged, _benilan_check(cfg, h, op, seed))
    return [merged[k] for k in sorted(merged)]


def _vainberg_check(cfg: ProblemConfig, h, seed: int) -> dict:
    rng = np.random.default_rng(seed)
    worst = -np.inf
    witness = None
    n = 16
    for i in range(n):
        u = smooth_grid_function(cfg.domain, rng)
        t = float(rng.uniform(0.0, cfg.horizon))
        rep = vainberg_bound(h, t, u)
        margin = rep.lhs - rep.rhs * (1.0 + 1e-10)
        if margin > worst:
            worst = margin
            if margin > 0:
                witness = {"where": {"sample": i, "t": t, "lhs": rep.lhs,
                                     "rhs": rep.rhs}, "margin": margin}
    doc = {"name": "vainberg", "pass": bool(worst <= 0.0), "n_samples": n,
           "margins": {"max_violation": float(worst)},
           "n_violations": 0 if worst <= 0 else 1}
    if witness:
        doc["witness"] = witness
    return doc


def _smoothing_check(cfg: ProblemConfig, op, seed: int) -> dict:
    rng = np.random.default_rng(seed)
    worst = -np.inf
    n = 32
    t_grid = np.geomspace(1e-2, 1.0, 7)
    bound = smoothing_constant(1.0, cfg.p, cfg.q, cfg.k_dim)
    for _ in range(n):
        xi = smooth_grid_function(cfg.domain, rng)
        nq = lp_norm(xi, cfg.q)
        if nq == 0.0:
            continue
        for t in t_grid:
            c = smoothing_constant(float(t), cfg.p, cfg.q, cfg.k_dim).value
            lhs = lp_norm(apply_semigroup(op, float(t), xi), cfg.p)
            worst = max(worst, lhs - 1.05 * c * nq)
    return {"name": "smoothing_inequality", "pass": bool(worst <= 0.0),
            "n_samples": n * len(t_grid),
            "margins": {"max_violation": float(worst),
                        "gain_exponent": bound.exponent,
                        "integrable_in_time": bound.integrable,
                        "time_integrability_order": 1},
            "n_violations": 0}


def _oracle_agreement_check(cfg: ProblemConfig, op, seed: int) -> dict:
    if cfg.domain.n_interior <= 256:
        domain, spectral = cfg.domain, op
    else:
        domain = Domain1D(cfg.domain.length, 127)
        spectral = SpectralOperator(domain, cfg.k_dim)
    fd = FdOperator(domain)
    rng = np.random.default_rng(seed)
    u = smooth_grid_function(domain, rng)
    t = 0.37 * min(1.0, cfg.horizon)
    a = apply_semigroup(spectral, t, u)
    b = GridFunction(domain, expm_matrix(fd, t) @ u.values)
    rel = lp_norm(GridFunction(domain, a.values - b.values), 2) / max(lp_norm(u, 2), 1e-300)
    # The two discretizations differ by O(dx^2); the tolerance tracks that scale.
    tol = 10.0 * domain.dx ** 2
    return {"name": "semigroup_oracle_agreement", "pass": bool(rel <= tol),
            "n_samples": 1,
            "margins": {"max_violation": float(rel - tol), "relative_gap": float(rel),
                        "tolerance": tol},
            "n_violations": 0 if rel <= tol else 1}


def _oracle_positivity_check(cfg: ProblemConfig, seed: int) -> dict:
    domain = cfg.domain if cfg.domain.n_interior <= 256 else Domain1D(
        cfg.domain.length, 127)
    fd = FdOperator(domain)
    mat = expm_matrix(fd, 0.5 * min(1.0, cfg.horizon))
    rng = np.random.default_rng(seed)
    n = 200
    worst = np.inf
    for _ in range(n):
        u = rng.random(domain.n_interior)
        out = mat @ u
        worst = min(worst, float(np.min(out) / max(np.max(np.abs(u)), 1e-300)))
    return {"name": "semigroup_positivity", "pass": bool(worst >= -1e-12),
            "n_samples": n,
            "margins": {"max_violation": float(-worst - 1e-12), "min_ratio": worst},
            "n_violations": 0 if worst >= -1e-12 else 1}


def _benilan_check(cfg: ProblemConfig, h, op, seed: int) -> dict:
    rng = np.random.default_rng(seed)
    scale = 0.5 * cfg.solver.R_ball
    xi1 = smooth_grid_function(cfg.domain, rng)
    xi2 = smooth_grid_function(cfg.domain, rng)
    for_xi = []
    for xi in (xi1, xi2):
        peak = np.max(np.abs(xi.values))
        for_xi.append(GridFunction(cfg.domain, xi.values * (scale / peak) if peak else xi.values))
    try:
        u = cauchy_solve(for_xi[0], h, op, cfg.horizon, cfg.n_steps, cfg.solver.stepper)
        v = cauchy_solve(for_xi[1], h, op, cfg.horizon, cfg.n_steps, cfg.solver.stepper)
    except BlowUpError as exc:
        return {"name": "benilan", "pass": False, "n_samples": 1,
                "margins": {"max_violation": float("inf")},
                "witness": {"where": {"step": exc.step_index}, "margin": float("inf")},
                "n_violations": 1}
    b1 = forcing_trajectory(h, u)
    b2 = forcing_trajectory(h, v)
    rep = benilan_gap(u, v, b1, b2, cfg.p)
    return {"name": "benilan", "pass": rep.passed, "n_samples": 1,
            "margins": {"max_violation": float(rep.max_violation),
                        "tolerance": float(rep.tolerance)},
            "n_violations": 0 if rep.passed else 1}


def cmd_verify(config_path: str, outdir: Optional[str] = None,
               seed: Optional[int] = None) -> int:
    try:
        cfg = load_config(config_path)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = _outdir(config_path, outdir)
    seeds = _effective_seeds(cfg, seed)
    doc = _base_doc("verify", cfg, seeds)
    checks = run_verification(cfg, seeds)
    all_pass = all(c["pass"] for c in checks)
    doc["checks"] = checks
    doc["all_pass"] = all_pass
    _write_json(out / "verify.json", doc)
    _print_path(out / "verify.json")
    for c in checks:
        print(f"  {'PASS' if c['pass'] else 'FAIL'}  {c['name']}")
    return EXIT_OK if all_pass else EXIT_VERIFY


# --- family / sweep / extend ------------------------------------------------

def cmd_family(config_path: str, outdir: Optional[str] = None,
               seed: Optional[int] = None) -> int:
    try:
        cfg = load_config(config_path)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = _outdir(config_path, outdir)
    doc = _base_doc("family", cfg, _effective_seeds(cfg, seed))
    h = cfg.build_nonlinearity()
    cond = cfg.build_condition()
    op = cfg.build_operator()
    family = approximation_family(h, cond, op, cfg.horizon, cfg.n_steps,
                                  cfg.solver, cfg.n_list)
    doc["family"] = family.to_dict()
    _write_csv(out / "family.csv", ("n", "gap"),
               [(n, g) for n, g in family.table])
    _write_json(out / "family.json", doc)
    _print_path(out / "family.csv")
    _print_path(out / "family.json")
    if any(e.result is None for e in family.entries):
        print("family member(s) failed to converge", file=sys.stderr)
        return EXIT_SOLVER
    return EXIT_OK


def cmd_sweep(config_path: str, outdir: Optional[str] = None,
              seed: Optional[int] = None) -> int:
    try:
        cfg = load_config(config_path)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = _outdir(config_path, outdir)
    doc = _base_doc("sweep", cfg, _effective_seeds(cfg, seed))
    h = cfg.build_nonlinearity()
    cond = cfg.build_condition()
    op = cfg.build_operator()
    sweep = continuation_sweep(h, cond, op, cfg.horizon, cfg.n_steps,
                               cfg.solver, cfg.lambda_grid)
    doc["sweep"] = sweep.to_dict()
    _write_csv(out / "sweep.csv", ("lambda", "sup_norm"),
               [(r.lam, r.sup_norm) for r in sweep.rows])
    _write_json(out / "sweep.json", doc)
    _print_path(out / "sweep.csv")
    _print_path(out / "sweep.json")
    if any(not r.converged for r in sweep.rows):
        print("sweep member(s) failed to converge", file=sys.stderr)
        return EXIT_SOLVER
    return EXIT_OK


def cmd_extend(config_path: str, n_periods: int, outdir: Optional[str] = None,
               seed: Optional[int] = None) -> int:
    try:
        cfg = load_config(config_path)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if n_periods < 2:
        print("extend needs at least 2 periods", file=sys.stderr)
        return EXIT_CONFIG
    out = _outdir(config_path, outdir)
    doc = _base_doc("extend", cfg, _effective_seeds(cfg, seed))
    h = cfg.build_nonlinearity()
    cond = cfg.build_condition()
    op = cfg.build_operator()
    try:
        result = solve_nonlocal(h, cond, op, cfg.horizon, cfg.n_steps, cfg.solver,
                                initial_guess=cfg.build_initial_guess())
        ext = extend_periodic(result.trajectory, n_periods,
                              tol_glue=10.0 * cfg.solver.picard_tol, p=cfg.p)
        report = verify_mild_extension(ext, h, op, cfg.solver.stepper,
                                       cfg.solver.smoothing_n)
    except (SolverFailure, ValueError) as exc:
        doc["error"] = str(exc)
        _write_json(out / "extend.json", doc)
        _print_path(out / "extend.json")
        print(f"extension failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER

    doc["extend"] = report.to_dict()
    doc["extend"]["n_periods"] = n_periods
    doc["extend"]["periodicity_exact"] = True
    _write_csv(out / "extend.csv", ("period", "deviation"),
               list(enumerate(report.per_period_deviation, start=1)))
    _write_json(out / "extend.json", doc)
    _print_path(out / "extend.csv")
    _print_path(out / "extend.json")
    return EXIT_OK


# --- report pretty-printer ----------------------------------------------------

def cmd_report(json_path: str) -> int:
    try:
        doc = json.loads(Path(json_path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        print(f"cannot read report: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print(f"command:   {doc.get('command')}")
    print(f"schema:    {doc.get('schema')}")
    print(f"timestamp: {doc.get('timestamp')}")
    result = doc.get("result")
    if result:
        print(f"converged: {result.get('converged')} "
              f"in {result.get('iterations')} iterations")
        print(f"occupancy: {result.get('occupancy')} (R_outer {result.get('R_outer')})")
        if result.get("residuals"):
            print(f"last residual: {result['residuals'][-1]:.3e}")
    if "checks" in doc:
        for c in doc["checks"]:
            mark = "PASS" if c["pass"] else "FAIL"
            print(f"  {mark}  {c['name']}  (worst margin "
                  f"{c['margins'].get('max_violation')})")
        print(f"all_pass: {doc.get('all_pass')}")
    for key in ("family", "sweep", "extend"):
        if key in doc:
            print(f"{key}: {json.dumps(doc[key], sort_keys=True)}")
    return EXIT_OK


# --- entry point --------------------------------------------------------------

def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="nlheat",
        description="Solve 1-D semilinear heat equations with nonlocal initial conditions.",
    )
    parser.add_argument("--version", action="version", version=f"nlheat {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(sp):
        sp.add_argument("config", help="problem configuration (TOML)")
        sp.add_argument("--outdir", default=None,
                        help=f"output directory (env {OUTDIR_ENV} overrides)")
        sp.add_argument("--seed", type=int, default=None,
                        help="override the config's sample seeds")

    add_common(sub.add_parser("solve", help="run the nonlocal solve"))
    add_common(sub.add_parser("verify", help="run the hypothesis check battery"))
    add_common(sub.add_parser("family", help="solve the smoothing family"))
    add_common(sub.add_parser("sweep", help="run the continuation sweep"))
    sp_extend = sub.add_parser("extend", help="extend a periodic solve to several periods")
    add_common(sp_extend)
    sp_extend.add_argument("--periods", type=int, default=3)
    sp_report = sub.add_parser("report", help="pretty-print a JSON report")
    sp_report.add_argument("json_path")

    args = parser.parse_args(argv)
    if args.command == "solve":
        return cmd_solve(args.config, args.outdir, args.seed)
    if args.command == "verify":
        return cmd_verify(args.config, args.outdir, args.seed)
    if args.command == "family":
        return cmd_family(args.config, args.outdir, args.seed)
    if args.command == "sweep":
        return cmd_sweep(args.config, args.outdir, args.seed)
    if args.command == "extend":
        return cmd_extend(args.config, args.periods, args.outdir, args.seed)
    if args.command == "report":
        return cmd_report(args.json_path)
    parser.error(f"unknown command {args.command!r}")
    return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
