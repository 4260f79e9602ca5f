"""Command-line entry point: ``lrsolve <command> [options]``.

Exit status is 0 when every check passes, 1 on a failed check and 2 on a
usage or configuration error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import platform
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from importlib import metadata
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
import scipy

from . import checks
from .checks import Check
from .scenario import Scenario, ScenarioError, resolve
from .transforms import NewtonError, NotEllipticError

log = logging.getLogger("lrsolve")

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2
CONFIG_ERRORS = (ScenarioError, NotEllipticError, FileNotFoundError, IsADirectoryError)


def versions() -> dict[str, str]:
    try:
        pkg = metadata.version("artifact")
    except metadata.PackageNotFoundError:
        pkg = "unknown"
    return {"python": platform.python_version(), "numpy": np.__version__, "scipy": scipy.__version__, "lrsolve": pkg}


def build_report(command: str, check_list: Sequence[Check], scenario: Scenario | None = None, seeds: dict | None = None, extra: dict | None = None) -> dict:
    names = [c.name for c in check_list]
    dupes = sorted({n for n in names if names.count(n) > 1})
    if dupes:
        raise RuntimeError(f"duplicate check names: {dupes}")
    report = {
        "command": command,
        "scenario": scenario.to_flat() if scenario is not None else None,
        "checks": [c.as_dict() for c in check_list],
        "versions": versions(),
        "seeds": seeds or {},
        "overall": all(c.passed for c in check_list),
    }
    if extra:
        report.update(extra)
    return report


def merge_reports(reports: Sequence[dict]) -> dict:
    flat: list[dict] = []
    for r in reports:
        flat.extend(r["reports"] if "reports" in r else [r])
    return {"overall": all(r["overall"] for r in flat), "reports": flat}


def write_json(path: Path, data: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(data, indent=2, sort_keys=False) + "\n", encoding="utf-8")


def _fmt(v) -> str:
    return f"{v:.17g}" if isinstance(v, (float, np.floating)) else str(v)


def write_rows(path: Path, header: Sequence[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def _print_checks(title: str, check_list: Sequence[Check]) -> None:
    print(f"== {title}")
    for c in check_list:
        print(c.line())


# pipelines; each returns a report dict and writes its artifacts under ``out``


def run_algebra(out: Path, seed: int = 0, tol_scale: float = 1.0) -> dict:
    from .scenario import DEFAULT_TOLERANCES
    from .weyl import QUADRATIC_BASIS, check_closure, monomials_up_to, OperatorPoly

    res = checks.algebra_suite(seed=seed, span_tol=DEFAULT_TOLERANCES["algebra_span"] * tol_scale)
    gens = [OperatorPoly.monomial(m.qdeg, m.pdeg) for m in monomials_up_to(3)]
    cubic = check_closure(gens)
    witness = None
    if cubic.witness is not None:
        a, b = cubic.witness
        witness = {"left": str(gens[a]), "right": str(gens[b]), "bracket": str(cubic.witness_bracket), "degree": cubic.witness_degree}
        print(f"cubic non-closure witness: [{gens[a]}, {gens[b]}] = {cubic.witness_bracket}")
    out.mkdir(parents=True, exist_ok=True)
    report = build_report("check-algebra", res, seeds={"random_polys": seed}, extra={"cubic_witness": witness})
    _print_checks("algebra", res)
    return report


def _quad_rows(path, times):
    for t in times:
        c = path.quad_coeffs(t)
        yield (float(t), c.p2, c.qp, c.q2, c.p1, c.q1, c.c0, c.casimir)


def run_solve(sc: Scenario, out: Path) -> dict:
    out.mkdir(parents=True, exist_ok=True)
    res: list[Check] = []
    res += checks.ode_suite(sc, seed=sc.seed)
    res += checks.reduction_suite(seed=sc.seed, tolerances=sc.tolerances)
    dyn = checks.dynamics_suite(sc)
    res += dyn.checks
    res.append(checks.invariant_drift_check(sc, dyn.path, seed=sc.seed))
    res += checks.cross_suite(sc, dyn.particular[0])
    vrows = []
    if not sc.harmonic:
        vchecks, vrows = checks.volkov_suite(sc)
        res += vchecks

    times = sc.record_times
    write_rows(out / "coefficients.csv", ["t", "p2", "qp", "q2", "p1", "q1", "c0", "casimir"], _quad_rows(dyn.path, times))
    write_rows(
        out / "transforms.csv",
        ["t", "kick", "shift", "p_chirp", "q_chirp", "level_spacing", "offset"],
        ((float(t), p.kick, p.shift, p.p_chirp, p.q_chirp, p.level_spacing, p.offset) for t, p in zip(times, dyn.general.params)),
    )
    dyn.phase.to_csv(out / "phases.csv")
    write_rows(
        out / "fidelities.csv",
        ["t", "n", "fidelity", "phase_error"],
        ((float(t), n, f, ph) for n, fs in dyn.fidelities.items() for t, f, ph in zip(fs.times, fs.fidelity, fs.phase)),
    )
    dyn.general_fidelity.to_csv(out / "general_fidelity.csv")
    c = dyn.general.coefficients
    write_rows(out / "general_coefficients.csv", ["n", "re", "im", "abs2"], ((n, float(v.real), float(v.imag), float(abs(v) ** 2)) for n, v in enumerate(c)))
    first = dyn.particular[0]
    first.snapshots[0].to_csv(out / "snapshot_n0_t0.csv")
    first.snapshots[-1].to_csv(out / "snapshot_n0_t1.csv")
    from .solutions import evolve_general

    evolve_general(dyn.general, float(times[-1])).to_csv(out / "snapshot_general_t1.csv")
    if vrows:
        write_rows(out / "volkov.csv", ["t", "k", "eigen_residual", "tdse_residual"], vrows)
    _print_checks(f"solve {sc.name}", res)
    return build_report("solve", res, sc, seeds={"scenario": sc.seed})


def run_volkov(sc: Scenario, out: Path, ks: Sequence[float]) -> dict:
    if sc.harmonic:
        raise ScenarioError("volkov needs a scenario without a harmonic term")
    out.mkdir(parents=True, exist_ok=True)
    res, rows = checks.volkov_suite(sc, ks)
    write_rows(out / "volkov.csv", ["t", "k", "eigen_residual", "tdse_residual"], rows)
    _print_checks(f"volkov {sc.name}", res)
    return build_report("volkov", res, sc, extra={"k": [float(k) for k in ks]})


def run_oracle(sc: Scenario, out: Path) -> dict:
    from .oracle import write_moments_csv

    out.mkdir(parents=True, exist_ok=True)
    res, traj = checks.oracle_suite(sc)
    write_moments_csv(out / "moments.csv", traj, sc)
    _print_checks(f"oracle {sc.name}", res)
    return build_report("oracle-only", res, sc)


def _load_scenarios(specs: Sequence[str], n_max: int | None, tol_scale: float) -> list[Scenario]:
    out = []
    for s in specs:
        sc = resolve(s)
        if n_max is not None:
            sc = replace(sc, n_max=n_max)
        if tol_scale != 1.0:
            sc = sc.scaled(tol_scale)
        out.append(sc)
    names = [sc.name for sc in out]
    if len(set(names)) != len(names):
        raise ScenarioError(f"scenario names must be distinct, got {names}")
    return out


def _run_many(fn: Callable, scenarios: Sequence[Scenario], out: Path, jobs: int, *args) -> dict:
    dirs = [out / sc.name for sc in scenarios]
    if jobs > 1 and len(scenarios) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            reports = list(pool.map(fn, scenarios, dirs, *([a] * len(scenarios) for a in args)))
    else:
        reports = [fn(sc, d, *args) for sc, d in zip(scenarios, dirs)]
    for r, d in zip(reports, dirs):
        write_json(d / "report.json", r)
    return merge_reports(reports)


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="lrsolve", description="Exact invariant-based solutions of driven quadratic Schrodinger problems, with numerical cross-checks.")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, scenarios=True):
        if scenarios:
            p.add_argument("--scenario", action="append", required=True, help="scenario file or bundled name; repeatable")
            p.add_argument("--n-max", type=int, default=None)
            p.add_argument("--jobs", type=int, default=1)
        p.add_argument("--out", type=Path, default=Path("out"))
        p.add_argument("--tol-scale", type=float, default=1.0)

    alg = sub.add_parser("check-algebra", help="operator-algebra properties and closure")
    common(alg, scenarios=False)
    alg.add_argument("--seed", type=int, default=0)
    common(sub.add_parser("solve", help="full pipeline with oracle comparisons"))
    vk = sub.add_parser("volkov", help="plane-wave solutions of the linear branch")
    common(vk)
    vk.add_argument("--k", type=float, action="append", default=None, help="momentum label; repeatable (default 0 and 1)")
    common(sub.add_parser("oracle-only", help="self-checks of the split-step propagator"))
    mg = sub.add_parser("report-merge", help="combine report.json files")
    mg.add_argument("reports", nargs="+", type=Path)
    mg.add_argument("--out", type=Path, required=True)
    return ap


def main(argv: Sequence[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if getattr(args, "tol_scale", 1.0) <= 0:
        print("error: --tol-scale must be positive", file=sys.stderr)
        return EXIT_CONFIG
    try:
        if args.command == "check-algebra":
            report = run_algebra(args.out, args.seed, args.tol_scale)
            write_json(args.out / "report.json", report)
        elif args.command == "report-merge":
            report = merge_reports([json.loads(p.read_text(encoding="utf-8")) for p in args.reports])
            write_json(args.out, report)
        else:
            scenarios = _load_scenarios(args.scenario, args.n_max, args.tol_scale)
            if args.command == "solve":
                report = _run_many(run_solve, scenarios, args.out, args.jobs)
            elif args.command == "volkov":
                for sc in scenarios:
                    if sc.harmonic:
                        raise ScenarioError(f"scenario {sc.name!r} has a harmonic term; volkov needs a purely linear potential")
                report = _run_many(run_volkov, scenarios, args.out, args.jobs, tuple(args.k or (0.0, 1.0)))
            else:
                report = _run_many(run_oracle, scenarios, args.out, args.jobs)
            write_json(args.out / "report.json", report)
    except CONFIG_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NewtonError, ArithmeticError, ValueError) as exc:
        print(f"check failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL
    print("overall:", "PASS" if report["overall"] else "FAIL")
    return EXIT_OK if report["overall"] else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
