"""Command-line front end: validate, run and report.

Exit codes: 0 ok, 1 validation, 2 usage or I/O, 3 infeasible, 4 solver limit.
"""

from __future__ import annotations

import argparse
import dataclasses
import datetime as dt
import hashlib
import json
import logging
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import __version__, analysis
from .builder import build_lp
from .lp import to_mps
from .model import ModelError, has_errors, validate_model
from .scenario import ScenarioError, load_scenario, write_solution
from .solver import INFEASIBLE, OPTIMAL, SolverOptions, solve, verify_solution

EXIT_OK, EXIT_VALIDATION, EXIT_USAGE, EXIT_INFEASIBLE, EXIT_LIMIT = 0, 1, 2, 3, 4

log = logging.getLogger("flexplan")


def _dump_json(path: Path, data) -> None:
    path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def input_hashes(scenario: Path) -> dict:
    """SHA-256 of every file under the scenario directory, keyed by relative path."""
    out = {}
    for p in sorted(scenario.rglob("*")):
        if p.is_file():
            out[p.relative_to(scenario).as_posix()] = hashlib.sha256(p.read_bytes()).hexdigest()
    return out


def parse_order(text):
    if text is None:
        return list(analysis.REFERENCE_ORDER)
    names = [s for s in (part.strip() for part in text.split(",")) if s]
    return [analysis.normalize_class(n) for n in names]


def _load(scenario: Path):
    """Load and validate; returns ``(model, diagnostics)`` with model None on errors."""
    diags = []
    try:
        model = load_scenario(scenario, diags)
    except ScenarioError as exc:
        return None, [{"entity": exc.location(), "severity": "error", "message": str(exc)}]
    diags = [d.to_dict() for d in diags + validate_model(model)]
    if any(d["severity"] == "error" for d in diags):
        return None, diags
    return model, diags


def _report_diagnostics(diags) -> None:
    for d in diags:
        print(f"{d['severity']}: {d['entity']}: {d['message']}", file=sys.stderr)


def cmd_validate(args) -> int:
    scenario = Path(args.scenario)
    if not scenario.is_dir():
        print(f"error: no scenario directory at {scenario}", file=sys.stderr)
        return EXIT_USAGE
    model, diags = _load(scenario)
    _report_diagnostics(diags)
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
        _dump_json(out / f"diagnostics-{scenario.name}.json", diags)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK if model is not None else EXIT_VALIDATION


def _no_grid_expansion(model):
    corridors = tuple(dataclasses.replace(k, segments=(), expansion_limit=0.0) for k in model.corridors)
    return dataclasses.replace(model, corridors=corridors)


def _run_directory(out: Path, name: str) -> Path:
    stamp = dt.datetime.now(dt.timezone.utc).strftime("%Y%m%dT%H%M%S")
    path = out / f"{name}-{stamp}"
    n = 1
    while path.exists():
        n += 1
        path = out / f"{name}-{stamp}-{n}"
    path.mkdir(parents=True)
    return path


def run_scenario(scenario, out, order=None, no_grid_expansion=False, time_limit=None,
                 tol=1e-6, export_lp=False) -> int:
    """Validate, build, solve and analyze one scenario into a fresh run directory."""
    scenario = Path(scenario)
    if not scenario.is_dir():
        print(f"error: no scenario directory at {scenario}", file=sys.stderr)
        return EXIT_USAGE
    try:
        order = parse_order(order)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    model, diags = _load(scenario)
    _report_diagnostics(diags)
    if model is None:
        return EXIT_VALIDATION
    if no_grid_expansion:
        model = _no_grid_expansion(model)
    settings = dict(model.solver_options)
    if time_limit is not None:
        settings["time_limit"] = time_limit
    options = SolverOptions.from_settings(settings)

    try:
        run_dir = _run_directory(Path(out), model.name)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    manifest = {
        "scenario": str(scenario),
        "overrides": {
            "no_grid_expansion": bool(no_grid_expansion),
            "order": order,
            "time_limit": time_limit,
            "tol": tol,
        },
        "solver_options": {k: (v if math.isfinite(v) else None) if isinstance(v, float) else v
                           for k, v in dataclasses.asdict(options).items()},
        "output_dir": str(run_dir),
        "version": __version__,
        "input_hashes": input_hashes(scenario),
        "created": dt.datetime.now(dt.timezone.utc).isoformat(timespec="seconds"),
    }
    _dump_json(run_dir / "manifest.json", manifest)
    _dump_json(run_dir / "diagnostics.json", diags)

    try:
        lp = build_lp(model)
    except ModelError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    if export_lp:
        text, _ = to_mps(lp, model.name)
        (run_dir / "lp.mps").write_text(text, encoding="utf-8")

    solution = solve(lp, options)
    log.info("%s: %s after %d iterations", model.name, solution.status, solution.iterations)
    if solution.status != OPTIMAL:
        _dump_json(run_dir / "verify.json", {
            "status": solution.status,
            "message": solution.message,
            "passed": False,
            "diagnostics": diags,
        })
        print(f"{model.name}: solver status {solution.status}: {solution.message}", file=sys.stderr)
        return EXIT_INFEASIBLE if solution.status == INFEASIBLE else EXIT_LIMIT
    report = verify_solution(lp, solution, tol)
    _dump_json(run_dir / "verify.json", dict(report.to_dict(), status=solution.status))
    if not report.passed:
        print(f"{model.name}: solution failed verification at tolerance {tol}", file=sys.stderr)
        return EXIT_LIMIT

    write_solution(solution, run_dir / "solution", model, lp)
    summary = {"objective": solution.objective, "breakdown": solution.breakdown, "regions": {}}
    for region in sorted(model.regions):
        curves = analysis.attribute_flexibility(model, solution, order, region)
        analysis.write_curves(run_dir / f"curves_{region}.csv", curves)
        entry = {"curves": [c.metrics() for c in curves],
                 "trade": analysis.trade_summary(model, solution, region)}
        if model.carrier_map[model.electricity_carrier].resolution == 1:
            dec = analysis.supply_decomposition(model, solution, region)
            analysis.write_decomposition(run_dir / f"decomposition_{region}.csv", dec)
            entry["decomposition_closure"] = dec.closure_error()
        summary["regions"][region] = entry
    flows = analysis.aggregate_flows(model, solution)
    analysis.write_flows(run_dir / "flows.csv", flows)
    analysis.write_exchanges(run_dir / "exchanges.csv", flows)
    analysis.write_metrics(run_dir / "metrics.json", summary)
    print(run_dir)
    return EXIT_OK


def _run_job(job) -> int:
    return run_scenario(**job)


def cmd_run(args) -> int:
    jobs = [
        dict(scenario=s, out=args.out, order=args.order, no_grid_expansion=args.no_grid_expansion,
             time_limit=args.time_limit, tol=args.tol, export_lp=args.export_lp)
        for s in args.scenario
    ]
    if args.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            codes = list(pool.map(_run_job, jobs))
    else:
        codes = [_run_job(j) for j in jobs]
    return max(codes)


def _read_run(path: Path) -> dict:
    try:
        metrics = json.loads((path / "metrics.json").read_text(encoding="utf-8"))
        regions = {
            r: entry["curves"][-1] for r, entry in metrics["regions"].items()
        }
        return {"objective": float(metrics["objective"]), "breakdown": metrics["breakdown"], "regions": regions}
    except (OSError, KeyError, IndexError, TypeError, ValueError) as exc:
        raise ScenarioError(f"malformed run directory {path}: {exc}") from None


METRIC_COLUMNS = ("peak", "residual_demand", "excess_generation", "hours_negative")


def format_report(runs) -> str:
    lines = []
    for path, run in runs:
        b = run["breakdown"]
        lines.append(f"run {path}")
        lines.append(f"  objective {run['objective']:.6f}  " + "  ".join(
            f"{k} {b.get(k, 0.0):.6f}" for k in ("fixed", "variable", "import", "preexisting_fixed")))
        lines.append("  " + "region".ljust(12) + "".join(c.rjust(20) for c in METRIC_COLUMNS))
        for region in sorted(run["regions"]):
            m = run["regions"][region]
            lines.append("  " + region.ljust(12) + "".join(f"{m[c]:20.6f}" for c in METRIC_COLUMNS))
    if len(runs) == 2:
        (_, a), (_, b) = runs
        lines.append("delta (second minus first)")
        lines.append(f"  objective {b['objective'] - a['objective']:+.6f}")
        for region in sorted(set(a["regions"]) & set(b["regions"])):
            ma, mb = a["regions"][region], b["regions"][region]
            lines.append("  " + region.ljust(12) + "".join(f"{mb[c] - ma[c]:+20.6f}" for c in METRIC_COLUMNS))
    return "\n".join(lines)


def cmd_report(args) -> int:
    runs = []
    for p in args.run:
        try:
            runs.append((p, _read_run(Path(p))))
        except ScenarioError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_USAGE
    print(format_report(runs))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="flexplan", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a scenario directory")
    p.add_argument("scenario")
    p.add_argument("--out", default="runs", help="where the diagnostics JSON goes")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("run", help="build, solve and analyze scenarios")
    p.add_argument("scenario", nargs="+")
    p.add_argument("--out", default="runs")
    p.add_argument("--order", default=None,
                   help="comma-separated flexibility classes for the attribution steps")
    p.add_argument("--no-grid-expansion", action="store_true")
    p.add_argument("--time-limit", type=float, default=None, help="seconds")
    p.add_argument("--tol", type=float, default=1e-6, help="verifier tolerance")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--export-lp", action="store_true", help="also write lp.mps")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("report", help="summarize one run or compare two")
    p.add_argument("run", nargs="+")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    if args.command == "report" and len(args.run) > 2:
        print("error: report takes one or two run directories", file=sys.stderr)
        return EXIT_USAGE
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
