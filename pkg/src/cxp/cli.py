"""Command-line driver.

Exit codes: 0 success, 2 unreadable/unparsable input, 3 validation failure,
4 at least one request could not be admitted.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

from cxp._version import __version__
from cxp.errors import CxpError, DatasetError, MalformedScenario, UnknownIxp
from cxp.feasibility import (
    CoverageDataset,
    build_pathlet_map,
    coverage_curve,
    diversity_matrix,
)
from cxp.pathlet import Pathlet, load_requests, validate_pathlet
from cxp.reports import (
    header_line,
    write_admission_report,
    write_coverage_csv,
    write_matrix_csv,
    write_metrics_csv,
    write_request_metrics_csv,
)
from cxp.simulation import DEFAULT_SEED, Scenario, run_scenario
from cxp.stitching import Rejected, StitchPolicy, admit
from cxp.topology import VirtualTopology

log = logging.getLogger("cxp")

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_VALIDATION = 3
EXIT_INFEASIBLE = 4


class CliError(Exception):
    def __init__(self, message, code):
        super().__init__(message)
        self.code = code


def _read(path) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc.strerror}", EXIT_PARSE) from None


def _read_json(path):
    text = _read(path)
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise CliError(f"{path}: invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}",
                       EXIT_PARSE) from None


def _outdir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _policy(args) -> StitchPolicy:
    try:
        return StitchPolicy(
            switching_delay_ms=args.switching_delay,
            migration_budget=args.migration_budget,
            tolerance=args.tolerance,
        )
    except ValueError as exc:
        raise CliError(str(exc), EXIT_VALIDATION) from None


# -- topo build ----------------------------------------------------------


def cmd_topo_build(args) -> int:
    data = _read_json(args.advertisements)
    if not isinstance(data, list):
        raise CliError(f"{args.advertisements}: expected a JSON array of pathlets", EXIT_PARSE)
    topo = VirtualTopology(backup_reservation=args.backup_reservation)
    report = []
    for i, record in enumerate(data):
        try:
            p = Pathlet.from_dict(record)
        except (ValueError, TypeError) as exc:
            raise CliError(f"{args.advertisements}: record {i}: {exc}", EXIT_PARSE) from None
        reasons = validate_pathlet(p)
        if not reasons and p.id in topo.pathlets:
            reasons = ["duplicate id"]
        if reasons:
            report.append((i, p.id, "rejected", "; ".join(reasons)))
            log.warning("record %d (%s) rejected: %s", i, p.id, "; ".join(reasons))
        else:
            topo.advertise(p)
            report.append((i, p.id, "ok", ""))
    out = _outdir(args)
    (out / "topology.json").write_text(topo.to_json())
    with open(out / "validation_report.csv", "w", newline="") as fh:
        fh.write(header_line(args.seed))
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["record", "pathlet_id", "status", "reasons"])
        w.writerows(report)
    rejected = [r for r in report if r[2] != "ok"]
    print(f"{len(report) - len(rejected)} pathlet(s) accepted, {len(rejected)} rejected")
    return EXIT_VALIDATION if rejected else EXIT_OK


# -- admit -----------------------------------------------------------


def _load_topology(path, backup_reservation) -> VirtualTopology:
    data = _read_json(path)
    try:
        if isinstance(data, list):
            return VirtualTopology((Pathlet.from_dict(r) for r in data), backup_reservation)
        return VirtualTopology.from_dict(data)
    except (KeyError, TypeError, ValueError) as exc:
        raise CliError(f"{path}: {exc}", EXIT_PARSE) from None
    except CxpError as exc:
        raise CliError(f"{path}: {exc}", EXIT_VALIDATION) from None


def cmd_admit(args) -> int:
    topo = _load_topology(args.topology, args.backup_reservation or "full")
    try:
        requests = load_requests(_read(args.requests))
    except json.JSONDecodeError as exc:
        raise CliError(f"{args.requests}: invalid JSON at line {exc.lineno}", EXIT_PARSE) from None
    except ValueError as exc:
        raise CliError(f"{args.requests}: {exc}", EXIT_PARSE) from None
    policy = _policy(args)
    rows = []
    for r in requests:
        try:
            got = admit(topo, r, policy)
        except Rejected as exc:
            rows.append({"request_id": r.id, "outcome": exc.reason.value})
            continue
        except UnknownIxp as exc:
            raise CliError(f"request {r.id!r}: unknown ixp {exc}", EXIT_VALIDATION) from None
        rows.append({
            "request_id": r.id,
            "outcome": "admitted",
            "delay_ms": got.path.path_delay_ms,
            "pathlets": got.path.pathlet_ids,
            "migrations_performed": len(got.migrated),
        })
    out = _outdir(args)
    with open(out / "admission_report.csv", "w", newline="") as fh:
        write_admission_report(fh, rows, args.seed)
    (out / "topology.json").write_text(topo.to_json())
    rejected = sum(1 for row in rows if row["outcome"] != "admitted")
    print(f"{len(rows) - rejected} admitted, {rejected} rejected")
    return EXIT_INFEASIBLE if rejected else EXIT_OK


# -- simulate -------------------------------------------------------


def cmd_simulate(args) -> int:
    data = _read_json(args.scenario)
    if not isinstance(data, dict):
        raise CliError(f"{args.scenario}: scenario must be a JSON object", EXIT_PARSE)
    if args.seed is not None:
        data = dict(data, rng_seed=args.seed)
    if args.backup_reservation is not None:
        data = dict(data, backup_reservation=args.backup_reservation)
    try:
        scenario = Scenario.from_dict(data)
    except MalformedScenario as exc:
        raise CliError(f"{args.scenario}: {exc}", EXIT_VALIDATION) from None
    result = run_scenario(scenario, _policy(args))
    out = _outdir(args)
    seed = scenario.rng_seed
    with open(out / "events.jsonl", "w") as fh:
        fh.write(json.dumps({"epoch": None, "kind": "run_header",
                             "payload": {"seed": seed, "version": __version__}},
                            sort_keys=True) + "\n")
        for line in result.event_lines():
            fh.write(line + "\n")
    with open(out / "metrics.csv", "w", newline="") as fh:
        write_metrics_csv(fh, result.metrics, seed)
    with open(out / "request_metrics.csv", "w", newline="") as fh:
        write_request_metrics_csv(fh, result.metrics, seed)
    if args.plot and result.metrics.lifetime_epochs:
        from cxp.plotting import plot_availability

        plot_availability(result.metrics, out / "availability.png")
    m = result.metrics
    print(f"admitted={m.admitted} rejected={sum(m.rejected.values())} "
          f"reroutes={m.reroutes} migrations={m.migrations}")
    return EXIT_OK


# -- feasibility ----------------------------------------------------


def _dataset(args, need_origins: bool) -> CoverageDataset:
    if need_origins and not args.originations:
        raise CliError("--originations is required for coverage", EXIT_PARSE)
    try:
        return CoverageDataset.from_csv(
            args.memberships,
            getattr(args, "originations", None),
            getattr(args, "relationships", None),
        )
    except OSError as exc:
        raise CliError(f"cannot read dataset: {exc}", EXIT_PARSE) from None
    except DatasetError as exc:
        raise CliError(str(exc), EXIT_PARSE) from None


def cmd_coverage(args) -> int:
    dataset = _dataset(args, need_origins=True)
    if args.cone and not args.relationships:
        raise CliError("--cone needs --relationships", EXIT_PARSE)
    try:
        curve = coverage_curve(dataset, args.k, include_cone=args.cone)
    except ValueError as exc:
        raise CliError(str(exc), EXIT_VALIDATION) from None
    out = _outdir(args)
    name = "coverage_cone.csv" if args.cone else "coverage.csv"
    with open(out / name, "w", newline="") as fh:
        write_coverage_csv(fh, curve, args.seed)
    if args.plot:
        from cxp.plotting import plot_coverage_curves

        label = "IXP members + 1-hop customer cone" if args.cone else "IXP members"
        plot_coverage_curves({label: curve}, out / (Path(name).stem + ".png"))
    for ixp, total in curve:
        print(f"{ixp}\t{total}")
    return EXIT_OK


def cmd_mincut(args) -> int:
    dataset = _dataset(args, need_origins=False)
    ixps = [x.strip() for x in args.ixps.split(",") if x.strip()]
    if len(ixps) < 2:
        raise CliError("--ixps needs at least two IXP ids", EXIT_VALIDATION)
    pmap = build_pathlet_map(dataset)
    try:
        matrix = diversity_matrix(pmap, ixps)
    except UnknownIxp as exc:
        raise CliError(f"unknown IXP {exc}", EXIT_VALIDATION) from None
    except ValueError as exc:
        raise CliError(str(exc), EXIT_VALIDATION) from None
    out = _outdir(args)
    with open(out / "diversity_matrix.csv", "w", newline="") as fh:
        write_matrix_csv(fh, ixps, matrix, args.seed)
    if args.plot:
        from cxp.plotting import plot_diversity_matrix

        plot_diversity_matrix(ixps, matrix, out / "diversity_matrix.png")
    print(f"{len(pmap.nodes)} IXPs, {len(pmap.edges)} pathlet edges")
    return EXIT_OK


# -- argument parsing -----------------------------------------------------


def _common(p, seed_default=DEFAULT_SEED, seed_help=None):
    p.add_argument("--out", default=".", metavar="DIR", help="output directory")
    p.add_argument("--seed", type=int, default=seed_default, metavar="N",
                   help=seed_help or f"random seed recorded in outputs (default {seed_default})")


def _policy_flags(p):
    p.add_argument("--switching-delay", type=float, default=0.0, metavar="MS",
                   help="per-IXP switching delay in ms")
    p.add_argument("--migration-budget", type=int, default=8, metavar="N")
    p.add_argument("--backup-reservation", choices=("full", "none"), default=None,
                   help="hot (full) or cold (none) standby backups")
    p.add_argument("--tolerance", type=float, default=0.0,
                   help="relative slack on guaranteed pathlet delays")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cxp", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"cxp {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    topo = sub.add_parser("topo", help="topology operations")
    topo_sub = topo.add_subparsers(dest="topo_command", required=True)
    build = topo_sub.add_parser("build", help="validate advertisements, write a snapshot")
    build.add_argument("advertisements")
    build.add_argument("--backup-reservation", choices=("full", "none"), default="full")
    _common(build)
    build.set_defaults(func=cmd_topo_build)

    adm = sub.add_parser("admit", help="admit a batch of requests onto a topology")
    adm.add_argument("topology", help="snapshot or advertisement file")
    adm.add_argument("requests")
    _common(adm)
    _policy_flags(adm)
    adm.set_defaults(func=cmd_admit)

    sim = sub.add_parser("simulate", help="run an orchestration scenario")
    sim.add_argument("scenario")
    _common(sim, seed_default=None, seed_help="override the scenario's rng_seed")
    _policy_flags(sim)
    sim.add_argument("--plot", action="store_true", help="also write availability.png")
    sim.set_defaults(func=cmd_simulate)

    feas = sub.add_parser("feasibility", help="IXP coverage and path diversity analysis")
    feas_sub = feas.add_subparsers(dest="feasibility_command", required=True)
    for name, func, help_ in (
        ("coverage", cmd_coverage, "greedy address coverage curve"),
        ("mincut", cmd_mincut, "pairwise min-cut diversity matrix"),
    ):
        p = feas_sub.add_parser(name, help=help_)
        p.add_argument("--memberships", required=True, metavar="CSV")
        p.add_argument("--originations", metavar="CSV")
        p.add_argument("--relationships", metavar="CSV")
        p.add_argument("--plot", action="store_true", help="also render a PNG figure")
        _common(p)
        p.set_defaults(func=func)
        if name == "coverage":
            p.add_argument("-k", "--coverage", dest="k", type=int, required=True,
                           help="number of IXPs to pick")
            p.add_argument("--cone", action="store_true",
                           help="count 1-hop customer cones of members")
        else:
            p.add_argument("--ixps", "--mincut", dest="ixps", required=True,
                           help="comma-separated IXP ids")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except CliError as exc:
        print(f"cxp: error: {exc}", file=sys.stderr)
        return exc.code


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run()
