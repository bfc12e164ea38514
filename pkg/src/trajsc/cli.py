"""Command line entry point: ``trajsc <command> ...``.

JSON goes to stdout, messages to stderr.  Exit codes: 0 success (and
"matched" for ``verify``), 1 "not matched", 2 bad input or config,
3 degenerate trajectory.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

from . import bench as benchmod
from .clustering import centroid_prototype, dbscan, largest_cluster
from .criteria import compute_hierarchy_clusterings, parse_criterion, required_groups
from .distance import DistanceCache, IcpConfig, distance, pairwise_matrix
from .errors import DegenerateTrajectory, TooFewSamples
from .groups import WarpGroup
from .io import ParseError, dump_json, ingest_external, load_json, read_collection, read_trajectory, write_collection
from .pipeline import DEFAULT_TAU, ShapeFamily, recover, verify
from .render import render_clusters, render_trajectories, write_svg

EXIT_OK, EXIT_NO_MATCH, EXIT_INPUT, EXIT_DEGENERATE = 0, 1, 2, 3


class UsageError(Exception):
    pass


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--tau", type=float, default=None, help=f"distance threshold in px (default {DEFAULT_TAU})")
    p.add_argument("--seed", type=int, default=None, help="seed for correspondence draws and sampling")
    p.add_argument("--n-resample", type=int, default=100, help="points per trajectory for alignment")
    p.add_argument("--group", default=None, help="transformation group, e.g. rigid, simref, affine")
    p.add_argument("--criterion", default=None, help="majority, hierarchical, hierarchical_multi, most, least or oracle:<group>")
    p.add_argument("--table", action="store_true", help="print a human-readable table instead of JSON")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="trajsc", description="Self-consistency toolkit for 2D trajectories.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("distance", parents=[common], help="warp-invariant distance between two trajectories")
    p.add_argument("first")
    p.add_argument("second")

    p = sub.add_parser("cluster", parents=[common], help="cluster a collection under a group or a criterion")
    p.add_argument("collection")
    p.add_argument("--render", metavar="SVG", help="write one panel per cluster")
    p.add_argument("--family-out", metavar="JSON", help="write the recovered family (criterion mode)")

    p = sub.add_parser("verify", parents=[common], help="check a query against a family (exit 0 match, 1 no match)")
    p.add_argument("family")
    p.add_argument("query")

    p = sub.add_parser("render", parents=[common], help="render trajectories to SVG")
    p.add_argument("collection")
    p.add_argument("-o", "--out", required=True)
    p.add_argument("--resample", type=int, default=None, metavar="N", help="resample each trajectory to N points first")
    p.add_argument("--cols", type=int, default=None)

    p = sub.add_parser("ingest", parents=[common], help="validate trajectories from an external sampler")
    p.add_argument("directory")
    p.add_argument("--manifest", default=None)
    p.add_argument("-o", "--out", default=None, help="write one <prompt>.traj.json per prompt here")

    p = sub.add_parser("bench", help="synthetic benchmark")
    bsub = p.add_subparsers(dest="bench_command", required=True)
    g = bsub.add_parser("generate", parents=[common], help="write a benchmark directory")
    g.add_argument("--config", default=None, help="flat JSON config")
    g.add_argument("-o", "--out", required=True)
    e = bsub.add_parser("eval", parents=[common], help="evaluate criteria and write report, table and figures")
    e.add_argument("--config", default=None)
    e.add_argument("--bench", default=None, help="benchmark directory (generated in memory when omitted)")
    e.add_argument("-o", "--out", required=True)
    e.add_argument("--tau-sweep", nargs="*", type=float, default=None, metavar="TAU",
                   help="evaluate at several taus (default 0.25 0.5 1 2 4 8)")
    e.add_argument("--no-figures", action="store_true")
    return parser


def _tau(args) -> float:
    tau = DEFAULT_TAU if args.tau is None else args.tau
    if not tau > 0:
        raise UsageError("--tau must be positive")
    return tau


def _icp(args, tau: float) -> IcpConfig:
    try:
        return IcpConfig(n_resample=args.n_resample, rng_seed=args.seed or 0, early_stop_tau=tau)
    except ValueError as e:
        raise UsageError(str(e)) from None


def _group(name) -> WarpGroup:
    try:
        return WarpGroup.parse(name)
    except ValueError as e:
        raise UsageError(str(e)) from None


def _emit(obj, args, table=None) -> None:
    if args.table and table is not None:
        sys.stdout.write(table)
    else:
        sys.stdout.write(json.dumps(obj, indent=2) + "\n")


def cmd_distance(args) -> int:
    a, b = read_trajectory(args.first), read_trajectory(args.second)
    group = _group(args.group or "rigid")
    tau = _tau(args)
    res = distance(a, b, group, _icp(args, tau))
    out = {"first": a.id, "second": b.id, **res.to_dict()}
    _emit(out, args, f"{a.id}\t{b.id}\t{group.value}\t{res.distance:.4f}\n")
    return EXIT_OK


def cmd_cluster(args) -> int:
    ts = read_collection(args.collection)
    if len(ts) < 2:
        raise TooFewSamples(f"need at least 2 trajectories, got {len(ts)}")
    if args.group and args.criterion:
        raise UsageError("give either --group or --criterion")
    tau = _tau(args)
    icp = _icp(args, tau)
    ids = [t.id for t in ts]
    if args.group:
        group = _group(args.group)
        D = pairwise_matrix(ts, group, icp, DistanceCache())
        lab = dbscan(D, tau)
        chosen = [lab.largest_id]
        out = {"group": group.value, "tau": tau, "n_clusters": len(lab.cluster_sizes), **lab.to_dict(),
               "matrix": D.to_dict()}
        labels = lab.labels
        rows = [f"{i}\t{c}\n" for i, c in zip(ids, lab.labels)]
        if args.family_out:
            members = largest_cluster(lab)
            proto = ts[centroid_prototype(members, D)]
            dump_json(ShapeFamily(proto, group, tuple(ids[i] for i in sorted(members)), tau).to_dict(), args.family_out)
    else:
        criterion = args.criterion or "hierarchical"
        try:
            parse_criterion(criterion)
        except ValueError as e:
            raise UsageError(str(e)) from None
        hc = compute_hierarchy_clusterings(ts, tau, icp, DistanceCache(), required_groups(criterion))
        rec = recover(ts, criterion, tau, icp, clusterings=hc)
        outcome = rec.outcome
        lab = hc.labelings[outcome.chosen_group]
        labels = lab.labels
        chosen = sorted({lab.labels[min(c)] for c in outcome.chosen_clusters})
        out = {
            "tau": tau,
            **outcome.to_dict(ids),
            "labels": dict(zip(ids, map(int, lab.labels))),
            "families": [f.to_dict() for f in rec.families],
        }
        rows = [f"{e.group.value}\t{e.largest_size}\t{e.decision}\n" for e in outcome.per_group_trace]
        rows.append(f"chosen\t{outcome.chosen_group.value}\n")
        if args.family_out:
            fams = [f.to_dict() for f in rec.families]
            dump_json(fams[0] if len(fams) == 1 else fams, args.family_out)
    if args.render:
        write_svg(render_clusters(ts, labels, chosen), args.render)
    _emit(out, args, "".join(rows))
    return EXIT_OK


def _read_family(path) -> ShapeFamily:
    data = load_json(path)
    try:
        return ShapeFamily.from_dict(data)
    except (KeyError, TypeError, ValueError) as e:
        raise ParseError(f"{path}: not a family ({e})") from None


def cmd_verify(args) -> int:
    fam = _read_family(args.family)
    query = read_trajectory(args.query)
    if args.tau is not None:
        fam = replace(fam, tau=_tau(args))
    if args.group:
        fam = replace(fam, group=_group(args.group))
    verdict = verify(fam, query, _icp(args, fam.tau))
    _emit({"query": query.id, **verdict.to_dict()}, args,
          f"{query.id}\t{'match' if verdict.matched else 'no match'}\t{verdict.distance:.4f}\n")
    return EXIT_OK if verdict.matched else EXIT_NO_MATCH


def cmd_render(args) -> int:
    ts = read_collection(args.collection)
    if args.resample is not None and args.resample < 2:
        raise UsageError("--resample must be >= 2")
    write_svg(render_trajectories(ts, cols=args.cols, resample=args.resample), args.out)
    _emit({"out": args.out, "trajectories": len(ts)}, args)
    return EXIT_OK


def cmd_ingest(args) -> int:
    res = ingest_external(args.directory, args.manifest)
    for d in res.diagnostics:
        print(d, file=sys.stderr)
    if res.files_ok == 0:
        print("no file validated", file=sys.stderr)
        return EXIT_INPUT
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        for prompt, ts in res.collections.items():
            write_collection(ts, out / f"{prompt}.traj.json")
    summary = {
        "files_ok": res.files_ok,
        "diagnostics": res.diagnostics,
        "collections": {k: [t.id for t in v] for k, v in res.collections.items()},
    }
    _emit(summary, args, "".join(f"{k}\t{len(v)}\n" for k, v in res.collections.items()))
    return EXIT_OK


def _bench_config(args) -> benchmod.BenchConfig:
    data = load_json(args.config) if args.config else {}
    if not isinstance(data, dict):
        raise benchmod.ConfigError("config must be a JSON object")
    cfg = benchmod.BenchConfig.from_dict(data)
    overrides = {}
    if args.tau is not None:
        overrides["tau"] = args.tau
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.n_resample != 100:
        overrides["n_resample"] = args.n_resample
    if args.criterion:
        overrides["criteria"] = tuple(c.strip() for c in args.criterion.split(","))
    if getattr(args, "tau_sweep", None) is not None:
        overrides["tau_sweep"] = tuple(args.tau_sweep) or benchmod.TAU_SWEEP
    return replace(cfg, **overrides) if overrides else cfg


def cmd_bench(args) -> int:
    cfg = _bench_config(args)
    if args.bench_command == "generate":
        tasks = benchmod.generate(cfg)
        root = benchmod.write_benchmark(tasks, cfg, args.out)
        _emit({"out": str(root), "tasks": len(tasks), "queries": sum(len(t.queries) for t in tasks)}, args)
        return EXIT_OK
    tasks = benchmod.read_benchmark(args.bench) if args.bench else benchmod.generate(cfg)
    report = benchmod.evaluate(tasks, cfg)
    paths = benchmod.write_report(report, args.out, figures=not args.no_figures)
    for f in report["failures"]:
        print(f"failed: {f['task']}: {f['error']}", file=sys.stderr)
    _emit({"rows": report["rows"], "files": [str(p) for p in paths]}, args, benchmod.format_table(report["rows"]))
    return EXIT_OK


COMMANDS = {
    "distance": cmd_distance,
    "cluster": cmd_cluster,
    "verify": cmd_verify,
    "render": cmd_render,
    "ingest": cmd_ingest,
    "bench": cmd_bench,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_INPUT if e.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return COMMANDS[args.command](args)
    except DegenerateTrajectory as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_DEGENERATE
    except (ParseError, UsageError, TooFewSamples) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
