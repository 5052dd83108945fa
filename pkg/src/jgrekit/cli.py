"""Command-line entry point: ``jgrekit <subcommand> [flags]``.

Exit codes: 0 clean, 1 something to report (findings, verified leaks,
diagnostics, a reboot), 2 usage, parse or I/O errors.  Logs go to stderr so
json/csv on stdout stays machine-parseable.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path
from typing import Optional, Sequence

from .detector import analyze
from .ir import bundled_corpus_dir, load_corpus, validate
from .ir.config import load_config
from .ir.errors import CorpusError
from .report import UnknownFormat, render_report
from .sim import (
    REQUEST_GRID,
    AttackScript,
    ParamRules,
    SimConfig,
    Simulator,
    default_attacks,
    default_policies,
    generate_poc,
    outcome_matrix,
    parse_policy,
    render_matrix,
    script_from_dict,
    verify,
)
from .sim.bench import bench_grid, grid_csv, overhead
from .sim.matrix import DEFAULT_IFACE
from .sim.model import STRATEGIES

log = logging.getLogger("jgrekit")

EXIT_OK, EXIT_REPORT, EXIT_ERROR = 0, 1, 2


class UsageError(Exception):
    pass


def _depth(text: str) -> Optional[int]:
    if text.lower() in ("inf", "none", "unbounded"):
        return None
    n = int(text)
    if n < 1:
        raise argparse.ArgumentTypeError("max depth must be >= 1 or 'inf'")
    return n


def _positive(text: str) -> int:
    n = int(text)
    if n < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return n


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--corpus", nargs="+", metavar="PATH", help="corpus files or directories (default: bundled corpus)")
    common.add_argument("--edges", type=Path, help="implicit-edge file")
    common.add_argument("--sinks", type=Path, help="collection-sink file")
    common.add_argument("--greylist", type=Path, help="greylist file")
    common.add_argument("--max-depth", type=_depth, default=-1, metavar="N", help="call-graph depth bound, or 'inf'")
    common.add_argument("--format", default=None, help="json, table or csv")
    common.add_argument("--out", type=Path, help="write the main output here instead of stdout")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("-v", "--verbose", action="store_true")

    sim = argparse.ArgumentParser(add_help=False)
    sim.add_argument("--policy", default="none", help="none | per-interface:I=N,... | binder-proxy:N[:buggy] | purger[:N]")
    sim.add_argument("--capacity", type=_positive, default=None, help="JGR table capacity")

    p = argparse.ArgumentParser(prog="jgrekit", description="Global-reference leak detection and exhaustion simulation.")
    sub = p.add_subparsers(dest="cmd", required=True)
    sub.add_parser("analyze", parents=[common], help="report leak findings")
    sub.add_parser("validate", parents=[common], help="list corpus diagnostics")

    s = sub.add_parser("simulate", parents=[common, sim], help="run one attack script and emit its trace")
    s.add_argument("--scenario", type=Path, help="JSON file {config, script}")
    s.add_argument("--attack", choices=sorted(STRATEGIES), default="Simple")
    s.add_argument("--iface", default=DEFAULT_IFACE, help="service.method to attack")
    s.add_argument("--calls", type=_positive, default=None, help="call budget (default: 2 x capacity)")
    s.add_argument("--uid", type=int, default=10001)

    v = sub.add_parser("verify", parents=[common, sim], help="replay a PoC per finding")
    v.add_argument("--attack", choices=sorted(STRATEGIES), default="Simple")

    m = sub.add_parser("matrix", parents=[common], help="policy x attack outcome table")
    m.add_argument("--capacity", type=_positive, default=100)
    m.add_argument("--threshold", type=_positive, default=None, help="defense threshold (default: capacity / 2)")
    m.add_argument("--iface", default=DEFAULT_IFACE)

    b = sub.add_parser("bench", parents=[common], help="creation-cost benchmark as CSV")
    b.add_argument("--grid", default=",".join(str(n) for n in REQUEST_GRID), help="comma-separated request counts")
    b.add_argument("--trials", type=_positive, default=5)
    return p


# -- helpers -----------------------------------------------------------------


def _fmt(args, default: str, allowed: Sequence[str]) -> str:
    fmt = args.format or default
    if fmt not in allowed:
        raise UsageError(f"--format must be one of {', '.join(allowed)} for {args.cmd}")
    return fmt


def _emit(args, text: str) -> None:
    if not text.endswith("\n"):
        text += "\n"
    if args.out:
        args.out.write_text(text, encoding="utf-8")
        log.info("wrote %s", args.out)
    else:
        sys.stdout.write(text)


def _corpus_paths(args) -> list:
    return list(args.corpus) if args.corpus else [bundled_corpus_dir()]


def _load_db(args, required: bool = True):
    if not args.corpus and not required:
        return None
    for p in _corpus_paths(args):
        if not Path(p).exists():
            raise UsageError(f"corpus path not found: {p}")
    cfg = load_config(edges=args.edges, sinks=args.sinks, greylist=args.greylist, max_depth=args.max_depth)
    t0 = time.perf_counter()
    db = load_corpus(_corpus_paths(args), cfg)
    log.info("loaded %d classes, %d native fns in %.3fs", len(db.managed_classes), len(db.native_fns), time.perf_counter() - t0)
    return db


def _sim_config(args, default_capacity: int = 50000) -> SimConfig:
    return SimConfig(
        jgr_capacity=args.capacity or default_capacity,
        policy=parse_policy(args.policy),
        rng_seed=args.seed,
    )


# -- subcommands -------------------------------------------------------------


def cmd_analyze(args) -> int:
    fmt = _fmt(args, "json", ("json", "table", "csv"))
    db = _load_db(args)
    a = analyze(db)
    for d in a.diagnostics:
        log.warning("%s", d)
    meta = None
    if fmt == "json":
        meta = {
            "corpus": [str(p) for p in _corpus_paths(args)],
            "max_depth": db.config.max_depth,
            "entries": len(a.entries),
            "diagnostics": [str(d) for d in a.diagnostics],
        }
    _emit(args, render_report(a.findings, fmt, meta))
    return EXIT_REPORT if a.findings else EXIT_OK


def cmd_validate(args) -> int:
    db = _load_db(args)
    diags = validate(db)
    lines = [str(d) for d in diags] + [f"{len(diags)} diagnostics"]
    _emit(args, "\n".join(lines) + "\n")
    return EXIT_REPORT if diags else EXIT_OK


def _scenario(args, db) -> tuple[SimConfig, AttackScript]:
    if args.scenario:
        data = json.loads(args.scenario.read_text(encoding="utf-8"))
        if not isinstance(data, dict) or "script" not in data:
            raise UsageError("scenario must be a JSON object with 'config' and 'script'")
        return SimConfig.from_dict(data.get("config", {})), script_from_dict(data["script"])
    config = _sim_config(args, default_capacity=100 if db is None else 50000)
    budget = args.calls or 2 * config.jgr_capacity
    if db is None:
        return config, AttackScript(STRATEGIES[args.attack](args.iface, budget), args.uid)
    sim = Simulator(config, db)
    entry = sim.entries.get(args.iface)
    if entry is None:
        raise UsageError(f"unknown interface {args.iface!r}")
    script = generate_poc(db, entry, ParamRules(seed=args.seed), args.attack, budget, sim.interp.resolver)
    return config, AttackScript(script.strategy, args.uid, script.params)


def cmd_simulate(args) -> int:
    db = _load_db(args, required=False)
    config, script = _scenario(args, db)
    sim = Simulator(config, db)
    outcome = sim.run_script(script)
    summary = json.dumps({"outcome": outcome.to_dict(), "script": script.to_dict(), "config": config.to_dict()}, sort_keys=True)
    trace = sim.trace.to_jsonl()
    if args.out:
        args.out.write_text(trace, encoding="utf-8")
        log.info("wrote %d events to %s", len(sim.trace.events), args.out)
        sys.stdout.write(summary + "\n")
    else:
        sys.stdout.write(trace + summary + "\n")
    log.info("%s: %s", outcome.kind, outcome.reason)
    return EXIT_REPORT if outcome.kind == "Reboot" else EXIT_OK


def cmd_verify(args) -> int:
    fmt = _fmt(args, "json", ("json", "table"))
    db = _load_db(args)
    a = analyze(db)
    config = _sim_config(args, default_capacity=200)
    results = verify(db, a.findings, config, ParamRules(seed=args.seed), args.attack)
    if fmt == "json":
        text = json.dumps({"version": 1, "results": [v.to_dict() for v in results]}, indent=2) + "\n"
    else:
        rows = [("Service", "Interface", "Verified", "Outcome")]
        rows += [
            (v.finding.entry.service_name, v.finding.entry.method, "yes" if v.verified else "no", v.outcome.kind if v.outcome else "-")
            for v in results
        ]
        widths = [max(len(r[i]) for r in rows) for i in range(4)]
        lines = ["  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() for r in rows]
        n = sum(v.verified for v in results)
        text = "\n".join(lines) + f"\n{n}/{len(results)} verified\n"
    _emit(args, text)
    return EXIT_REPORT if any(v.verified for v in results) else EXIT_OK


def cmd_matrix(args) -> int:
    fmt = _fmt(args, "table", ("json", "table", "csv"))
    db = _load_db(args, required=False)
    threshold = args.threshold or max(1, args.capacity // 2)
    params: tuple = ()
    if db is not None:
        sim = Simulator(SimConfig(jgr_capacity=args.capacity), db)
        entry = sim.entries.get(args.iface)
        if entry is None:
            raise UsageError(f"unknown interface {args.iface!r}")
        params = generate_poc(db, entry, ParamRules(seed=args.seed), resolver=sim.interp.resolver).params
    m = outcome_matrix(
        db, default_policies(threshold, args.iface), default_attacks(args.iface, args.capacity), args.capacity, params=params
    )
    _emit(args, render_matrix(m, fmt))
    return EXIT_OK


def cmd_bench(args) -> int:
    _fmt(args, "csv", ("csv",))
    try:
        grid = sorted({int(x) for x in args.grid.split(",") if x.strip()})
    except ValueError:
        raise UsageError(f"bad --grid {args.grid!r}") from None
    if not grid or grid[0] < 1:
        raise UsageError("--grid needs positive request counts")
    results = bench_grid(grid, args.trials)
    for n in grid:
        log.info("n=%d overhead %+.1f%%", n, 100 * overhead(results, n))
    _emit(args, grid_csv(results))
    return EXIT_OK


COMMANDS = {
    "analyze": cmd_analyze,
    "validate": cmd_validate,
    "simulate": cmd_simulate,
    "verify": cmd_verify,
    "matrix": cmd_matrix,
    "bench": cmd_bench,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_ERROR if e.code else EXIT_OK
    logging.basicConfig(
        stream=sys.stderr, level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s", force=True
    )
    try:
        return COMMANDS[args.cmd](args)
    except (UsageError, UnknownFormat) as e:
        print(f"jgrekit: {e}", file=sys.stderr)
    except CorpusError as e:
        print(f"jgrekit: {e}", file=sys.stderr)
    except (OSError, ValueError, KeyError) as e:
        print(f"jgrekit: {type(e).__name__}: {e}", file=sys.stderr)
    return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
