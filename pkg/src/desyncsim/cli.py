"""Command line entry point.

    desyncsim run --preset single-hop --experiment.seeds 5
    desyncsim run my.ini --mdwarf.c1 40 --out results/try1
    desyncsim preset --list
    desyncsim report results/single-hop
    desyncsim oracle dumbbell:20

Exit codes: 0 success, 1 configuration error, 2 I/O error.
Output goes under $DESYNC_OUTPUT_ROOT (default ./results) unless --out is given.
"""

from __future__ import annotations

import argparse
import logging
import sys

from . import config, harness
from .render import render
from .topology import TopologyError, from_spec, slot_bound

EXIT_OK, EXIT_CONFIG, EXIT_IO = 0, 1, 2

log = logging.getLogger("desyncsim")


class _Parser(argparse.ArgumentParser):
    # usage mistakes are configuration errors, not I/O errors
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _parser() -> argparse.ArgumentParser:
    p = _Parser(prog="desyncsim", description="Multi-hop desynchronization simulator")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="cmd", required=True)

    r = sub.add_parser("run", help="run an experiment file or preset",
                       description="Extra --section.key VALUE flags override config values.")
    r.add_argument("spec", nargs="?", help="INI experiment file")
    r.add_argument("--preset", help="start from a named preset")
    r.add_argument("--out", help="output directory (default $DESYNC_OUTPUT_ROOT/<name>)")
    r.add_argument("--workers", type=int, default=1)
    r.add_argument("--no-charts", action="store_true")
    r.add_argument("--max-charts", type=int, default=None, help="cap on per-run phase charts")

    ps = sub.add_parser("preset", help="list or show presets")
    ps.add_argument("--list", action="store_true")
    ps.add_argument("name", nargs="?")

    rp = sub.add_parser("report", help="recompute metrics and charts from phases.csv")
    rp.add_argument("directory")
    rp.add_argument("--no-charts", action="store_true")
    rp.add_argument("--max-charts", type=int, default=None)

    o = sub.add_parser("oracle", help="print the minimum slot count for a topology")
    o.add_argument("topology", help="e.g. star:6, dumbbell:20, mesh10, file:edges.txt")
    return p


def _describe(spec: harness.ExperimentSpec) -> str:
    return (
        f"{spec.name}: protocols={','.join(spec.protocols)} topologies={','.join(spec.topologies)} "
        f"T={','.join(f'{t:g}' for t in spec.periods_ms)} betas={','.join(map(str, spec.betas))} "
        f"periods={spec.periods} seeds={spec.seeds} base_seed={spec.base_seed}"
    )


def _print_summary(bundle: harness.ResultsBundle) -> None:
    for row in bundle.summary:
        conv = "-" if row["converged_at"] is None else f"{row['converged_at']:.1f}"
        print(
            f"{row['protocol']:<11} {row['topology']:<12} T={row['T']:<6g} beta={row['beta']:<3} "
            f"nrmse={row['nrmse']:.4f} converged={row['converged_frac']:.2f}@{conv} "
            f"slots={row['slots']:.2f}/{row['optimal_slots']} fair_std={row['fairness_stddev']:.4f}"
        )


def _cmd_run(args, extra) -> int:
    if not args.spec and not args.preset:
        raise harness.HarnessError("give an experiment file or --preset")
    values = config.merge(config.load_values(args.spec), config.parse_overrides(extra))
    spec = config.build_spec(values, args.preset)
    log.info("running %s (%d runs)", _describe(spec), len(spec.jobs()))
    bundle = harness.run_experiment(spec, args.out, workers=max(1, args.workers))
    if not args.no_charts:
        render(bundle, max_runs=args.max_charts)
    _print_summary(bundle)
    print(f"results in {bundle.directory}")
    return EXIT_OK


def _cmd_preset(args) -> int:
    if args.list or not args.name:
        for name in harness.PRESETS:
            print(_describe(harness.preset(name)))
        return EXIT_OK
    print(_describe(harness.preset(args.name)))
    return EXIT_OK


def _cmd_report(args) -> int:
    bundle = harness.report(args.directory)
    if not args.no_charts:
        render(bundle, max_runs=args.max_charts)
    _print_summary(bundle)
    return EXIT_OK


def _cmd_oracle(args) -> int:
    topo = from_spec(args.topology)
    bound = slot_bound(topo)
    tag = "" if bound.exact else " (upper bound; exact search skipped)"
    print(f"{topo.name}: {bound.slots}{tag}")
    return EXIT_OK


def split_overrides(argv: list[str]) -> tuple[list[str], list[str]]:
    """Separate ``--section.key [value]`` flags from the regular arguments."""
    rest, extra = [], []
    i = 0
    while i < len(argv):
        a = argv[i]
        if a.startswith("--") and "." in a.partition("=")[0]:
            extra.append(a)
            if "=" not in a and i + 1 < len(argv):
                extra.append(argv[i + 1])
                i += 1
        else:
            rest.append(a)
        i += 1
    return rest, extra


def main(argv: list[str] | None = None) -> int:
    parser = _parser()
    rest, extra = split_overrides(list(sys.argv[1:] if argv is None else argv))
    args = parser.parse_args(rest)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if extra and args.cmd != "run":
        parser.error(f"unrecognized arguments: {' '.join(extra)}")
    try:
        if args.cmd == "run":
            return _cmd_run(args, extra)
        if args.cmd == "preset":
            return _cmd_preset(args)
        if args.cmd == "report":
            return _cmd_report(args)
        return _cmd_oracle(args)
    except (harness.HarnessError, TopologyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
