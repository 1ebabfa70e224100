"""``skytier`` command line: run, sweep and compare.

Exit codes: 0 on success, 1 for configuration or usage errors, 2 when a
run fails (for example an infeasible separation repair).
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import harness, plotting
from .scenario import REFERENCE_CONFIG, ConfigError, ScenarioConfig

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2

log = logging.getLogger("skytier")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _load(path) -> ScenarioConfig:
    return REFERENCE_CONFIG if path is None else ScenarioConfig.load(path)


def _list(text: str, kind=str) -> list:
    items = [t.strip() for t in text.split(",") if t.strip()]
    if not items:
        raise ConfigError("empty list")
    try:
        return [kind(t) for t in items]
    except ValueError as exc:
        raise ConfigError(f"bad list item in {text!r}: {exc}") from exc


def _number(text: str):
    v = float(text)
    return int(v) if v.is_integer() else v


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="skytier", description="Tiered aerial base-station placement experiments.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp):
        sp.add_argument("--config", help="flat JSON config; defaults to the built-in reference scenario")
        sp.add_argument("--out", required=True, type=Path, help="output directory")
        sp.add_argument("--plot", action="store_true", help="also write SVG charts")

    r = sub.add_parser("run", help="one algorithm on one seed")
    common(r)
    r.add_argument("--algo", choices=harness.ALGORITHMS, default="nbrl")
    r.add_argument("--seed", type=int, default=0)

    s = sub.add_parser("sweep", help="vary one axis over several seeds and algorithms")
    common(s)
    s.add_argument("--axis", choices=harness.AXES, required=True)
    s.add_argument("--values", required=True, help="comma-separated axis values")
    s.add_argument("--algos", default="nbrl", help="comma-separated algorithms")
    s.add_argument("--seeds", type=int, default=20)
    s.add_argument("--jobs", type=int, default=1)

    c = sub.add_parser("compare", help="every algorithm on the same seeds")
    common(c)
    c.add_argument("--seeds", type=int, default=20)
    c.add_argument("--jobs", type=int, default=1)
    return p


def _run(args) -> None:
    cfg = _load(args.config)
    result = harness.run_detailed(cfg, args.algo, args.seed)
    harness.write_run(result, args.out, cfg)
    if args.plot:
        plotting.plot_runs(args.out, [result])
    f = result.series.final
    print(f"{args.algo} seed {args.seed}: iterations={result.series.iterations_to_converge} "
          f"converged={result.series.converged} likelihood={f.likelihood:.4f} accuracy={f.accuracy:.4f}")


def _sweep(args) -> None:
    cfg = _load(args.config)
    values = _list(args.values, _number)
    algos = _list(args.algos)
    res = harness.sweep(cfg, args.axis, values, algos, args.seeds, out=args.out, jobs=args.jobs)
    if args.plot:
        plotting.plot_aggregates(args.out, res.aggregates(), args.axis)
    for a in res.aggregates():
        print(f"{args.axis}={a['value']} {a['algo']}: runs={a['runs']} accuracy={a['accuracy']['mean']:.4f} "
              f"median_iterations={a['iterations_to_converge']['median']}")


def _compare(args) -> None:
    cfg = _load(args.config)
    cmp = harness.compare(cfg, args.seeds, out=args.out, jobs=args.jobs)
    if args.plot:
        plotting.plot_runs(args.out, cmp.sweep.runs)
    for algo, med in cmp.summary["median_iterations"].items():
        print(f"{algo}: median iterations {med}")
    print(f"{cmp.summary['lead']} strictly fastest on {cmp.summary['lead_wins']}/{args.seeds} seeds")


COMMANDS = {"run": _run, "sweep": _sweep, "compare": _compare}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:
        log.debug("run failed", exc_info=True)
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
