"""Command-line entry point: ``fwm-homodyne {simulate,compare,criteria,validate}``.

Errors are reported on stderr as one line ``error: <kind>: <message>`` and a
nonzero exit status (2 for bad input, 3 for resource limits, 1 for failed
validation checks).
"""

from __future__ import annotations

import argparse
import sys

from .criteria import ALL
from .errors import ContractViolation, DegenerateNormalizationError, ResourceError
from .sweep import (
    FORMATS,
    ConfigError,
    RunConfig,
    compare_sizes,
    evaluate_table,
    fock_size_configs,
    parse_config_text,
    read_table,
    render_csv,
    render_json,
    run_sweep,
    write_table,
)

EXIT_BAD_INPUT = 2
EXIT_RESOURCE = 3
EXIT_CHECK_FAILED = 1

# flag name -> RunConfig key
_SWEEP_FLAGS = {
    "kind": "kind", "mean": "mean", "chi": "chi", "t_min": "t_min", "t_max": "t_max",
    "points": "points", "criteria": "criteria", "truncation": "truncation",
    "block_cutoff": "block_cutoff", "lo_floor": "lo_floor",
    "max_workspace_bytes": "max_workspace_bytes", "workers": "workers",
    "output": "output", "format": "format",
}


def _add_sweep_flags(p: argparse.ArgumentParser):
    p.add_argument("--config", help="plain-text key = value file; flags override its entries")
    p.add_argument("--kind", help="fock, poissonian, thermal or coherent")
    p.add_argument("--mean", help="N for fock, n-bar otherwise")
    p.add_argument("--chi", help="coupling (tables report chi*t)")
    p.add_argument("--t-min", dest="t_min")
    p.add_argument("--t-max", dest="t_max")
    p.add_argument("--points")
    p.add_argument("--criteria", help=f"comma-separated subset of: {','.join(ALL)}")
    p.add_argument("--truncation", help="tail mass dropped from the number distribution")
    p.add_argument("--block-cutoff", dest="block_cutoff", help="relative weight below which blocks are skipped")
    p.add_argument("--lo-floor", dest="lo_floor", help="LO population treated as degenerate")
    p.add_argument("--max-workspace-bytes", dest="max_workspace_bytes")
    p.add_argument("--workers")
    p.add_argument("--output", "-o", help="output path (default: stdout)")
    p.add_argument("--format", choices=FORMATS)


def _config_from_args(args) -> RunConfig:
    values = {}
    if args.config:
        with open(args.config) as fh:
            values.update(parse_config_text(fh.read()))
    for flag, key in _SWEEP_FLAGS.items():
        v = getattr(args, flag, None)
        if v is not None:
            values[key] = v
    return RunConfig.from_mapping(values)


def _emit(table, output, fmt):
    if output:
        write_table(table, output, fmt)
    else:
        sys.stdout.write(render_csv(table) if fmt == "csv" else render_json(table))


def cmd_simulate(args) -> int:
    cfg = _config_from_args(args)
    table = run_sweep(RunConfig(**{**cfg.__dict__, "output": None}))
    _emit(table, cfg.output, cfg.format)
    return 0


def cmd_compare(args) -> int:
    try:
        sizes = [int(s) for s in args.sizes.split(",") if s.strip()]
    except ValueError:
        raise ConfigError("sizes", f"cannot parse {args.sizes!r}") from None
    overrides = {}
    if args.truncation is not None:
        overrides["truncation"] = float(args.truncation)
    configs = fock_size_configs(sizes, args.scaled_min, args.scaled_max, args.points, **overrides)
    _emit(compare_sizes(configs), args.output, args.format)
    return 0


def cmd_criteria(args) -> int:
    names = tuple(c.strip() for c in args.criteria.split(",")) if args.criteria else ALL
    unknown = [c for c in names if c not in ALL]
    if unknown:
        raise ConfigError("criteria", f"unknown criteria {unknown}")
    _emit(evaluate_table(read_table(args.input), names), args.output, args.format)
    return 0


def cmd_validate(args) -> int:
    from .validation import run_all

    results = run_all()
    for r in results:
        print(r.line())
    failed = [r for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} checks passed")
    return EXIT_CHECK_FAILED if failed else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fwm-homodyne", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="one sweep over chi*t")
    _add_sweep_flags(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("compare", help="rescaled criteria of several Fock sizes against N chi t")
    p.add_argument("--sizes", default="10,100,1000")
    p.add_argument("--scaled-min", dest="scaled_min", type=float, default=0.0)
    p.add_argument("--scaled-max", dest="scaled_max", type=float, default=3.0)
    p.add_argument("--points", type=int, default=400)
    p.add_argument("--truncation")
    p.add_argument("--output", "-o")
    p.add_argument("--format", choices=FORMATS, default="csv")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("criteria", help="evaluate criteria on a moment CSV")
    p.add_argument("input", help="CSV with one column per QuadratureMoments field")
    p.add_argument("--criteria")
    p.add_argument("--output", "-o")
    p.add_argument("--format", choices=FORMATS, default="csv")
    p.set_defaults(func=cmd_criteria)

    p = sub.add_parser("validate", help="oracle and invariant checks at N <= 20")
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: config: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT
    except ResourceError as exc:
        print(f"error: resource: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except DegenerateNormalizationError as exc:
        print(f"error: degenerate: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT
    except (ContractViolation, OSError) as exc:
        print(f"error: input: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT


if __name__ == "__main__":
    sys.exit(main())
