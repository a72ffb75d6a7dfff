"""Command-line experiment runner.

Subcommands:
  run     execute an experiment spec, write results.csv/results.json
  figure  aggregate a results.json into a plot-ready CSV
  codec   encode/decode sketchlet hex payloads for debugging

Exit code 0 on success; 2 for usage, spec, or input errors.
"""

from __future__ import annotations

import argparse
import sys

from ._backend import BACKEND
from .experiments import (
    FIGURES,
    SEED_ENV_VAR,
    ExperimentSpec,
    SpecError,
    emit_figure_data,
    load_records,
    run_experiment,
    write_figure_csv,
)
from .sketchlet import ColumnSketchlet, ScatterSketchlet, WireFormat, WireFormatError


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sketchrelay",
        description="Sketch-over-telemetry measurement simulator "
        f"(active kernel backend: {BACKEND})",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run an experiment spec")
    p_run.add_argument("spec", help="path to a JSON experiment spec")
    p_run.add_argument(
        "-o", "--output-dir", default="results",
        help="directory for results.csv/results.json (default: results)",
    )

    p_fig = sub.add_parser("figure", help="emit plot-ready CSV from results")
    p_fig.add_argument("results", help="path to a results.json")
    p_fig.add_argument("figure", choices=sorted(FIGURES), help="figure id")
    p_fig.add_argument("-o", "--output", default="-",
                       help="output CSV path, '-' for stdout (default)")

    p_codec = sub.add_parser("codec", help="sketchlet wire codec debugging")
    p_codec.add_argument("mode", choices=("encode", "decode"))
    p_codec.add_argument("--d", type=int, required=True, help="sketch rows")
    p_codec.add_argument("--w", type=int, required=True, help="sketch columns")
    p_codec.add_argument("--c", type=int, required=True, help="bucket bits")
    p_codec.add_argument("--r", type=int, default=0, help="offset bits (0 = column)")
    p_codec.add_argument("--addr", type=int, help="column address (encode)")
    p_codec.add_argument("--offsets", help="comma-separated offsets (encode, r > 0)")
    p_codec.add_argument("--values", help="comma-separated bucket values (encode)")
    p_codec.add_argument("--hex", dest="hexdata", help="payload hex (decode)")
    return parser


def _ints(text: str) -> list[int]:
    return [int(part) for part in text.split(",") if part.strip() != ""]


def _cmd_run(args) -> int:
    try:
        spec = ExperimentSpec.from_json(args.spec)
    except SpecError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError) as exc:
        print(f"error: cannot read spec: {exc}", file=sys.stderr)
        return 2
    csv_path, json_path = run_experiment(spec, args.output_dir)
    print(f"wrote {csv_path}")
    print(f"wrote {json_path}")
    return 0


def _cmd_figure(args) -> int:
    try:
        records = load_records(args.results)
        rows = emit_figure_data(records, args.figure)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if args.output == "-":
        print("axis,value,policy,metric,mean,stderr")
        for row in rows:
            print(
                f"{row['axis']},{row['value']},{row['policy']},"
                f"{row['metric']},{row['mean']!r},{row['stderr']!r}"
            )
    else:
        write_figure_csv(rows, args.output)
        print(f"wrote {args.output}")
    return 0


def _cmd_codec(args) -> int:
    try:
        wire = WireFormat(args.d, args.w, args.c, args.r)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if args.mode == "encode":
        if args.addr is None or args.values is None:
            print("error: encode requires --addr and --values", file=sys.stderr)
            return 2
        values = tuple(_ints(args.values))
        try:
            if args.r == 0:
                sk = ColumnSketchlet(args.addr, values)
            else:
                if args.offsets is None:
                    print("error: encode with r > 0 requires --offsets", file=sys.stderr)
                    return 2
                sk = ScatterSketchlet(args.addr, tuple(_ints(args.offsets)), values)
            payload = wire.encode(sk)
        except ValueError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 2
        print(payload.hex())
        print(f"{wire.bits} bits, {wire.nbytes} bytes", file=sys.stderr)
        return 0
    if args.hexdata is None:
        print("error: decode requires --hex", file=sys.stderr)
        return 2
    try:
        sk = wire.decode(bytes.fromhex(args.hexdata))
    except (ValueError, WireFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"addr={sk.addr}")
    if isinstance(sk, ScatterSketchlet):
        print("offsets=" + ",".join(str(o) for o in sk.offsets))
    print("values=" + ",".join(str(v) for v in sk.values))
    return 0


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    if args.command == "run":
        return _cmd_run(args)
    if args.command == "figure":
        return _cmd_figure(args)
    return _cmd_codec(args)


if __name__ == "__main__":
    sys.exit(main())
