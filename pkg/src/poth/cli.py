"""Command-line front end.

Subcommands: compute, subset, residuals, cumulative, plot, batch.
Exit codes: 0 success, 1 validation, 2 I/O, 3 numerical. Every failure
prints a single line to stderr prefixed ``error:<category>:``.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .batch import run_batch, write_summary_csv
from .errors import PothError, ValidationError
from .io_formats import canonical_json, normalize_format, parse_file, read_report, write_report
from .pipeline import ComputeOptions, build_report
from .plots import PLOT_KINDS, render_plot
from .resampling import DEFAULT_N_DRAWS

_EXIT_CODES = {"validation": 1, "io": 2, "numerical": 3}


class _Parser(argparse.ArgumentParser):
    """argparse that reports usage problems through the standard error channel."""

    def error(self, message):
        raise ValidationError(message)


def _add_input_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--input", required=True, help="input document (JSON or CSV)")
    sub.add_argument(
        "--format",
        choices=["reference", "reference-effects", "pairwise", "draws", "rank-probs", "scores"],
        help="input format; omit for self-describing JSON or a recognizable CSV header",
    )
    sub.add_argument("--direction", choices=["larger", "smaller"],
                     help="whether larger or smaller outcome values are better (default larger)")
    sub.add_argument("--method", choices=["pscore", "draws"],
                     help="scoring route for reference effects (default pscore)")
    sub.add_argument("--n-draws", type=int, default=DEFAULT_N_DRAWS,
                     help=f"Monte Carlo draws for --method draws (default {DEFAULT_N_DRAWS})")
    sub.add_argument("--seed", type=int, default=1, help="RNG seed for --method draws (default 1)")
    sub.add_argument("--workers", type=int, default=1,
                     help="threads for draw generation; output is identical for any value")
    sub.add_argument("--output", help="output path (default: stdout)")


def _build_parser() -> _Parser:
    parser = _Parser(prog="poth", description="Certainty of treatment hierarchies from NMA outputs")
    commands = parser.add_subparsers(dest="command", required=True)

    for name, help_text in (
        ("compute", "full report: POTH, scores, residuals, cumulative series"),
        ("subset", "report plus the POTH and scores of a chosen treatment subset"),
        ("residuals", "leave-one-out POTH residuals"),
        ("cumulative", "cumulative POTH of the best-k treatments"),
    ):
        sub = commands.add_parser(name, help=help_text)
        _add_input_flags(sub)
        if name == "subset":
            sub.add_argument("--subset", required=True, help="comma-separated treatment ids")

    plot = commands.add_parser("plot", help="render an SVG chart from a report JSON")
    plot.add_argument("--input", required=True, help="report JSON produced by compute/subset")
    plot.add_argument("--plot-kind", required=True, choices=list(PLOT_KINDS))
    plot.add_argument("--output", help="output path (default: stdout)")

    batch = commands.add_parser("batch", help="summarize a directory of network documents")
    batch.add_argument("--dir", required=True, help="directory of JSON network documents")
    batch.add_argument("--out", required=True, help="summary CSV path")
    batch.add_argument("--alpha", type=float, default=0.05,
                       help="significance level for the z-test proportion (default 0.05)")
    return parser


def _write_output(data: bytes, output: str | None) -> None:
    if output is None:
        sys.stdout.buffer.write(data)
        sys.stdout.buffer.flush()
    else:
        Path(output).write_bytes(data)


def _load_document(args):
    return parse_file(
        args.input,
        normalize_format(args.format),
        direction=args.direction,
    )


def _options(args) -> ComputeOptions:
    return ComputeOptions(
        method=args.method, n_draws=args.n_draws, seed=args.seed, workers=args.workers
    )


def _cmd_compute(args) -> None:
    report = build_report(_load_document(args), _options(args))
    _write_output(write_report(report), args.output)


def _cmd_subset(args) -> None:
    ids = tuple(lab.strip() for lab in args.subset.split(",") if lab.strip())
    report = build_report(_load_document(args), _options(args), subsets=[ids])
    _write_output(write_report(report), args.output)


def _cmd_residuals(args) -> None:
    report = build_report(_load_document(args), _options(args))
    if report.residuals is None:
        raise ValidationError(
            "residuals are unavailable: they need a joint source (effects or draws) "
            "and at least 3 treatments"
        )
    fragment = {"poth": report.poth, "residuals": dict(report.residuals)}
    _write_output(canonical_json(fragment).encode("utf-8"), args.output)


def _cmd_cumulative(args) -> None:
    report = build_report(_load_document(args), _options(args))
    if report.cumulative is None:
        raise ValidationError(
            "the cumulative series is unavailable: it needs a joint source (effects or draws)"
        )
    n = report.scores.n
    fragment = {"poth": report.poth, "cumulative": [report.cumulative[k] for k in range(2, n + 1)]}
    _write_output(canonical_json(fragment).encode("utf-8"), args.output)


def _cmd_plot(args) -> None:
    try:
        data = Path(args.input).read_bytes()
    except OSError as exc:
        raise _io_error(exc) from None
    report = read_report(data)
    _write_output(render_plot(report, args.plot_kind), args.output)


def _cmd_batch(args) -> None:
    rows, summary = run_batch(args.dir, alpha=args.alpha)
    Path(args.out).write_bytes(write_summary_csv(rows))
    sys.stdout.write(canonical_json(summary))
    sys.stdout.flush()


def _io_error(exc: OSError) -> PothError:
    err = PothError(str(exc))
    err.category = "io"
    return err


_HANDLERS = {
    "compute": _cmd_compute,
    "subset": _cmd_subset,
    "residuals": _cmd_residuals,
    "cumulative": _cmd_cumulative,
    "plot": _cmd_plot,
    "batch": _cmd_batch,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        _HANDLERS[args.command](args)
    except PothError as exc:
        message = " ".join(str(exc).split())
        print(f"error:{exc.category}: {message}", file=sys.stderr)
        return _EXIT_CODES.get(exc.category, 1)
    except OSError as exc:
        print(f"error:io: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
