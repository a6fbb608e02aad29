"""Command-line entry point: flags mirror PlotSpec one-to-one."""

from __future__ import annotations

import argparse
import sys
from typing import Optional, Sequence

from .figures import OptionError, PlotError, PlotSpec, SchemaError, render_entropy_plot, render_error_plot

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_DATA = 4


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nettrack-plots",
        description="Render tracking-error or entropy figures from experiment CSVs.",
    )
    parser.add_argument("input_csv", help="results CSV (or diagnostics CSV with --entropy)")
    parser.add_argument("--out", required=True, metavar="IMAGE", help="output image path")
    parser.add_argument(
        "--methods", metavar="A,B,...", help="comma-separated subset of method labels to plot"
    )
    parser.add_argument("--log-scale", action="store_true", help="logarithmic y axis")
    parser.add_argument(
        "--change-markers",
        metavar="T1,T2,...",
        help="comma-separated timesteps marked with vertical lines",
    )
    parser.add_argument(
        "--rolling-mean",
        type=int,
        metavar="W",
        help="replace each series by its trailing mean of width W (labeled in the legend)",
    )
    parser.add_argument(
        "--entropy",
        action="store_true",
        help="treat the input as a diagnostics CSV and plot per-node entropy",
    )
    return parser


def spec_from_args(args: argparse.Namespace) -> PlotSpec:
    methods = None
    if args.methods is not None:
        methods = tuple(part.strip() for part in args.methods.split(",") if part.strip())
        if not methods:
            raise OptionError("--methods given but no labels in it")
    markers: tuple[int, ...] = ()
    if args.change_markers is not None:
        try:
            markers = tuple(int(part) for part in args.change_markers.split(",") if part.strip())
        except ValueError:
            raise OptionError(f"--change-markers needs integers, got {args.change_markers!r}") from None
    return PlotSpec(
        input_csv=args.input_csv,
        output_image=args.out,
        methods=methods,
        log_scale=args.log_scale,
        change_markers=markers,
        rolling_mean=args.rolling_mean,
    )


def _fail(category: str, message: str, code: int) -> int:
    print(f"error: {category}: {message}", file=sys.stderr)
    return code


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        spec = spec_from_args(args)
        if args.entropy:
            render_entropy_plot(spec)
        else:
            render_error_plot(spec)
    except OptionError as exc:
        return _fail("config", str(exc), EXIT_CONFIG)
    except FileNotFoundError as exc:
        return _fail("io", str(exc), EXIT_IO)
    except SchemaError as exc:
        return _fail("data", str(exc), EXIT_DATA)
    except OSError as exc:
        return _fail("io", str(exc), EXIT_IO)
    except PlotError as exc:
        return _fail("data", str(exc), EXIT_DATA)
    except Exception as exc:  # noqa: BLE001
        return _fail("internal", f"{type(exc).__name__}: {exc}", EXIT_INTERNAL)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
