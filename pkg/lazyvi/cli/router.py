import argparse

from lazyvi import __version__
from lazyvi.cli.commands import csv, roar, run, shapley, trace_check


def build_parser() -> argparse.ArgumentParser:
    """Top-level parser with one sub-command per command module"""
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seeds", type=int, nargs="+", help="Replicate seeds")
    common.add_argument("--output-dir", help="Output directory (default: $LAZYVI_OUTPUT_DIR)")
    common.add_argument("--log-level", help="Overrides LAZYVI_LOG_LEVEL")

    parser = argparse.ArgumentParser(
        prog="vi",
        description="Variable importance for neural networks: dropout, retrain and lazy estimators",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    subparsers = parser.add_subparsers(dest="command", required=True)

    run.register(subparsers, [common])
    csv.register(subparsers, [common])
    trace_check.register(subparsers, [common])
    shapley.register(subparsers, [common])
    roar.register(subparsers, [common])
    return parser
