import argparse

from lazyvi.cli.runner import build_config, execute
from lazyvi.models.enums import Experiment


def register(subparsers, parents) -> None:
    parser = subparsers.add_parser(
        "trace-check",
        parents=parents,
        help="Check that the NTK trace grows linearly with the evaluation sample size",
    )
    parser.add_argument("--n1", type=int, default=1000, help="Training rows")
    parser.add_argument("--width", type=int, default=128, help="Hidden layer width")
    parser.add_argument(
        "--sizes", type=int, nargs="+", default=[300, 600, 900, 1200], help="Evaluation sizes"
    )
    parser.add_argument("--rho", type=float, default=0.5)
    parser.set_defaults(handler=handle)


def handle(args: argparse.Namespace) -> int:
    config = build_config(
        {
            "experiment": Experiment.TRACE_CHECK.value,
            "n1": args.n1,
            "rho": args.rho,
            "network": {"hidden_widths": [args.width]},
            "test_sizes": args.sizes,
        },
        {"seeds": args.seeds, "output_dir": args.output_dir},
    )
    return execute(config)
