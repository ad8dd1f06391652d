import argparse

from lazyvi.cli.runner import build_config, execute
from lazyvi.models.enums import Experiment, OrderingSource


def register(subparsers, parents) -> None:
    parser = subparsers.add_parser(
        "roar", parents=parents, help="Remove-and-retrain curves on the teacher-network simulation"
    )
    parser.add_argument("--n", type=int, default=1000)
    parser.add_argument("--n1", type=int, default=700)
    parser.add_argument("--p", type=int, default=100, help="Number of features")
    parser.add_argument("--hidden", type=int, nargs="+", default=[100, 50], help="Hidden layer widths")
    parser.add_argument(
        "--ordering",
        choices=[OrderingSource.GRAD.value, OrderingSource.RANDOM.value],
        default=OrderingSource.GRAD.value,
    )
    parser.add_argument(
        "--proportions",
        type=float,
        nargs="+",
        default=[0.0, 0.1, 0.25, 0.5, 0.75, 0.9, 0.99],
    )
    parser.add_argument("--lambda", dest="fixed_lambda", type=float, help="Skip CV and use this penalty")
    parser.set_defaults(handler=handle)


def handle(args: argparse.Namespace) -> int:
    lazy = {"fixed_lambda": args.fixed_lambda} if args.fixed_lambda is not None else {}
    config = build_config(
        {
            "experiment": Experiment.ROAR.value,
            "n": args.n,
            "n1": args.n1,
            "p": args.p,
            "network": {"hidden_widths": args.hidden},
            "ordering": args.ordering,
            "proportions": args.proportions,
            "lazy": lazy,
        },
        {"seeds": args.seeds, "output_dir": args.output_dir},
    )
    return execute(config)
