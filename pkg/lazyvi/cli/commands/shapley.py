import argparse

from lazyvi.cli.runner import build_config, execute
from lazyvi.core.config import settings
from lazyvi.models.enums import CoalitionMethod, Experiment


def register(subparsers, parents) -> None:
    parser = subparsers.add_parser(
        "shapley", parents=parents, help="Shapley values on the sparse logistic simulation"
    )
    parser.add_argument("--n", type=int, default=750)
    parser.add_argument("--n1", type=int, default=500)
    parser.add_argument("--p", type=int, default=100, help="Number of features")
    parser.add_argument("--width", type=int, default=128, help="Hidden layer width")
    parser.add_argument("--permutations", type=int, default=100)
    parser.add_argument(
        "--method",
        nargs="+",
        choices=[m.value for m in CoalitionMethod],
        default=[m.value for m in CoalitionMethod],
    )
    parser.add_argument("--lambda", dest="fixed_lambda", type=float, default=settings.SHAPLEY_LAMBDA)
    parser.add_argument("--exact", action="store_true", help="Enumerate every coalition")
    parser.set_defaults(handler=handle)


def handle(args: argparse.Namespace) -> int:
    config = build_config(
        {
            "experiment": Experiment.SHAPLEY.value,
            "n": args.n,
            "n1": args.n1,
            "p": args.p,
            "network": {"hidden_widths": [args.width]},
            "num_permutations": args.permutations,
            "coalition_methods": args.method,
            "lazy": {"fixed_lambda": args.fixed_lambda},
            "shapley_exact": args.exact,
        },
        {"seeds": args.seeds, "output_dir": args.output_dir},
    )
    return execute(config)
