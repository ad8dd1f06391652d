import argparse
import logging
from pathlib import Path

from lazyvi.cli.runner import build_config, execute
from lazyvi.models.enums import Experiment, VIMethod
from lazyvi.repositories.dataset_repository import DatasetRepository


logger = logging.getLogger(__name__)


def register(subparsers, parents) -> None:
    parser = subparsers.add_parser(
        "csv", parents=parents, help="Variable importance for every feature of a CSV file"
    )
    parser.add_argument("--data", type=Path, required=True, help="CSV with a header row")
    parser.add_argument("--response", required=True, help="Name of the response column")
    parser.add_argument(
        "--method",
        nargs="+",
        choices=[m.value for m in VIMethod],
        default=[VIMethod.LAZY.value],
        help="Estimators to run",
    )
    parser.add_argument("--n1", type=int, help="Training rows (default: half the file)")
    parser.add_argument("--hidden", type=int, nargs="+", default=[50], help="Hidden layer widths")
    parser.add_argument("--epochs", type=int)
    parser.add_argument("--learning-rate", type=float)
    parser.add_argument("--lambda", dest="fixed_lambda", type=float, help="Skip CV and use this penalty")
    parser.add_argument("--save-model", action="store_true", help="Write the trained full model")
    parser.set_defaults(handler=handle)


def handle(args: argparse.Namespace) -> int:
    n1 = args.n1
    if n1 is None:
        n1 = max(1, DatasetRepository().load_csv(args.data, args.response).n // 2)

    train = {}
    if args.epochs is not None:
        train["epochs"] = args.epochs
    if args.learning_rate is not None:
        train["learning_rate"] = args.learning_rate
    lazy = {"fixed_lambda": args.fixed_lambda} if args.fixed_lambda is not None else {}

    config = build_config(
        {
            "experiment": Experiment.CSV_VI.value,
            "data_path": str(args.data),
            "response": args.response,
            "n1": n1,
            "methods": args.method,
            "network": {"hidden_widths": args.hidden},
            "train": train,
            "lazy": lazy,
            "save_model": args.save_model,
        },
        {"seeds": args.seeds, "output_dir": args.output_dir},
    )
    return execute(config)
