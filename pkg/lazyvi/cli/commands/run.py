import argparse
import json
import logging
from pathlib import Path

from lazyvi.cli.runner import build_config, execute
from lazyvi.core.exceptions import ConfigException
from lazyvi.models.enums import Experiment


logger = logging.getLogger(__name__)


def register(subparsers, parents) -> None:
    parser = subparsers.add_parser(
        "run", parents=parents, help="Run an experiment described by a JSON config"
    )
    parser.add_argument("config", type=Path, help="Path to the run config JSON document")
    parser.add_argument("--experiment", choices=[e.value for e in Experiment])
    parser.add_argument("--n", type=int, help="Total sample size")
    parser.add_argument("--n1", type=int, help="Training split size")
    parser.add_argument("--rho", type=float, help="Feature correlation")
    parser.set_defaults(handler=handle)


def load_document(path: Path) -> dict:
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigException(f"Cannot read config {path}: {e.strerror}")
    try:
        document = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigException(f"Config {path} is not valid JSON: {e.msg} (line {e.lineno})")
    if not isinstance(document, dict):
        raise ConfigException(f"Config {path} must be a JSON object")
    return document


def handle(args: argparse.Namespace) -> int:
    document = load_document(args.config)
    config = build_config(
        document,
        {
            "experiment": args.experiment,
            "n": args.n,
            "n1": args.n1,
            "rho": args.rho,
            "seeds": args.seeds,
            "output_dir": args.output_dir,
        },
    )
    logger.info(f"Loaded config {args.config} ({config.experiment.value})")
    return execute(config)
