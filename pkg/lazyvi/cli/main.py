import logging
from typing import List, Optional

from lazyvi.cli.router import build_parser
from lazyvi.core.config import settings
from lazyvi.core.exceptions import LazyVIException, NumericalException
from lazyvi.utils.helpers import setup_logging


logger = logging.getLogger(__name__)


def main(argv: Optional[List[str]] = None) -> int:
    """Entry point for the ``vi`` command; returns the process exit code"""
    args = build_parser().parse_args(argv)
    setup_logging(args.log_level or settings.LOG_LEVEL, settings.LOG_FILE)

    logger.info(f"🚀 {settings.APP_NAME} v{settings.APP_VERSION} ({settings.ENVIRONMENT})")
    warnings = settings.validate_run_environment()
    if warnings:
        logger.warning("⚠️ Configuration warnings:")
        for warning in warnings:
            logger.warning(f"  {warning}")

    try:
        return args.handler(args)
    except NumericalException as e:
        logger.error(f"Numerical failure: {e.detail}")
        return e.exit_code
    except LazyVIException as e:
        logger.error(f"{type(e).__name__}: {e.detail}")
        return e.exit_code
