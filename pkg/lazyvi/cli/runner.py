from datetime import datetime, timezone
import logging
from pathlib import Path
from typing import Any, Dict, Optional

from pydantic import ValidationError

from lazyvi.core.exceptions import (
    EXIT_OK,
    ConfigException,
    LazyVIException,
    NumericalException,
)
from lazyvi.repositories.model_repository import ModelRepository
from lazyvi.repositories.result_repository import ResultRepository
from lazyvi.schemas.run import RunConfig, RunManifest
from lazyvi.services.experiment_service import ExperimentService
from lazyvi.utils.helpers import hash_document


logger = logging.getLogger(__name__)


def format_validation_error(exc: ValidationError) -> str:
    """One line per failing field, e.g. "n1: Field required" """
    parts = []
    for error in exc.errors():
        location = ".".join(str(part) for part in error.get("loc", ())) or "config"
        parts.append(f"{location}: {error.get('msg')}")
    return "; ".join(parts)


def build_config(document: Dict[str, Any], overrides: Optional[Dict[str, Any]] = None) -> RunConfig:
    """Validate a config document after applying non-None overrides"""
    merged = dict(document)
    for key, value in (overrides or {}).items():
        if value is not None:
            merged[key] = value
    try:
        return RunConfig.model_validate(merged)
    except ValidationError as e:
        raise ConfigException(f"Invalid run configuration: {format_validation_error(e)}")


def execute(config: RunConfig) -> int:
    """
    Run one experiment and write its outputs

    Numerical failures still flush the rows completed so far and a manifest
    marked failed; the exception is re-raised for the exit code.
    """
    output_dir = Path(config.resolved_output_dir())
    results = ResultRepository(output_dir)
    models = ModelRepository(output_dir / "models")
    manifest = RunManifest(
        experiment=config.experiment,
        config_hash=hash_document(config.fingerprint()),
        seeds=config.seeds,
    )
    service = ExperimentService(config, model_repository=models)

    try:
        result = service.run()
    except NumericalException as e:
        logger.error(f"❌ Numerical failure: {e.detail}")
        partial = service.result
        if partial.rows:
            manifest.files = [str(p) for p in results.write_results(partial)]
            logger.info(f"Flushed {len(partial.rows)} partial rows to {output_dir}")
        manifest.status = "failed"
        manifest.error = e.detail
        manifest.seconds_by_method = partial.seconds_by_method()
        manifest.finished_at = datetime.now(timezone.utc)
        results.write_manifest(manifest)
        raise
    except LazyVIException as e:
        manifest.status = "failed"
        manifest.error = e.detail
        manifest.finished_at = datetime.now(timezone.utc)
        results.write_manifest(manifest)
        raise

    manifest.files = [str(p) for p in results.write_results(result)]
    manifest.seconds_by_method = result.seconds_by_method()
    manifest.finished_at = datetime.now(timezone.utc)
    manifest.files.append(str(results.write_manifest(manifest)))

    for method, seconds in sorted(manifest.seconds_by_method.items()):
        logger.info(f"  {method}: {seconds:.2f}s total")
    logger.info(f"📁 Results written to {output_dir}")
    return EXIT_OK
