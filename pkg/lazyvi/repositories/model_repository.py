import logging
from pathlib import Path
from typing import Optional, Union

import numpy as np

from lazyvi.core.exceptions import DataException
from lazyvi.models.network import MlpModel
from lazyvi.repositories.base import BaseJsonRepository
from lazyvi.schemas.network import ModelDocument


logger = logging.getLogger(__name__)


class ModelRepository(BaseJsonRepository[ModelDocument]):
    """Stores networks as {config, theta}; floats round-trip exactly"""

    def __init__(self, root: Union[str, Path]):
        super().__init__(ModelDocument, root)

    def save_model(self, name: str, model: MlpModel) -> Path:
        document = ModelDocument(config=model.config, theta=model.theta.tolist())
        path = self.save(name, document)
        logger.info(f"Saved model with {model.num_params} parameters to {path}")
        return path

    def load_model(self, name: str) -> Optional[MlpModel]:
        try:
            document = self.get(name)
        except ValueError as e:
            raise DataException(f"Invalid model document {name}: {str(e)}")
        if document is None:
            return None
        return MlpModel(document.config, np.asarray(document.theta, dtype=float))
