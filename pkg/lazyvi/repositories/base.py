import json
from pathlib import Path
from typing import Any, Dict, Generic, List, Optional, Type, TypeVar, Union

from pydantic import BaseModel


DocumentType = TypeVar("DocumentType", bound=BaseModel)


class BaseJsonRepository(Generic[DocumentType]):
    """Base repository storing pydantic documents as JSON files under a root directory."""

    def __init__(self, model: Type[DocumentType], root: Union[str, Path]):
        self.model = model
        self.root = Path(root)

    def path(self, name: str) -> Path:
        return self.root / name

    def get(self, name: str) -> Optional[DocumentType]:
        path = self.path(name)
        if not path.exists():
            return None
        return self.model.model_validate_json(path.read_text(encoding="utf-8"))

    def save(self, name: str, document: DocumentType) -> Path:
        return self.write_json(name, document.model_dump(mode="json"))

    def write_json(self, name: str, payload: Union[Dict[str, Any], List[Any]]) -> Path:
        path = self.path(name)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        return path
