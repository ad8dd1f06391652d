from typing import FrozenSet, List, Optional

from pydantic import BaseModel, ConfigDict, Field

from lazyvi.models.enums import CoalitionMethod


class CoalitionFit(BaseModel):
    """Test skill of the reduced model that keeps only the features in ``subset``"""

    model_config = ConfigDict(frozen=True, populate_by_name=True)

    subset: FrozenSet[int]
    skill: float
    method: CoalitionMethod
    lambda_used: Optional[float] = Field(default=None, alias="lambda")
    seconds: float = 0.0


class ShapleyEstimate(BaseModel):
    psi: List[float]
    se: List[float]
    num_samples: int = Field(..., ge=0)
    method: CoalitionMethod
    exact: bool = False
    seconds: float = 0.0
    feature_names: Optional[List[str]] = None

    def to_rows(self) -> List[dict]:
        names = self.feature_names or [str(j) for j in range(len(self.psi))]
        return [
            {"feature": names[j], "psi": self.psi[j], "se": self.se[j]}
            for j in range(len(self.psi))
        ]
