from typing import Dict, List

from pydantic import BaseModel, Field, field_validator, model_validator

from lazyvi.models.enums import OrderingSource, VIMethod
from lazyvi.utils.validators import is_permutation


class Ordering(BaseModel):
    """Features ranked from most to least important"""

    ranked: List[int]
    source: OrderingSource
    scores: List[float] = Field(default_factory=list)

    @model_validator(mode="after")
    def validate_permutation(self) -> "Ordering":
        if not is_permutation(self.ranked, len(self.ranked)):
            raise ValueError("ranked must be a permutation of range(p)")
        return self


class RoarPoint(BaseModel):
    t: float = Field(..., ge=0, le=1)
    method: VIMethod
    mse: float
    seconds: float = 0.0
    num_removed: int = 0


class RoarCurve(BaseModel):
    proportions: List[float]
    points: List[RoarPoint] = Field(default_factory=list)
    source: OrderingSource = OrderingSource.GIVEN

    @field_validator("proportions")
    @classmethod
    def validate_sorted(cls, v: List[float]) -> List[float]:
        if any(t < 0 or t > 1 for t in v):
            raise ValueError("proportions must lie in [0, 1]")
        if list(v) != sorted(v):
            raise ValueError("proportions must be sorted ascending")
        return v

    def mse(self, t: float, method: VIMethod) -> float:
        for point in self.points:
            if point.t == t and point.method == method:
                return point.mse
        raise KeyError((t, method))

    def seconds_by_method(self) -> Dict[VIMethod, float]:
        totals: Dict[VIMethod, float] = {}
        for point in self.points:
            totals[point.method] = totals.get(point.method, 0.0) + point.seconds
        return totals

    def to_rows(self) -> List[dict]:
        return [
            {"t": p.t, "method": p.method.value, "mse": p.mse, "seconds": p.seconds}
            for p in self.points
        ]
