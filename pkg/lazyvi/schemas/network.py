from typing import List, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from lazyvi.core.config import settings
from lazyvi.models.enums import Optimizer


class NetworkConfig(BaseModel):
    """Fully connected ReLU network with a single regression output"""

    model_config = ConfigDict(frozen=True)

    input_dim: int = Field(..., ge=1, description="Number of input features p")
    hidden_widths: List[int] = Field(
        default_factory=lambda: [50], description="Hidden layer widths"
    )
    activation: str = Field(default="relu", pattern="^relu$")
    output_dim: int = Field(default=1, ge=1, le=1)

    @field_validator("hidden_widths")
    @classmethod
    def validate_widths(cls, v: List[int]) -> List[int]:
        if any(width < 1 for width in v):
            raise ValueError("All hidden widths must be >= 1")
        return list(v)

    @property
    def layer_sizes(self) -> List[int]:
        return [self.input_dim, *self.hidden_widths, self.output_dim]

    @property
    def num_params(self) -> int:
        """M = sum over layers of (in + 1) * out"""
        sizes = self.layer_sizes
        return sum((fan_in + 1) * fan_out for fan_in, fan_out in zip(sizes, sizes[1:]))

    def with_input_dim(self, input_dim: int) -> "NetworkConfig":
        return self.model_copy(update={"input_dim": input_dim})


class TrainOptions(BaseModel):
    """Full-batch optimizer settings"""

    model_config = ConfigDict(frozen=True)

    optimizer: Optimizer = Optimizer.ADAM
    learning_rate: float = Field(default=settings.DEFAULT_LEARNING_RATE, ge=0)
    epochs: int = Field(default=settings.DEFAULT_EPOCHS, ge=1)
    seed: int = Field(default=0, ge=0)
    early_stop_steps: Optional[int] = Field(default=None, ge=0)
    momentum: float = Field(default=settings.DEFAULT_MOMENTUM, ge=0, lt=1)
    beta1: float = Field(default=0.9, ge=0, lt=1)
    beta2: float = Field(default=0.999, ge=0, lt=1)
    eps: float = Field(default=1e-8, gt=0)

    @model_validator(mode="after")
    def validate_learning_rate(self) -> "TrainOptions":
        # lr = 0 only makes sense for a fixed number of early-stopping steps
        if self.early_stop_steps is None and self.learning_rate <= 0:
            raise ValueError("learning_rate must be > 0")
        return self


class ModelDocument(BaseModel):
    """Serialized MlpModel: config plus theta in the network's flattening order"""

    config: NetworkConfig
    theta: List[float]

    @model_validator(mode="after")
    def validate_length(self) -> "ModelDocument":
        if len(self.theta) != self.config.num_params:
            raise ValueError(
                f"theta has {len(self.theta)} entries, config needs {self.config.num_params}"
            )
        return self
