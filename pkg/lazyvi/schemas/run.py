from datetime import datetime, timezone
from typing import Any, Dict, List, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from lazyvi.core.config import settings
from lazyvi.models.enums import (
    CoalitionMethod,
    Experiment,
    OrderingSource,
    SkillMeasure,
    VIMethod,
)
from lazyvi.schemas.estimate import LazyConfig, ViEstimate
from lazyvi.schemas.network import NetworkConfig, TrainOptions
from lazyvi.schemas.roar import RoarCurve
from lazyvi.schemas.shapley import ShapleyEstimate


# Fields each experiment cannot run without
REQUIRED_FIELDS = {
    Experiment.LINEAR_CORR: ("n", "n1"),
    Experiment.BINARY: ("n", "n1"),
    Experiment.HIGHDIM: ("n", "n1"),
    Experiment.CSV_VI: ("data_path", "response", "n1"),
    Experiment.SHAPLEY: ("n", "n1"),
    Experiment.ROAR: ("n", "n1"),
    Experiment.TRACE_CHECK: ("n1",),
    Experiment.WIDTH_SWEEP: ("n", "n1"),
}


class NetworkSettings(BaseModel):
    """Architecture without the input dimension, which comes from the data"""

    model_config = ConfigDict(frozen=True)

    hidden_widths: List[int] = Field(default_factory=lambda: [50])

    @field_validator("hidden_widths")
    @classmethod
    def validate_widths(cls, v: List[int]) -> List[int]:
        if any(width < 1 for width in v):
            raise ValueError("All hidden widths must be >= 1")
        return v

    def build(self, input_dim: int) -> NetworkConfig:
        return NetworkConfig(input_dim=input_dim, hidden_widths=list(self.hidden_widths))


class RunConfig(BaseModel):
    """One experiment run, read from a JSON document"""

    model_config = ConfigDict(extra="forbid")

    experiment: Experiment
    seeds: List[int] = Field(default_factory=lambda: [0])
    n: Optional[int] = Field(default=None, ge=2)
    n1: Optional[int] = Field(default=None, ge=1)
    rho: Optional[float] = Field(default=None, gt=-1, lt=1)
    rhos: Optional[List[float]] = Field(
        default=None, description="Correlation grid for linear_corr; defaults to [rho] or 0..0.8"
    )
    variables: Optional[List[int]] = Field(default=None, description="0-based feature indices")
    methods: List[VIMethod] = Field(
        default_factory=lambda: [VIMethod.DROPOUT, VIMethod.LAZY, VIMethod.RETRAIN]
    )
    measure: Optional[SkillMeasure] = None
    network: NetworkSettings = Field(default_factory=NetworkSettings)
    train: TrainOptions = Field(default_factory=TrainOptions)
    lazy: LazyConfig = Field(default_factory=LazyConfig)
    output_dir: Optional[str] = None

    # Data generation
    noise_sd: float = Field(default=0.1, ge=0)
    p: Optional[int] = Field(default=None, ge=1)
    sigma_w: float = Field(default=0.3, ge=0)
    teacher_width: int = Field(default=50, ge=1)

    # csv_vi
    data_path: Optional[str] = None
    response: Optional[str] = None
    save_model: bool = False

    # lazy_es
    es_steps: int = Field(default=10, ge=1)
    es_learning_rate: float = Field(default=settings.DEFAULT_LEARNING_RATE, ge=0)

    # shapley
    num_permutations: int = Field(default=100, ge=1)
    coalition_methods: List[CoalitionMethod] = Field(
        default_factory=lambda: [CoalitionMethod.LAZY, CoalitionMethod.RETRAIN]
    )
    shapley_exact: bool = False

    # roar
    proportions: List[float] = Field(
        default_factory=lambda: [0.0, 0.1, 0.25, 0.5, 0.75, 0.9, 0.99]
    )
    ordering: OrderingSource = OrderingSource.GRAD

    # trace_check
    test_sizes: List[int] = Field(default_factory=lambda: [300, 600, 900, 1200])

    # width_sweep
    widths: List[int] = Field(default_factory=lambda: [25, 50, 100, 200])

    @field_validator("seeds")
    @classmethod
    def validate_seeds(cls, v: List[int]) -> List[int]:
        if not v:
            raise ValueError("seeds must be nonempty")
        if any(seed < 0 for seed in v):
            raise ValueError("seeds must be nonnegative")
        return v

    @field_validator("rhos")
    @classmethod
    def validate_rhos(cls, v: Optional[List[float]]) -> Optional[List[float]]:
        if v is not None and any(abs(rho) >= 1 for rho in v):
            raise ValueError("every rho must satisfy |rho| < 1")
        return v

    @field_validator("proportions")
    @classmethod
    def validate_proportions(cls, v: List[float]) -> List[float]:
        if any(t < 0 or t > 1 for t in v):
            raise ValueError("proportions must lie in [0, 1]")
        return sorted(v)

    @model_validator(mode="after")
    def validate_required(self) -> "RunConfig":
        for name in REQUIRED_FIELDS[self.experiment]:
            if getattr(self, name) is None:
                raise ValueError(
                    f"Field '{name}' is required for experiment {self.experiment.value}"
                )
        if self.n is not None and self.n1 is not None and self.n1 >= self.n:
            raise ValueError(f"Field 'n1' must be smaller than n={self.n}, got {self.n1}")
        return self

    @property
    def rho_grid(self) -> List[float]:
        if self.rhos is not None:
            return list(self.rhos)
        if self.rho is not None:
            return [self.rho]
        return [0.0, 0.2, 0.4, 0.6, 0.8]

    @property
    def skill_measure(self) -> SkillMeasure:
        if self.measure is not None:
            return self.measure
        if self.experiment == Experiment.BINARY:
            return SkillMeasure.ACCURACY
        return SkillMeasure.NEG_MSE

    def resolved_output_dir(self) -> str:
        return self.output_dir or settings.OUTPUT_DIR

    def fingerprint(self) -> Dict[str, Any]:
        """Config content that determines results (output location excluded)"""
        return self.model_dump(mode="json", exclude={"output_dir"})


class CoverageRow(BaseModel):
    variable: int
    method: VIMethod
    rho: Optional[float] = None
    width: Optional[int] = None
    num_runs: int
    coverage: float = Field(..., ge=0, le=1)
    mean_bias: float
    truth: float
    mean_vi: float
    mean_seconds: float = 0.0


class RunManifest(BaseModel):
    """Run provenance written next to the results"""

    app: str = settings.APP_NAME
    version: str = settings.APP_VERSION
    experiment: Experiment
    config_hash: str
    seeds: List[int]
    status: str = "ok"
    error: Optional[str] = None
    started_at: datetime = Field(default_factory=lambda: datetime.now(timezone.utc))
    finished_at: Optional[datetime] = None
    seconds_by_method: Dict[str, float] = Field(default_factory=dict)
    files: List[str] = Field(default_factory=list)


class ExperimentResult(BaseModel):
    """Rows produced by an experiment driver, in deterministic order"""

    experiment: Experiment
    rows: List[Dict[str, Any]] = Field(default_factory=list)
    coverage: List[CoverageRow] = Field(default_factory=list)
    summary: Dict[str, Any] = Field(default_factory=dict)
    estimates: List[ViEstimate] = Field(default_factory=list, exclude=True)
    # Plot-data tables keyed by file stem
    shapley: Dict[str, ShapleyEstimate] = Field(default_factory=dict, exclude=True)
    roar: Dict[str, RoarCurve] = Field(default_factory=dict, exclude=True)

    def seconds_by_method(self) -> Dict[str, float]:
        """Total wall-clock per method; drivers without per-row timings set it in summary"""
        if "seconds_by_method" in self.summary:
            return dict(self.summary["seconds_by_method"])
        totals: Dict[str, float] = {}
        for row in self.rows:
            if "method" in row and "seconds" in row:
                totals[row["method"]] = totals.get(row["method"], 0.0) + float(row["seconds"])
        return totals
