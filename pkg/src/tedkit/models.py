"""Pydantic v2 data models shared across tedkit."""

from __future__ import annotations

from pathlib import Path
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

# ---------------------------------------------------------------------------
# Identifiers and instances
# ---------------------------------------------------------------------------


class LabelId(BaseModel):
    """A decision (Y) value: dense id within its vocabulary plus display name."""

    model_config = ConfigDict(frozen=True)

    id: int = Field(..., ge=0)
    name: str


class ExplanationId(BaseModel):
    """An explanation (E) value. Free-form explanations are identified by id only."""

    model_config = ConfigDict(frozen=True)

    id: int = Field(..., ge=0)
    name: str


class CompositeId(BaseModel):
    """A composite (YE) class id assigned by a fitted codec."""

    model_config = ConfigDict(frozen=True)

    id: int = Field(..., ge=0)


class LabeledInstance(BaseModel):
    """One training triple: features, label and (for TED data) its explanation."""

    model_config = ConfigDict(frozen=True)

    features: tuple[float, ...]
    label: LabelId
    explanation: ExplanationId | None = None


# ---------------------------------------------------------------------------
# Learner configuration
# ---------------------------------------------------------------------------


class MlpConfig(BaseModel):
    """Single-hidden-layer ReLU network with a softmax output, trained with Adam."""

    model_config = ConfigDict(frozen=True)

    hidden_units: int = Field(default=200, ge=1)
    epochs: int = Field(default=200, ge=1)
    batch_size: int = Field(default=64, ge=1)
    learning_rate: float = Field(default=1e-3, gt=0.0)
    beta1: float = Field(default=0.9, ge=0.0, lt=1.0)
    beta2: float = Field(default=0.999, ge=0.0, lt=1.0)
    epsilon: float = Field(default=1e-8, gt=0.0)
    seed: int = 0


class ForestConfig(BaseModel):
    """Bagged CART ensemble with Gini splits and per-split feature sampling."""

    model_config = ConfigDict(frozen=True)

    n_trees: int = Field(default=100, ge=1)
    min_samples_leaf: int = Field(default=5, ge=1)
    max_features: Literal["sqrt", "all"] = "sqrt"
    bootstrap: bool = True
    n_jobs: int = 1
    seed: int = 0


# ---------------------------------------------------------------------------
# Experiment protocol
# ---------------------------------------------------------------------------


class SplitSpec(BaseModel):
    """Uniform random train/test partition."""

    model_config = ConfigDict(frozen=True)

    train_fraction: float = 0.9
    seed: int = 0

    @field_validator("train_fraction")
    @classmethod
    def _open_interval(cls, value: float) -> float:
        if not 0.0 < value < 1.0:
            raise ValueError("train_fraction must lie strictly between 0 and 1")
        return value


Mode = Literal["baseline", "ted"]

METRICS: tuple[str, ...] = ("y_accuracy", "e_accuracy", "ye_accuracy")


class ExperimentReport(BaseModel):
    """Accuracies of one seeded run."""

    mode: Mode
    dataset: str
    learner: str
    seed: int
    n_train: int
    n_test: int
    y_accuracy: float = Field(..., ge=0.0, le=1.0)
    e_accuracy: float | None = Field(default=None, ge=0.0, le=1.0)
    ye_accuracy: float | None = Field(default=None, ge=0.0, le=1.0)
    derived_y: bool = False
    n_composites: int | None = None
    unseen_test_pairs: int | None = None
    e_accuracy_by_explanation: dict[str, float] | None = None
    runtime_seconds: float = 0.0

    @model_validator(mode="after")
    def _joint_bound(self) -> ExperimentReport:
        if self.ye_accuracy is not None and self.e_accuracy is not None:
            if self.ye_accuracy > min(self.y_accuracy, self.e_accuracy) + 1e-12:
                raise ValueError("ye_accuracy cannot exceed y_accuracy or e_accuracy")
        return self


class MetricSummary(BaseModel):
    """Mean and sample standard deviation of one metric over seeds."""

    mean: float
    std: float
    min: float
    max: float


class AggregateReport(BaseModel):
    """Per-seed reports plus their summary statistics."""

    mode: Mode
    dataset: str
    learner: str
    runs: list[ExperimentReport]
    summary: dict[str, MetricSummary]

    @property
    def seeds(self) -> list[int]:
        return [run.seed for run in self.runs]


class ToleranceCheck(BaseModel):
    """One pass/fail comparison against an acceptance threshold."""

    name: str
    observed: float
    expected: str
    passed: bool


class Table1Report(BaseModel):
    """Both use cases, both training inputs, with the acceptance verdict."""

    tictactoe_baseline: ExperimentReport
    tictactoe_ted: ExperimentReport
    loan_baseline: AggregateReport
    loan_ted: AggregateReport
    checks: list[ToleranceCheck]

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)


class Tolerances(BaseModel):
    """Acceptance thresholds, in percentage points."""

    tictactoe_baseline_y: float = 96.5
    tictactoe_ted_y: float = 97.4
    tictactoe_ted_e: float = 96.3
    tictactoe_band: float = 2.5
    tictactoe_ted_y_max_loss: float = 1.0
    loan_baseline_y_min: float = 98.5
    loan_ted_e_min: float = 98.5
    loan_min_seeds_improved: int = 7


class TicTacToeProtocol(BaseModel):
    seed: int | None = None
    mlp: MlpConfig = MlpConfig()


class LoanProtocol(BaseModel):
    n: int = Field(default=10_000, ge=1)
    generation_seed: int | None = None
    n_seeds: int = Field(default=10, ge=2)
    derive_y_from_e: bool = True
    forest: ForestConfig = ForestConfig()


class ProtocolConfig(BaseModel):
    """Contents of ``config/protocol.yaml``."""

    train_fraction: float = 0.9
    tictactoe: TicTacToeProtocol = TicTacToeProtocol()
    loan: LoanProtocol = LoanProtocol()
    tolerances: Tolerances = Tolerances()


# ---------------------------------------------------------------------------
# CLI run configuration
# ---------------------------------------------------------------------------


class RunConfig(BaseModel):
    """Resolved options of one CLI invocation."""

    command: str
    seed: int
    out: Path | None = None
    options: dict[str, object] = Field(default_factory=dict)

    def option(self, name: str, default: object = None) -> object:
        value = self.options.get(name)
        return default if value is None else value

