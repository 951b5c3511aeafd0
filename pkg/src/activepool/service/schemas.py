"""Request/response models for the HTTP service."""

from __future__ import annotations

from typing import Literal

from pydantic import BaseModel, Field

from ..harness import DEFAULT_BETA_CANDIDATES, ExperimentConfig

Format = Literal["sparse", "csv"]


class DatasetSpec(BaseModel):
    """A dataset shipped inline: raw file content plus how to read it."""

    content: str
    format: Format
    name: str = ""
    label_column: int = 0


class ExperimentSettings(BaseModel):
    strategies: list[str] = Field(default=["proposed", "random", "margin"])
    runs: int = 10
    train_fraction: float = 0.6
    max_queries: int = 100
    beta: float | None = None
    beta_candidates: list[float] = Field(default=list(DEFAULT_BETA_CANDIDATES))
    prob_gamma: float = 1.0
    svm_c: float = 100.0
    svm_gamma: float | None = None
    seed: int = 0
    normalize: bool = False
    negated_position_exponent: bool = False

    def to_config(self) -> ExperimentConfig:
        return ExperimentConfig(
            strategies=tuple(self.strategies),
            runs=self.runs,
            train_fraction=self.train_fraction,
            max_queries=self.max_queries,
            beta=self.beta,
            beta_candidates=tuple(self.beta_candidates),
            prob_gamma=self.prob_gamma,
            svm_c=self.svm_c,
            svm_gamma=self.svm_gamma,
            seed=self.seed,
            normalize=self.normalize,
            negated_position_exponent=self.negated_position_exponent,
        )


class RunRequest(BaseModel):
    dataset: DatasetSpec
    settings: ExperimentSettings = Field(default_factory=ExperimentSettings)
    checkpoints: list[int] | None = None


class RunResponse(BaseModel):
    curves_csv: str
    summary_txt: str
    wtl_tsv: str | None = None


class BenchRequest(BaseModel):
    datasets: list[DatasetSpec]
    settings: ExperimentSettings = Field(default_factory=ExperimentSettings)
    checkpoints: list[int] | None = None


class BenchDatasetResult(BaseModel):
    name: str
    curves_csv: str
    summary_txt: str


class BenchResponse(BaseModel):
    results: list[BenchDatasetResult]
    wtl_tsv: str


class SweepRequest(BaseModel):
    dataset: DatasetSpec
    settings: ExperimentSettings = Field(default_factory=ExperimentSettings)
    betas: list[float] | None = None


class SweepResponse(BaseModel):
    sweep_csv: str


class NamedCurves(BaseModel):
    name: str
    content: str


class TtestRequest(BaseModel):
    curves: list[NamedCurves]
    reference: str = "proposed"
    significance: float = 0.05
    checkpoints: list[int] | None = None


class TtestResponse(BaseModel):
    wtl_tsv: str


class ConvertRequest(BaseModel):
    dataset: DatasetSpec


class ConvertResponse(BaseModel):
    content: str
    format: Format


class SessionCreateRequest(BaseModel):
    dataset: DatasetSpec
    svm_c: float = 100.0
    svm_gamma: float | None = None
    prob_gamma: float = 1.0
    beta: float = 1.0
    negated_position_exponent: bool = False
    normalize: bool = False
    seed: int = 0
    seed_one_per_class: bool = True  # bootstrap labels from the file's own labels


class SessionState(BaseModel):
    id: str
    name: str
    n_samples: int
    n_features: int
    labeled: list[int]
    labels: dict[int, int]
    unlabeled_count: int
    iteration: int


class SessionQueryRequest(BaseModel):
    strategy: Literal["proposed", "random", "margin"] = "proposed"


class SessionQueryResponse(BaseModel):
    index: int
    strategy: str
    iteration: int


class SessionLabelRequest(BaseModel):
    index: int
    label: int


class ErrorEnvelope(BaseModel):
    kind: Literal["usage", "data", "numeric"]
    message: str
