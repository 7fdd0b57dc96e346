"""Request and response bodies for the HTTP service.

Nested domain objects (codec spec, reward weights, experiment config, task
specs, demonstration records) travel as plain JSON objects in the shapes
produced by the core `to_json_dict` methods — the core validators are the
single source of truth for their contents.  The models here pin the
top-level shape of each endpoint.
"""

from __future__ import annotations

from pydantic import BaseModel, Field


class ApiError(BaseModel):
    """One failed element of a batch request."""

    code: int
    message: str
    index: int = -1


class HealthResponse(BaseModel):
    status: str
    version: str


# --- codec ---------------------------------------------------------------

class EncodeRequest(BaseModel):
    spec: dict
    chunks: list[list[list[float]]]


class EncodeResult(BaseModel):
    tokens: list[int] | None = None
    error: ApiError | None = None


class EncodeResponse(BaseModel):
    results: list[EncodeResult]


class DecodeRequest(BaseModel):
    spec: dict
    streams: list[list[int]]


class DecodeResult(BaseModel):
    chunk: list[list[float]] | None = None
    error: ApiError | None = None


class DecodeResponse(BaseModel):
    results: list[DecodeResult]


class FormatCheckRequest(BaseModel):
    spec: dict
    streams: list[list[int]]


class FormatCheckResult(BaseModel):
    valid: bool
    violation: str | None = None
    code: int


class FormatCheckResponse(BaseModel):
    results: list[FormatCheckResult]


class FitRequest(BaseModel):
    chunks: list[list[list[float]]]
    q: int = Field(ge=2)
    compression: str


class FitResponse(BaseModel):
    spec: dict


# --- rewards / advantages -------------------------------------------------

class ScorePair(BaseModel):
    pred: list[int]
    gt: list[int]


class ScoreRequest(BaseModel):
    spec: dict
    weights: dict
    pairs: list[ScorePair]


class ScoreResult(BaseModel):
    qacr: float | None = None
    ctar: float | None = None
    fcr: float | None = None
    mdpr: float | None = None
    error: ApiError | None = None


class ScoreResponse(BaseModel):
    results: list[ScoreResult]


class AdvantagesRequest(BaseModel):
    groups: list[list[float]]
    std_floor: float = Field(gt=0.0, default=1e-8)


class AdvantagesResult(BaseModel):
    advantages: list[float] | None = None
    error: ApiError | None = None


class AdvantagesResponse(BaseModel):
    results: list[AdvantagesResult]


# --- tasks ----------------------------------------------------------------

class SuiteRequest(BaseModel):
    n_tasks: int = Field(ge=1)
    seed: int = Field(ge=0)
    spec: dict


class SuiteResponse(BaseModel):
    tasks: list[dict]


class DemosRequest(BaseModel):
    task: dict
    n_demos: int = Field(ge=1)
    noise_scale: float = Field(ge=0.0)
    seed: int = Field(ge=0)
    spec: dict


class DemosResponse(BaseModel):
    demos: list[dict]


# --- metrics ----------------------------------------------------------------

class MetricsRequest(BaseModel):
    matrix: list[list[float]]
    include_final_nbt: bool = True


class MetricsResponse(BaseModel):
    fwt: float
    nbt: float
    auc: float
    nbt_k: list[float]
    auc_k: list[float]


# --- training ----------------------------------------------------------------

class TrainRequest(BaseModel):
    config: dict
    demos: list[dict]
    epochs: int = Field(ge=0)
    seed: int = Field(ge=0)
    collect_curves: bool = True
    max_steps: int | None = Field(default=None, ge=1)
    init_checkpoint_b64: str | None = None


class TrainResponse(BaseModel):
    checkpoint_b64: str
    curves: list[list[float]]


class ContinualRequest(BaseModel):
    config: dict


class ContinualResponse(BaseModel):
    report: dict


class EvalRequest(BaseModel):
    config: dict
    task: dict
    checkpoint_b64: str
    n_episodes: int = Field(ge=1)
    seed: int = Field(ge=0)


class EvalResponse(BaseModel):
    success: float
