"""Request/response models of the HTTP service.

File contents travel as plain UTF-8 text fields: clients keep ownership of
paths, the service stays stateless, and output text is written to disk
verbatim so replay determinism survives the wire.
"""

from __future__ import annotations

from pydantic import BaseModel, Field, field_validator

from .experiments import METHODS


class GenerateRequest(BaseModel):
    nodes: int = Field(default=4400, ge=1)
    edges: int = Field(default=120, ge=1)
    covariate_dim: int = Field(default=10, ge=1)
    seed: int = 0
    membership_weights: tuple[float, float, float] = (0.7, 0.2, 0.1)
    confounding_scale: float = 1.0
    baseline_scale: float = 1.0
    effect_scale: float = 5.0
    spillover_scale: float = 3.0
    effect_bias: float = 10.0
    noise_scale: float = Field(default=1.0, ge=0.0)


class GenerateResponse(BaseModel):
    graph_text: str
    attrs_csv: str
    node_count: int
    edge_count: int


class EstimateRequest(BaseModel):
    graph_text: str
    attrs_csv: str
    l2: float = Field(default=1.0, ge=0.0)


class EstimateResponse(BaseModel):
    ite_csv: str
    correlation_with_true: float | None
    fallback_used: bool


class SelectRequest(BaseModel):
    graph_text: str
    attrs_csv: str
    ite_csv: str | None = None
    method: str = "cauim-celf"
    k: int = Field(default=15, ge=1)
    p: float = Field(default=0.01, ge=0.0, le=1.0)
    model: str = "sicp"
    horizon: int = Field(default=10, ge=0)
    select_rounds: int = Field(default=25, ge=1)
    eval_rounds: int = Field(default=25, ge=1)
    repetitions: int = Field(default=20, ge=1)
    seed: int = 0
    noise_sigma: float = Field(default=0.0, ge=0.0)
    l2: float = Field(default=1.0, ge=0.0)
    stop_on_negative: bool = False
    workers: int = Field(default=1, ge=1)

    @field_validator("method")
    @classmethod
    def _known_method(cls, v: str) -> str:
        if v not in METHODS:
            raise ValueError(f"unknown method {v!r}; choose from {METHODS}")
        return v

    @field_validator("model")
    @classmethod
    def _known_model(cls, v: str) -> str:
        if v not in ("gic", "sicp"):
            raise ValueError("model must be 'gic' or 'sicp'")
        return v


class SelectResponse(BaseModel):
    trace_csv: str
    results_csv: str
    timings_csv: str


class SweepRequest(SelectRequest):
    param: str = "noise"
    grid: list[float] | None = None

    @field_validator("param")
    @classmethod
    def _known_param(cls, v: str) -> str:
        if v not in ("noise", "p", "iter"):
            raise ValueError("sweep parameter must be noise, p or iter")
        return v


class SweepResponse(BaseModel):
    sweep_csv: str
    timings_csv: str


class VerifyRequest(BaseModel):
    theorem1_instances: int = Field(default=200, ge=0)
    theorem2_instances: int = Field(default=100, ge=0)
    corollary_instances: int = Field(default=100, ge=0)
    gamma: float = Field(default=0.01, ge=0.0)
    seed: int = 0
    tau_all_one: bool = False
    max_nodes: int = Field(default=10, ge=3)
    max_edges: int = Field(default=6, ge=1)
    cap: int = Field(default=3, ge=1)
    workers: int = Field(default=1, ge=1)


class VerifyResponse(BaseModel):
    reports_csv: str
    summary: str
    all_hold: bool


class ErrorBody(BaseModel):
    code: str
    message: str
