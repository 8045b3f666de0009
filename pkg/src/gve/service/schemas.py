"""Pydantic request/response models for the HTTP service."""

from __future__ import annotations

from typing import Literal, Optional, Union

from pydantic import BaseModel, Field

from ..simulate import DEFAULT_METHODS


class EstimateRequest(BaseModel):
    """One estimation call.

    ``design`` is the n×p matrix as a list of rows; omit it to treat the
    response as already living in the orthonormal frame. ``window`` is a
    concrete length or "auto" for inflection-based selection.
    """

    design: Optional[list[list[float]]] = None
    response: list[float]
    method: Literal["ortho", "svd", "fast", "tv"]
    window: Union[int, Literal["auto"]] = "auto"
    bias_correct: bool = False
    emit_lambda: bool = False


class EstimateResponse(BaseModel):
    sigma2: float
    sigma: float
    window: int
    method: str
    bias_corrected: bool
    lambda_: Optional[float] = Field(default=None, alias="lambda")

    model_config = {"populate_by_name": True}


class SweepPoint(BaseModel):
    window: int
    sigma2: float
    abs_error: Optional[float] = None


class WindowSweepRequest(BaseModel):
    """Estimate at each candidate window and pick one.

    With ``sigma2_true`` the closest candidate wins (oracle rule);
    without it the inflection rule applies. ``candidates`` may be "all",
    meaning every length leaving at least two full windows.
    """

    design: Optional[list[list[float]]] = None
    response: list[float]
    method: Literal["ortho", "svd", "fast", "tv"]
    candidates: Union[list[int], Literal["all"]] = "all"
    sigma2_true: Optional[float] = None


class WindowSweepResponse(BaseModel):
    points: list[SweepPoint]
    selected: int
    rule: Literal["inflection", "oracle"]


class SimulateRequest(BaseModel):
    """One Monte-Carlo grid run over p × beta_norm × alpha cells."""

    p: list[int]
    beta_norm: list[float]
    alpha: list[float]
    n: int = 100
    sigma2: float = 1.0
    trials: int = 1
    seed: int = 0
    methods: list[str] = Field(default_factory=lambda: list(DEFAULT_METHODS))
    workers: int = 1
    window: Union[int, Literal["auto"]] = "auto"
    timing: bool = False


class ReportRowModel(BaseModel):
    method: str
    n: int
    p: int
    alpha: float
    beta_norm: float
    sigma2_true: float
    trial: int
    sigma2_hat: Optional[float] = None  # None when status is an error marker
    window_l: int
    runtime_us: int
    seed: int
    status: str


class SimulateResponse(BaseModel):
    rows: list[ReportRowModel]


class HealthResponse(BaseModel):
    status: str
    version: str
