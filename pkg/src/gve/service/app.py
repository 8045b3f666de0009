"""FastAPI service wrapping the estimators, sweeps, and grid runner.

The handler functions operate on the pydantic models directly, so the
CLI can call them in-process; the FastAPI app routes the same functions
over HTTP. Package errors map to structured 400 responses whose ``code``
distinguishes bad input from numerical failure.
"""

from __future__ import annotations

import math
from itertools import product

import numpy as np
from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import __version__
from ..errors import InvalidInputError, NumericalError
from ..estimators import (
    bias_correct,
    default_window_candidates,
    gve_orthonormal,
    gve_rip,
    gve_tv,
    lambda_from_sigma,
    select_window_inflection,
    select_window_oracle,
)
from ..simulate import InstanceConfig, run_grid
from .schemas import (
    EstimateRequest,
    EstimateResponse,
    HealthResponse,
    ReportRowModel,
    SimulateRequest,
    SimulateResponse,
    SweepPoint,
    WindowSweepRequest,
    WindowSweepResponse,
)


def _load_design(payload):
    if payload.design is None:
        return None
    x = np.asarray(payload.design, dtype=float)
    if x.ndim != 2:
        raise InvalidInputError("design must be a list of equal-length rows")
    return x


def _frame_dimensions(x, y, method):
    """(sample count, windowed-domain length, signal dimension) per method."""
    if method in ("svd", "fast"):
        if x is None:
            raise InvalidInputError(f"method {method!r} requires a design matrix")
        n, p = x.shape
        return n, p, p
    if x is not None:
        raise InvalidInputError(
            f"method {method!r} operates on the response alone; omit the design"
        )
    p = y.shape[0]
    domain = p - 1 if method == "tv" else p
    return p, domain, p


def _estimate_fixed(x, y, method, length):
    if method == "ortho":
        return gve_orthonormal(y, length)
    if method == "tv":
        return gve_tv(y, length)
    return gve_rip(x, y, length, method)


def handle_estimate(payload: EstimateRequest) -> EstimateResponse:
    y = np.asarray(payload.response, dtype=float)
    x = _load_design(payload)
    n, domain, p = _frame_dimensions(x, y, payload.method)
    if payload.window == "auto":
        candidates = default_window_candidates(n, domain)
        length, estimates = select_window_inflection(x, y, candidates, payload.method)
        estimate = estimates[candidates.index(length)]
    else:
        length = int(payload.window)
        estimate = _estimate_fixed(x, y, payload.method, length)
    if payload.bias_correct:
        estimate = bias_correct(estimate, p)
    lam = lambda_from_sigma(estimate.sigma2, y.shape[0]) if payload.emit_lambda else None
    return EstimateResponse(
        sigma2=estimate.sigma2,
        sigma=estimate.sigma,
        window=length,
        method=estimate.method,
        bias_corrected=estimate.bias_corrected,
        lambda_=lam,
    )


def handle_window_sweep(payload: WindowSweepRequest) -> WindowSweepResponse:
    y = np.asarray(payload.response, dtype=float)
    x = _load_design(payload)
    n, domain, _ = _frame_dimensions(x, y, payload.method)
    if payload.candidates == "all":
        candidates = [
            length for length in range(1, n + 1) if domain // length >= 2
        ]
    else:
        candidates = sorted(set(int(c) for c in payload.candidates))
    if not candidates:
        raise InvalidInputError("no valid candidate window lengths")
    if payload.sigma2_true is not None:
        selected, estimates, errors = select_window_oracle(
            x, y, payload.sigma2_true, candidates, payload.method
        )
        points = [
            SweepPoint(window=c, sigma2=e.sigma2, abs_error=float(err))
            for c, e, err in zip(candidates, estimates, errors)
        ]
        rule = "oracle"
    else:
        selected, estimates = select_window_inflection(
            x, y, candidates, payload.method
        )
        points = [
            SweepPoint(window=c, sigma2=e.sigma2)
            for c, e in zip(candidates, estimates)
        ]
        rule = "inflection"
    return WindowSweepResponse(points=points, selected=selected, rule=rule)


def handle_simulate(payload: SimulateRequest) -> SimulateResponse:
    if not payload.p or not payload.beta_norm or not payload.alpha:
        raise InvalidInputError("p, beta_norm, and alpha lists must be non-empty")
    grid = [
        InstanceConfig(
            n=payload.n,
            p=p,
            alpha=alpha,
            beta_norm=beta_norm,
            sigma2=payload.sigma2,
        )
        for p, beta_norm, alpha in product(payload.p, payload.beta_norm, payload.alpha)
    ]
    rows = run_grid(
        grid,
        methods=payload.methods,
        trials=payload.trials,
        base_seed=payload.seed,
        workers=payload.workers,
        window=payload.window,
        timing=payload.timing,
    )
    models = []
    for row in rows:
        sigma2_hat = row.sigma2_hat
        models.append(
            ReportRowModel(
                method=row.method,
                n=row.n,
                p=row.p,
                alpha=row.alpha,
                beta_norm=row.beta_norm,
                sigma2_true=row.sigma2_true,
                trial=row.trial,
                # NaN marks an error row but is not valid JSON
                sigma2_hat=None if math.isnan(sigma2_hat) else sigma2_hat,
                window_l=row.window_l,
                runtime_us=row.runtime_us,
                seed=row.seed,
                status=row.status,
            )
        )
    return SimulateResponse(rows=models)


def create_app() -> FastAPI:
    app = FastAPI(title="gve", version=__version__)

    @app.exception_handler(InvalidInputError)
    async def invalid_input_handler(request: Request, exc: InvalidInputError):
        return JSONResponse(
            status_code=400,
            content={"detail": {"code": "invalid-input", "message": str(exc)}},
        )

    @app.exception_handler(NumericalError)
    async def numerical_handler(request: Request, exc: NumericalError):
        return JSONResponse(
            status_code=400,
            content={"detail": {"code": "numerical-failure", "message": str(exc)}},
        )

    @app.get("/health", response_model=HealthResponse)
    def health() -> HealthResponse:
        return HealthResponse(status="ok", version=__version__)

    @app.post("/estimate", response_model=EstimateResponse, response_model_by_alias=True)
    def estimate(payload: EstimateRequest) -> EstimateResponse:
        return handle_estimate(payload)

    @app.post("/window-sweep", response_model=WindowSweepResponse)
    def window_sweep(payload: WindowSweepRequest) -> WindowSweepResponse:
        return handle_window_sweep(payload)

    @app.post("/simulate", response_model=SimulateResponse)
    def simulate(payload: SimulateRequest) -> SimulateResponse:
        return handle_simulate(payload)

    return app


app = create_app()
