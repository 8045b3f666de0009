"""Command-line client for the estimation service.

Subcommands load files, build the same request models the HTTP API
accepts, and dispatch them either to the in-process handlers (default)
or to a running server (``--server``). Exit codes: 0 success, 2 usage or
format problems, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import sys

from .errors import InvalidInputError, NumericalError
from .io import load_matrix, load_vector, write_report
from .service.app import handle_estimate, handle_simulate, handle_window_sweep
from .service.schemas import (
    EstimateRequest,
    EstimateResponse,
    SimulateRequest,
    SimulateResponse,
    WindowSweepRequest,
    WindowSweepResponse,
)
from .simulate import DEFAULT_METHODS, ReportRow

USAGE_EXIT = 2
NUMERICAL_EXIT = 3


class CommandError(Exception):
    def __init__(self, exit_code, message):
        super().__init__(message)
        self.exit_code = exit_code


class ServiceClient:
    """Thin dispatcher: in-process handlers, or HTTP when a server is set.

    ``http_client`` accepts any httpx-compatible client (tests inject a
    TestClient); when omitted, one is created lazily for the server URL.
    """

    def __init__(self, server=None, http_client=None):
        self._server = server
        self._http = http_client

    def _post(self, path, payload, response_model):
        if self._server is None and self._http is None:
            handler = {
                "/estimate": handle_estimate,
                "/window-sweep": handle_window_sweep,
                "/simulate": handle_simulate,
            }[path]
            try:
                return handler(payload)
            except InvalidInputError as exc:
                raise CommandError(USAGE_EXIT, str(exc)) from exc
            except NumericalError as exc:
                raise CommandError(NUMERICAL_EXIT, str(exc)) from exc
        if self._http is None:
            import httpx

            self._http = httpx.Client(base_url=self._server, timeout=None)
        resp = self._http.post(path, json=payload.model_dump(mode="json"))
        if resp.status_code != 200:
            raise CommandError(*_translate_http_error(resp))
        return response_model.model_validate(resp.json())

    def estimate(self, payload) -> EstimateResponse:
        return self._post("/estimate", payload, EstimateResponse)

    def window_sweep(self, payload) -> WindowSweepResponse:
        return self._post("/window-sweep", payload, WindowSweepResponse)

    def simulate(self, payload) -> SimulateResponse:
        return self._post("/simulate", payload, SimulateResponse)


def _translate_http_error(resp):
    try:
        detail = resp.json().get("detail")
    except ValueError:
        detail = None
    if isinstance(detail, dict) and "code" in detail:
        exit_code = NUMERICAL_EXIT if detail["code"] == "numerical-failure" else USAGE_EXIT
        return exit_code, detail.get("message", detail["code"])
    if resp.status_code in (400, 422):
        return USAGE_EXIT, f"request rejected: {detail}"
    return NUMERICAL_EXIT, f"server error {resp.status_code}: {detail}"


def _fmt(value):
    return "%.12g" % value


def _parse_window(text):
    if text == "auto":
        return "auto"
    try:
        return int(text)
    except ValueError:
        raise CommandError(
            USAGE_EXIT, f"--window must be an integer or 'auto', got {text!r}"
        ) from None


def _int_list(text, flag):
    try:
        return [int(tok) for tok in text.split(",") if tok != ""]
    except ValueError:
        raise CommandError(USAGE_EXIT, f"{flag} expects comma-separated integers") from None


def _float_list(text, flag):
    try:
        return [float(tok) for tok in text.split(",") if tok != ""]
    except ValueError:
        raise CommandError(USAGE_EXIT, f"{flag} expects comma-separated reals") from None


def _load_files(design_path, response_path):
    try:
        y = load_vector(response_path)
        x = load_matrix(design_path) if design_path else None
    except OSError as exc:
        raise CommandError(USAGE_EXIT, str(exc)) from exc
    except InvalidInputError as exc:
        raise CommandError(USAGE_EXIT, str(exc)) from exc
    return x, y


def _cmd_estimate(args):
    x, y = _load_files(args.design, args.response)
    payload = EstimateRequest(
        design=None if x is None else x.tolist(),
        response=y.tolist(),
        method=args.method,
        window=_parse_window(args.window),
        bias_correct=args.bias_correct,
        emit_lambda=args.emit_lambda,
    )
    result = ServiceClient(args.server).estimate(payload)
    line = (
        f"sigma2={_fmt(result.sigma2)} sigma={_fmt(result.sigma)} L={result.window}"
    )
    if result.lambda_ is not None:
        line += f" lambda={_fmt(result.lambda_)}"
    print(line)
    return 0


def _cmd_window_sweep(args):
    x, y = _load_files(args.design, args.response)
    if args.candidates == "all":
        candidates = "all"
    else:
        candidates = _int_list(args.candidates, "--candidates")
    payload = WindowSweepRequest(
        design=None if x is None else x.tolist(),
        response=y.tolist(),
        method=args.method,
        candidates=candidates,
        sigma2_true=args.sigma2_true,
    )
    result = ServiceClient(args.server).window_sweep(payload)
    oracle = result.rule == "oracle"
    print("window_L,sigma2_hat,abs_error" if oracle else "window_L,sigma2_hat")
    for point in result.points:
        if oracle:
            print(f"{point.window},{_fmt(point.sigma2)},{_fmt(point.abs_error)}")
        else:
            print(f"{point.window},{_fmt(point.sigma2)}")
    print(f"selected L={result.selected} rule={result.rule}")
    return 0


def _cmd_simulate(args):
    payload = SimulateRequest(
        p=_int_list(args.p, "--p"),
        beta_norm=_float_list(args.beta_norm, "--beta-norm"),
        alpha=_float_list(args.alpha, "--alpha"),
        n=args.n,
        sigma2=args.sigma2,
        trials=args.trials,
        seed=args.seed,
        methods=[m for m in args.methods.split(",") if m],
        workers=args.workers,
        window=_parse_window(args.window),
        timing=args.timing,
    )
    result = ServiceClient(args.server).simulate(payload)
    rows = [
        ReportRow(
            method=m.method,
            n=m.n,
            p=m.p,
            alpha=m.alpha,
            beta_norm=m.beta_norm,
            sigma2_true=m.sigma2_true,
            trial=m.trial,
            sigma2_hat=float("nan") if m.sigma2_hat is None else m.sigma2_hat,
            window_l=m.window_l,
            runtime_us=m.runtime_us,
            seed=m.seed,
            status=m.status,
        )
        for m in result.rows
    ]
    try:
        write_report(rows, args.out)
    except OSError as exc:
        raise CommandError(USAGE_EXIT, str(exc)) from exc
    print(f"rows={len(rows)} out={args.out}")
    return 0


def _cmd_serve(args):
    import uvicorn

    from .service.app import app

    uvicorn.run(app, host=args.host, port=args.port)
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="gve", description="Greedy window-based noise variance estimation."
    )
    sub = parser.add_subparsers(dest="command", required=True)

    est = sub.add_parser("estimate", help="estimate noise variance from files")
    est.add_argument("--design", help="CSV design matrix (omit for the orthonormal frame)")
    est.add_argument("--response", required=True, help="response vector, one value per line")
    est.add_argument("--method", required=True, choices=["ortho", "svd", "fast", "tv"])
    est.add_argument("--window", default="auto", help="window length or 'auto'")
    est.add_argument("--bias-correct", action="store_true")
    est.add_argument("--emit-lambda", action="store_true",
                     help="also print the matching LASSO penalty level")
    est.add_argument("--server", help="base URL of a running service")
    est.set_defaults(func=_cmd_estimate)

    sweep = sub.add_parser("window-sweep", help="scan candidate window lengths")
    sweep.add_argument("--design")
    sweep.add_argument("--response", required=True)
    sweep.add_argument("--method", required=True, choices=["ortho", "svd", "fast", "tv"])
    sweep.add_argument("--candidates", default="all",
                       help="comma-separated lengths, or 'all'")
    sweep.add_argument("--sigma2-true", type=float, default=None,
                       help="known variance; enables the oracle selection rule")
    sweep.add_argument("--server")
    sweep.set_defaults(func=_cmd_window_sweep)

    sim = sub.add_parser("simulate", help="run a Monte-Carlo comparison grid")
    sim.add_argument("--p", required=True, help="comma-separated dimensions")
    sim.add_argument("--beta-norm", required=True, help="comma-separated signal norms")
    sim.add_argument("--alpha", required=True, help="comma-separated sparsity exponents")
    sim.add_argument("--n", type=int, default=100)
    sim.add_argument("--sigma2", type=float, default=1.0)
    sim.add_argument("--trials", type=int, default=1)
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--methods", default=",".join(DEFAULT_METHODS))
    sim.add_argument("--workers", type=int, default=1)
    sim.add_argument("--window", default="auto", help="window length or 'auto'")
    sim.add_argument("--timing", action="store_true",
                     help="record wall-clock runtimes (breaks rerun byte-identity)")
    sim.add_argument("--out", required=True, help="report CSV destination")
    sim.add_argument("--server")
    sim.set_defaults(func=_cmd_simulate)

    srv = sub.add_parser("serve", help="run the HTTP service")
    srv.add_argument("--host", default="127.0.0.1")
    srv.add_argument("--port", type=int, default=8000)
    srv.set_defaults(func=_cmd_serve)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CommandError as exc:
        print(f"gve: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
