"""HTTP service layer: pydantic schemas and the FastAPI application."""

from .app import app, create_app, handle_estimate, handle_simulate, handle_window_sweep

__all__ = [
    "app",
    "create_app",
    "handle_estimate",
    "handle_simulate",
    "handle_window_sweep",
]
