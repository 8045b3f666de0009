"""Plain-text file formats: CSV matrices, one-per-line vectors, reports.

All numeric output uses locale-independent ``%.17g`` formatting, enough
digits to round-trip IEEE doubles exactly. Parse errors carry 1-based
line (and column) positions.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import DataFormatError, InvalidInputError
from .simulate import ReportRow

REPORT_SCHEMA_LINE = "# schema=1"
REPORT_HEADER = (
    "method,n,p,alpha,beta_norm,sigma2_true,trial,"
    "sigma2_hat,window_L,runtime_us,seed,status"
)


def _fmt(value):
    return "%.17g" % value


def _parse_fields(fields, line_no):
    row = []
    for col, token in enumerate(fields, start=1):
        try:
            value = float(token)
        except ValueError:
            raise DataFormatError(
                f"line {line_no}, column {col}: not a number: {token.strip()!r}",
                line=line_no,
                column=col,
            ) from None
        if not math.isfinite(value):
            raise DataFormatError(
                f"line {line_no}, column {col}: non-finite value {token.strip()!r}",
                line=line_no,
                column=col,
            )
        row.append(value)
    return row


def _data_lines(path):
    with open(path, "r", encoding="ascii") as handle:
        lines = handle.read().split("\n")
    if lines and lines[-1] == "":  # trailing newline
        lines.pop()
    return lines


def load_matrix(path):
    """Read a headerless CSV of reals as a 2-D array."""
    lines = _data_lines(path)
    if not lines:
        raise DataFormatError(f"{path}: empty matrix file", line=1)
    rows = []
    width = None
    for line_no, line in enumerate(lines, start=1):
        fields = line.split(",")
        if width is None:
            width = len(fields)
        elif len(fields) != width:
            raise DataFormatError(
                f"line {line_no}: expected {width} fields, got {len(fields)}",
                line=line_no,
            )
        rows.append(_parse_fields(fields, line_no))
    return np.array(rows, dtype=float)


def load_vector(path):
    """Read a one-value-per-line file of reals as a 1-D array."""
    lines = _data_lines(path)
    if not lines:
        raise DataFormatError(f"{path}: empty vector file", line=1)
    values = []
    for line_no, line in enumerate(lines, start=1):
        values.extend(_parse_fields([line], line_no))
    return np.array(values, dtype=float)


def save_matrix(a, path):
    """Write a 2-D array as headerless CSV, 17 significant digits."""
    a = np.asarray(a, dtype=float)
    if a.ndim != 2:
        raise InvalidInputError(f"expected a 2-D array, got ndim={a.ndim}")
    with open(path, "w", encoding="ascii") as handle:
        for row in a:
            handle.write(",".join(_fmt(v) for v in row))
            handle.write("\n")


def save_vector(v, path):
    """Write a 1-D array one value per line, 17 significant digits."""
    v = np.asarray(v, dtype=float)
    if v.ndim != 1:
        raise InvalidInputError(f"expected a 1-D array, got ndim={v.ndim}")
    with open(path, "w", encoding="ascii") as handle:
        for value in v:
            handle.write(_fmt(value))
            handle.write("\n")


def format_report_row(row):
    return ",".join(
        [
            row.method,
            str(row.n),
            str(row.p),
            _fmt(row.alpha),
            _fmt(row.beta_norm),
            _fmt(row.sigma2_true),
            str(row.trial),
            _fmt(row.sigma2_hat),
            str(row.window_l),
            str(row.runtime_us),
            str(row.seed),
            row.status,
        ]
    )


def write_report(rows, path):
    """Write report rows as CSV under a schema comment and fixed header."""
    with open(path, "w", encoding="ascii") as handle:
        handle.write(REPORT_SCHEMA_LINE + "\n")
        handle.write(REPORT_HEADER + "\n")
        for row in rows:
            handle.write(format_report_row(row) + "\n")


def read_report(path):
    """Read a report file back into rows (inverse of ``write_report``)."""
    lines = _data_lines(path)
    body = [ln for ln in lines if not ln.startswith("#")]
    if not body or body[0] != REPORT_HEADER:
        raise DataFormatError(f"{path}: missing or wrong report header", line=1)
    rows = []
    for line_no, line in enumerate(body[1:], start=2):
        parts = line.split(",")
        if len(parts) != 12:
            raise DataFormatError(
                f"line {line_no}: expected 12 fields, got {len(parts)}", line=line_no
            )
        try:
            rows.append(
                ReportRow(
                    method=parts[0],
                    n=int(parts[1]),
                    p=int(parts[2]),
                    alpha=float(parts[3]),
                    beta_norm=float(parts[4]),
                    sigma2_true=float(parts[5]),
                    trial=int(parts[6]),
                    sigma2_hat=float(parts[7]),
                    window_l=int(parts[8]),
                    runtime_us=int(parts[9]),
                    seed=int(parts[10]),
                    status=parts[11],
                )
            )
        except ValueError as exc:
            raise DataFormatError(
                f"line {line_no}: {exc}", line=line_no
            ) from None
    return rows
