"""Parsing and validation of the experiment output files.

This package reads only the documented file formats (summary CSV and the
per-multiplier metrics JSON); it never recomputes statistics, so figures can
never disagree with the files they were rendered from.
"""

from __future__ import annotations

import csv
import json

SUMMARY_COLUMNS = (
    "tau",
    "k",
    "trials",
    "successes",
    "success_rate",
    "mean_err",
    "stderr",
    "nonconverged",
)

METRIC_ROWS = (
    ("spectral_norm", "||Phi_tau||_2", r"$\|\Phi_\tau\|_2$"),
    ("coherence", "mu(Phi_tau)", r"$\mu(\Phi_\tau)$"),
    ("mu_B", "mu_B(Phi_tau)", r"$\mu_B(\Phi_\tau)$"),
    ("mu_I", "mu_I(Phi_tau)", r"$\mu_I(\Phi_\tau)$"),
)


class SchemaError(ValueError):
    """Input file does not match the documented schema."""


def _maybe_float(cell: str):
    return float(cell) if cell != "" else None


def read_summary(path: str) -> list[dict]:
    """Rows of a summary CSV, with empty cells mapped to None.

    Raises SchemaError listing any missing columns and on empty data.
    """
    with open(path, newline="") as handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: empty file") from None
        missing = [col for col in SUMMARY_COLUMNS if col not in header]
        if missing:
            raise SchemaError(f"{path}: missing columns {', '.join(missing)}")
        if tuple(header) != SUMMARY_COLUMNS:
            raise SchemaError(
                f"{path}: header {header!r} does not match the summary schema "
                f"{list(SUMMARY_COLUMNS)!r}"
            )
        rows = []
        for line_no, cells in enumerate(reader, start=2):
            if not cells:
                continue
            if len(cells) != len(SUMMARY_COLUMNS):
                raise SchemaError(f"{path}:{line_no}: wrong cell count")
            rows.append(
                {
                    "tau": int(cells[0]),
                    "k": int(cells[1]),
                    "trials": int(cells[2]),
                    "successes": int(cells[3]) if cells[3] else None,
                    "success_rate": _maybe_float(cells[4]),
                    "mean_err": _maybe_float(cells[5]),
                    "stderr": _maybe_float(cells[6]),
                    "nonconverged": int(cells[7]),
                }
            )
    if not rows:
        raise SchemaError(f"{path}: no data rows")
    return rows


def require_values(rows: list[dict], column: str, path: str) -> None:
    if any(row[column] is None for row in rows):
        raise SchemaError(f"{path}: column {column!r} has empty cells")


def read_metrics(path: str) -> dict[int, dict]:
    """Per-multiplier measure table keyed by integer tau."""
    with open(path) as handle:
        payload = json.load(handle)
    if not isinstance(payload, dict) or not payload:
        raise SchemaError(f"{path}: expected a non-empty JSON object")
    table = {}
    for key, entry in payload.items():
        missing = [name for name, _, _ in METRIC_ROWS if name not in entry]
        if missing:
            raise SchemaError(f"{path}: tau={key} missing fields {', '.join(missing)}")
        table[int(key)] = entry
    return table


def curves_by_tau(rows: list[dict], value_column: str) -> dict[int, list[tuple]]:
    """(k, value[, stderr]) points per tau, sorted by k; no re-aggregation."""
    out: dict[int, list[tuple]] = {}
    for row in rows:
        point = (row["k"], row[value_column])
        if value_column == "mean_err":
            point = point + (row["stderr"],)
        out.setdefault(row["tau"], []).append(point)
    return {tau: sorted(points) for tau, points in out.items()}
