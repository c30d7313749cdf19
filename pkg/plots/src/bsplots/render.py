"""Batch figure rendering for experiment outputs.

One invocation renders one output file.  Kinds:

* ``recovery_curves``: success rate vs k, one line per multiplier.
* ``recovery_extremal``: two summary CSVs (minimum-coherence selection
  first, maximum second); solid lines for the minimum-coherence
  dictionaries, dashed for the maximum.
* ``regression_curves``: mean regression error vs k with shaded
  plus/minus one standard error bands.
* ``metrics_table``: aligned plain-text and LaTeX-ready rows of the
  per-multiplier measure table.

Rendering is a pure function of the input bytes: figures carry no
timestamps, so reruns on identical input produce identical files.
"""

from __future__ import annotations

import argparse
import sys

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .schema import (
    METRIC_ROWS,
    SchemaError,
    curves_by_tau,
    read_metrics,
    read_summary,
    require_values,
)

FIGSIZE = (4.8, 3.0)  # golden-ratio-ish single-column figure

_METADATA = {
    ".png": {"Software": "blocksparse-plots"},
    ".pdf": {"CreationDate": None, "ModDate": None, "Producer": "blocksparse-plots"},
}

KINDS = ("recovery_curves", "recovery_extremal", "regression_curves", "metrics_table")


def _save(fig, output: str) -> None:
    suffix = "." + output.rsplit(".", 1)[-1].lower() if "." in output else ""
    metadata = _METADATA.get(suffix)
    if metadata is None:
        raise SchemaError(f"unsupported figure format {output!r} (use .png or .pdf)")
    fig.savefig(output, dpi=150, bbox_inches="tight", metadata=metadata)
    plt.close(fig)


def _new_axes(ylabel: str):
    fig, ax = plt.subplots(figsize=FIGSIZE)
    ax.set_xlabel("number of nonzero blocks k")
    ax.set_ylabel(ylabel)
    ax.grid(True, alpha=0.3)
    return fig, ax


def plot_recovery(csv_path: str, output: str) -> None:
    """Success-rate curves, one per multiplier."""
    rows = read_summary(csv_path)
    require_values(rows, "success_rate", csv_path)
    fig, ax = _new_axes("success rate")
    for tau, points in sorted(curves_by_tau(rows, "success_rate").items()):
        ks, rates = zip(*points)
        ax.plot(ks, rates, marker="o", markersize=3, label=rf"$\tau = {tau}$")
    ax.set_ylim(-0.02, 1.02)
    ax.legend()
    _save(fig, output)


def plot_recovery_extremal(min_csv: str, max_csv: str, output: str) -> None:
    """Min-coherence (solid) vs max-coherence (dashed) success curves."""
    fig, ax = _new_axes("success rate")
    for path, style, tag in ((min_csv, "-", "min"), (max_csv, "--", "max")):
        rows = read_summary(path)
        require_values(rows, "success_rate", path)
        for tau, points in sorted(curves_by_tau(rows, "success_rate").items()):
            ks, rates = zip(*points)
            ax.plot(
                ks,
                rates,
                style,
                marker="o",
                markersize=3,
                label=rf"$\tau = {tau}$ ({tag} coherence)",
            )
    ax.set_ylim(-0.02, 1.02)
    ax.legend(fontsize=8)
    _save(fig, output)


def plot_regression(csv_path: str, output: str) -> None:
    """Mean regression error vs k with plus/minus one stderr bands."""
    rows = read_summary(csv_path)
    require_values(rows, "mean_err", csv_path)
    require_values(rows, "stderr", csv_path)
    fig, ax = _new_axes("mean squared regression error")
    for tau, points in sorted(curves_by_tau(rows, "mean_err").items()):
        ks, means, errs = zip(*points)
        ax.plot(ks, means, marker="o", markersize=3, label=rf"$\tau = {tau}$")
        lower = [m - e for m, e in zip(means, errs)]
        upper = [m + e for m, e in zip(means, errs)]
        ax.fill_between(ks, lower, upper, alpha=0.25, linewidth=0)
    ax.legend()
    _save(fig, output)


def render_metrics_table(json_path: str, output: str) -> None:
    """Aligned plain-text table plus LaTeX-ready rows."""
    table = read_metrics(json_path)
    taus = sorted(table)
    label_width = max(len(label) for _, label, _ in METRIC_ROWS)
    lines = []
    header = "tau".ljust(label_width) + "".join(f"{tau:>12d}" for tau in taus)
    lines.append(header)
    lines.append("-" * len(header))
    for field, label, _ in METRIC_ROWS:
        cells = "".join(f"{table[tau][field]:>12.4f}" for tau in taus)
        lines.append(label.ljust(label_width) + cells)
    lines.append("")
    lines.append("% LaTeX rows")
    lines.append(r"$\tau$ & " + " & ".join(str(tau) for tau in taus) + r" \\")
    for field, _, latex in METRIC_ROWS:
        cells = " & ".join(f"{table[tau][field]:.4f}" for tau in taus)
        lines.append(f"{latex} & {cells} " + r"\\")
    with open(output, "w") as handle:
        handle.write("\n".join(lines) + "\n")


def render(kind: str, inputs: list[str], output: str) -> None:
    if kind not in KINDS:
        raise SchemaError(f"unknown figure kind {kind!r}; choose from {KINDS}")
    expected = 2 if kind == "recovery_extremal" else 1
    if len(inputs) != expected:
        raise SchemaError(
            f"kind {kind!r} takes exactly {expected} input file(s), got {len(inputs)}"
        )
    if kind == "recovery_curves":
        plot_recovery(inputs[0], output)
    elif kind == "recovery_extremal":
        plot_recovery_extremal(inputs[0], inputs[1], output)
    elif kind == "regression_curves":
        plot_regression(inputs[0], output)
    else:
        render_metrics_table(inputs[0], output)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="blocksparse-plot",
        description="Render figures from experiment summary CSV / metrics JSON files",
    )
    parser.add_argument(
        "--input",
        action="append",
        required=True,
        help="input file; repeat for recovery_extremal (min first, max second)",
    )
    parser.add_argument("--output", required=True, help="one output file per invocation")
    parser.add_argument("--kind", required=True, choices=KINDS)
    args = parser.parse_args(argv)
    try:
        render(args.kind, args.input, args.output)
    except SchemaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
