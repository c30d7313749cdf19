"""End-to-end round trip against the experiment CLI when it is installed.

The plotting package only ever touches the CLI's file outputs, never its
Python API, so this exercises the real cross-package interface.
"""

import json
import shutil
import subprocess

import pytest

from bsplots.render import render

needs_cli = pytest.mark.skipif(
    shutil.which("blocksparse") is None, reason="blocksparse CLI not installed"
)


def _run_experiment(kind, tmp_path, config):
    cfg = tmp_path / "config.json"
    cfg.write_text(json.dumps(config))
    outdir = tmp_path / f"out-{kind}"
    subprocess.run(
        [
            "blocksparse",
            "experiment",
            kind,
            "--config",
            str(cfg),
            "--output-dir",
            str(outdir),
        ],
        check=True,
    )
    return outdir


@needs_cli
def test_recovery_round_trip(tmp_path):
    outdir = _run_experiment(
        "recover",
        tmp_path,
        {
            "n": 20,
            "p": 40,
            "m": 2,
            "k_sweep": [1, 2, 4],
            "multipliers": [1],
            "candidate_pool": 3,
            "trials_per_point": 10,
            "master_seed": 1,
        },
    )
    fig1 = tmp_path / "rec1.png"
    fig2 = tmp_path / "rec2.png"
    render("recovery_curves", [str(outdir / "summary.csv")], str(fig1))
    render("recovery_curves", [str(outdir / "summary.csv")], str(fig2))
    assert fig1.read_bytes() == fig2.read_bytes()
    table = tmp_path / "table.txt"
    render("metrics_table", [str(outdir / "metrics.json")], str(table))
    assert "||Phi_tau||_2" in table.read_text()


@needs_cli
def test_regression_round_trip(tmp_path):
    outdir = _run_experiment(
        "regress",
        tmp_path,
        {
            "n": 20,
            "p": 40,
            "m": 2,
            "k_sweep": [1, 2],
            "multipliers": [1],
            "candidate_pool": 3,
            "trials_per_point": 8,
            "master_seed": 2,
            "noise": {"target_snr": 0.84, "lambda": 1.4592},
        },
    )
    fig1 = tmp_path / "reg1.png"
    fig2 = tmp_path / "reg2.png"
    render("regression_curves", [str(outdir / "summary.csv")], str(fig1))
    render("regression_curves", [str(outdir / "summary.csv")], str(fig2))
    assert fig1.read_bytes() == fig2.read_bytes()
