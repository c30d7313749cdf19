import json

import numpy as np
import pytest

from blocksparse import (
    Dictionary,
    kronecker_dictionary,
    observe,
    random_unit_norm,
    sample_signal,
    stream,
)
from blocksparse.cli import main
from blocksparse.textio import (
    observation_to_signal,
    read_json,
    read_vector,
    write_matrix,
    write_vector,
)


def run_cli(*argv):
    return main([str(a) for a in argv])


class TestAnalyze:
    def test_identity_dictionary(self, tmp_path, capsys):
        path = tmp_path / "id.txt"
        write_matrix(str(path), Dictionary(np.eye(4), 1))
        assert run_cli("analyze", "--matrix", path) == 0
        report = json.loads(capsys.readouterr().out)
        assert report["coherence"] == pytest.approx(0.0)
        assert report["mu_I"] == 0.0
        assert report["spectral_norm"] == pytest.approx(1.0)
        assert report["bic_satisfied"] is True
        assert {"c0", "c1", "c2", "sparsity_budget_k"} <= set(report)

    def test_non_unit_column_warning_field(self, tmp_path, capsys):
        path = tmp_path / "scaled.txt"
        path.write_text("2 2 1\n2 0\n0 1\n")
        assert run_cli("analyze", "--matrix", path) == 0
        report = json.loads(capsys.readouterr().out)
        assert "renormalized" in report["warning"]

    def test_kronecker_file_reports_zero_intra(self, tmp_path, capsys):
        gen = stream(5)
        P = gen.standard_normal((6, 4))
        P /= np.linalg.norm(P, axis=0)
        d = kronecker_dictionary(P, np.eye(2))
        path = tmp_path / "kron.txt"
        write_matrix(str(path), d)
        assert run_cli("analyze", "--matrix", path) == 0
        report = json.loads(capsys.readouterr().out)
        assert report["mu_I"] <= 1e-9

    def test_indivisible_block_size_is_input_error(self, tmp_path, capsys):
        path = tmp_path / "id.txt"
        write_matrix(str(path), Dictionary(np.eye(4), 1))
        assert run_cli("analyze", "--matrix", path, "--m", 3) == 1

    def test_missing_file_exit_code(self, tmp_path, capsys):
        code = run_cli("analyze", "--matrix", tmp_path / "ghost.txt")
        assert code == 3
        assert "ghost.txt" in capsys.readouterr().err


class TestGenerate:
    def test_deterministic_output_with_sidecar(self, tmp_path):
        out1 = tmp_path / "a.txt"
        out2 = tmp_path / "b.txt"
        for out in (out1, out2):
            assert run_cli(
                "generate", "--n", 6, "--p", 12, "--m", 2, "--seed", 9, "--output", out
            ) == 0
        assert out1.read_bytes() == out2.read_bytes()
        sidecar = read_json(str(out1) + ".json")
        assert sidecar["seed"] == 9 and sidecar["n"] == 6

    def test_tau_recorded(self, tmp_path):
        out = tmp_path / "t.txt"
        assert run_cli(
            "generate", "--n", 10, "--p", 20, "--m", 2, "--tau", 2, "--output", out
        ) == 0
        sidecar = read_json(str(out) + ".json")
        assert sidecar["multiplier"] == 2
        assert sidecar["kind"] == "spectral_multiplied"


class TestCondition:
    def test_csv_schema_and_report(self, tmp_path, capsys):
        mat = tmp_path / "d.txt"
        write_matrix(str(mat), random_unit_norm(12, 24, 2, seed=4))
        csv = tmp_path / "trials.csv"
        report_path = tmp_path / "report.json"
        assert run_cli(
            "condition", "--matrix", mat, "--k", 2, "--trials", 10,
            "--seed", 3, "--output", csv, "--report", report_path,
        ) == 0
        lines = csv.read_text().splitlines()
        assert lines[0] == "trial,seed,k,sigma_min,sigma_max,within_interval"
        assert len(lines) == 11
        report = read_json(str(report_path))
        assert report["seed"] == 3 and report["trials"] == 10


class TestRecoverRegress:
    @pytest.fixture
    def instance(self, tmp_path):
        d = random_unit_norm(16, 24, 2, seed=8)
        gen = stream(77)
        sig = sample_signal((1, 7), d.num_blocks, 2, gen)
        obs = observe(d, sig, 0.0)
        mat = tmp_path / "d.txt"
        yfile = tmp_path / "y.txt"
        write_matrix(str(mat), d)
        write_vector(str(yfile), observation_to_signal(obs.y))
        return d, sig, mat, yfile

    def test_recover_round_trip(self, instance, tmp_path):
        d, sig, mat, yfile = instance
        out = tmp_path / "beta.txt"
        code = run_cli(
            "recover", "--matrix", mat, "--observation", yfile,
            "--tol", 1e-8, "--output", out,
        )
        assert code == 0
        recovered = read_vector(str(out))
        assert recovered.support == sig.support
        err = np.linalg.norm(recovered.beta - sig.beta) / np.linalg.norm(sig.beta)
        assert err <= 1e-4
        diag = read_json(str(out) + ".json")
        assert diag["converged"] is True

    def test_recover_exit_two_on_iteration_cap(self, instance, tmp_path, capsys):
        _, _, mat, yfile = instance
        out = tmp_path / "beta.txt"
        code = run_cli(
            "recover", "--matrix", mat, "--observation", yfile,
            "--max-iters", 2, "--output", out,
        )
        assert code == 2
        assert read_json(str(out) + ".json")["converged"] is False

    def test_regress_with_debias(self, instance, tmp_path):
        d, sig, mat, yfile = instance
        out = tmp_path / "beta.txt"
        code = run_cli(
            "regress", "--matrix", mat, "--observation", yfile,
            "--lambda", 0.05, "--sigma", 0.1, "--debias", "--output", out,
        )
        assert code == 0
        recovered = read_vector(str(out))
        assert recovered.support == sig.support


class TestCertify:
    def test_exact_mode(self, tmp_path, capsys):
        d = random_unit_norm(16, 24, 2, seed=8)
        gen = stream(42)
        sig = sample_signal((2, 9), d.num_blocks, 2, gen)
        mat = tmp_path / "d.txt"
        sigfile = tmp_path / "s.txt"
        write_matrix(str(mat), d)
        write_vector(str(sigfile), sig)
        assert run_cli("certify", "--matrix", mat, "--signal", sigfile) == 0
        report = json.loads(capsys.readouterr().out)
        assert "Z0" in report and isinstance(report["passed"], bool)

    def test_group_mode_outputs_statistics(self, tmp_path, capsys):
        d = random_unit_norm(16, 24, 2, seed=8)
        gen = stream(42)
        sig = sample_signal((2,), d.num_blocks, 2, gen)
        mat = tmp_path / "d.txt"
        sigfile = tmp_path / "s.txt"
        write_matrix(str(mat), d)
        write_vector(str(sigfile), sig)
        code = run_cli(
            "certify", "--matrix", mat, "--signal", sigfile,
            "--mode", "group", "--lambda", 2.0, "--sigma", 0.5,
        )
        assert code == 0
        report = json.loads(capsys.readouterr().out)
        assert {"Z0", "Z1", "norm_inv", "orthogonality_statistic"} <= set(report)


class TestExperimentCommand:
    def test_byte_identical_reruns(self, tmp_path):
        config = {
            "n": 20,
            "p": 40,
            "m": 2,
            "k_sweep": [1, 2],
            "multipliers": [1],
            "candidate_pool": 3,
            "trials_per_point": 8,
            "master_seed": 12,
        }
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps(config))
        outs = []
        for name in ("run1", "run2"):
            outdir = tmp_path / name
            assert run_cli(
                "experiment", "recover", "--config", cfg_path, "--output-dir", outdir
            ) == 0
            outs.append(
                tuple(
                    (outdir / f).read_bytes()
                    for f in ("summary.csv", "trials.csv", "metrics.json")
                )
            )
        assert outs[0] == outs[1]

    def test_seed_override_changes_results(self, tmp_path):
        config = {
            "n": 20, "p": 40, "m": 2, "k_sweep": [2], "trials_per_point": 8,
            "candidate_pool": 2, "master_seed": 12,
        }
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps(config))
        digests = []
        for seed in (1, 2):
            outdir = tmp_path / f"seed{seed}"
            assert run_cli(
                "experiment", "recover", "--config", cfg_path,
                "--output-dir", outdir, "--seed", seed,
            ) == 0
            digests.append((outdir / "trials.csv").read_bytes())
            assert read_json(str(outdir / "config.json"))["master_seed"] == seed
        assert digests[0] != digests[1]

    def test_regress_kind(self, tmp_path):
        config = {
            "n": 20, "p": 40, "m": 2, "k_sweep": [1], "trials_per_point": 5,
            "candidate_pool": 2, "master_seed": 4,
            "noise": {"target_snr": 0.84, "lambda": 1.4592},
        }
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps(config))
        outdir = tmp_path / "reg"
        assert run_cli(
            "experiment", "regress", "--config", cfg_path, "--output-dir", outdir
        ) == 0
        lines = (outdir / "summary.csv").read_text().splitlines()
        assert len(lines) == 2
        assert lines[1].split(",")[5] != ""  # mean_err populated
