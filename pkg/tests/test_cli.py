import numpy as np
import pytest

from indexvar.cli import main
from indexvar.tscore import read_panel_csv


def run_cli(*args):
    return main([str(a) for a in args])


def read_bytes_tree(root):
    return {p.name: p.read_bytes() for p in sorted(root.iterdir())}


@pytest.fixture(scope="module")
def sim_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("sim")
    assert run_cli(
        "simulate", "--model", "ciaar", "--n", 5, "--q", 2, "--p", 2, "--s", 2,
        "--r", 1, "--T", 500, "--seed", 42, "--out", out,
    ) == 0
    return out


class TestSimulate:
    def test_outputs_exist(self, sim_dir):
        assert (sim_dir / "panel.csv").exists()
        assert (sim_dir / "dgp_params.json").exists()
        assert (sim_dir / "manifest.txt").exists()

    def test_panel_round_trips_at_full_precision(self, sim_dir):
        from indexvar.simulate import random_ciaar_params, simulate_ciaar

        panel = read_panel_csv(sim_dir / "panel.csv")
        params = random_ciaar_params(5, 2, 1, 2, 2, seed=42)
        direct = simulate_ciaar(params, 500, seed=42)
        assert np.array_equal(panel.values, direct.values)

    def test_seed_reruns_are_byte_identical(self, sim_dir, tmp_path):
        out2 = tmp_path / "again"
        run_cli(
            "simulate", "--model", "ciaar", "--n", 5, "--q", 2, "--p", 2, "--s", 2,
            "--r", 1, "--T", 500, "--seed", 42, "--out", out2,
        )
        a = read_bytes_tree(sim_dir)
        b = read_bytes_tree(out2)
        assert set(a) == set(b)
        for name in a:
            if name != "manifest.txt":  # manifests echo the out path
                assert a[name] == b[name], name

    def test_manifest_reproduces_run(self, sim_dir, tmp_path):
        out2 = tmp_path / "repro"
        assert run_cli("simulate", "--config", sim_dir / "manifest.txt", "--out", out2) == 0
        assert (out2 / "panel.csv").read_bytes() == (sim_dir / "panel.csv").read_bytes()


class TestFitPipeline:
    def test_fit_reports_monotone_trace(self, sim_dir, tmp_path):
        out = tmp_path / "fit"
        assert run_cli(
            "fit", "--input", sim_dir / "panel.csv", "--model", "ciaar",
            "--p", 2, "--s", 2, "--q", 2, "--r", 1, "--out", out,
        ) == 0
        lines = (out / "loglik_trace.csv").read_text().strip().splitlines()[1:]
        trace = [float(line.split(",")[1]) for line in lines]
        assert all(b >= a - 1e-8 for a, b in zip(trace, trace[1:]))
        text = (out / "fit_params.txt").read_text()
        assert "converged = True" in text

    def test_decompose_writes_components(self, sim_dir, tmp_path):
        out = tmp_path / "dec"
        assert run_cli(
            "decompose", "--input", sim_dir / "panel.csv", "--model", "ciaar",
            "--p", 2, "--s", 2, "--q", 2, "--r", 1, "--out", out,
        ) == 0
        header = (out / "components.csv").read_text().splitlines()[0]
        assert "pi_" in header and "tau_" in header and "iota_" in header

    def test_forecast_and_rolling(self, sim_dir, tmp_path):
        out = tmp_path / "fc"
        assert run_cli(
            "forecast", "--input", sim_dir / "panel.csv", "--model", "vecim",
            "--p", 2, "--q", 2, "--r", 1, "--horizon", 4, "--origins", 3, "--out", out,
        ) == 0
        lines = (out / "forecast.csv").read_text().strip().splitlines()
        assert len(lines) == 5
        assert (out / "msfe.csv").read_text().count("\n") >= 4

    def test_select_two_point_grid(self, sim_dir, tmp_path):
        out = tmp_path / "sel"
        assert run_cli(
            "select", "--input", sim_dir / "panel.csv", "--model", "mai",
            "--p-min", 1, "--p-max", 2, "--q-min", 1, "--q-max", 1, "--out", out,
        ) == 0
        lines = [
            line for line in (out / "ic_table.csv").read_text().strip().splitlines()
            if not line.startswith("#")
        ]
        assert len(lines) == 3  # header + 2 candidates
        best_flags = [line.rsplit(",", 1)[1] for line in lines[1:]]
        assert best_flags.count("1") == 1

    def test_montecarlo(self, tmp_path):
        out = tmp_path / "mc"
        assert run_cli(
            "montecarlo", "--model", "mai", "--n", 4, "--q", 1, "--p", 1,
            "--T", 300, "--reps", 3, "--seed", 7, "--out", out,
        ) == 0
        lines = (out / "mc_results.csv").read_text().strip().splitlines()
        assert len(lines) == 4
        rerun = tmp_path / "mc2"
        run_cli(
            "montecarlo", "--model", "mai", "--n", 4, "--q", 1, "--p", 1,
            "--T", 300, "--reps", 3, "--seed", 7, "--out", rerun,
        )
        assert (out / "mc_results.csv").read_bytes() == (rerun / "mc_results.csv").read_bytes()


class TestErrors:
    def test_missing_input_fails_cleanly(self, tmp_path, capsys):
        code = run_cli("fit", "--input", tmp_path / "nope.csv", "--model", "mai",
                       "--p", 1, "--q", 1, "--out", tmp_path / "o")
        assert code == 1
        assert "error" in capsys.readouterr().err

    def test_inadmissible_orders_rejected(self, tmp_path, capsys):
        code = run_cli("simulate", "--model", "ciaar", "--n", 4, "--q", 2,
                       "--p", 2, "--s", 3, "--r", 1, "--out", tmp_path / "o")
        assert code == 1
        assert "s <= p" in capsys.readouterr().err

    def test_unknown_config_key(self, tmp_path, capsys):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("bogus = 1\n")
        code = run_cli("simulate", "--config", cfg, "--model", "mai",
                       "--n", 3, "--q", 1, "--out", tmp_path / "o")
        assert code == 1
        assert "bogus" in capsys.readouterr().err
