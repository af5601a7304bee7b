import json
import math
import subprocess
import sys

import numpy as np
import pytest

from catrepeater import breeding as br
from catrepeater import config, fock
from catrepeater.cli import main


def run_cli(args):
    return main(list(args))


class TestConfig:
    def test_roundtrip_identity(self):
        text = "trials = 500\ndeltas = 0.1, 0.4\nms = 1, 2\n"
        raw = config.parse_text(text)
        cfg = config.resolve("fig2", raw)
        again = config.resolve("fig2", config.parse_text(config.serialize(cfg)))
        assert again == cfg

    def test_unknown_key_named(self):
        with pytest.raises(config.ConfigError, match="bogus"):
            config.resolve("fig2", {"bogus": "1"})

    def test_range_violation_named(self):
        with pytest.raises(config.ConfigError, match="trials"):
            config.resolve("fig2", {"trials": "0"})

    def test_bad_value_named(self):
        with pytest.raises(config.ConfigError, match="deltas"):
            config.resolve("fig2", {"deltas": "a, b"})

    def test_comments_and_blanks(self):
        raw = config.parse_text("# header\n\n trials = 5 # inline\n")
        assert raw == {"trials": "5"}

    def test_duplicate_key(self):
        with pytest.raises(config.ConfigError, match="duplicate"):
            config.parse_text("a = 1\na = 2\n")


class TestExitCodes:
    def test_usage_error_is_2(self):
        proc = subprocess.run([sys.executable, "-m", "catrepeater.cli", "nonsense"],
                              capture_output=True)
        assert proc.returncode == 2

    def test_config_error_is_2(self, tmp_path):
        bad = tmp_path / "bad.cfg"
        bad.write_text("bogus = 1\n")
        assert run_cli(["fig2", "--config", str(bad)]) == 2

    def test_validate_success_is_0(self, tmp_path):
        out = tmp_path / "report.json"
        assert run_cli(["validate", "--out", str(out)]) == 0
        report = json.loads(out.read_text())
        assert isinstance(report, list)
        assert all(set(c) == {"check_id", "passed", "measured", "bound"}
                   for c in report)
        assert all(c["passed"] for c in report)
        by_id = {c["check_id"]: c for c in report}
        assert by_id["squeezed_cat_fidelity_m2"]["measured"] >= 0.99
        assert by_id["k_1"]["measured"] <= 1e-12


class TestFig2Command:
    def test_deterministic_and_worker_independent(self, tmp_path):
        cfg = tmp_path / "fig2.cfg"
        cfg.write_text("trials = 50\ndeltas = 0.1, 0.5\nms = 1\ncontaminations = 0.0\n")
        out1, out2, out3 = (tmp_path / f"f{i}.csv" for i in range(3))
        assert run_cli(["fig2", "--config", str(cfg), "--out", str(out1)]) == 0
        assert run_cli(["fig2", "--config", str(cfg), "--out", str(out2)]) == 0
        assert run_cli(["fig2", "--config", str(cfg), "--out", str(out3),
                        "--workers", "2"]) == 0
        assert out1.read_bytes() == out2.read_bytes()
        assert out1.read_bytes() == out3.read_bytes()

    def test_small_delta_matches_ideal(self, tmp_path):
        cfg = tmp_path / "fig2.cfg"
        cfg.write_text("trials = 200\ndeltas = 0.02\nms = 2\ncontaminations = 0.0\n")
        out = tmp_path / "fig2.csv"
        assert run_cli(["fig2", "--config", str(cfg), "--out", str(out)]) == 0
        header, row = out.read_text().strip().split("\n")
        assert header == "m,contamination,delta,fidelity,fidelity_se,rate,trials"
        vals = row.split(",")
        fid = float(vals[3])
        c = br.breeding_cutoff(2) + 2
        ideal = fock.fidelity(br.ideal_psi(2, 40), br.target_state(2, 40))
        assert abs(fid - ideal) < 1e-3

    def test_trials_override(self, tmp_path):
        cfg = tmp_path / "fig2.cfg"
        cfg.write_text("trials = 50\ndeltas = 0.3\nms = 1\ncontaminations = 0.0\n")
        out = tmp_path / "fig2.csv"
        assert run_cli(["fig2", "--config", str(cfg), "--out", str(out),
                        "--trials", "20"]) == 0
        assert out.read_text().strip().endswith(",20")


class TestSwapBreedCommands:
    def test_swap_simple_row(self, tmp_path):
        out = tmp_path / "swap.csv"
        assert run_cli(["swap", "--out", str(out)]) == 0
        header, row = out.read_text().strip().split("\n")
        assert header == "k,alpha,delta,acceptance"
        acc = float(row.split(",")[3])
        assert abs(acc - 0.5) < 1e-3

    def test_swap_aux_row(self, tmp_path):
        cfg = tmp_path / "swap.cfg"
        cfg.write_text("alpha = 2.83\nk = 1\n")
        out = tmp_path / "swap.csv"
        assert run_cli(["swap", "--config", str(cfg), "--out", str(out)]) == 0
        acc = float(out.read_text().strip().split("\n")[1].split(",")[3])
        assert abs(acc - 0.75) < 1e-2

    def test_breed_row_schema(self, tmp_path):
        cfg = tmp_path / "breed.cfg"
        cfg.write_text("m = 1\ndelta = 0.4\ntrials = 60\n")
        out = tmp_path / "breed.csv"
        assert run_cli(["breed", "--config", str(cfg), "--out", str(out)]) == 0
        header = out.read_text().split("\n")[0]
        assert header == "m,contamination,delta,fidelity,fidelity_se,rate,trials"


@pytest.mark.slow
class TestFig3Command:
    def test_tiny_sweep_deterministic(self, tmp_path):
        cfg = tmp_path / "fig3.cfg"
        cfg.write_text("distances_km = 60\nbudget = 4\ntrials_search = 12\n"
                       "trials_final = 24\nn_max = 1\nm_min = 2\n")
        out1 = tmp_path / "a.csv"
        out2 = tmp_path / "b.csv"
        assert run_cli(["fig3", "--config", str(cfg), "--out", str(out1)]) == 0
        assert run_cli(["fig3", "--config", str(cfg), "--out", str(out2),
                        "--workers", "2"]) == 0
        assert out1.read_bytes() == out2.read_bytes()
        lines = out1.read_text().strip().split("\n")
        assert lines[0] == ("L_km,rate_per_min,n_opt,m_opt,p,delta_gen,"
                            "delta_swap,fidelity,fidelity_se,feasible")
        assert len(lines) == 2
        row = lines[1].split(",")
        assert row[-1] in ("True", "False")
        if row[-1] == "True":
            fid, se = float(row[7]), float(row[8])
            assert fid >= 0.90 - 2.0 * se
