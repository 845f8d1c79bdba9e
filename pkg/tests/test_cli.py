import json
from pathlib import Path

import pytest

from repchain.cli import main


def write_config(tmp_path, body, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(body))
    return str(path)


def tiny_chain_config(**run):
    return {
        "chain": {
            "nodes": [{}, {}, {}],
            "links": [
                {"p_gen": 0.6, "w0": 0.95},
                {"p_gen": 0.5, "w0": 0.9},
            ],
            "p_swap": 0.9,
        },
        "run": {"beta": 1, "seed": 3, **run},
    }


def perfect_link_config():
    return {
        "chain": {
            "nodes": [{}, {}],
            "links": [{"p_gen": 1.0, "w0": 1.0}],
            "p_swap": 0.85,
        },
        "run": {"beta": 0},
    }


class TestCount:
    def test_bundled_scenario_c(self, capsys):
        assert main(["count", "--config", "scenario_c", "--beta", "2"]) == 0
        out = capsys.readouterr().out
        assert "10935" in out
        assert "C(3)" in out

    def test_bundled_scenario_b(self, capsys):
        assert main(["count", "--config", "scenario_b"]) == 0
        assert "27" in capsys.readouterr().out

    def test_trivial_space(self, tmp_path, capsys):
        cfg = write_config(tmp_path, perfect_link_config())
        assert main(["count", "--config", cfg]) == 0
        assert "= 1 " in capsys.readouterr().out


class TestEvaluate:
    def test_perfect_link_unit_rate(self, tmp_path, capsys):
        cfg = write_config(tmp_path, perfect_link_config())
        assert main(["evaluate", "--config", cfg, "(L0:0)"]) == 0
        record = json.loads(capsys.readouterr().out)
        assert record["skr_per_unit"] == pytest.approx(1.0, abs=1e-9)
        assert record["mean_time"] == pytest.approx(1.0, abs=1e-9)

    def test_malformed_protocol_exits_2(self, tmp_path, capsys):
        cfg = write_config(tmp_path, perfect_link_config())
        assert main(["evaluate", "--config", cfg, "((L0:1)"]) == 2
        assert "position" in capsys.readouterr().err

    def test_protocol_chain_mismatch_exits_2(self, tmp_path):
        cfg = write_config(tmp_path, perfect_link_config())
        assert main(["evaluate", "--config", cfg, "((L0:0)(L1:0):0)"]) == 2

    def test_dump_dist_writes_csv_and_figure(self, tmp_path, capsys):
        cfg = write_config(tmp_path, tiny_chain_config())
        dump = tmp_path / "dist.csv"
        code = main(["evaluate", "--config", cfg, "((L0:0)(L1:0):0)", "--dump-dist", str(dump)])
        assert code == 0
        lines = dump.read_text().splitlines()
        assert lines[0] == "t,p,v"
        assert Path(f"{dump}.png").exists()

    def test_no_plots_skips_figure(self, tmp_path):
        cfg = write_config(tmp_path, tiny_chain_config())
        dump = tmp_path / "dist.csv"
        main(["evaluate", "--config", cfg, "((L0:0)(L1:0):0)",
              "--dump-dist", str(dump), "--no-plots"])
        assert dump.exists()
        assert not Path(f"{dump}.png").exists()

    def test_truncation_cap_exits_3(self, tmp_path, capsys):
        body = {
            "chain": {
                "nodes": [{}, {}],
                "links": [{"p_gen": 9.6e-8, "w0": 0.36, "t_coh": 3.6e5}],
                "p_swap": 0.85,
                "coherence_mode": "per-link-joint",
            },
            "run": {"t_cap": 4096},
        }
        cfg = write_config(tmp_path, body)
        assert main(["evaluate", "--config", cfg, "(L0:0)"]) == 3
        assert "truncation cap" in capsys.readouterr().err


class TestSearchCommands:
    def test_bruteforce_writes_reports_and_prints_best(self, tmp_path, capsys):
        cfg = write_config(tmp_path, tiny_chain_config())
        ledger = tmp_path / "trials.jsonl"
        summary = tmp_path / "summary.csv"
        code = main([
            "brute-force", "--config", cfg,
            "--ledger", str(ledger), "--summary", str(summary),
        ])
        assert code == 0
        out = capsys.readouterr().out
        assert "best protocol:" in out
        assert "per unit" in out
        assert len(ledger.read_text().splitlines()) == 8  # C(1) * 2^3
        assert Path(f"{summary}.png").exists()

    def test_identical_config_and_seed_byte_identical_outputs(self, tmp_path):
        cfg = write_config(tmp_path, tiny_chain_config(shots=5, n_init=3))
        blobs = []
        for name in ("x", "y"):
            ledger = tmp_path / f"{name}.jsonl"
            summary = tmp_path / f"{name}.csv"
            assert main([
                "random", "--config", cfg, "--ledger", str(ledger),
                "--summary", str(summary), "--no-plots",
            ]) == 0
            blobs.append((ledger.read_bytes(), summary.read_bytes()))
        assert blobs[0] == blobs[1]

    def test_optimize_runs_and_reports(self, tmp_path, capsys):
        cfg = write_config(tmp_path, tiny_chain_config(shots=5, n_init=3))
        assert main(["optimize", "--config", cfg]) == 0
        assert "best SKR" in capsys.readouterr().out

    def test_zero_shots_is_validation_error(self, tmp_path):
        cfg = write_config(tmp_path, tiny_chain_config(shots=5))
        assert main(["optimize", "--config", cfg, "--shots", "0"]) == 2

    def test_oversized_space_exits_4(self, tmp_path, capsys):
        body = tiny_chain_config()
        body["run"]["enumeration_limit"] = 5
        cfg = write_config(tmp_path, body)
        assert main(["brute-force", "--config", cfg]) == 4
        assert "8" in capsys.readouterr().err  # cardinality named in refusal

    def test_seconds_units_reported(self, tmp_path, capsys):
        body = tiny_chain_config()
        body["chain"]["L0_km"] = 50
        cfg = write_config(tmp_path, body)
        assert main(["brute-force", "--config", cfg, "--units", "second"]) == 0
        assert "per second" in capsys.readouterr().out


class TestOracle:
    def test_deterministic_case_exact_pass(self, tmp_path, capsys):
        cfg = write_config(tmp_path, perfect_link_config())
        assert main(["oracle", "--config", cfg, "(L0:0)", "--samples", "100"]) == 0
        out = capsys.readouterr().out
        assert out.strip().endswith("PASS")

    def test_probabilistic_case_passes_at_4_sigma(self, tmp_path, capsys):
        body = tiny_chain_config()
        body["run"]["epsilon"] = 1e-9
        cfg = write_config(tmp_path, body)
        code = main([
            "oracle", "--config", cfg, "((L0:0)(L1:0):0)",
            "--samples", "100000", "--seed", "5",
        ])
        assert code == 0

    def test_zero_samples_is_validation_error(self, tmp_path):
        cfg = write_config(tmp_path, perfect_link_config())
        assert main(["oracle", "--config", cfg, "(L0:0)", "--samples", "0"]) == 2


class TestConfigValidation:
    def test_unknown_key_rejected(self, tmp_path, capsys):
        body = tiny_chain_config()
        body["chain"]["speed"] = 42
        cfg = write_config(tmp_path, body)
        assert main(["count", "--config", cfg]) == 2
        assert "speed" in capsys.readouterr().err

    def test_missing_config_file_rejected(self, capsys):
        assert main(["count", "--config", "no_such_scenario"]) == 2

    def test_seconds_without_distance_rejected(self, tmp_path):
        cfg = write_config(tmp_path, tiny_chain_config())
        assert main(["count", "--config", cfg, "--units", "second"]) == 2
