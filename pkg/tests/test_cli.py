"""Tests for the command-line front end: schemas, determinism, exit codes."""

import json

import pytest

from linbins.cli import CSV_HEADER, main


def run_to_file(tmp_path, name, argv):
    out = tmp_path / name
    code = main(argv + ["--out", str(out)])
    return code, out.read_text() if out.exists() else ""


def data_rows(text):
    return [line for line in text.splitlines() if not line.startswith("#")]


def manifest_of(text):
    first = text.splitlines()[0]
    assert first.startswith("# manifest: ")
    return json.loads(first[len("# manifest: "):])


SIM_ARGS = [
    "simulate", "--u", "2", "--b", "1", "--set", "interval", "--set-size", "4",
    "--trials", "50", "--thresholds", "2,4", "--seed", "7",
]


class TestSimulate:
    def test_csv_schema(self, tmp_path):
        code, text = run_to_file(tmp_path, "sim.csv", SIM_ARGS)
        assert code == 0
        rows = data_rows(text)
        assert rows[0] == CSV_HEADER
        trial_rows = [r for r in rows if r.startswith("simulate,")]
        assert len(trial_rows) == 50
        assert trial_rows[0].split(",")[:8] == [
            "simulate", "2", "1", "", "interval", "4", "0", "7",
        ]
        assert sum(1 for r in rows if r.startswith("summary-tail,")) == 2
        assert any(r.startswith("summary-mean,") for r in rows)

    def test_manifest_fields(self, tmp_path):
        _, text = run_to_file(tmp_path, "sim.csv", SIM_ARGS)
        m = manifest_of(text)
        assert m["subcommand"] == "simulate"
        assert m["master_seed"] == 7
        assert m["flags"]["trials"] == 50
        assert "timestamp" in m and "rng_algorithm" in m

    def test_reruns_byte_identical(self, tmp_path):
        _, a = run_to_file(tmp_path, "a.csv", SIM_ARGS)
        _, b = run_to_file(tmp_path, "b.csv", SIM_ARGS)
        assert data_rows(a) == data_rows(b)

    def test_jobs_do_not_change_rows(self, tmp_path):
        _, a = run_to_file(tmp_path, "a.csv", SIM_ARGS + ["--jobs", "1"])
        _, b = run_to_file(tmp_path, "b.csv", SIM_ARGS + ["--jobs", "4"])
        assert data_rows(a) == data_rows(b)

    def test_seed_changes_rows(self, tmp_path):
        _, a = run_to_file(tmp_path, "a.csv", SIM_ARGS)
        _, b = run_to_file(tmp_path, "b.csv", SIM_ARGS[:-1] + ["8"])
        assert data_rows(a) != data_rows(b)

    def test_json_format(self, tmp_path):
        code, text = run_to_file(tmp_path, "sim.json", SIM_ARGS + ["--format", "json"])
        assert code == 0
        doc = json.loads(text)
        assert set(doc) == {"manifest", "rows", "summary"}
        assert len([r for r in doc["rows"] if r["experiment"] == "simulate"]) == 50
        assert doc["summary"]["tails"][0]["threshold"] == 2

    def test_missing_dims_is_usage_error(self, capsys):
        assert main(["simulate", "--u", "2"]) == 1

    def test_subspace_needs_dim(self, capsys):
        assert main(["simulate", "--u", "4", "--b", "2", "--set", "subspace"]) == 1


class TestExact:
    def test_values(self, tmp_path):
        code, text = run_to_file(tmp_path, "exact.csv", [
            "exact", "--u", "2", "--b", "1", "--set", "interval",
            "--set-size", "4", "--thresholds", "2,4",
        ])
        assert code == 0
        rows = data_rows(text)
        mean_row = next(r for r in rows if r.startswith("exact-mean,"))
        assert mean_row.split(",")[8] == "5/2"
        tails = {
            r.split(",")[9]: r.split(",")[10]
            for r in rows
            if r.startswith("exact-tail,")
        }
        assert tails == {"2": "1", "4": "1/4"}

    def test_size_guard_exit(self, capsys):
        assert main([
            "exact", "--u", "6", "--b", "6", "--set", "interval", "--set-size", "4",
        ]) == 2


class TestBounds:
    def test_e2_row(self, tmp_path):
        code, text = run_to_file(tmp_path, "bounds.csv", [
            "bounds", "--formula", "e2", "--b", "8", "--f", "11",
        ])
        assert code == 0
        row = data_rows(text)[1].split(",")
        assert row[0] == "e2"
        assert float(row[9]) == pytest.approx(1 / 27, rel=1e-9)
        assert row[11] == "no"

    def test_c_epsilon_row(self, tmp_path):
        _, text = run_to_file(tmp_path, "bounds.csv", [
            "bounds", "--formula", "c-epsilon", "--eps", "0.5",
        ])
        row = data_rows(text)[1].split(",")
        assert float(row[9]) == 2 ** 34

    def test_vacuous_flagged(self, tmp_path):
        _, text = run_to_file(tmp_path, "bounds.csv", [
            "bounds", "--formula", "tail", "--b", "8", "--r", "16", "--eps", "0.5",
        ])
        row = data_rows(text)[1].split(",")
        assert float(row[9]) == pytest.approx(2.0)
        assert float(row[10]) == 1.0
        assert row[11] == "yes"

    def test_grid_crossproduct(self, tmp_path):
        _, text = run_to_file(tmp_path, "bounds.csv", [
            "bounds", "--formula", "tail", "--b", "4,8", "--r", "16,64,256",
            "--eps", "0.5",
        ])
        assert len(data_rows(text)) == 1 + 6


class TestVerify:
    def test_all_checks_pass(self, capsys):
        code = main(["verify", "--samples", "4000", "--instances", "200"])
        out = capsys.readouterr().out
        assert code == 0
        assert out.count("PASS") == 6
        assert "FAIL" not in out

    def test_single_check(self, capsys):
        code = main(["verify", "--check", "factorization-count"])
        out = capsys.readouterr().out
        assert code == 0
        assert out.startswith("PASS factorization-count")

    def test_unknown_check(self, capsys):
        assert main(["verify", "--check", "nope"]) == 1

    def test_injected_fault_detected(self, capsys):
        code = main([
            "verify", "--check", "composition-uniformity",
            "--samples", "3000", "--inject-fault",
        ])
        out = capsys.readouterr().out
        assert code == 3
        assert "FAIL composition-uniformity" in out


class TestTableBench:
    def test_zero_workload_all_zero(self, tmp_path):
        code, text = run_to_file(tmp_path, "bench.csv", [
            "table-bench", "--u", "10", "--b", "3", "--keys", "random", "--n", "0",
        ])
        assert code == 0
        rows = data_rows(text)
        bench = next(r for r in rows if r.startswith("table-bench,"))
        assert bench.split(",")[8] == "0"

    def test_subspace_requires_power_of_two(self, capsys):
        assert main([
            "table-bench", "--u", "8", "--b", "3", "--keys", "subspace", "--n", "3",
        ]) == 1

    def test_deterministic(self, tmp_path):
        argv = ["table-bench", "--u", "10", "--b", "4", "--keys", "interval",
                "--n", "8,64", "--seed", "5"]
        _, a = run_to_file(tmp_path, "a.csv", argv)
        _, b = run_to_file(tmp_path, "b.csv", argv)
        assert data_rows(a) == data_rows(b)

    def test_growth_reflected(self, tmp_path):
        _, text = run_to_file(tmp_path, "bench.csv", [
            "table-bench", "--u", "10", "--b", "2", "--keys", "random", "--n", "64",
        ])
        resize_row = next(
            r for r in data_rows(text) if r.startswith("table-bench-resizes,")
        )
        assert int(resize_row.split(",")[8]) == 4  # 2 -> 6 bucket bits


class TestConfigFile:
    def test_config_supplies_flags(self, tmp_path):
        cfg = tmp_path / "run.json"
        cfg.write_text(json.dumps({
            "u": 2, "b": 1, "set": "interval", "set_size": 4,
            "trials": 20, "thresholds": [2], "seed": 7,
        }))
        code, text = run_to_file(
            tmp_path, "sim.csv", ["simulate", "--config", str(cfg)]
        )
        assert code == 0
        assert len([r for r in data_rows(text) if r.startswith("simulate,")]) == 20

    def test_flags_win_over_config(self, tmp_path):
        cfg = tmp_path / "run.json"
        cfg.write_text(json.dumps({
            "u": 2, "b": 1, "set": "interval", "set_size": 4,
            "trials": 20, "seed": 7,
        }))
        code, text = run_to_file(tmp_path, "sim.csv", [
            "simulate", "--config", str(cfg), "--trials", "5",
        ])
        assert code == 0
        assert len([r for r in data_rows(text) if r.startswith("simulate,")]) == 5

    def test_unknown_config_key_rejected(self, tmp_path, capsys):
        cfg = tmp_path / "run.json"
        cfg.write_text(json.dumps({"u": 2, "b": 1, "set_size": 4, "bogus": 1}))
        assert main(["simulate", "--config", str(cfg)]) == 1

    def test_manifest_flags_replay(self, tmp_path):
        _, first = run_to_file(tmp_path, "a.csv", SIM_ARGS)
        flags = manifest_of(first)["flags"]
        cfg = tmp_path / "replay.json"
        cfg.write_text(json.dumps(
            {k: v for k, v in flags.items()
             if k not in ("format", "out") and v is not None}
        ))
        code, second = run_to_file(
            tmp_path, "b.csv", ["simulate", "--config", str(cfg)]
        )
        assert code == 0
        assert data_rows(first) == data_rows(second)


class TestSeedEnvVar:
    def test_env_default(self, tmp_path, monkeypatch):
        monkeypatch.setenv("LINBINS_SEED", "99")
        _, text = run_to_file(tmp_path, "sim.csv", [
            "simulate", "--u", "2", "--b", "1", "--set", "interval",
            "--set-size", "4", "--trials", "2",
        ])
        assert manifest_of(text)["master_seed"] == 99

    def test_flag_beats_env(self, tmp_path, monkeypatch):
        monkeypatch.setenv("LINBINS_SEED", "99")
        _, text = run_to_file(tmp_path, "sim.csv", SIM_ARGS)
        assert manifest_of(text)["master_seed"] == 7

    def test_bad_env_value(self, monkeypatch, capsys):
        monkeypatch.setenv("LINBINS_SEED", "not-a-number")
        assert main(["simulate", "--u", "2", "--b", "1", "--set-size", "4"]) == 1
