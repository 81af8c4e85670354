import json
from pathlib import Path

import pytest
import yaml

from decminimax import ConfigError, config_from_dict, load_config, \
    run_experiment, verify_invariants, write_outputs
from decminimax.harness import CSV_HEADER, sweep

MINIMAL = {
    "topology": {"kind": "ring", "K": 4},
    "strategy": "ed",
    "problem": {"kind": "quadratic", "d1": 2, "d2": 2, "N": 16,
                "sigma": 0.4, "seed": 3},
    "schedule": {"mode": "explicit", "mu_x": 0.002, "mu_y": 0.01,
                 "p": 0.2, "b": 2, "b0": 4},
    "T": 20,
    "seeds": [0, 1],
}


def write_yaml(tmp_path, data, name="config.yaml"):
    path = tmp_path / name
    path.write_text(yaml.safe_dump(data))
    return path


class TestLoadConfig:
    def test_minimal_defaults(self, tmp_path):
        config = load_config(write_yaml(tmp_path, MINIMAL))
        assert config.T == 20
        assert config.seeds == (0, 1)
        assert config.topology["lazy"] is True  # ed needs PSD mixing
        assert config.diagnostics["transform"] is False

    def test_unknown_key_rejected(self, tmp_path):
        bad = dict(MINIMAL, momentum=0.9)
        with pytest.raises(ConfigError, match="momentum"):
            load_config(write_yaml(tmp_path, bad))

    def test_unknown_nested_key_rejected(self):
        bad = json.loads(json.dumps(MINIMAL))
        bad["schedule"]["warmup"] = 5
        with pytest.raises(ConfigError, match="warmup"):
            config_from_dict(bad)

    def test_seeds_default(self):
        raw = json.loads(json.dumps(MINIMAL))
        del raw["seeds"]
        assert config_from_dict(raw).seeds == (0,)

    def test_missing_required(self):
        raw = json.loads(json.dumps(MINIMAL))
        del raw["strategy"]
        with pytest.raises(ConfigError, match="strategy"):
            config_from_dict(raw)

    def test_gt_strategy_defaults_to_plain_weights(self):
        raw = json.loads(json.dumps(MINIMAL))
        raw["strategy"] = "atc_gt"
        assert config_from_dict(raw).topology["lazy"] is False


class TestRunExperiment:
    def test_single_seed_summary(self):
        raw = json.loads(json.dumps(MINIMAL))
        raw["seeds"] = [0]
        result = run_experiment(config_from_dict(raw))
        s = result.summary
        assert s["avg_stationarity"]["std"] == 0.0
        assert s["seeds_ok"] == [0]
        assert s["constants"]["nu"] > 0
        assert len(result.series[0].rows) == 21

    def test_repeated_seed_zero_std(self):
        raw = json.loads(json.dumps(MINIMAL))
        raw["seeds"] = [3, 3]
        result = run_experiment(config_from_dict(raw))
        assert result.summary["avg_stationarity"]["std"] == 0.0

    def test_divergent_seed_recorded(self):
        raw = json.loads(json.dumps(MINIMAL))
        raw["schedule"]["mu_x"] = 50.0
        raw["schedule"]["mu_y"] = 50.0
        raw["T"] = 200
        result = run_experiment(config_from_dict(raw))
        assert result.failures
        assert set(result.summary["seeds_failed"]) == {"0", "1"}


class TestWriteOutputs:
    def test_files_and_schema(self, tmp_path):
        result = run_experiment(config_from_dict(MINIMAL))
        files = write_outputs(result, tmp_path / "out")
        names = {f.name for f in files}
        assert names == {"seed_0.csv", "seed_1.csv", "summary.json",
                         "config.resolved.json"}
        lines = (tmp_path / "out" / "seed_0.csv").read_text().splitlines()
        assert lines[0] == ",".join(CSV_HEADER)
        assert len(lines) == 22  # header + rounds 0..20
        # diagnostics disabled: ehat columns empty
        first = lines[1].split(",")
        assert first[CSV_HEADER.index("ehat_x_sq")] == ""
        assert first[CSV_HEADER.index("ehat_y_sq")] == ""

    def test_diagnostics_fill_ehat_columns(self, tmp_path):
        raw = json.loads(json.dumps(MINIMAL))
        raw["diagnostics"] = {"transform": True}
        result = run_experiment(config_from_dict(raw))
        write_outputs(result, tmp_path / "out")
        lines = (tmp_path / "out" / "seed_0.csv").read_text().splitlines()
        first = lines[1].split(",")
        assert first[CSV_HEADER.index("ehat_x_sq")] != ""

    def test_byte_identical_reruns(self, tmp_path):
        for sub in ("a", "b"):
            result = run_experiment(config_from_dict(MINIMAL))
            write_outputs(result, tmp_path / sub)
        for name in ("seed_0.csv", "seed_1.csv", "summary.json"):
            assert (tmp_path / "a" / name).read_bytes() == \
                (tmp_path / "b" / name).read_bytes()

    def test_parallel_matches_serial(self, tmp_path):
        result_serial = run_experiment(config_from_dict(MINIMAL))
        result_parallel = run_experiment(config_from_dict(MINIMAL),
                                         max_workers=2)
        write_outputs(result_serial, tmp_path / "serial")
        write_outputs(result_parallel, tmp_path / "parallel")
        for name in ("seed_0.csv", "seed_1.csv"):
            assert (tmp_path / "serial" / name).read_bytes() == \
                (tmp_path / "parallel" / name).read_bytes()


class TestSweep:
    def test_sweep_over_mu_y(self, tmp_path):
        config_path = write_yaml(tmp_path, MINIMAL)
        results = sweep(config_path, "schedule.mu_y", [0.005, 0.02],
                        tmp_path / "sweep")
        assert len(results) == 2
        assert results[0].mu_y == 0.005
        assert results[1].mu_y == 0.02
        out_dirs = sorted(p.name for p in (tmp_path / "sweep").iterdir())
        assert out_dirs == ["schedule.mu_y=0.005", "schedule.mu_y=0.02"]


class TestVerifySuite:
    def test_all_invariants_pass(self):
        checks = verify_invariants()
        failed = [name for name, ok, detail in checks if not ok]
        assert not failed, failed
