import json
import os

import numpy as np
import pytest

from entrokit.cli import EXIT_CHECK, EXIT_CONFIG, EXIT_OK, main
from entrokit.errors import ConfigError
from entrokit.harness import (
    CSV_COLUMNS,
    EXPERIMENT_IDS,
    compare,
    format_csv,
    run_experiment,
    validate_config,
)


def tiny_gauss_cfg(**kw):
    cfg = {
        "experiment": "gauss-entropy",
        "dim": 2,
        "modes": ["adaptive"],
        "seeds": [0, 1],
        "train": {
            "kernel_size": 16,
            "batch_size": 32,
            "iterations_per_epoch": 30,
            "epochs": 1,
            "eval_size": 500,
        },
    }
    cfg.update(kw)
    return cfg


class TestConfigValidation:
    def test_unknown_experiment_id(self):
        with pytest.raises(ConfigError):
            validate_config({"experiment": "warp-speed", "seeds": [0]})

    def test_bad_seed_list(self):
        with pytest.raises(ConfigError):
            validate_config({"experiment": "gauss-entropy", "seeds": []})
        with pytest.raises(ConfigError):
            validate_config({"experiment": "gauss-entropy", "seeds": ["a"]})

    def test_every_listed_id_is_recognized(self):
        for experiment in EXPERIMENT_IDS:
            assert validate_config({"experiment": experiment, "seeds": [0]}) == experiment

    def test_bad_train_section(self):
        cfg = tiny_gauss_cfg()
        cfg["train"]["learning_rate"] = -1.0
        with pytest.raises(ConfigError):
            run_experiment(cfg)


class TestResultsCsv:
    def test_column_order_fixed(self):
        assert CSV_COLUMNS == (
            "experiment", "seed", "epoch", "iteration", "estimate", "oracle", "abs_error", "wall_ms",
        )
        result = run_experiment(tiny_gauss_cfg(), quiet=True)
        text = format_csv(result["rows"])
        assert text.splitlines()[0] == ",".join(CSV_COLUMNS)

    def test_bitwise_deterministic_across_reruns(self):
        a = format_csv(run_experiment(tiny_gauss_cfg(), quiet=True)["rows"])
        b = format_csv(run_experiment(tiny_gauss_cfg(), quiet=True)["rows"])
        assert a == b

    def test_rows_sorted_and_scored(self):
        result = run_experiment(tiny_gauss_cfg(), quiet=True)
        rows = result["rows"]
        keys = [(r["experiment"], r["seed"], r["epoch"], r["iteration"]) for r in rows]
        assert keys == sorted(keys)
        for r in rows:
            assert r["abs_error"] == pytest.approx(abs(r["estimate"] - r["oracle"]))
            assert r["wall_ms"] == 0.0

    def test_seed_override(self):
        result = run_experiment(tiny_gauss_cfg(), seed_override=[5], quiet=True)
        assert {r["seed"] for r in result["rows"]} == {5}
        assert result["summary"]["seeds"] == [5]


class TestSummaries:
    def test_error_statistics_present(self):
        result = run_experiment(tiny_gauss_cfg(), quiet=True)
        stats = result["summary"]["modes"]["adaptive"]
        assert len(stats["abs_errors"]) == 2
        assert stats["mean_abs_error"] == pytest.approx(np.mean(stats["abs_errors"]))
        assert stats["std_abs_error"] == pytest.approx(np.std(stats["abs_errors"]))
        assert stats["median_abs_error"] == pytest.approx(np.median(stats["abs_errors"]))

    def test_compare_runs_modes_on_identical_seeds(self):
        result = compare(["adaptive", "single_gauss"], tiny_gauss_cfg(), seed_override=[3])
        assert set(result["summary"]["modes"]) == {"adaptive", "single_gauss"}
        tags = {r["experiment"] for r in result["rows"]}
        assert tags == {"gauss-entropy:adaptive", "gauss-entropy:single_gauss"}

    def test_triangle_summary_carries_oracle_and_density_entropy(self):
        cfg = {
            "experiment": "triangle-1d",
            "components": 3,
            "spec_seed": 7,
            "modes": ["adaptive"],
            "seeds": [0],
            "train": {"kernel_size": 16, "batch_size": 32, "iterations_per_epoch": 40,
                      "epochs": 1, "eval_size": 500, "learning_rate": 0.05},
        }
        result = run_experiment(cfg, quiet=True)
        assert "oracle_entropy" in result["summary"]
        assert len(result["summary"]["modes"]["adaptive"]["density_entropy_quadrature"]) == 1


class TestBoundsScan:
    def test_emits_grid_with_infeasible_marker(self):
        cfg = {
            "experiment": "bounds-scan",
            "seeds": [0],
            "n_values": [100, 100000, 1000000],
            "lipschitz": 0.01,
        }
        result = run_experiment(cfg, quiet=True)
        text = result["extra_files"]["bounds.csv"]
        lines = text.strip().splitlines()
        assert lines[0] == "N,M,w,delta,eps"
        assert len(lines) == 4
        assert "infeasible" in lines[1]
        assert "infeasible" not in lines[3]
        # results.csv carries only feasible points
        assert len(result["rows"]) == 2
        assert result["summary"]["monotone_decreasing"] is True


class TestBoostDemo:
    def test_artifacts_and_summary(self):
        cfg = {
            "experiment": "boost-demo",
            "seeds": [0],
            "dim": 1,
            "components": 2,
            "eval_n": 2000,
            "train": {"kernel_size": 32, "batch_size": 64, "iterations_per_epoch": 120,
                      "epochs": 1, "eval_size": 1000},
        }
        result = run_experiment(cfg, quiet=True)
        reports = json.loads(result["extra_files"]["boost.json"])
        assert len(reports) == 1
        assert "kl_lb_ce_quadratic" in reports[0]
        assert "median_improves" in result["summary"]


class TestCli:
    def write_cfg(self, tmp_path, cfg):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps(cfg))
        return str(path)

    def test_run_writes_artifacts_and_exits_zero(self, tmp_path):
        path = self.write_cfg(tmp_path, tiny_gauss_cfg())
        out = str(tmp_path / "out")
        assert main(["run", path, "--out", out, "--quiet"]) == EXIT_OK
        assert os.path.exists(os.path.join(out, "results.csv"))
        assert os.path.exists(os.path.join(out, "summary.json"))
        doc = json.loads(open(os.path.join(out, "summary.json")).read())
        assert doc["experiment"] == "gauss-entropy"

    def test_results_file_bitwise_identical_across_runs(self, tmp_path):
        path = self.write_cfg(tmp_path, tiny_gauss_cfg())
        outs = []
        for name in ("a", "b"):
            out = str(tmp_path / name)
            assert main(["run", path, "--out", out, "--quiet"]) == EXIT_OK
            outs.append(open(os.path.join(out, "results.csv"), "rb").read())
        assert outs[0] == outs[1]

    def test_unknown_id_exits_config_code(self, tmp_path):
        path = self.write_cfg(tmp_path, {"experiment": "nope", "seeds": [0]})
        assert main(["run", path, "--quiet"]) == EXIT_CONFIG

    def test_malformed_json_exits_config_code(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{not json")
        assert main(["run", str(path), "--quiet"]) == EXIT_CONFIG

    def test_missing_file_exits_config_code(self, tmp_path):
        assert main(["run", str(tmp_path / "absent.json"), "--quiet"]) == EXIT_CONFIG

    def test_bad_seed_override_exits_config_code(self, tmp_path):
        path = self.write_cfg(tmp_path, tiny_gauss_cfg())
        assert main(["run", path, "--seed-override", "1,x", "--quiet"]) == EXIT_CONFIG

    def test_seed_override_changes_rows(self, tmp_path):
        path = self.write_cfg(tmp_path, tiny_gauss_cfg())
        out = str(tmp_path / "out")
        assert main(["run", path, "--seed-override", "9", "--out", out, "--quiet"]) == EXIT_OK
        text = open(os.path.join(out, "results.csv")).read()
        assert ",9," in text.splitlines()[1]

    def test_gradcheck_exit_codes(self, tmp_path):
        ok = self.write_cfg(tmp_path, {"experiment": "gradcheck", "seeds": [0], "instances": 6})
        assert main(["run", ok, "--out", str(tmp_path / "g1"), "--quiet"]) == EXIT_OK
        # an absurd threshold fails even perfect gradients
        bad = self.write_cfg(
            tmp_path, {"experiment": "gradcheck", "seeds": [0], "instances": 6, "threshold": 1e-30}
        )
        assert main(["run", bad, "--out", str(tmp_path / "g2"), "--quiet"]) == EXIT_CHECK

    def test_check_mode_enforces_thresholds(self, tmp_path):
        cfg = tiny_gauss_cfg(check={"max_median_abs_error": 1e-9})
        path = self.write_cfg(tmp_path, cfg)
        out = str(tmp_path / "out")
        assert main(["run", path, "--out", out, "--quiet"]) == EXIT_OK
        assert main(["run", path, "--out", out, "--quiet", "--check"]) == EXIT_CHECK


class TestShippedConfigs:
    def test_every_config_file_validates(self):
        root = os.path.join(os.path.dirname(__file__), "..", "configs")
        names = sorted(os.listdir(root))
        assert len(names) == 11
        seen = set()
        for name in names:
            with open(os.path.join(root, name)) as fh:
                cfg = json.load(fh)
            seen.add(validate_config(cfg))
        assert seen == set(EXPERIMENT_IDS)
