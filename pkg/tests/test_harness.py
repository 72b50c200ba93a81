"""Batch harness: config loading, run planning, output files, CLI."""

import csv
import json
import os

import numpy as np
import pytest

from gibopt import ConfigurationError, load_objective, make_within_model, sobol_points
from gibopt.cli import main as cli_main
from gibopt.harness import (
    CSV_HEADER,
    config_to_json,
    load_config,
    plan_runs,
    resolve_run_settings,
    run_suite,
)

EXPECTED_HEADER = (
    "run_id,suite,optimizer,dim,function_seed,run_seed,real_queries,sim_queries,"
    "update_index,incumbent_value,solution_accuracy,committed_confidence"
)


def write_config(path, payload):
    path.write_text(json.dumps(payload))
    return str(path)


def minimal_toy(tmp_path, **overrides):
    payload = {"suite": "toy1d", "optimizers": ["hci_gibo"], "seeds": [1]}
    payload.update(overrides)
    return write_config(tmp_path / "config.json", payload)


def read_rows(out_dir):
    with open(os.path.join(str(out_dir), "results.csv"), newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = list(reader)
    return header, rows


class TestConfigLoading:
    def test_header_constant_matches_contract(self):
        assert CSV_HEADER == EXPECTED_HEADER

    def test_minimal_toy_config_gets_defaults(self, tmp_path):
        config = load_config(minimal_toy(tmp_path))
        assert config.suite == "toy1d"
        assert config.optimizers == ("hci_gibo",)
        assert config.seeds == (1,)
        assert config.budget_real == 200
        settings = resolve_run_settings(config, 1)
        assert settings.alpha == 0.9
        assert settings.step_eta == 0.04
        assert settings.beta == 5.0
        assert settings.noise_std == 0.1
        assert settings.normalized is True

    def test_within_model_dimension_defaults(self, tmp_path):
        path = write_config(
            tmp_path / "wm.json",
            {"suite": "within_model", "optimizers": ["gibo"], "seeds": [0], "dims": [2, 8]},
        )
        config = load_config(path)
        two = resolve_run_settings(config, 2)
        eight = resolve_run_settings(config, 8)
        assert two.lengthscales == pytest.approx(np.full(2, 0.1 * np.sqrt(2)))
        assert two.outputscale == 1.0
        assert two.noise_variance == 0.01
        # default Lipschitz bound follows the lengthscale schedule
        assert two.lipschitz_L == pytest.approx(1.6 / two.lengthscales[0] ** 2)
        assert eight.lipschitz_L == pytest.approx(1.6 / (0.1 * np.sqrt(8)) ** 2)
        assert two.fixed_M == 2
        assert eight.fixed_M == 8
        assert two.bounds == (0.0, 1.0)
        assert np.allclose(two.start, 0.5)

    def test_pendulum_defaults(self, tmp_path):
        path = write_config(
            tmp_path / "p.json", {"suite": "pendulum", "optimizers": ["hci_gibo"], "seeds": [0]}
        )
        config = load_config(path)
        settings = resolve_run_settings(config, 24)
        assert settings.alpha == 0.95
        assert settings.step_eta == 0.2
        assert settings.beta == 1.0
        assert settings.outputscale == 4.0
        assert settings.lengthscales == pytest.approx(np.full(24, 0.3))
        assert settings.noise_variance == 0.005
        assert settings.lipschitz_L == 12.0
        assert settings.noise_std == 0.06
        assert settings.half_width == 0.3
        assert settings.bounds is None
        assert np.allclose(settings.start, 0.0)

    def test_alpha_out_of_range_names_field(self, tmp_path):
        path = minimal_toy(tmp_path, improvement={"alpha": 1.2})
        with pytest.raises(ConfigurationError, match="improvement.alpha"):
            load_config(path)

    def test_unknown_top_level_key_rejected(self, tmp_path):
        path = minimal_toy(tmp_path, budgett_real=100)
        with pytest.raises(ConfigurationError, match="budgett_real"):
            load_config(path)

    def test_unknown_nested_key_rejected(self, tmp_path):
        path = minimal_toy(tmp_path, kernel={"outputscael": 2.0})
        with pytest.raises(ConfigurationError, match="kernel.outputscael"):
            load_config(path)

    def test_empty_seeds_rejected(self, tmp_path):
        path = minimal_toy(tmp_path, seeds=[])
        with pytest.raises(ConfigurationError, match="seeds"):
            load_config(path)

    def test_duplicate_seeds_rejected(self, tmp_path):
        path = minimal_toy(tmp_path, seeds=[1, 1])
        with pytest.raises(ConfigurationError, match="seeds"):
            load_config(path)

    def test_non_integer_seed_rejected(self, tmp_path):
        path = minimal_toy(tmp_path, seeds=[1.5])
        with pytest.raises(ConfigurationError, match="seeds"):
            load_config(path)

    def test_unknown_optimizer_rejected(self, tmp_path):
        path = minimal_toy(tmp_path, optimizers=["hci_gibo", "their_gibo"])
        with pytest.raises(ConfigurationError, match="their_gibo"):
            load_config(path)

    def test_unknown_suite_rejected(self, tmp_path):
        path = write_config(
            tmp_path / "bad.json", {"suite": "toy2d", "optimizers": ["gibo"], "seeds": [1]}
        )
        with pytest.raises(ConfigurationError, match="toy2d"):
            load_config(path)

    def test_dims_only_apply_to_within_model(self, tmp_path):
        path = minimal_toy(tmp_path, dims=[2])
        with pytest.raises(ConfigurationError, match="dims"):
            load_config(path)

    def test_dims_out_of_range_rejected(self, tmp_path):
        path = write_config(
            tmp_path / "wm.json",
            {"suite": "within_model", "optimizers": ["gibo"], "seeds": [0], "dims": [53]},
        )
        with pytest.raises(ConfigurationError, match="dims"):
            load_config(path)

    def test_budget_must_be_positive(self, tmp_path):
        path = minimal_toy(tmp_path, budget_real=0)
        with pytest.raises(ConfigurationError, match="budget_real"):
            load_config(path)

    def test_reversed_bounds_rejected(self, tmp_path):
        path = minimal_toy(tmp_path, domain={"half_width": 0.2, "bounds": [1.0, 0.0]})
        with pytest.raises(ConfigurationError, match="domain.bounds"):
            load_config(path)

    def test_pendulum_block_needs_pendulum_suite(self, tmp_path):
        path = minimal_toy(tmp_path, pendulum={"l": 0.5})
        with pytest.raises(ConfigurationError, match="pendulum"):
            load_config(path)

    def test_top_level_must_be_object(self, tmp_path):
        path = tmp_path / "list.json"
        path.write_text("[1, 2]")
        with pytest.raises(ConfigurationError):
            load_config(str(path))

    def test_malformed_json_rejected(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{not json")
        with pytest.raises(ConfigurationError):
            load_config(str(path))

    def test_missing_file_rejected(self, tmp_path):
        with pytest.raises(ConfigurationError):
            load_config(str(tmp_path / "absent.json"))

    def test_overrides_survive_round_trip(self, tmp_path):
        path = write_config(
            tmp_path / "full.json",
            {
                "suite": "within_model",
                "optimizers": ["gibo", "s_hci_gibo"],
                "seeds": [0, 7],
                "dims": [2, 3],
                "n_functions": 4,
                "budget_real": 50,
                "beta": 2.5,
                "gap_amplitude": 0.1,
                "noise_std": 0.2,
                "fixed_M": 3,
                "max_updates": 9,
                "improvement": {"alpha": 0.8, "step_eta": 0.1, "lipschitz_L": 30.0, "normalized": False},
                "kernel": {"outputscale": 2.0, "lengthscales": 0.25, "noise_variance": 0.04},
                "domain": {"half_width": 0.5, "bounds": [0.0, 1.0]},
            },
        )
        config = load_config(path)
        echoed = write_config(tmp_path / "echo.json", config_to_json(config))
        assert load_config(echoed) == config
        settings = resolve_run_settings(config, 3)
        assert settings.alpha == 0.8
        assert settings.lipschitz_L == 30.0
        assert settings.lengthscales == pytest.approx(np.full(3, 0.25))
        assert settings.fixed_M == 3


class TestRunPlanning:
    def test_toy_plan_counts(self, tmp_path):
        config = load_config(
            minimal_toy(tmp_path, optimizers=["gibo", "hci_gibo"], seeds=[1, 2, 3])
        )
        plans = plan_runs(config)
        assert len(plans) == 6
        assert len({p.run_id for p in plans}) == 6

    def test_within_model_plan_is_cartesian(self, tmp_path):
        path = write_config(
            tmp_path / "wm.json",
            {
                "suite": "within_model",
                "optimizers": ["gibo", "hci_gibo"],
                "seeds": [0, 1],
                "dims": [2, 8],
                "n_functions": 3,
            },
        )
        plans = plan_runs(load_config(path))
        assert len(plans) == 2 * 2 * 3 * 2
        assert {(p.optimizer, p.dim, p.function_seed, p.run_seed) for p in plans} == {
            (o, d, f, s)
            for o in ("gibo", "hci_gibo")
            for d in (2, 8)
            for f in (0, 1, 2)
            for s in (0, 1)
        }

    def test_run_id_format(self, tmp_path):
        path = write_config(
            tmp_path / "wm.json",
            {"suite": "within_model", "optimizers": ["gibo"], "seeds": [4], "dims": [8]},
        )
        plans = plan_runs(load_config(path))
        assert plans[0].run_id == "within_model-gibo-d08-f000-s0004"


@pytest.fixture(scope="module")
def toy_run(tmp_path_factory):
    """One small toy suite executed once and shared by the output tests."""
    base = tmp_path_factory.mktemp("toy_run")
    path = write_config(
        base / "config.json",
        {
            "suite": "toy1d",
            "optimizers": ["gibo", "hci_gibo"],
            "seeds": [1, 2, 3],
            "budget_real": 10,
        },
    )
    out = base / "out"
    config = load_config(path)
    summary = run_suite(config, str(out))
    return config, out, summary


class TestSuiteOutputs:
    def test_output_files_exist(self, toy_run):
        _, out, _ = toy_run
        for name in ("results.csv", "summary.json", "manifest.json"):
            assert (out / name).is_file()

    def test_csv_header_and_width(self, toy_run):
        _, out, _ = toy_run
        header, rows = read_rows(out)
        assert ",".join(header) == EXPECTED_HEADER
        assert rows
        assert all(len(r) == len(header) for r in rows)

    def test_one_run_id_per_planned_run(self, toy_run):
        config, out, _ = toy_run
        _, rows = read_rows(out)
        assert {r[0] for r in rows} == {p.run_id for p in plan_runs(config)}

    def test_rows_sorted_by_run_id(self, toy_run):
        _, out, _ = toy_run
        _, rows = read_rows(out)
        ids = [r[0] for r in rows]
        assert ids == sorted(ids)

    def test_real_queries_non_decreasing_within_run(self, toy_run):
        _, out, _ = toy_run
        _, rows = read_rows(out)
        per_run = {}
        for r in rows:
            per_run.setdefault(r[0], []).append(int(r[6]))
        for counts in per_run.values():
            assert counts == sorted(counts)
            assert counts[-1] <= 10

    def test_one_row_per_evaluation(self, toy_run):
        _, out, _ = toy_run
        _, rows = read_rows(out)
        per_run = {}
        for r in rows:
            per_run.setdefault(r[0], []).append((int(r[6]), int(r[7])))
        for events in per_run.values():
            totals = [real + sim for real, sim in events]
            assert totals == list(range(1, len(events) + 1))

    def test_solution_accuracy_in_unit_interval(self, toy_run):
        _, out, _ = toy_run
        _, rows = read_rows(out)
        sa = np.array([float(r[10]) for r in rows])
        assert np.all(sa >= 0.0) and np.all(sa <= 1.0)

    def test_incumbent_value_matches_toy_objective_scale(self, toy_run):
        _, out, _ = toy_run
        _, rows = read_rows(out)
        values = np.array([float(r[9]) for r in rows])
        assert np.all(values <= 1.0 + 1e-9)

    def test_summary_reports_all_runs(self, toy_run):
        config, _, summary = toy_run
        assert summary["n_runs"] == len(plan_runs(config))
        assert summary["n_failed"] == 0
        assert summary["errors"] == []

    def test_summary_curves_match_recomputation(self, toy_run):
        config, out, summary = toy_run
        _, rows = read_rows(out)
        curve = summary["curves"]["hci_gibo"]["1"]
        assert curve["real_queries"] == list(range(1, config.budget_real + 1))
        per_run = {}
        for r in rows:
            if r[2] != "hci_gibo":
                continue
            per_run.setdefault(r[0], []).append((int(r[6]), float(r[10])))
        aligned = []
        for events in per_run.values():
            sa_at = []
            level = events[0][1]
            for q in range(1, config.budget_real + 1):
                for real, sa in events:
                    if real <= q:
                        level = sa
                sa_at.append(level)
            aligned.append(sa_at)
        aligned = np.array(aligned)
        assert curve["n_runs"] == aligned.shape[0]
        assert np.allclose(curve["sa_mean"], aligned.mean(axis=0), atol=1e-12)
        assert np.allclose(curve["sa_std"], aligned.std(axis=0), atol=1e-12)

    def test_manifest_echo_reproduces_config(self, toy_run, tmp_path):
        config, out, _ = toy_run
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["seeds"] == list(config.seeds)
        assert "library_version" in manifest
        echoed = write_config(tmp_path / "echo.json", manifest["config"])
        assert load_config(echoed) == config


class TestDeterminism:
    def test_repeat_run_is_byte_identical(self, tmp_path):
        path = minimal_toy(tmp_path, seeds=[5], budget_real=8)
        config = load_config(path)
        run_suite(config, str(tmp_path / "a"))
        run_suite(config, str(tmp_path / "b"))
        a = (tmp_path / "a" / "results.csv").read_bytes()
        b = (tmp_path / "b" / "results.csv").read_bytes()
        assert a == b
        sa = (tmp_path / "a" / "summary.json").read_bytes()
        sb = (tmp_path / "b" / "summary.json").read_bytes()
        assert sa == sb

    def test_parallel_run_matches_serial(self, tmp_path):
        path = minimal_toy(
            tmp_path, optimizers=["gibo", "hci_gibo"], seeds=[1, 2], budget_real=8
        )
        config = load_config(path)
        run_suite(config, str(tmp_path / "serial"), jobs=1)
        run_suite(config, str(tmp_path / "parallel"), jobs=3)
        assert (tmp_path / "serial" / "results.csv").read_bytes() == (
            tmp_path / "parallel" / "results.csv"
        ).read_bytes()

    def test_manifest_round_trip_reproduces_results(self, tmp_path):
        path = minimal_toy(tmp_path, seeds=[9], budget_real=8)
        run_suite(load_config(path), str(tmp_path / "first"))
        manifest = json.loads((tmp_path / "first" / "manifest.json").read_text())
        echoed = write_config(tmp_path / "echo.json", manifest["config"])
        run_suite(load_config(echoed), str(tmp_path / "second"))
        assert (tmp_path / "first" / "results.csv").read_bytes() == (
            tmp_path / "second" / "results.csv"
        ).read_bytes()


class TestSimSource:
    def test_within_model_sim_queries_logged(self, tmp_path):
        path = write_config(
            tmp_path / "wm.json",
            {
                "suite": "within_model",
                "optimizers": ["s_hci_gibo"],
                "seeds": [0],
                "dims": [2],
                "budget_real": 6,
                "max_updates": 3,
            },
        )
        out = tmp_path / "out"
        run_suite(load_config(path), str(out))
        _, rows = read_rows(out)
        assert max(int(r[7]) for r in rows) > 0
        sources_interleaved = [(int(r[6]), int(r[7])) for r in rows]
        assert sources_interleaved[0] == (1, 0)

    def test_pendulum_smoke_run(self, tmp_path):
        path = write_config(
            tmp_path / "p.json",
            {
                "suite": "pendulum",
                "optimizers": ["hci_gibo"],
                "seeds": [0],
                "budget_real": 5,
                "max_updates": 2,
            },
        )
        out = tmp_path / "out"
        summary = run_suite(load_config(path), str(out))
        _, rows = read_rows(out)
        assert summary["n_failed"] == 0
        assert all(r[3] == "24" for r in rows)
        sa = [float(r[10]) for r in rows]
        assert all(0.0 <= v <= 1.0 for v in sa)


class TestFailureHandling:
    def test_single_failure_recorded_and_skipped(self, tmp_path, monkeypatch):
        import gibopt.harness as harness_module

        path = minimal_toy(tmp_path, seeds=[1, 2], budget_real=6)
        config = load_config(path)
        victim = plan_runs(config)[0].run_id
        original = harness_module._execute_run

        def sabotage(config_arg, plan):
            if plan.run_id == victim:
                raise RuntimeError("synthetic failure")
            return original(config_arg, plan)

        monkeypatch.setattr(harness_module, "_execute_run", sabotage)
        out = tmp_path / "out"
        summary = run_suite(config, str(out))
        assert summary["n_failed"] == 1
        assert summary["errors"][0]["run_id"] == victim
        assert "synthetic failure" in summary["errors"][0]["error"]
        _, rows = read_rows(out)
        assert victim not in {r[0] for r in rows}

    def test_all_failures_raise(self, tmp_path, monkeypatch):
        import gibopt.harness as harness_module

        path = minimal_toy(tmp_path, seeds=[1], budget_real=6)
        config = load_config(path)

        def explode(config_arg, plan):
            raise RuntimeError("nothing works")

        monkeypatch.setattr(harness_module, "_execute_run", explode)
        with pytest.raises(RuntimeError):
            run_suite(config, str(tmp_path / "out"))


class TestCli:
    def test_describe_minimal(self, tmp_path, capsys):
        path = minimal_toy(tmp_path)
        assert cli_main(["describe", "--config", path]) == 0
        out = capsys.readouterr().out
        assert "planned runs: 1" in out
        assert "toy1d-hci_gibo-d01-f000-s0001" in out

    def test_run_writes_outputs(self, tmp_path):
        path = minimal_toy(tmp_path, budget_real=6)
        out = tmp_path / "results"
        assert cli_main(["run", "--config", path, "--out", str(out)]) == 0
        assert (out / "results.csv").is_file()
        assert (out / "summary.json").is_file()
        assert (out / "manifest.json").is_file()

    def test_unknown_flag_exits_one(self, tmp_path, capsys):
        path = minimal_toy(tmp_path)
        assert cli_main(["run", "--config", path, "--frobnicate"]) == 1
        assert "usage" in capsys.readouterr().err.lower()

    def test_missing_config_exits_one(self, tmp_path):
        assert cli_main(["describe", "--config", str(tmp_path / "none.json")]) == 1

    def test_validation_error_exits_one(self, tmp_path, capsys):
        path = minimal_toy(tmp_path, improvement={"alpha": 1.2})
        assert cli_main(["run", "--config", path, "--out", str(tmp_path / "o")]) == 1
        assert "improvement.alpha" in capsys.readouterr().err

    def test_unwritable_out_dir_exits_two(self, tmp_path):
        path = minimal_toy(tmp_path, budget_real=6)
        blocker = tmp_path / "blocker"
        blocker.write_text("a file, not a directory")
        code = cli_main(["run", "--config", path, "--out", str(blocker / "sub")])
        assert code == 2

    def test_jobs_must_be_positive(self, tmp_path):
        path = minimal_toy(tmp_path)
        assert cli_main(["run", "--config", path, "--out", str(tmp_path / "o"), "--jobs", "0"]) == 1

    def test_export_objective(self, tmp_path):
        target = tmp_path / "objective.json"
        code = cli_main(["export-objective", "--seed", "3", "--dim", "2", "--out", str(target)])
        assert code == 0
        loaded = load_objective(str(target))
        reference = make_within_model(2, function_seed=3)
        probe = sobol_points(5, 2)
        for p in probe:
            assert loaded.f(p) == pytest.approx(reference.f(p), abs=1e-12)

    def test_out_dir_from_environment(self, tmp_path, monkeypatch):
        path = minimal_toy(tmp_path, budget_real=6)
        out = tmp_path / "env_out"
        monkeypatch.setenv("GIBOPT_OUT", str(out))
        assert cli_main(["run", "--config", path]) == 0
        assert (out / "results.csv").is_file()
