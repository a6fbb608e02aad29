from dataclasses import replace

import numpy as np
import pytest

from nettrack.errors import ConfigError
from nettrack.harness import (
    MethodSpec,
    RunConfig,
    read_results_csv,
    recovery_time,
    run_experiment,
    run_on_trajectory,
    steady_state_windows,
)
from nettrack.scenarios import ScenarioConfig, dump_trajectory, generate_trajectory, load_trajectory
from nettrack.transition import DynamicsSchedule


def small_config(**overrides):
    scenario = overrides.pop(
        "scenario",
        ScenarioConfig(
            n_nodes=5,
            er_p=0.3,
            sigma_obs=0.1,
            horizon=40,
            seed=21,
            dynamics=DynamicsSchedule(kind="periodic-flip", period=10, flip_prob=0.2),
        ),
    )
    base = dict(
        scenario=scenario,
        methods=(MethodSpec("avg"), MethodSpec("map"), MethodSpec("rls", window=10)),
    )
    base.update(overrides)
    return RunConfig(**base)


class TestMethodSpec:
    def test_labels(self):
        assert MethodSpec("avg").label == "avg"
        assert MethodSpec("map").label == "map"
        assert MethodSpec("rls", window=30).label == "rls-tw30"
        assert MethodSpec("rrls", window=30, alpha=0.1).label == "rrls-tw30-a0.1"

    def test_unknown_name(self):
        assert MethodSpec("median").validate()

    def test_rls_needs_window(self):
        assert MethodSpec("rls").validate()
        assert not MethodSpec("rls", window=5).validate()

    def test_rrls_needs_positive_alpha(self):
        assert MethodSpec("rrls", window=5).validate()
        assert not MethodSpec("rrls", window=5, alpha=0.2).validate()


class TestRunConfigValidation:
    def test_zero_horizon_rejected(self):
        cfg = small_config(scenario=ScenarioConfig(n_nodes=4, horizon=0))
        with pytest.raises(ConfigError, match="horizon"):
            cfg.check()

    def test_no_methods(self):
        with pytest.raises(ConfigError, match="at least one"):
            small_config(methods=()).check()

    def test_duplicate_labels(self):
        cfg = small_config(methods=(MethodSpec("avg"), MethodSpec("avg")))
        with pytest.raises(ConfigError, match="duplicate"):
            cfg.check()

    def test_all_violations_collected(self):
        cfg = small_config(
            scenario=ScenarioConfig(n_nodes=1, horizon=0),
            methods=(MethodSpec("rls"),),
            prior="oracle",
            workers=0,
        )
        with pytest.raises(ConfigError) as err:
            cfg.check()
        assert len(err.value.fields) >= 5

    def test_valid_passes(self):
        small_config().check()


class TestRecoveryTime:
    def test_immediate(self):
        series = np.array([0.01, 0.02, 0.03])
        assert recovery_time(series, [1], threshold=0.1) == [0]

    def test_never_recovered(self):
        series = np.array([1.0, 1.0, 1.0])
        assert recovery_time(series, [1], threshold=0.1) == [None]

    def test_ramp(self):
        series = np.array([1.0, 0.5, 0.05])
        assert recovery_time(series, [1], threshold=0.1) == [2]

    def test_search_stops_at_next_change(self):
        series = np.array([1.0, 1.0, 0.01, 1.0, 0.01])
        assert recovery_time(series, [1, 4], threshold=0.1) == [2, 1]

    def test_empty_changes(self):
        assert recovery_time(np.array([1.0, 0.5]), [], threshold=0.1) == []


class TestSteadyStateWindows:
    def test_no_changes_takes_tail(self):
        assert steady_state_windows([], 500) == [(401, 500)]

    def test_windows_end_before_changes(self):
        windows = steady_state_windows([200, 400], 400)
        assert windows == [(100, 199), (300, 399)]

    def test_short_horizon_clipped(self):
        assert steady_state_windows([], 30) == [(1, 30)]

    def test_tail_added_when_last_change_early(self):
        windows = steady_state_windows([200], 500)
        assert windows == [(100, 199), (401, 500)]


class TestRunExperiment:
    def test_map_converges_on_static_empty_graph(self):
        cfg = small_config(
            scenario=ScenarioConfig(
                n_nodes=5,
                er_p=0.0,
                sigma_obs=0.01,
                horizon=30,
                seed=2,
                dynamics=DynamicsSchedule(kind="static"),
            ),
            methods=(MethodSpec("map"),),
        )
        result = run_experiment(cfg)
        series = result.errors["map"]
        assert series[-1] < 0.05
        assert series[-10:].max() < 0.05

    def test_series_lengths(self):
        result = run_experiment(small_config())
        for series in result.errors.values():
            assert len(series) == 40
        assert result.reports is not None and len(result.reports) == 40

    def test_change_steps_from_truth(self):
        result = run_experiment(small_config())
        assert result.change_steps == tuple(result.trajectory.change_steps())
        for c in result.change_steps:
            assert c % 10 == 1

    def test_summary_shape(self):
        result = run_experiment(small_config())
        methods = result.summary["methods"]
        assert set(methods) == {"avg", "map", "rls-tw10"}
        for entry in methods.values():
            assert set(entry) == {"mean", "steady_state_mean", "final", "recovery_times"}
            assert len(entry["recovery_times"]) == len(result.change_steps)

    def test_byte_identical_reruns(self, tmp_path):
        out_a = tmp_path / "a"
        out_b = tmp_path / "b"
        run_experiment(small_config(output_dir=str(out_a)))
        run_experiment(small_config(output_dir=str(out_b)))
        for name in ["results.csv", "diagnostics.csv", "summary.json"]:
            assert (out_a / name).read_bytes() == (out_b / name).read_bytes()

    def test_method_isolation(self):
        lean = run_experiment(small_config(methods=(MethodSpec("avg"), MethodSpec("map"))))
        full = run_experiment(
            small_config(
                methods=(
                    MethodSpec("avg"),
                    MethodSpec("map"),
                    MethodSpec("rls", window=10),
                    MethodSpec("rrls", window=10, alpha=0.5),
                )
            )
        )
        assert np.array_equal(lean.errors["avg"], full.errors["avg"])
        assert np.array_equal(lean.errors["map"], full.errors["map"])

    def test_workers_do_not_change_bytes(self, tmp_path):
        out_a = tmp_path / "w1"
        out_b = tmp_path / "w8"
        cfg = small_config(
            methods=(
                MethodSpec("avg"),
                MethodSpec("map"),
                MethodSpec("rls", window=10),
                MethodSpec("rrls", window=10, alpha=0.3),
            )
        )
        run_experiment(replace(cfg, output_dir=str(out_a), workers=1))
        run_experiment(replace(cfg, output_dir=str(out_b), workers=8))
        for name in ["results.csv", "diagnostics.csv", "summary.json"]:
            assert (out_a / name).read_bytes() == (out_b / name).read_bytes()

    def test_results_csv_round_trip(self, tmp_path):
        out = tmp_path / "run"
        result = run_experiment(small_config(output_dir=str(out)))
        back = read_results_csv(out / "results.csv")
        assert set(back) == set(result.errors)
        for label, series in result.errors.items():
            assert np.array_equal(back[label], series)

    def test_results_rows_sorted(self, tmp_path):
        out = tmp_path / "run"
        run_experiment(small_config(output_dir=str(out)))
        lines = (out / "results.csv").read_text().splitlines()[1:]
        keys = [(int(l.split(",")[0]), l.split(",")[1]) for l in lines]
        assert keys == sorted(keys)

    def test_diagnostics_row_count(self, tmp_path):
        out = tmp_path / "run"
        run_experiment(small_config(output_dir=str(out)))
        lines = (out / "diagnostics.csv").read_text().splitlines()
        assert lines[0] == "t,node,entropy,log_evidence,degenerate"
        assert len(lines) == 1 + 40 * 5

    def test_belief_dump(self, tmp_path):
        out = tmp_path / "run"
        run_experiment(small_config(output_dir=str(out), dump_beliefs=True))
        lines = (out / "beliefs.csv").read_text().splitlines()
        assert lines[0] == "t,node,index,prob"
        t, node, index, prob = lines[1].split(",")
        assert int(t) == 1 and 0 <= int(node) < 5 and 0 <= int(index) < 16
        assert float(prob) > 1e-12

    def test_replay_reproduces_run(self, tmp_path):
        cfg = small_config(output_dir=str(tmp_path / "direct"))
        run_experiment(cfg)
        traj = generate_trajectory(cfg.scenario)
        dump_trajectory(traj, tmp_path / "dump")
        loaded = load_trajectory(tmp_path / "dump")
        replay_cfg = replace(cfg, output_dir=str(tmp_path / "replayed"))
        run_on_trajectory(replay_cfg, loaded)
        assert (tmp_path / "direct" / "results.csv").read_bytes() == (
            tmp_path / "replayed" / "results.csv"
        ).read_bytes()

    def test_point_prior_starts_perfect(self):
        cfg = small_config(
            scenario=ScenarioConfig(
                n_nodes=5,
                er_p=0.3,
                sigma_obs=0.1,
                horizon=10,
                seed=5,
                dynamics=DynamicsSchedule(kind="static"),
            ),
            methods=(MethodSpec("map"),),
            prior="point",
        )
        result = run_experiment(cfg)
        assert result.errors["map"][0] == 0.0
