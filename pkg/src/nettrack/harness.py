"""Experiment harness: run every requested method over one trajectory.

One trajectory is generated (or loaded), then each estimation method is
evaluated against the ground truth at every step.  The belief filter is
propagated once and serves both the posterior-mean and MAP readouts; the
least-squares baselines each maintain their own rolling window.

Methods run as independent tasks on a thread pool, but all output is
assembled in a fixed order, so results are byte-identical no matter how
many workers are used.
"""

from __future__ import annotations

import io
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .baselines import RlsConfig, WindowBuffer, push_observation, rls_estimate
from .errors import ConfigError
from .estimators import expected_row, map_row, state_error
from .filtering import FilterState, StepReport, dump_belief_snapshot, init_beliefs, step
from .scenarios import ScenarioConfig, Trajectory, generate_trajectory
from .transition import DynamicsSchedule, KernelPlan

RESULTS_HEADER = "t,method,L_t"
DIAGNOSTICS_HEADER = "t,node,entropy,log_evidence,degenerate"
BELIEF_HEADER = "t,node,index,prob"

STEADY_WINDOW = 100
DEFAULT_RECOVERY_THRESHOLD = 0.05

METHOD_NAMES = ("avg", "map", "rls", "rrls")


@dataclass(frozen=True)
class MethodSpec:
    """One requested estimation method.

    avg / map read the filter posterior; rls / rrls are rolling
    least-squares over a window, the latter with an l1 penalty.
    """

    name: str
    window: Optional[int] = None
    alpha: float = 0.0

    @property
    def label(self) -> str:
        if self.name == "rls":
            return f"rls-tw{self.window}"
        if self.name == "rrls":
            return f"rrls-tw{self.window}-a{self.alpha:g}"
        return self.name

    @property
    def uses_filter(self) -> bool:
        return self.name in ("avg", "map")

    def validate(self) -> list[str]:
        problems = []
        if self.name not in METHOD_NAMES:
            problems.append(f"methods: unknown method '{self.name}'")
            return problems
        if self.name in ("rls", "rrls"):
            if self.window is None or self.window < 1:
                problems.append(f"methods.{self.name}: window must be a positive integer")
            if self.name == "rrls" and not self.alpha > 0:
                problems.append(f"methods.rrls: alpha must be positive, got {self.alpha}")
        return problems


@dataclass(frozen=True)
class RunConfig:
    """Full description of one experiment run."""

    scenario: ScenarioConfig = field(default_factory=ScenarioConfig)
    methods: tuple[MethodSpec, ...] = (MethodSpec("avg"), MethodSpec("map"))
    prior: str = "uniform"
    assumed_dynamics: Optional[DynamicsSchedule] = None
    output_dir: Optional[str] = None
    dump_beliefs: bool = False
    workers: int = 1
    recovery_threshold: float = DEFAULT_RECOVERY_THRESHOLD

    def __post_init__(self):
        object.__setattr__(self, "methods", tuple(self.methods))

    def validate(self) -> list[str]:
        """Collect every violation across the whole config tree."""
        problems = list(self.scenario.validate())
        if not self.methods:
            problems.append("methods: need at least one")
        seen = set()
        for spec in self.methods:
            problems.extend(spec.validate())
            if spec.label in seen:
                problems.append(f"methods: duplicate label '{spec.label}'")
            seen.add(spec.label)
        if self.prior not in ("uniform", "point"):
            problems.append(f"prior: must be 'uniform' or 'point', got '{self.prior}'")
        if self.workers < 1:
            problems.append(f"workers: must be >= 1, got {self.workers}")
        if not self.recovery_threshold > 0:
            problems.append(
                f"recovery_threshold: must be positive, got {self.recovery_threshold}"
            )
        return problems

    def check(self) -> None:
        problems = self.validate()
        if problems:
            raise ConfigError(problems)


@dataclass(frozen=True, eq=False)
class RunResult:
    """Everything a run produced, independent of what was written to disk."""

    config: RunConfig
    trajectory: Trajectory
    errors: dict  # method label -> length-T array of L_t
    reports: Optional[tuple[StepReport, ...]]  # filter diagnostics, if the filter ran
    change_steps: tuple[int, ...]
    summary: dict


def filter_schedule(cfg: RunConfig, traj: Trajectory) -> DynamicsSchedule:
    """The dynamics model the filter assumes; defaults to the true one."""
    schedule = cfg.assumed_dynamics if cfg.assumed_dynamics is not None else cfg.scenario.dynamics
    if schedule.kind == "closure" and schedule.nominal is None:
        schedule = schedule.with_nominal(traj.graphs[0])
    return schedule


def _filter_pass(cfg: RunConfig, traj: Trajectory):
    """Propagate the belief filter once; read out both avg and map errors."""
    n = traj.n_nodes
    horizon = traj.horizon
    prior = "uniform" if cfg.prior == "uniform" else traj.graphs[0]
    state = init_beliefs(n, prior=prior, sigma_obs=cfg.scenario.sigma_obs)
    plan = KernelPlan(filter_schedule(cfg, traj), n)

    avg_series = np.empty(horizon)
    map_series = np.empty(horizon)
    reports = []
    dump_chunks = [] if cfg.dump_beliefs else None
    for t0, obs in enumerate(traj.observations):
        state, report = step(state, plan.kernels_at(t0 + 1), obs)
        reports.append(report)
        avg_series[t0] = state_error([expected_row(b) for b in state.beliefs], traj.graphs[t0])
        map_series[t0] = state_error([map_row(b) for b in state.beliefs], traj.graphs[t0])
        if dump_chunks is not None:
            chunk = io.StringIO()
            dump_belief_snapshot(chunk, t0 + 1, state.beliefs)
            dump_chunks.append(chunk.getvalue())
    return avg_series, map_series, tuple(reports), dump_chunks


def _rls_pass(spec: MethodSpec, traj: Trajectory) -> np.ndarray:
    rls_cfg = RlsConfig(window=spec.window, alpha=spec.alpha if spec.name == "rrls" else 0.0)
    buf = WindowBuffer(n_nodes=traj.n_nodes, capacity=spec.window)
    series = np.empty(traj.horizon)
    for t0, obs in enumerate(traj.observations):
        buf = push_observation(buf, obs)
        estimate = rls_estimate(buf, rls_cfg)
        series[t0] = state_error(estimate.matrix, traj.graphs[t0])
    return series


def steady_state_windows(change_steps, horizon: int, width: int = STEADY_WINDOW):
    """Inclusive 1-based (start, end) spans ending just before each change.

    These cover the settled stretch of each inter-change segment; a final
    window before the horizon end is added when the last change is not at
    the horizon itself.
    """
    windows = []
    for c in change_steps:
        end = c - 1
        if end >= 1:
            windows.append((max(1, end - width + 1), end))
    if not change_steps or change_steps[-1] != horizon:
        windows.append((max(1, horizon - width + 1), horizon))
    return windows


def steady_state_mean(series: np.ndarray, change_steps, width: int = STEADY_WINDOW) -> float:
    values = []
    for start, end in steady_state_windows(change_steps, len(series), width):
        values.append(series[start - 1 : end])
    return float(np.concatenate(values).mean())


def recovery_time(series: np.ndarray, change_steps, threshold: float):
    """Steps until the error drops below threshold after each change.

    For change step c the answer is the smallest k >= 0 with
    L_{c+k} < threshold, searched up to the next change; None when the
    error never settles within the segment.
    """
    horizon = len(series)
    times = []
    bounds = list(change_steps) + [horizon + 1]
    for i, c in enumerate(change_steps):
        nxt = bounds[i + 1]
        found = None
        for t in range(c, min(nxt, horizon + 1)):
            if series[t - 1] < threshold:
                found = t - c
                break
        times.append(found)
    return times


def _build_summary(cfg: RunConfig, traj: Trajectory, errors: dict, change_steps) -> dict:
    methods = {}
    for label in sorted(errors):
        series = errors[label]
        methods[label] = {
            "mean": float(series.mean()),
            "steady_state_mean": steady_state_mean(series, change_steps),
            "final": float(series[-1]),
            "recovery_times": recovery_time(series, change_steps, cfg.recovery_threshold),
        }
    return {
        "n_nodes": traj.n_nodes,
        "horizon": traj.horizon,
        "seed": cfg.scenario.seed,
        "change_steps": list(change_steps),
        "recovery_threshold": cfg.recovery_threshold,
        "methods": methods,
    }


def write_results_csv(path, errors: dict) -> None:
    """``t,method,L_t`` rows, sorted by (t, method label)."""
    labels = sorted(errors)
    horizon = len(next(iter(errors.values())))
    lines = [RESULTS_HEADER]
    for t0 in range(horizon):
        for label in labels:
            lines.append(f"{t0 + 1},{label},{errors[label][t0]:.17g}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_results_csv(path) -> dict:
    """Inverse of write_results_csv: method label -> error series."""
    lines = Path(path).read_text().splitlines()
    series: dict[str, list] = {}
    for raw in lines[1:]:
        if not raw.strip():
            continue
        t_str, label, value = raw.split(",")
        series.setdefault(label, []).append(float(value))
    return {label: np.array(vals) for label, vals in series.items()}


def write_diagnostics_csv(path, reports) -> None:
    lines = [DIAGNOSTICS_HEADER]
    for report in reports:
        for node in range(len(report.entropy)):
            lines.append(
                f"{report.t},{node},{report.entropy[node]:.17g},"
                f"{report.log_evidence[node]:.17g},{int(report.degenerate[node])}"
            )
    Path(path).write_text("\n".join(lines) + "\n")


def run_experiment(cfg: RunConfig) -> RunResult:
    """Generate the trajectory, run every method, optionally write files."""
    cfg.check()
    traj = generate_trajectory(cfg.scenario)
    return run_on_trajectory(cfg, traj)


def run_on_trajectory(cfg: RunConfig, traj: Trajectory) -> RunResult:
    """Same as run_experiment but against a pre-built trajectory (replay)."""
    cfg.check()
    need_filter = cfg.dump_beliefs or any(spec.uses_filter for spec in cfg.methods)
    rls_specs = [spec for spec in cfg.methods if not spec.uses_filter]

    filter_future = None
    rls_futures = []
    with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
        if need_filter:
            filter_future = pool.submit(_filter_pass, cfg, traj)
        for spec in rls_specs:
            rls_futures.append((spec, pool.submit(_rls_pass, spec, traj)))

        errors = {}
        reports = None
        dump_chunks = None
        if filter_future is not None:
            avg_series, map_series, reports, dump_chunks = filter_future.result()
            for spec in cfg.methods:
                if spec.name == "avg":
                    errors[spec.label] = avg_series
                elif spec.name == "map":
                    errors[spec.label] = map_series
        for spec, future in rls_futures:
            errors[spec.label] = future.result()

    change_steps = tuple(traj.change_steps())
    summary = _build_summary(cfg, traj, errors, change_steps)
    result = RunResult(
        config=cfg,
        trajectory=traj,
        errors=errors,
        reports=reports,
        change_steps=change_steps,
        summary=summary,
    )

    if cfg.output_dir is not None:
        out = Path(cfg.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_results_csv(out / "results.csv", errors)
        if reports is not None:
            write_diagnostics_csv(out / "diagnostics.csv", reports)
        if dump_chunks is not None:
            with open(out / "beliefs.csv", "w") as fh:
                fh.write(BELIEF_HEADER + "\n")
                for chunk in dump_chunks:
                    fh.write(chunk)
        with open(out / "summary.json", "w") as fh:
            json.dump(summary, fh, indent=2, sort_keys=True)
            fh.write("\n")
    return result


__all__ = [
    "MethodSpec",
    "RunConfig",
    "RunResult",
    "run_experiment",
    "run_on_trajectory",
    "recovery_time",
    "steady_state_mean",
    "steady_state_windows",
    "write_results_csv",
    "read_results_csv",
    "write_diagnostics_csv",
    "filter_schedule",
]
