"""Command-line entry points.

Three subcommands share one YAML config format:

  run       generate a trajectory and evaluate every configured method
  generate  write a trajectory to disk (signals plus per-change graphs)
  replay    rerun methods against a previously generated trajectory

Any config field can be overridden from the command line with
``--set dotted.path=value``; a few common ones have dedicated flags.
Errors exit nonzero and print a single ``error: <category>: <message>``
line so callers can dispatch on the category.
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import Optional

import yaml

from .errors import ConfigError, NetTrackError, ParseError
from .harness import MethodSpec, RunConfig, run_experiment, run_on_trajectory
from .scenarios import ScenarioConfig, dump_trajectory, generate_trajectory, load_trajectory
from .transition import DynamicsSchedule

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_DATA = 4

_SCENARIO_KEYS = {
    "kind",
    "n_nodes",
    "er_p",
    "sigma_obs",
    "input_mode",
    "horizon",
    "seed",
    "dynamics",
    "graph_source",
    "signal_source",
    "poisson_rate",
}
_DYNAMICS_KEYS = {"kind", "period", "flip_prob", "close_prob", "reopen_prob"}
_FILTER_KEYS = {"prior", "dynamics"}
_TOP_KEYS = {
    "scenario",
    "filter",
    "methods",
    "output_dir",
    "dump_beliefs",
    "workers",
    "recovery_threshold",
}


def _dynamics_from_mapping(data, problems: list, where: str) -> Optional[DynamicsSchedule]:
    if data is None:
        return None
    if not isinstance(data, dict):
        problems.append(f"{where}: expected a mapping")
        return None
    for key in sorted(set(data) - _DYNAMICS_KEYS):
        problems.append(f"{where}.{key}: unknown key")
    try:
        return DynamicsSchedule(
            kind=str(data.get("kind", "static")),
            period=int(data.get("period", 1)),
            flip_prob=float(data.get("flip_prob", 0.0)),
            close_prob=float(data.get("close_prob", 0.0)),
            reopen_prob=float(data.get("reopen_prob", 0.0)),
        )
    except (NetTrackError, TypeError, ValueError) as exc:
        problems.append(f"{where}: {exc}")
        return None


def _scenario_from_mapping(data, problems: list) -> ScenarioConfig:
    if not isinstance(data, dict):
        problems.append("scenario: expected a mapping")
        data = {}
    for key in sorted(set(data) - _SCENARIO_KEYS):
        problems.append(f"scenario.{key}: unknown key")
    dynamics = _dynamics_from_mapping(data.get("dynamics"), problems, "scenario.dynamics")
    kwargs = {}
    try:
        kwargs = dict(
            kind=str(data.get("kind", "synthetic-er")),
            n_nodes=int(data.get("n_nodes", 14)),
            er_p=float(data.get("er_p", 0.25)),
            sigma_obs=float(data.get("sigma_obs", 0.1)),
            input_mode=str(data.get("input_mode", "iid-gaussian")),
            horizon=int(data.get("horizon", 1000)),
            seed=int(data.get("seed", 0)),
            graph_source=data.get("graph_source"),
            signal_source=data.get("signal_source"),
            poisson_rate=data.get("poisson_rate", 5.0),
        )
    except (TypeError, ValueError) as exc:
        problems.append(f"scenario: {exc}")
        return ScenarioConfig()
    if dynamics is not None:
        kwargs["dynamics"] = dynamics
    return ScenarioConfig(**kwargs)


def _methods_from_list(data, problems: list) -> tuple[MethodSpec, ...]:
    if data is None:
        return (MethodSpec("avg"), MethodSpec("map"))
    if not isinstance(data, list):
        problems.append("methods: expected a list")
        return ()
    specs = []
    for i, entry in enumerate(data):
        if isinstance(entry, str):
            specs.append(MethodSpec(entry))
            continue
        if not isinstance(entry, dict):
            problems.append(f"methods[{i}]: expected a name or a mapping")
            continue
        for key in sorted(set(entry) - {"name", "window", "alpha"}):
            problems.append(f"methods[{i}].{key}: unknown key")
        try:
            specs.append(
                MethodSpec(
                    name=str(entry.get("name", "")),
                    window=None if entry.get("window") is None else int(entry["window"]),
                    alpha=float(entry.get("alpha", 0.0)),
                )
            )
        except (TypeError, ValueError) as exc:
            problems.append(f"methods[{i}]: {exc}")
    return tuple(specs)


def config_from_mapping(data) -> RunConfig:
    """Build a RunConfig, collecting every problem before failing."""
    problems: list[str] = []
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError(["top level: expected a mapping"])
    for key in sorted(set(data) - _TOP_KEYS):
        problems.append(f"{key}: unknown key")

    scenario = _scenario_from_mapping(data.get("scenario", {}), problems)
    methods = _methods_from_list(data.get("methods"), problems)

    filter_section = data.get("filter") or {}
    if not isinstance(filter_section, dict):
        problems.append("filter: expected a mapping")
        filter_section = {}
    for key in sorted(set(filter_section) - _FILTER_KEYS):
        problems.append(f"filter.{key}: unknown key")
    assumed = _dynamics_from_mapping(filter_section.get("dynamics"), problems, "filter.dynamics")

    try:
        cfg = RunConfig(
            scenario=scenario,
            methods=methods,
            prior=str(filter_section.get("prior", "uniform")),
            assumed_dynamics=assumed,
            output_dir=data.get("output_dir"),
            dump_beliefs=bool(data.get("dump_beliefs", False)),
            workers=int(data.get("workers", 1)),
            recovery_threshold=float(data.get("recovery_threshold", 0.05)),
        )
    except (TypeError, ValueError) as exc:
        problems.append(f"top level: {exc}")
        cfg = None

    problems.extend(cfg.validate() if cfg is not None else [])
    if problems:
        raise ConfigError(problems)
    return cfg


def load_config_file(path) -> dict:
    try:
        with open(path) as fh:
            data = yaml.safe_load(fh)
    except yaml.YAMLError as exc:
        raise ParseError(f"bad YAML: {exc}", path=path)
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ParseError("config root must be a mapping", path=path)
    return data


def apply_override(data: dict, assignment: str) -> None:
    """Apply one ``dotted.path=value`` override onto the raw config tree."""
    if "=" not in assignment:
        raise ConfigError([f"--set '{assignment}': expected key=value"])
    dotted, raw_value = assignment.split("=", 1)
    try:
        value = yaml.safe_load(raw_value)
    except yaml.YAMLError:
        value = raw_value
    node = data
    keys = dotted.split(".")
    for key in keys[:-1]:
        nxt = node.get(key)
        if nxt is None:
            nxt = {}
            node[key] = nxt
        if not isinstance(nxt, dict):
            raise ConfigError([f"--set {dotted}: '{key}' is not a mapping"])
        node = nxt
    node[keys[-1]] = value


def _apply_common_flags(data: dict, args) -> None:
    for assignment in args.set or []:
        apply_override(data, assignment)
    if getattr(args, "seed", None) is not None:
        data.setdefault("scenario", {})["seed"] = args.seed
    if getattr(args, "output_dir", None) is not None:
        data["output_dir"] = args.output_dir
    if getattr(args, "workers", None) is not None:
        data["workers"] = args.workers
    if getattr(args, "dump_beliefs", False):
        data["dump_beliefs"] = True


def _cmd_run(args) -> int:
    data = load_config_file(args.config)
    _apply_common_flags(data, args)
    cfg = config_from_mapping(data)
    result = run_experiment(cfg)
    if cfg.output_dir is not None:
        print(f"results: {cfg.output_dir}/results.csv")
    else:
        print(json.dumps(result.summary, indent=2, sort_keys=True))
    return EXIT_OK


def _cmd_generate(args) -> int:
    data = load_config_file(args.config)
    _apply_common_flags(data, args)
    cfg = config_from_mapping(data)
    traj = generate_trajectory(cfg.scenario)
    dump_trajectory(traj, args.out)
    print(f"trajectory: {args.out} ({traj.horizon} steps, {traj.n_nodes} nodes)")
    return EXIT_OK


def _cmd_replay(args) -> int:
    data = load_config_file(args.config)
    _apply_common_flags(data, args)
    cfg = config_from_mapping(data)
    traj = load_trajectory(args.traj)
    result = run_on_trajectory(cfg, traj)
    if cfg.output_dir is not None:
        print(f"results: {cfg.output_dir}/results.csv")
    else:
        print(json.dumps(result.summary, indent=2, sort_keys=True))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nettrack",
        description="Track time-varying graph structure from nodal signals.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("config", help="YAML config file")
        p.add_argument("--seed", type=int, help="override scenario.seed")
        p.add_argument("--workers", type=int, help="override worker count")
        p.add_argument(
            "--set",
            action="append",
            metavar="KEY=VALUE",
            help="override any config field by dotted path (repeatable)",
        )

    p_run = sub.add_parser("run", help="run methods over a fresh trajectory")
    add_common(p_run)
    p_run.add_argument("--output-dir", help="write results.csv and friends here")
    p_run.add_argument("--dump-beliefs", action="store_true", help="also write beliefs.csv")
    p_run.set_defaults(func=_cmd_run)

    p_gen = sub.add_parser("generate", help="write a trajectory to disk")
    add_common(p_gen)
    p_gen.add_argument("--out", required=True, help="output directory for the trajectory")
    p_gen.set_defaults(func=_cmd_generate)

    p_rep = sub.add_parser("replay", help="rerun methods on a stored trajectory")
    add_common(p_rep)
    p_rep.add_argument("--traj", required=True, help="directory written by generate")
    p_rep.add_argument("--output-dir", help="write results.csv and friends here")
    p_rep.add_argument("--dump-beliefs", action="store_true", help="also write beliefs.csv")
    p_rep.set_defaults(func=_cmd_replay)
    return parser


def _fail(category: str, exc: BaseException, code: int) -> int:
    message = " ".join(str(exc).split())
    print(f"error: {category}: {message}", file=sys.stderr)
    return code


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        return _fail("config", exc, EXIT_CONFIG)
    except ParseError as exc:
        return _fail("data", exc, EXIT_DATA)
    except FileNotFoundError as exc:
        return _fail("io", exc, EXIT_IO)
    except OSError as exc:
        return _fail("io", exc, EXIT_IO)
    except NetTrackError as exc:
        return _fail("data", exc, EXIT_DATA)
    except Exception as exc:  # pragma: no cover - last resort
        return _fail("internal", exc, EXIT_INTERNAL)


if __name__ == "__main__":
    sys.exit(main())
