"""Ground-truth trajectory generation and file ingestion.

Synthetic runs draw an Erdos-Renyi initial graph, evolve it under a
dynamics schedule, and synthesize observation pairs y_t = A_t z_t + w_t
with Gaussian noise.  The airport-style scenario instead starts from a
nominal graph read from an edge-list CSV, evolves it with closure
dynamics, and takes flight-count-like input signals either from a signal
CSV or from a synthesized Poisson surrogate.

Every random draw comes from a named substream of the experiment seed
(see randomness.py), so trajectories are bit-reproducible and adding new
streams never disturbs existing ones.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .errors import DimensionError, DomainError, ParseError
from .filtering import ObservationPair
from .randomness import substream
from .states import GraphSnapshot, read_edge_list, write_edge_list
from .transition import DynamicsSchedule, sample_next_graph

SCENARIO_KINDS = ("synthetic-er", "airports")
INPUT_MODES = ("iid-gaussian", "ar1")

DEFAULT_POISSON_RATE = 5.0


@dataclass(frozen=True)
class ScenarioConfig:
    """Everything needed to build one trajectory."""

    kind: str = "synthetic-er"
    n_nodes: int = 14
    er_p: float = 0.25
    sigma_obs: float = 0.1
    input_mode: str = "iid-gaussian"
    horizon: int = 1000
    seed: int = 0
    dynamics: DynamicsSchedule = field(default_factory=DynamicsSchedule)
    graph_source: Optional[str] = None
    signal_source: Optional[str] = None
    poisson_rate: float | Sequence[float] = DEFAULT_POISSON_RATE

    def validate(self) -> list[str]:
        """Collect every violated field; empty means valid."""
        problems = []
        if self.kind not in SCENARIO_KINDS:
            problems.append(f"scenario.kind: unknown '{self.kind}'")
        if not 2 <= self.n_nodes <= 24:
            problems.append(f"scenario.n_nodes: {self.n_nodes} outside [2, 24]")
        if not 0.0 <= self.er_p <= 1.0:
            problems.append(f"scenario.er_p: {self.er_p} outside [0, 1]")
        if not self.sigma_obs > 0:
            problems.append(f"scenario.sigma_obs: must be positive, got {self.sigma_obs}")
        if self.input_mode not in INPUT_MODES:
            problems.append(f"scenario.input_mode: unknown '{self.input_mode}'")
        if self.horizon < 1:
            problems.append(f"scenario.horizon: must be >= 1, got {self.horizon}")
        if self.kind == "airports":
            if self.graph_source is None:
                problems.append("scenario.graph_source: required for the airports scenario")
            if self.dynamics.kind != "closure":
                problems.append(
                    f"scenario.dynamics.kind: airports scenario needs 'closure', got '{self.dynamics.kind}'"
                )
        return problems


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Ground truth graphs plus the observation stream, one entry per step."""

    graphs: tuple[GraphSnapshot, ...]
    observations: tuple[ObservationPair, ...]
    noise: np.ndarray  # T x N, the w_t actually added

    def __post_init__(self):
        if len(self.graphs) != len(self.observations):
            raise DimensionError("graphs and observations must have equal length")

    @property
    def horizon(self) -> int:
        return len(self.graphs)

    @property
    def n_nodes(self) -> int:
        return self.graphs[0].n_nodes

    def change_steps(self) -> list[int]:
        """1-based timesteps where the truth differs from the step before."""
        return [
            t + 1
            for t in range(1, self.horizon)
            if not np.array_equal(self.graphs[t].matrix, self.graphs[t - 1].matrix)
        ]


def generate_er(n_nodes: int, p: float, rng: np.random.Generator) -> GraphSnapshot:
    """Directed Erdos-Renyi draw: off-diagonal entries are Bernoulli(p)."""
    if not 0.0 <= p <= 1.0:
        raise DomainError(f"connection probability {p} outside [0, 1]")
    mat = (rng.random((n_nodes, n_nodes)) < p).astype(np.int64)
    np.fill_diagonal(mat, 0)
    return GraphSnapshot(mat)


def surrogate_airport_graph(
    n_nodes: int, rng: np.random.Generator, p: float = 0.3
) -> GraphSnapshot:
    """Synthesized stand-in for a real airport network.

    An ER draw with every row guaranteed at least one incoming edge, so
    each node has a meaningful closure event.
    """
    mat = generate_er(n_nodes, p, rng).matrix.copy()
    for node in range(n_nodes):
        if not mat[node].any():
            other = int(rng.integers(n_nodes - 1))
            mat[node, other if other < node else other + 1] = 1
    return GraphSnapshot(mat)


def _evolve_graphs(
    initial: GraphSnapshot, schedule: DynamicsSchedule, horizon: int, rng: np.random.Generator
) -> list[GraphSnapshot]:
    graphs = [initial]
    for t in range(2, horizon + 1):
        graphs.append(sample_next_graph(graphs[-1], schedule, t, rng))
    return graphs


def _synthesize_observations(
    graphs: list[GraphSnapshot],
    z_source,
    sigma_obs: float,
    rng_noise: np.random.Generator,
):
    """Build y_t = A_t z_t + w_t; z_source(t, previous_y) supplies inputs."""
    observations = []
    noise = np.empty((len(graphs), graphs[0].n_nodes))
    prev_y = None
    for t0, graph in enumerate(graphs):
        z = z_source(t0, prev_y)
        w = sigma_obs * rng_noise.standard_normal(graph.n_nodes)
        with np.errstate(over="ignore"):  # overflow is caught and diagnosed below
            y = graph.matrix @ z + w
        if not np.isfinite(y).all():
            raise DomainError(
                f"signal overflow at timestep {t0 + 1}: the input recursion is unstable"
            )
        noise[t0] = w
        observations.append(ObservationPair(z=z, y=y))
        prev_y = y
    return observations, noise


def generate_trajectory(cfg: ScenarioConfig) -> Trajectory:
    """Synthesize a full scenario from its config (synthetic-er kind)."""
    problems = cfg.validate()
    if problems:
        raise DomainError("; ".join(problems))
    if cfg.kind == "airports":
        return load_airport_scenario(cfg.graph_source, cfg.signal_source, cfg)

    rng_init = substream(cfg.seed, "graph-init")
    rng_dyn = substream(cfg.seed, "dynamics")
    rng_in = substream(cfg.seed, "inputs")
    rng_noise = substream(cfg.seed, "noise")

    initial = generate_er(cfg.n_nodes, cfg.er_p, rng_init)
    graphs = _evolve_graphs(initial, cfg.dynamics, cfg.horizon, rng_dyn)

    def z_source(t0, prev_y):
        if cfg.input_mode == "ar1" and prev_y is not None:
            return prev_y
        return rng_in.standard_normal(cfg.n_nodes)

    observations, noise = _synthesize_observations(graphs, z_source, cfg.sigma_obs, rng_noise)
    return Trajectory(graphs=tuple(graphs), observations=tuple(observations), noise=noise)


def _poisson_rates(cfg: ScenarioConfig) -> np.ndarray:
    rate = cfg.poisson_rate
    if np.isscalar(rate):
        rates = np.full(cfg.n_nodes, float(rate))
    else:
        rates = np.asarray(rate, dtype=np.float64)
        if rates.shape != (cfg.n_nodes,):
            raise DimensionError(
                f"poisson_rate needs {cfg.n_nodes} entries, got shape {rates.shape}"
            )
    if (rates < 0).any():
        raise DomainError("poisson rates must be non-negative")
    return rates


def load_airport_scenario(
    graph_file, signals_file, cfg: ScenarioConfig
) -> Trajectory:
    """Trajectory for the airport-closure scenario.

    The nominal graph comes from an edge-list CSV.  Input signals are
    taken row-for-row from ``signals_file`` when given, otherwise
    synthesized as Poisson flight counts at the configured per-node
    rates.  Dynamics must be of the closure kind.
    """
    if cfg.dynamics.kind != "closure":
        raise DomainError(f"airports scenario needs closure dynamics, got '{cfg.dynamics.kind}'")
    nominal = read_edge_list(graph_file, cfg.n_nodes)
    schedule = cfg.dynamics if cfg.dynamics.nominal is not None else cfg.dynamics.with_nominal(nominal)

    rng_dyn = substream(cfg.seed, "dynamics")
    rng_noise = substream(cfg.seed, "noise")
    rng_counts = substream(cfg.seed, "flight-counts")

    graphs = _evolve_graphs(nominal, schedule, cfg.horizon, rng_dyn)

    if signals_file is not None:
        z_rows = read_signal_csv(signals_file, cfg.n_nodes)
        if z_rows.shape[0] < cfg.horizon:
            raise DimensionError(
                f"signal file has {z_rows.shape[0]} rows, horizon needs {cfg.horizon}"
            )

        def z_source(t0, prev_y):
            return z_rows[t0]

    else:
        rates = _poisson_rates(cfg)

        def z_source(t0, prev_y):
            return rng_counts.poisson(rates).astype(np.float64)

    observations, noise = _synthesize_observations(graphs, z_source, cfg.sigma_obs, rng_noise)
    return Trajectory(graphs=tuple(graphs), observations=tuple(observations), noise=noise)


# ---------------------------------------------------------------------------
# Signal CSV: header t,node_0,...,node_{N-1}; one row per timestep.
# ---------------------------------------------------------------------------


def signal_csv_header(n_nodes: int) -> str:
    return "t," + ",".join(f"node_{k}" for k in range(n_nodes))


def write_signal_csv(path, signals: np.ndarray) -> None:
    """Write a T x N signal matrix in the documented schema."""
    signals = np.asarray(signals, dtype=np.float64)
    lines = [signal_csv_header(signals.shape[1])]
    for t0, row in enumerate(signals):
        lines.append(f"{t0 + 1}," + ",".join(f"{v:.17g}" for v in row))
    Path(path).write_text("\n".join(lines) + "\n")


def read_signal_csv(path, n_nodes: int) -> np.ndarray:
    """Read a signal CSV back into a T x N array."""
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise ParseError("empty signal file", path=path)
    expected = signal_csv_header(n_nodes)
    if lines[0].strip() != expected:
        raise ParseError(f"expected header '{expected}'", path=path, line=1)
    rows = []
    for lineno, raw in enumerate(lines[1:], start=2):
        text = raw.strip()
        if not text:
            continue
        parts = text.split(",")
        if len(parts) != n_nodes + 1:
            raise ParseError(
                f"expected {n_nodes + 1} fields, got {len(parts)}", path=path, line=lineno
            )
        try:
            rows.append([float(v) for v in parts[1:]])
        except ValueError:
            raise ParseError(f"non-numeric entry in '{text}'", path=path, line=lineno)
    return np.array(rows, dtype=np.float64)


# ---------------------------------------------------------------------------
# Trajectory dump/load: one signals CSV plus one edge-list CSV per change
# point (t column included), which `replay` can reconstruct exactly.
# ---------------------------------------------------------------------------


def dump_trajectory(traj: Trajectory, out_dir) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    n = traj.n_nodes
    header = "t," + ",".join(f"z_{k}" for k in range(n)) + "," + ",".join(
        f"y_{k}" for k in range(n)
    )
    lines = [header]
    for t0, obs in enumerate(traj.observations):
        z_part = ",".join(f"{v:.17g}" for v in obs.z)
        y_part = ",".join(f"{v:.17g}" for v in obs.y)
        lines.append(f"{t0 + 1},{z_part},{y_part}")
    (out / "signals.csv").write_text("\n".join(lines) + "\n")

    change_points = [1] + traj.change_steps()
    for t in change_points:
        graph = traj.graphs[t - 1]
        path = out / f"graph_t{t:06d}.csv"
        body = ["t,src,dst"]
        dst_idx, src_idx = np.nonzero(graph.matrix)
        order = np.lexsort((dst_idx, src_idx))
        for k in order:
            body.append(f"{t},{src_idx[k]},{dst_idx[k]}")
        path.write_text("\n".join(body) + "\n")


def load_trajectory(in_dir) -> Trajectory:
    """Rebuild a trajectory from a dump_trajectory directory."""
    src = Path(in_dir)
    signals_path = src / "signals.csv"
    with open(signals_path) as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise ParseError("empty signals file", path=signals_path)
    fields = lines[0].split(",")
    if len(fields) < 3 or fields[0] != "t" or (len(fields) - 1) % 2:
        raise ParseError("malformed signals header", path=signals_path, line=1)
    n = (len(fields) - 1) // 2
    observations = []
    for lineno, raw in enumerate(lines[1:], start=2):
        if not raw.strip():
            continue
        parts = raw.split(",")
        if len(parts) != 1 + 2 * n:
            raise ParseError(
                f"expected {1 + 2 * n} fields, got {len(parts)}", path=signals_path, line=lineno
            )
        try:
            values = [float(v) for v in parts[1:]]
        except ValueError:
            raise ParseError(f"non-numeric entry in '{raw}'", path=signals_path, line=lineno)
        observations.append(ObservationPair(z=np.array(values[:n]), y=np.array(values[n:])))
    horizon = len(observations)

    change_graphs = {}
    for path in sorted(src.glob("graph_t*.csv")):
        with open(path) as fh:
            glines = fh.read().splitlines()
        if not glines or glines[0].strip() != "t,src,dst":
            raise ParseError("expected header 't,src,dst'", path=path, line=1)
        mat = np.zeros((n, n), dtype=np.int64)
        t_value = None
        for lineno, raw in enumerate(glines[1:], start=2):
            if not raw.strip():
                continue
            parts = raw.split(",")
            if len(parts) != 3:
                raise ParseError(f"expected 't,src,dst', got '{raw}'", path=path, line=lineno)
            t_value = int(parts[0])
            mat[int(parts[2]), int(parts[1])] = 1
        if t_value is None:
            t_value = int(path.stem.split("graph_t")[1])
        change_graphs[t_value] = GraphSnapshot(mat)
    if 1 not in change_graphs:
        raise ParseError("no graph file for t=1", path=src)

    graphs = []
    current = change_graphs[1]
    for t in range(1, horizon + 1):
        current = change_graphs.get(t, current)
        graphs.append(current)
    noise = np.array(
        [obs.y - graph.matrix @ obs.z for graph, obs in zip(graphs, observations)]
    )
    return Trajectory(graphs=tuple(graphs), observations=tuple(observations), noise=noise)


__all__ = [
    "ScenarioConfig",
    "Trajectory",
    "generate_er",
    "generate_trajectory",
    "load_airport_scenario",
    "surrogate_airport_graph",
    "read_signal_csv",
    "write_signal_csv",
    "dump_trajectory",
    "load_trajectory",
    "write_edge_list",
]
