"""Point estimates, uncertainty summaries, and the tracking error metric."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .errors import DimensionError
from .filtering import NodeBelief
from .states import GraphSnapshot, RowState, bit_to_column, index_to_state

# expected_row weighs the state/bit table by the belief.  The table is
# cached per graph order while it stays under _TABLE_CAP float64 entries
# (32 MB); past that it is streamed in chunks so large state spaces
# never materialize an I x (N-1) matrix at once.
_CHUNK = 1 << 16
_TABLE_CAP = 1 << 22
_bit_tables: dict[int, np.ndarray] = {}


def _bit_table(n_nodes: int, start: int, stop: int) -> np.ndarray:
    idx = np.arange(start, stop, dtype=np.uint64)
    bits = (idx[:, None] >> np.arange(n_nodes - 1, dtype=np.uint64)[None, :]) & 1
    return bits.astype(np.float64)


@dataclass(frozen=True, eq=False)
class RowEstimate:
    """Estimated adjacency row for one node.

    ``values`` holds edge-presence estimates in [0, 1]; for MAP estimates
    the maximizing state is attached as ``state``.
    """

    values: np.ndarray
    owner: int
    state: RowState | None = None


def expected_row(belief: NodeBelief) -> RowEstimate:
    """Posterior-mean row: the probability-weighted sum of all states."""
    n_nodes = belief.n_nodes
    if belief.size * (n_nodes - 1) <= _TABLE_CAP:
        table = _bit_tables.get(n_nodes)
        if table is None:
            table = _bit_table(n_nodes, 0, belief.size)
            _bit_tables[n_nodes] = table
        acc = belief.probs @ table
    else:
        acc = np.zeros(n_nodes - 1)
        for start in range(0, belief.size, _CHUNK):
            stop = min(start + _CHUNK, belief.size)
            acc += belief.probs[start:stop] @ _bit_table(n_nodes, start, stop)
    values = np.zeros(n_nodes)
    for k in range(n_nodes - 1):
        values[bit_to_column(belief.owner, k)] = acc[k]
    return RowEstimate(values=values, owner=belief.owner)


def map_row(belief: NodeBelief) -> RowEstimate:
    """Maximum a-posteriori row; ties break to the lowest state index."""
    index = int(np.argmax(belief.probs))  # argmax returns the first maximizer
    state = index_to_state(belief.owner, index, belief.n_nodes)
    return RowEstimate(values=state.as_array().astype(np.float64), owner=belief.owner, state=state)


def edge_marginals(belief: NodeBelief) -> np.ndarray:
    """Per-column probability that the edge slot is active.

    Computed by per-bit butterfly sums, a different route from
    expected_row; by linearity the two agree exactly.
    """
    n_nodes = belief.n_nodes
    out = np.zeros(n_nodes)
    for k in range(n_nodes - 1):
        bit_mass = belief.probs.reshape(-1, 2, 1 << k)[:, 1, :].sum()
        out[bit_to_column(belief.owner, k)] = bit_mass
    return out


def belief_entropy(belief: NodeBelief) -> float:
    """Shannon entropy of the belief in nats; 0 log 0 reads as 0.

    Summed in base 2 and converted at the end: state counts are powers
    of two here, so log2 is exact for dyadic masses and the uniform
    belief lands on (N-1) log 2 with no rounding slack.
    """
    mask = belief.probs > 0
    p = belief.probs[mask]
    bits = float(-(p * np.log2(p)).sum())
    return bits * math.log(2.0)


Estimates = Union[np.ndarray, Sequence[RowEstimate]]


def state_error(estimates: Estimates, truth: GraphSnapshot) -> float:
    """Normalized squared tracking error, summed over nodes.

    Each node contributes ||estimate - true_row||^2 / ||true_row||^2.
    A true row with no edges would zero the denominator, so it is
    replaced by 1 there, leaving the raw squared error for that node.
    """
    n_nodes = truth.n_nodes
    if isinstance(estimates, np.ndarray):
        est = np.asarray(estimates, dtype=np.float64)
        if est.shape != (n_nodes, n_nodes):
            raise DimensionError(f"estimate shape {est.shape}, expected {(n_nodes, n_nodes)}")
        rows = est
    else:
        if len(estimates) != n_nodes:
            raise DimensionError(f"{len(estimates)} row estimates for graph order {n_nodes}")
        rows = np.empty((n_nodes, n_nodes))
        for node, item in enumerate(estimates):
            if item.owner != node:
                raise DimensionError(f"estimate {node} owned by {item.owner}")
            rows[node] = item.values
    total = 0.0
    for node in range(n_nodes):
        true_row = truth.matrix[node].astype(np.float64)
        denom = float(true_row @ true_row)
        if denom == 0.0:
            denom = 1.0
        diff = rows[node] - true_row
        total += float(diff @ diff) / denom
    return total


def entropy_upper_bound(n_nodes: int) -> float:
    """Largest possible row-belief entropy, (N-1) log 2 nats."""
    return (n_nodes - 1) * math.log(2.0)
