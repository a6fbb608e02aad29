"""Per-node transition kernels and ground-truth graph dynamics.

A kernel is the column-stochastic I x I operator taking the previous
belief over a node's row states to the predicted belief.  Three kernel
families are built here:

* an entry-wise Markov kernel, one independent 2x2 chain per edge slot,
  which factorizes over the packed bits of the state index;
* the symmetric flip kernel (all edge slots share one flip probability),
  a special case of the above with a closed dense form;
* a closure kernel modelling a node losing all incoming edges at once,
  with an optional reopen transition back to a nominal row.

Kernels are immutable after construction.  Dense matrices are only
materialized on demand and only while I = 2^(N-1) stays small; the
factorized and closure forms apply in O(I (N-1)) and O(I) respectively,
which is what makes tracking at N around 14..16 practical.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import DimensionError, DomainError, InvariantError, SizeLimitError
from .states import (
    GraphSnapshot,
    RowState,
    index_to_state,
    popcount_array,
    state_space_size,
    state_to_index,
)

# Dense I x I kernels above this state count are refused; the factorized
# and closure forms have no such limit.
MAX_DENSE_STATES = 65_536

# Below this flip probability, dense entries p^d (1-p)^(N-1-d) are formed
# in log space to dodge underflow of the power for large d.
LOG_SPACE_THRESHOLD = 1e-3

COLUMN_SUM_TOL = 1e-12


def _check_probability(value: float, name: str) -> float:
    value = float(value)
    if not 0.0 <= value <= 1.0 or not np.isfinite(value):
        raise DomainError(f"{name} must be a probability in [0, 1], got {value}")
    return value


@dataclass(frozen=True)
class EdgeMarkov:
    """Two-state Markov chain for one edge slot.

    ``p_appear`` is the 0 -> 1 transition probability, ``p_vanish`` the
    1 -> 0 one; the diagonal entries are their complements.
    """

    p_appear: float
    p_vanish: float

    def __post_init__(self):
        _check_probability(self.p_appear, "p_appear")
        _check_probability(self.p_vanish, "p_vanish")

    def block(self) -> np.ndarray:
        """Column-stochastic 2x2 block, indexed [new_bit, old_bit]."""
        return np.array(
            [
                [1.0 - self.p_appear, self.p_vanish],
                [self.p_appear, 1.0 - self.p_vanish],
            ]
        )


class TransitionKernel:
    """Column-stochastic transition operator for one node's row state.

    ``form`` is one of:

    * ``"identity"``: no-op kernel;
    * ``"dense"``: explicit I x I matrix;
    * ``"factorized"``: N-1 independent 2x2 per-bit blocks whose dense
      equivalent is their Kronecker product (bit 0 fastest-varying);
    * ``"closure"``: sparse all-edges-drop structure with parameters
      (close probability, reopen probability, nominal state index).
    """

    __slots__ = ("node", "n_nodes", "form", "matrix", "blocks", "closure")

    def __init__(self, node, n_nodes, form, matrix=None, blocks=None, closure=None):
        self.node = int(node)
        self.n_nodes = int(n_nodes)
        self.form = form
        size = state_space_size(self.n_nodes)
        if not 0 <= self.node < self.n_nodes:
            raise InvariantError(f"node {node} outside [0, {n_nodes})")
        if form == "identity":
            self.matrix, self.blocks, self.closure = None, None, None
        elif form == "dense":
            mat = np.asarray(matrix, dtype=np.float64)
            if mat.shape != (size, size):
                raise DimensionError(f"dense kernel must be {size}x{size}, got {mat.shape}")
            _check_column_stochastic(mat)
            mat = mat.copy()
            mat.flags.writeable = False
            self.matrix, self.blocks, self.closure = mat, None, None
        elif form == "factorized":
            blk = np.asarray(blocks, dtype=np.float64)
            if blk.shape != (self.n_nodes - 1, 2, 2):
                raise DimensionError(
                    f"need {self.n_nodes - 1} per-bit 2x2 blocks, got shape {blk.shape}"
                )
            sums = blk.sum(axis=1)
            if np.abs(sums - 1.0).max() > COLUMN_SUM_TOL or (blk < 0).any():
                raise InvariantError("per-bit blocks must be column-stochastic")
            blk = blk.copy()
            blk.flags.writeable = False
            self.matrix, self.blocks, self.closure = None, blk, None
        elif form == "closure":
            p_close, p_reopen, nominal_index = closure
            _check_probability(p_close, "p_close")
            _check_probability(p_reopen, "p_reopen")
            if not 0 <= nominal_index < size:
                raise IndexError(f"nominal state index {nominal_index} outside [0, {size})")
            self.matrix, self.blocks = None, None
            self.closure = (float(p_close), float(p_reopen), int(nominal_index))
        else:
            raise DomainError(f"unknown kernel form '{form}'")

    @property
    def size(self) -> int:
        return state_space_size(self.n_nodes)

    def apply(self, probs: np.ndarray) -> np.ndarray:
        """Multiply this kernel into a belief vector; see kernel_apply."""
        vec = np.asarray(probs, dtype=np.float64)
        if vec.shape != (self.size,):
            raise DimensionError(f"belief length {vec.shape} does not match I={self.size}")
        if self.form == "identity":
            return vec.copy()
        if self.form == "dense":
            return self.matrix @ vec
        if self.form == "factorized":
            return _apply_factorized(self.blocks, vec)
        p_close, p_reopen, nominal = self.closure
        out = (1.0 - p_close) * vec
        total = float(vec.sum())
        out[0] = p_close * (total - vec[0]) + (1.0 - p_reopen) * vec[0]
        if nominal == 0:
            out[0] += p_reopen * vec[0]
        else:
            out[nominal] += p_reopen * vec[0]
        return out

    def dense(self) -> np.ndarray:
        """Materialize the full I x I matrix (refused above MAX_DENSE_STATES)."""
        size = self.size
        if size > MAX_DENSE_STATES:
            raise SizeLimitError(
                f"dense kernel with I={size} exceeds the {MAX_DENSE_STATES}-state cap"
            )
        if self.form == "identity":
            return np.eye(size)
        if self.form == "dense":
            return self.matrix.copy()
        if self.form == "factorized":
            # Kronecker product with bit 0 as the fastest-varying index.
            return reduce(np.kron, self.blocks[::-1])
        p_close, p_reopen, nominal = self.closure
        mat = (1.0 - p_close) * np.eye(size)
        mat[0, :] += p_close
        mat[:, 0] = 0.0
        mat[0, 0] = 1.0 - p_reopen
        mat[nominal, 0] += p_reopen
        return mat

    def to_dense(self) -> "TransitionKernel":
        """Same operator re-wrapped in dense form (for oracle comparisons)."""
        return TransitionKernel(self.node, self.n_nodes, "dense", matrix=self.dense())

    def __repr__(self) -> str:
        return f"TransitionKernel(node={self.node}, n_nodes={self.n_nodes}, form='{self.form}')"


def _check_column_stochastic(mat: np.ndarray) -> None:
    if (mat < 0).any():
        raise InvariantError("kernel entries must be non-negative")
    worst = np.abs(mat.sum(axis=0) - 1.0).max()
    if worst > COLUMN_SUM_TOL:
        raise InvariantError(f"kernel columns must sum to 1 (off by {worst:.3e})")


def _apply_factorized(blocks: np.ndarray, vec: np.ndarray) -> np.ndarray:
    """Apply per-bit 2x2 blocks with in-place butterfly passes, O(I (N-1)).

    Bits are processed in ascending order; the passes commute, so the
    order only fixes the floating-point summation pattern.
    """
    out = vec.copy()
    for k in range(blocks.shape[0]):
        m = blocks[k]
        view = out.reshape(-1, 2, 1 << k)
        low = m[0, 0] * view[:, 0, :] + m[0, 1] * view[:, 1, :]
        high = m[1, 0] * view[:, 0, :] + m[1, 1] * view[:, 1, :]
        view[:, 0, :] = low
        view[:, 1, :] = high
    return out


def identity_kernel(node: int, n_nodes: int) -> TransitionKernel:
    return TransitionKernel(node, n_nodes, "identity")


def build_flip_kernel(node: int, n_nodes: int, p_flip: float) -> TransitionKernel:
    """Kernel under which every edge slot flips independently with p_flip.

    Returned in factorized form (N-1 copies of the symmetric 2x2 flip
    block); the dense entries p^d (1-p)^(N-1-d), with d the Hamming
    distance between state indices, are available via ``dense()``.
    """
    p = _check_probability(p_flip, "p_flip")
    block = np.array([[1.0 - p, p], [p, 1.0 - p]])
    blocks = np.broadcast_to(block, (n_nodes - 1, 2, 2)).copy()
    return TransitionKernel(node, n_nodes, "factorized", blocks=blocks)


def flip_kernel_dense(n_nodes: int, p_flip: float) -> np.ndarray:
    """Closed-form dense flip kernel: entry (i, j) = p^d(i,j) (1-p)^(N-1-d)."""
    p = _check_probability(p_flip, "p_flip")
    size = state_space_size(n_nodes)
    if size > MAX_DENSE_STATES:
        raise SizeLimitError(f"dense kernel with I={size} exceeds the {MAX_DENSE_STATES}-state cap")
    idx = np.arange(size, dtype=np.uint64)
    dist = popcount_array(idx[:, None] ^ idx[None, :])
    n_same = (n_nodes - 1) - dist
    if p == 0.0:
        return np.eye(size)
    if p == 1.0:
        return (dist == n_nodes - 1).astype(np.float64)
    if p < LOG_SPACE_THRESHOLD or p > 1.0 - LOG_SPACE_THRESHOLD:
        return np.exp(dist * np.log(p) + n_same * np.log1p(-p))
    return (p ** dist) * ((1.0 - p) ** n_same)


def build_edgewise_kernel(
    node: int, n_nodes: int, edges: Sequence[EdgeMarkov]
) -> TransitionKernel:
    """Factorized kernel from one EdgeMarkov per non-owner column.

    ``edges[k]`` governs packed bit k, i.e. the k-th column in ascending
    order skipping the owner.
    """
    if len(edges) != n_nodes - 1:
        raise DimensionError(f"need {n_nodes - 1} edge parameter sets, got {len(edges)}")
    blocks = np.stack([e.block() for e in edges])
    return TransitionKernel(node, n_nodes, "factorized", blocks=blocks)


def build_closure_kernel(
    node: int, n_nodes: int, p_close: float, p_reopen: float, nominal_row: RowState
) -> TransitionKernel:
    """Kernel for sudden all-incoming-edge loss with optional reopening.

    From any state: move to the all-zero state with probability p_close,
    stay otherwise.  From the all-zero state: move to the nominal row
    with probability p_reopen, stay otherwise.
    """
    if nominal_row.owner != node:
        raise InvariantError(f"nominal row owned by {nominal_row.owner}, expected {node}")
    if nominal_row.n_nodes != n_nodes:
        raise DimensionError(
            f"nominal row length {nominal_row.n_nodes} does not match N={n_nodes}"
        )
    nominal_index = state_to_index(nominal_row)
    return TransitionKernel(
        node, n_nodes, "closure", closure=(p_close, p_reopen, nominal_index)
    )


def kernel_apply(kernel: TransitionKernel, probs: np.ndarray) -> np.ndarray:
    """Return F b for a belief vector b.

    Dense kernels cost O(I^2); factorized ones run N-1 butterfly passes
    in O(I (N-1)); identity is a copy; closure is O(I).
    """
    return kernel.apply(probs)


def sample_transition(kernel: TransitionKernel, current: int, rng: np.random.Generator) -> int:
    """Draw the next row-state index from a kernel column."""
    if kernel.form == "identity":
        return current
    if kernel.form == "factorized":
        nxt = 0
        for k in range(kernel.n_nodes - 1):
            old = (current >> k) & 1
            p_one = kernel.blocks[k][1, old]
            if rng.random() < p_one:
                nxt |= 1 << k
        return nxt
    if kernel.form == "closure":
        p_close, p_reopen, nominal = kernel.closure
        if current == 0:
            return nominal if rng.random() < p_reopen else 0
        return 0 if rng.random() < p_close else current
    column = kernel.matrix[:, current]
    return int(rng.choice(kernel.size, p=column))


# ---------------------------------------------------------------------------
# Dynamics schedules: how the ground-truth graph evolves and which kernels
# a matched filter should assume at each timestep.
# ---------------------------------------------------------------------------

KernelFactory = Callable[[int, int], TransitionKernel]  # (t, node) -> kernel


def _is_flip_step(t: int, period: int) -> bool:
    # there is no transition into t=1, so the first flip lands at t=period+1
    return t > 1 and (t - 1) % period == 0


@dataclass(frozen=True)
class DynamicsSchedule:
    """Declarative description of the graph dynamics.

    kinds:
      static          -- graph never changes
      periodic-flip   -- the graph holds for ``period`` steps at a time; on
                         entering each new regime (t > 1, (t-1) % period == 0)
                         every off-diagonal entry flips independently with
                         probability flip_prob
      closure         -- per step, each open row drops to all-zero with
                         probability close_prob; a zero row reopens to its
                         nominal value with probability reopen_prob
      custom          -- kernels supplied by ``kernel_fn(t, node)``
    """

    kind: str = "static"
    period: int = 1
    flip_prob: float = 0.0
    close_prob: float = 0.0
    reopen_prob: float = 0.0
    nominal: Optional[GraphSnapshot] = None
    kernel_fn: Optional[KernelFactory] = None

    def __post_init__(self):
        if self.kind not in ("static", "periodic-flip", "closure", "custom"):
            raise DomainError(f"unknown dynamics kind '{self.kind}'")
        if self.kind == "periodic-flip":
            if self.period < 1:
                raise DomainError(f"flip period must be >= 1, got {self.period}")
            _check_probability(self.flip_prob, "flip_prob")
        if self.kind == "closure":
            _check_probability(self.close_prob, "close_prob")
            _check_probability(self.reopen_prob, "reopen_prob")
        if self.kind == "custom" and self.kernel_fn is None:
            raise DomainError("custom dynamics require a kernel_fn")

    def with_nominal(self, nominal: GraphSnapshot) -> "DynamicsSchedule":
        return DynamicsSchedule(
            kind=self.kind,
            period=self.period,
            flip_prob=self.flip_prob,
            close_prob=self.close_prob,
            reopen_prob=self.reopen_prob,
            nominal=nominal,
            kernel_fn=self.kernel_fn,
        )


def sample_next_graph(
    graph: GraphSnapshot,
    schedule: DynamicsSchedule,
    t: int,
    rng: np.random.Generator,
) -> GraphSnapshot:
    """Advance the ground-truth graph one step to timestep ``t``.

    Draw counts per call are fixed by (kind, N) alone so that trajectory
    generation stays reproducible when parameters change.
    """
    n = graph.n_nodes
    if schedule.kind == "static":
        return graph
    if schedule.kind == "periodic-flip":
        draws = rng.random((n, n))  # drawn even off change steps: stable stream layout
        if not _is_flip_step(t, schedule.period):
            return graph
        flips = (draws < schedule.flip_prob).astype(np.int64)
        np.fill_diagonal(flips, 0)
        return GraphSnapshot(np.abs(graph.matrix - flips))
    if schedule.kind == "closure":
        nominal = schedule.nominal if schedule.nominal is not None else graph
        draws = rng.random(n)
        mat = graph.matrix.copy()
        for node in range(n):
            if mat[node].any():
                if draws[node] < schedule.close_prob:
                    mat[node, :] = 0
            elif draws[node] < schedule.reopen_prob:
                mat[node, :] = nominal.matrix[node]
        return GraphSnapshot(mat)
    rows = []
    for node in range(n):
        kernel = schedule.kernel_fn(t, node)
        nxt = sample_transition(kernel, graph.row_index(node), rng)
        rows.append(index_to_state(node, nxt, n))
    return GraphSnapshot.from_rows(rows)


class KernelPlan:
    """Precomputed per-node filter kernels for a schedule.

    Builds each distinct kernel once; ``kernels_at(t)`` hands back the
    per-node list for timestep t.
    """

    def __init__(self, schedule: DynamicsSchedule, n_nodes: int):
        self.schedule = schedule
        self.n_nodes = n_nodes
        self._identity = [identity_kernel(node, n_nodes) for node in range(n_nodes)]
        self._event: Optional[list[TransitionKernel]] = None
        if schedule.kind == "periodic-flip":
            self._event = [
                build_flip_kernel(node, n_nodes, schedule.flip_prob)
                for node in range(n_nodes)
            ]
        elif schedule.kind == "closure":
            if schedule.nominal is None:
                raise DomainError("closure dynamics need a nominal graph for filter kernels")
            self._event = [
                build_closure_kernel(
                    node,
                    n_nodes,
                    schedule.close_prob,
                    schedule.reopen_prob,
                    schedule.nominal.row(node),
                )
                for node in range(n_nodes)
            ]

    def kernels_at(self, t: int) -> list[TransitionKernel]:
        kind = self.schedule.kind
        if kind == "static":
            return self._identity
        if kind == "periodic-flip":
            return self._event if _is_flip_step(t, self.schedule.period) else self._identity
        if kind == "closure":
            return self._event
        return [self.schedule.kernel_fn(t, node) for node in range(self.n_nodes)]
