"""Bit-level encoding and enumeration of per-row graph states.

Each row of an N-node directed adjacency matrix, with the owner's own
position forced to zero, is one of 2^(N-1) binary vectors.  Rows are
indexed by packing the N-1 free positions into an unsigned integer:
bit k (least significant bit is k=0) holds the k-th column in ascending
order, skipping the owner column.  This convention is fixed here and
relied on everywhere else in the package: it is what makes per-edge
transition kernels factorize bit by bit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, InvariantError, SizeLimitError

# Largest supported graph order.  The row state space has 2^(N-1) elements
# and the tracker is exponential in N, so anything beyond this is outside
# the intended desk-scale regime.
MAX_NODES = 24
MIN_NODES = 2


def state_space_size(n_nodes: int) -> int:
    """Number of states a single adjacency row can take, I = 2^(N-1)."""
    if not MIN_NODES <= n_nodes <= MAX_NODES:
        raise SizeLimitError(
            f"graph order {n_nodes} unsupported: need {MIN_NODES} <= N <= {MAX_NODES}"
        )
    return 1 << (n_nodes - 1)


def bit_to_column(owner: int, bit: int) -> int:
    """Column index addressed by packed bit ``bit`` of an owner's row."""
    return bit if bit < owner else bit + 1


def column_to_bit(owner: int, column: int) -> int:
    """Inverse of :func:`bit_to_column`; column must not be the owner."""
    if column == owner:
        raise InvariantError(f"column {column} is the owner position")
    return column if column < owner else column - 1


@dataclass(frozen=True)
class RowState:
    """One adjacency row: binary entries with a forced zero at the owner."""

    bits: tuple[int, ...]
    owner: int

    def __post_init__(self):
        n = len(self.bits)
        if not 0 <= self.owner < n:
            raise InvariantError(f"owner {self.owner} outside [0, {n})")
        if any(b not in (0, 1) for b in self.bits):
            raise InvariantError("row entries must be 0 or 1")
        if self.bits[self.owner] != 0:
            raise InvariantError(f"self-loop bit set at owner {self.owner}")

    @property
    def n_nodes(self) -> int:
        return len(self.bits)

    def as_array(self) -> np.ndarray:
        return np.array(self.bits, dtype=np.int64)


def index_to_state(owner: int, index: int, n_nodes: int) -> RowState:
    """Unpack a row-state index into the explicit binary row vector."""
    size = state_space_size(n_nodes)
    if not 0 <= index < size:
        raise IndexError(f"state index {index} outside [0, {size})")
    bits = [0] * n_nodes
    for k in range(n_nodes - 1):
        if (index >> k) & 1:
            bits[bit_to_column(owner, k)] = 1
    return RowState(bits=tuple(bits), owner=owner)


def state_to_index(state: RowState) -> int:
    """Pack a row state back into its index; inverse of index_to_state."""
    index = 0
    for k in range(state.n_nodes - 1):
        if state.bits[bit_to_column(state.owner, k)]:
            index |= 1 << k
    return index


def hamming(i: int, j: int) -> int:
    """Number of differing edge slots between two row-state indices."""
    if i < 0 or j < 0:
        raise IndexError("state indices must be non-negative")
    return (i ^ j).bit_count()


def popcount_array(values: np.ndarray) -> np.ndarray:
    """Vectorized set-bit count for arrays of state indices."""
    return np.bitwise_count(np.asarray(values, dtype=np.uint64)).astype(np.int64)


class GraphSnapshot:
    """Full N x N binary adjacency matrix at one timestep.

    Entry (n, n') is 1 iff the directed edge (n', n) exists, i.e. row n
    lists the incoming neighbours of node n.  The diagonal is forced to
    zero and the backing array is frozen after validation.
    """

    __slots__ = ("matrix",)

    def __init__(self, matrix: np.ndarray):
        mat = np.asarray(matrix, dtype=np.int64)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise DimensionError(f"adjacency matrix must be square, got {mat.shape}")
        state_space_size(mat.shape[0])  # enforces the supported order range
        if not np.isin(mat, (0, 1)).all():
            raise InvariantError("adjacency entries must be 0 or 1")
        if np.diagonal(mat).any():
            raise InvariantError("adjacency diagonal must be zero (no self-loops)")
        mat = mat.copy()
        mat.flags.writeable = False
        self.matrix = mat

    @property
    def n_nodes(self) -> int:
        return self.matrix.shape[0]

    @classmethod
    def from_rows(cls, rows: list[RowState]) -> "GraphSnapshot":
        n = len(rows)
        for node, row in enumerate(rows):
            if row.owner != node:
                raise InvariantError(f"row {node} owned by node {row.owner}")
            if row.n_nodes != n:
                raise DimensionError(f"row {node} has length {row.n_nodes}, expected {n}")
        return cls(np.array([row.bits for row in rows], dtype=np.int64))

    def row(self, node: int) -> RowState:
        return RowState(bits=tuple(int(v) for v in self.matrix[node]), owner=node)

    def row_index(self, node: int) -> int:
        """Packed state index of row ``node``."""
        return state_to_index(self.row(node))

    def __eq__(self, other) -> bool:
        return isinstance(other, GraphSnapshot) and np.array_equal(self.matrix, other.matrix)

    def __hash__(self):
        return hash((self.n_nodes, self.matrix.tobytes()))

    def __repr__(self) -> str:
        return f"GraphSnapshot(n_nodes={self.n_nodes}, edges={int(self.matrix.sum())})"


# ---------------------------------------------------------------------------
# Serialization: edge-list CSV (src,dst per line; edge (n',n) <=> A[n][n']=1)
# and a dense 0/1 text block for debugging.
# ---------------------------------------------------------------------------

EDGE_LIST_HEADER = "src,dst"


def write_edge_list(snapshot: GraphSnapshot, path) -> None:
    """Write one directed edge per line as ``src,dst``."""
    lines = [EDGE_LIST_HEADER]
    dst_idx, src_idx = np.nonzero(snapshot.matrix)
    order = np.lexsort((dst_idx, src_idx))
    for k in order:
        lines.append(f"{src_idx[k]},{dst_idx[k]}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_edge_list(path, n_nodes: int) -> GraphSnapshot:
    """Parse an edge-list CSV written by :func:`write_edge_list`."""
    from .errors import ParseError  # local import keeps module load order flat

    mat = np.zeros((n_nodes, n_nodes), dtype=np.int64)
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise ParseError("empty edge-list file", path=path)
    header = lines[0].strip()
    if header != EDGE_LIST_HEADER:
        raise ParseError(f"expected header '{EDGE_LIST_HEADER}', got '{header}'", path=path, line=1)
    for lineno, raw in enumerate(lines[1:], start=2):
        text = raw.strip()
        if not text:
            continue
        parts = text.split(",")
        if len(parts) != 2:
            raise ParseError(f"expected 'src,dst', got '{text}'", path=path, line=lineno)
        try:
            src, dst = int(parts[0]), int(parts[1])
        except ValueError:
            raise ParseError(f"non-integer node id in '{text}'", path=path, line=lineno)
        if not (0 <= src < n_nodes and 0 <= dst < n_nodes):
            raise ParseError(f"node id outside [0, {n_nodes}) in '{text}'", path=path, line=lineno)
        if src == dst:
            raise ParseError(f"self-loop edge '{text}'", path=path, line=lineno)
        mat[dst, src] = 1
    return GraphSnapshot(mat)


def write_dense(snapshot: GraphSnapshot, path) -> None:
    """Write the adjacency matrix as N rows of space-separated 0/1."""
    with open(path, "w") as fh:
        for row in snapshot.matrix:
            fh.write(" ".join(str(int(v)) for v in row) + "\n")


def read_dense(path) -> GraphSnapshot:
    """Read the debugging text format written by :func:`write_dense`."""
    from .errors import ParseError

    rows = []
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            text = raw.strip()
            if not text:
                continue
            try:
                rows.append([int(v) for v in text.split()])
            except ValueError:
                raise ParseError(f"non-integer entry in '{text}'", path=path, line=lineno)
    if not rows:
        raise ParseError("empty dense matrix file", path=path)
    return GraphSnapshot(np.array(rows, dtype=np.int64))
