"""Rolling-window least-squares baselines.

The comparison method re-estimates the full adjacency matrix at every
step from the last t_w input/output signal pairs by minimizing

    || Y - A Z ||_F^2 + alpha * sum |A_ij|

Plain least squares (alpha = 0) solves row-wise via an SVD pseudoinverse
so rank-deficient windows (including w < N) get the minimum-norm
solution.  The l1-regularized variant runs proximal gradient descent
with soft thresholding.  Neither constrains the diagonal to zero.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, DomainError
from .filtering import ObservationPair

# Singular values below this fraction of the largest are treated as zero.
SV_CUTOFF = 1e-10

# Fraction of the 1 / sigma_max(Z Z^T) step bound actually taken.
STEP_SAFETY = 0.99


@dataclass(frozen=True)
class RlsConfig:
    """Window length and solver knobs for one baseline instance."""

    window: int
    alpha: float = 0.0
    max_iters: int = 1000
    tol: float = 1e-8

    def __post_init__(self):
        if self.window < 1:
            raise DomainError(f"window must be >= 1, got {self.window}")
        if self.alpha < 0:
            raise DomainError(f"alpha must be >= 0, got {self.alpha}")
        if not self.tol > 0:
            raise DomainError(f"tol must be positive, got {self.tol}")
        if self.max_iters < 1:
            raise DomainError(f"max_iters must be >= 1, got {self.max_iters}")


@dataclass(frozen=True)
class WindowBuffer:
    """Rolling window of observation columns, oldest first."""

    n_nodes: int
    capacity: int
    z_cols: tuple = ()
    y_cols: tuple = ()

    @property
    def width(self) -> int:
        return len(self.z_cols)

    @property
    def Z(self) -> np.ndarray:
        """Inputs as an N x w matrix."""
        return np.column_stack(self.z_cols) if self.z_cols else np.zeros((self.n_nodes, 0))

    @property
    def Y(self) -> np.ndarray:
        """Outputs as an N x w matrix."""
        return np.column_stack(self.y_cols) if self.y_cols else np.zeros((self.n_nodes, 0))


def push_observation(buf: WindowBuffer, obs: ObservationPair) -> WindowBuffer:
    """Append a column pair, evicting the oldest once past capacity."""
    if obs.n_nodes != buf.n_nodes:
        raise DimensionError(f"observation order {obs.n_nodes}, buffer order {buf.n_nodes}")
    z_cols = buf.z_cols + (obs.z,)
    y_cols = buf.y_cols + (obs.y,)
    if len(z_cols) > buf.capacity:
        z_cols = z_cols[-buf.capacity :]
        y_cols = y_cols[-buf.capacity :]
    return WindowBuffer(n_nodes=buf.n_nodes, capacity=buf.capacity, z_cols=z_cols, y_cols=y_cols)


@dataclass(frozen=True, eq=False)
class RlsEstimate:
    """Solver output: the matrix estimate plus solve diagnostics."""

    matrix: np.ndarray
    rank_deficient: bool
    iterations: int = 0
    objective_trace: tuple = field(default_factory=tuple)


def _objective(A: np.ndarray, Z: np.ndarray, Y: np.ndarray, alpha: float) -> float:
    resid = Y - A @ Z
    return float((resid * resid).sum() + alpha * np.abs(A).sum())


def _soft_threshold(values: np.ndarray, radius: float) -> np.ndarray:
    return np.sign(values) * np.maximum(np.abs(values) - radius, 0.0)


def rls_estimate(buf: WindowBuffer, cfg: RlsConfig) -> RlsEstimate:
    """Estimate the adjacency matrix from the current window."""
    if buf.width < 1:
        raise DimensionError("cannot estimate from an empty window")
    Z, Y = buf.Z, buf.Y
    n = buf.n_nodes

    u, s, vt = np.linalg.svd(Z, full_matrices=False)
    s_max = float(s[0]) if s.size else 0.0
    if s_max == 0.0:
        return RlsEstimate(matrix=np.zeros((n, n)), rank_deficient=True)
    keep = s > SV_CUTOFF * s_max
    rank = int(keep.sum())
    deficient = rank < n

    if cfg.alpha == 0.0:
        # Minimum-norm row-wise least squares: A = Y Z^+.
        pinv = vt[keep].T @ (u[:, keep] / s[keep]).T
        return RlsEstimate(matrix=Y @ pinv, rank_deficient=deficient)

    # Proximal gradient on (1/2)||Y - A Z||_F^2 + (alpha/2)|A|_1, the
    # half-scaled but equivalent objective: its gradient Lipschitz
    # constant is sigma_max(Z Z^T), so this step keeps every iterate
    # non-increasing in the original objective as well.
    lam_max = s_max * s_max
    step = STEP_SAFETY / lam_max
    radius = step * cfg.alpha / 2.0
    A = np.zeros((n, n))
    trace = [_objective(A, Z, Y, cfg.alpha)]
    iters = 0
    for iters in range(1, cfg.max_iters + 1):
        grad = (A @ Z - Y) @ Z.T
        A_next = _soft_threshold(A - step * grad, radius)
        trace.append(_objective(A_next, Z, Y, cfg.alpha))
        delta = float(np.abs(A_next - A).max())
        A = A_next
        if delta < cfg.tol:
            break
    return RlsEstimate(
        matrix=A, rank_deficient=deficient, iterations=iters, objective_trace=tuple(trace)
    )
