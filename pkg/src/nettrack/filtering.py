"""Exact discrete Bayes tracking of per-node row beliefs.

One belief vector of length I = 2^(N-1) is kept per node.  A step is the
classic forward recursion: push the posterior through the node's
transition kernel (prediction), then reweight by the Gaussian likelihood
of the observed output entry and renormalize (update).

All update arithmetic runs in log space with log-sum-exp normalization.
At N = 14 the state space has 8192 members and raw likelihoods routinely
underflow float64; log space keeps the recursion exact.  Beliefs are
renormalized after both half-steps so float drift cannot accumulate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence, Union

import numpy as np

from .errors import DimensionError, DomainError, InvariantError
from .states import GraphSnapshot, bit_to_column, state_space_size
from .transition import TransitionKernel

SIMPLEX_TOL = 1e-9

LOG_TWO_PI = math.log(2.0 * math.pi)


@dataclass(frozen=True, eq=False)
class NodeBelief:
    """Probability simplex over one node's 2^(N-1) row states."""

    probs: np.ndarray
    owner: int

    def __post_init__(self):
        probs = np.asarray(self.probs, dtype=np.float64)
        size = probs.shape[0] if probs.ndim == 1 else -1
        if size < 2 or size & (size - 1):
            raise DimensionError(f"belief length must be a power of two >= 2, got {probs.shape}")
        if (probs < 0).any():
            raise InvariantError("belief entries must be non-negative")
        total = float(probs.sum())
        if abs(total - 1.0) > SIMPLEX_TOL:
            raise InvariantError(f"belief must sum to 1 within {SIMPLEX_TOL}, got {total!r}")
        n_nodes = size.bit_length()  # size = 2^(N-1)
        if not 0 <= self.owner < n_nodes:
            raise InvariantError(f"owner {self.owner} outside [0, {n_nodes})")
        probs = probs.copy()
        probs.flags.writeable = False
        object.__setattr__(self, "probs", probs)

    @property
    def size(self) -> int:
        return self.probs.shape[0]

    @property
    def n_nodes(self) -> int:
        return self.size.bit_length()


@dataclass(frozen=True, eq=False)
class ObservationPair:
    """Input/output graph signal pair (z_t, y_t) for one timestep."""

    z: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        z = np.asarray(self.z, dtype=np.float64)
        y = np.asarray(self.y, dtype=np.float64)
        if z.ndim != 1 or y.ndim != 1 or z.shape != y.shape:
            raise DimensionError(f"z and y must be equal-length vectors, got {z.shape}, {y.shape}")
        if not (np.isfinite(z).all() and np.isfinite(y).all()):
            raise DomainError("observation signals must be finite")
        z = z.copy()
        y = y.copy()
        z.flags.writeable = False
        y.flags.writeable = False
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "y", y)

    @property
    def n_nodes(self) -> int:
        return self.z.shape[0]


@dataclass(frozen=True, eq=False)
class FilterState:
    """All N row beliefs plus the clock and the observation noise scale."""

    beliefs: tuple[NodeBelief, ...]
    t: int
    sigma_obs: float

    def __post_init__(self):
        object.__setattr__(self, "beliefs", tuple(self.beliefs))
        if not self.beliefs:
            raise DimensionError("need at least one node belief")
        n = self.beliefs[0].n_nodes
        if len(self.beliefs) != n:
            raise DimensionError(f"{len(self.beliefs)} beliefs for graph order {n}")
        for node, belief in enumerate(self.beliefs):
            if belief.owner != node:
                raise InvariantError(f"belief {node} owned by {belief.owner}")
        if not (self.sigma_obs > 0 and np.isfinite(self.sigma_obs)):
            raise DomainError(f"sigma_obs must be positive and finite, got {self.sigma_obs}")

    @property
    def n_nodes(self) -> int:
        return len(self.beliefs)


@dataclass(frozen=True, eq=False)
class StepReport:
    """Per-node diagnostics for one predict+update step."""

    t: int
    log_evidence: np.ndarray  # log p(y_t[n] | past), the update denominator
    entropy: np.ndarray  # posterior entropy per node, nats
    degenerate: np.ndarray  # True where the update fell back to the prior


PriorSpec = Union[str, GraphSnapshot, Sequence[np.ndarray]]


def init_beliefs(n_nodes: int, prior: PriorSpec = "uniform", sigma_obs: float = 1.0) -> FilterState:
    """Build the t=0 filter state.

    ``prior`` is "uniform", a GraphSnapshot (point mass on its rows), or
    one explicit simplex vector per node.
    """
    size = state_space_size(n_nodes)
    beliefs = []
    if isinstance(prior, str):
        if prior != "uniform":
            raise DomainError(f"unknown prior '{prior}'")
        flat = np.full(size, 1.0 / size)
        beliefs = [NodeBelief(flat, node) for node in range(n_nodes)]
    elif isinstance(prior, GraphSnapshot):
        if prior.n_nodes != n_nodes:
            raise DimensionError(f"prior graph order {prior.n_nodes}, expected {n_nodes}")
        for node in range(n_nodes):
            probs = np.zeros(size)
            probs[prior.row_index(node)] = 1.0
            beliefs.append(NodeBelief(probs, node))
    else:
        vectors = list(prior)
        if len(vectors) != n_nodes:
            raise DimensionError(f"{len(vectors)} prior vectors for graph order {n_nodes}")
        beliefs = [NodeBelief(np.asarray(v, dtype=np.float64), node) for node, v in enumerate(vectors)]
    return FilterState(beliefs=tuple(beliefs), t=0, sigma_obs=sigma_obs)


def predict(state: FilterState, kernels: Sequence[TransitionKernel]) -> FilterState:
    """Push every belief through its node's kernel; renormalize; t unchanged."""
    if len(kernels) != state.n_nodes:
        raise DimensionError(f"{len(kernels)} kernels for {state.n_nodes} nodes")
    beliefs = []
    for node, (belief, kernel) in enumerate(zip(state.beliefs, kernels)):
        if kernel.size != belief.size:
            raise DimensionError(
                f"kernel size {kernel.size} does not match belief size {belief.size}"
            )
        pushed = kernel.apply(belief.probs)
        total = pushed.sum()
        if not total > 0:
            raise InvariantError(f"prediction for node {node} lost all mass")
        beliefs.append(NodeBelief(pushed / total, node))
    return FilterState(beliefs=tuple(beliefs), t=state.t, sigma_obs=state.sigma_obs)


def state_means(node: int, z: np.ndarray) -> np.ndarray:
    """Noiseless output a_i . z for every row state i of ``node``.

    Accumulates one butterfly pass per packed bit, O(I (N-1)); bit k adds
    z at the k-th non-owner column to all states with that bit set.
    """
    z = np.asarray(z, dtype=np.float64)
    n_nodes = z.shape[0]
    size = state_space_size(n_nodes)
    z_free = np.delete(z, node)
    means = np.zeros(size)
    for k in range(n_nodes - 1):
        means.reshape(-1, 2, 1 << k)[:, 1, :] += z_free[k]
    return means


def log_likelihood(node: int, index: int, obs: ObservationPair, sigma_obs: float) -> float:
    """Gaussian log density of the observed output entry under one row state."""
    if not sigma_obs > 0:
        raise DomainError(f"sigma_obs must be positive, got {sigma_obs}")
    mean = 0.0
    for k in range(obs.n_nodes - 1):
        if (index >> k) & 1:
            mean += obs.z[bit_to_column(node, k)]
    var = sigma_obs * sigma_obs
    resid = obs.y[node] - mean
    return -0.5 * (LOG_TWO_PI + math.log(var)) - resid * resid / (2.0 * var)


def _log_likelihood_vector(node: int, obs: ObservationPair, sigma_obs: float) -> np.ndarray:
    var = sigma_obs * sigma_obs
    resid = obs.y[node] - state_means(node, obs.z)
    with np.errstate(over="ignore"):  # extreme residuals overflow to -inf, by design
        return -0.5 * (LOG_TWO_PI + math.log(var)) - resid * resid / (2.0 * var)


def _posterior_from_log(log_post: np.ndarray, prior: np.ndarray):
    """Normalize an unnormalized log posterior via log-sum-exp.

    Returns (posterior, log_evidence, degenerate).  If every entry is
    -inf the observation was numerically impossible: keep the prior and
    flag it instead of aborting the run.
    """
    peak = log_post.max()
    if not np.isfinite(peak):
        return prior.copy(), float("-inf"), True
    weights = np.exp(log_post - peak)
    total = weights.sum()
    log_evidence = peak + math.log(total)
    return weights / total, log_evidence, False


def _entropy(probs: np.ndarray) -> float:
    mask = probs > 0
    p = probs[mask]
    return float(-(p * np.log(p)).sum())


def update(state: FilterState, obs: ObservationPair):
    """Bayes-reweight every a-priori belief by the observation likelihood.

    Returns the posterior state plus per-node log-evidence (the update
    denominator log p(y_t[n] | past)) and degenerate-update flags.
    """
    if obs.n_nodes != state.n_nodes:
        raise DimensionError(f"observation order {obs.n_nodes}, filter order {state.n_nodes}")
    beliefs = []
    log_evidence = np.empty(state.n_nodes)
    degenerate = np.zeros(state.n_nodes, dtype=bool)
    for node, belief in enumerate(state.beliefs):
        loglik = _log_likelihood_vector(node, obs, state.sigma_obs)
        with np.errstate(divide="ignore"):
            log_post = np.log(belief.probs) + loglik
        posterior, log_ev, flag = _posterior_from_log(log_post, belief.probs)
        log_evidence[node] = log_ev
        degenerate[node] = flag
        beliefs.append(NodeBelief(posterior, node))
    new_state = FilterState(beliefs=tuple(beliefs), t=state.t, sigma_obs=state.sigma_obs)
    return new_state, log_evidence, degenerate


def step(state: FilterState, kernels: Sequence[TransitionKernel], obs: ObservationPair):
    """One full tracking step: predict, then update; the clock advances."""
    predicted = predict(state, kernels)
    posterior, log_evidence, degenerate = update(predicted, obs)
    t_next = state.t + 1
    entropy = np.array([_entropy(b.probs) for b in posterior.beliefs])
    report = StepReport(t=t_next, log_evidence=log_evidence, entropy=entropy, degenerate=degenerate)
    final = FilterState(beliefs=posterior.beliefs, t=t_next, sigma_obs=state.sigma_obs)
    return final, report


def dump_belief_snapshot(fh, t: int, beliefs: Iterable[NodeBelief], floor: float = 1e-12) -> None:
    """Append ``t,node,index,prob`` lines for entries above ``floor``."""
    for belief in beliefs:
        (indices,) = np.nonzero(belief.probs > floor)
        for index in indices:
            fh.write(f"{t},{belief.owner},{index},{belief.probs[index]:.17g}\n")
