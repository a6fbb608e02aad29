"""Bayesian tracking of time-varying graph structure from nodal signals.

Each node's incoming-edge row is tracked as a belief over its 2^(N-1)
possible configurations; a discrete predict/update filter follows the
row through graph changes. Rolling least-squares baselines and an
experiment harness round out the package.
"""

from .baselines import RlsConfig, RlsEstimate, WindowBuffer, push_observation, rls_estimate
from .errors import (
    ConfigError,
    DimensionError,
    DomainError,
    InvariantError,
    NetTrackError,
    ParseError,
    SizeLimitError,
)
from .estimators import (
    RowEstimate,
    belief_entropy,
    edge_marginals,
    entropy_upper_bound,
    expected_row,
    map_row,
    state_error,
)
from .filtering import (
    FilterState,
    NodeBelief,
    ObservationPair,
    StepReport,
    dump_belief_snapshot,
    init_beliefs,
    log_likelihood,
    predict,
    state_means,
    step,
    update,
)
from .harness import (
    MethodSpec,
    RunConfig,
    RunResult,
    recovery_time,
    run_experiment,
    run_on_trajectory,
)
from .randomness import substream
from .scenarios import (
    ScenarioConfig,
    Trajectory,
    dump_trajectory,
    generate_er,
    generate_trajectory,
    load_airport_scenario,
    load_trajectory,
    read_signal_csv,
    surrogate_airport_graph,
    write_signal_csv,
)
from .states import (
    MAX_NODES,
    GraphSnapshot,
    RowState,
    bit_to_column,
    column_to_bit,
    hamming,
    index_to_state,
    read_edge_list,
    state_space_size,
    state_to_index,
    write_edge_list,
)
from .transition import (
    DynamicsSchedule,
    EdgeMarkov,
    KernelPlan,
    TransitionKernel,
    build_closure_kernel,
    build_edgewise_kernel,
    build_flip_kernel,
    flip_kernel_dense,
    identity_kernel,
    kernel_apply,
    sample_next_graph,
    sample_transition,
)

__version__ = "0.1.0"
