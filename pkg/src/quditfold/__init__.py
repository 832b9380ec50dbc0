"""quditfold: lattice-walk and peptide-folding experiments driven by
variational phase/mixer circuits on mixed-radix statevectors.

The package builds exact cost tables over every configuration of a
constrained lattice problem (planar self-avoiding loops, tetrahedral
peptide conformations), evolves mixed-radix quantum states under
alternating cost-phase and mixer layers, optimizes the angles with exact
adjoint gradients, and reports sampling metrics against classical
baselines.  Hot kernels are compiled with numba; set
``QUDITFOLD_BACKEND=numpy`` to run the pure-numpy fallbacks instead.
"""

from .backends import ENV_VAR, active_backend, set_backend, warmup
from .cost import (
    DEFAULT_MEMORY_CAP_BYTES,
    CostVector,
    WalkProblem,
    build_peptide_cost,
    build_saw_cost,
    descriptor_hash,
    load_cost,
    save_cost,
)
from .errors import (
    ArityError,
    ConfigError,
    EncodingError,
    MemoryCapError,
    OptimizationError,
    UnsupportedMixerError,
)
from .harness import (
    ExperimentConfig,
    OracleStats,
    RunArchive,
    cmd_fold,
    cmd_saw,
    cmd_tune_penalty,
    index_to_digits,
    oracle_enumerate,
    oracle_enumerate_peptide,
)
from .lattice import (
    ABSOLUTE,
    DEFAULT_BOND_LENGTH,
    DEFAULT_PREFIX_TURNS,
    RELATIVE,
    SQUARE,
    TETRAHEDRAL,
    Encoding,
    FixedPrefix,
    Walk,
    decode_square,
    decode_tetrahedral,
    is_self_avoiding_loop,
)
from .metrics import (
    collision_entropy,
    crossing_distribution,
    dimensionless_energy,
    clash_probability,
    fit_exponential,
    mds_embed,
    quantile_ratio,
    random_guess_quantile,
    rms_distance_matrix,
    shannon_entropy,
)
from .optimize import (
    InitStrategy,
    OptimizationRun,
    anneal_strategies,
    annealing_schedule,
    extrapolate,
    gradient,
    local_optimize,
    multistart,
    objective,
    objective_and_gradient,
    random_init,
    rescale_gamma,
    tune_penalty,
)
from .peptide import (
    HconParams,
    PeptideTopology,
    build_alanine_topology,
    lj_lower_bound,
    lj_pair,
    parse_params,
    parse_topology,
    place_and_minimize,
)
from .qsim import (
    MIXER_INVERSION,
    MIXER_QUBIT_X,
    MIXER_QUDIT,
    MixedRadixState,
    Schedule,
    amplitude_amplification_probability,
    apply_phase,
    apply_schedule_mixer,
    born_probabilities,
    energy_below_mask,
    event_probability,
    expected_energy,
    load_state,
    qaoa_state,
    save_state,
    uniform_state,
    zero_clash_mask,
    zero_cost_mask,
)

__version__ = "0.1.0"
