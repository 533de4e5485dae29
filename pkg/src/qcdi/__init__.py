"""Joint quickest change detection and post-change identification.

Solve for the Bayes-optimal stopping strategy of a process that changes
distribution at a random time to one of several alternatives, run the
strategy online, and verify its risk by simulation.  See the README for a
walkthrough.
"""

from .errors import (
    DigestMismatch,
    GridBudgetExceeded,
    HorizonGuardTripped,
    ImpossibleObservation,
    IterationBudgetExceeded,
    QcdiError,
    StoreFormatError,
    StreamExhausted,
    ValidationFailure,
)
from .evaluation import (
    DominanceReport,
    RiskEstimate,
    dominance_check,
    estimate_risk,
    posterior_diagnostics,
)
from .grid import SimplexGrid, build_grid, grid_size
from .kernels import available_backends, backend, set_backend
from .model import (
    Belief,
    CostSpec,
    ModelSpec,
    ObservationAlphabet,
    TerminalCosts,
    h_sup_bound,
    initial_belief,
    instance_digest,
    instance_to_dict,
    load_instance,
    parse_instance,
    save_instance,
    terminal_costs,
    validate,
)
from .posterior import (
    EpisodeSample,
    UnnormalizedWeights,
    apply_T,
    predictive_pmf,
    sample_episode,
    sample_episodes,
    update,
    weights,
)
from .presets import PRESETS, InstancePreset, get_preset, preset_names
from .projection import ProjectedPoint, project2, project3
from .solver import (
    DiscretizedOperator,
    Policy,
    RegionReport,
    RegionStats,
    ValueFunction,
    bellman,
    component_sizes,
    connected_components,
    extract_policy,
    interpolate,
    region_analysis,
    solve,
    value_iterate,
)
from .store import LoadedPolicy, load_policy, save_policy
from .strategy import (
    FixedSampleStopRule,
    OptimalStopRule,
    RunResult,
    ThresholdStopRule,
    TruncatedStopRule,
    run_optimal,
    run_rule,
    run_truncated,
    terminal_decision,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
