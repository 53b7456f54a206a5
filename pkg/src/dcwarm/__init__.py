"""Warm-started solvers for discrete convex minimization.

Steepest descent over the integer lattice with prediction-based starts:
projection onto the feasible hull, ties-down rounding, and local steps
solved by combinatorial oracles (vertex covers, matroid intersections,
minimum cuts). Includes an online learner for the predictions and an
experiment harness that verifies the prediction-distance iteration bounds.
"""

from .core import (
    Neighborhood,
    Objective,
    brute_force_local_oracle,
    lexicographic_minimizer,
    linf_pm_norm,
    long_step_length,
    round_ties_down,
    steepest_descent,
)
from .energy import (
    EnergyInstance,
    PairwiseFn,
    brute_force_energy,
    build_cut_graph,
    dinic_min_cut,
    energy_local_direction,
    energy_value,
    solve_energy,
)
from .errors import (
    CapacityError,
    ContractError,
    DcwarmError,
    DivergenceError,
    InfeasibleStartError,
    InfeasibleSystemError,
    InvariantViolationError,
    UnboundedDirectionError,
)
from .learning import (
    LearnerState,
    learn_batch,
    linf_loss_subgradient,
    make_learner,
    ogd_step,
    regret_bound,
    regret_eval,
)
from .lnatset import LNatSystem, project_box, project_general, round_into
from .matching import (
    DualPair,
    MatchingInstance,
    brute_force_matching,
    dual_objective,
    max_matching_min_cover,
    project_dual,
    solve_matching,
    tight_edges,
)
from .matroid import (
    MaxWeightBaseMatroid,
    PartitionMatroid,
    UniformMatroid,
    WeightedMIInstance,
    cardinality_intersection,
    dual_value,
    greedy_max_weight_base,
    mv_query,
    solve_matroid_intersection,
)

__version__ = "0.1.0"
