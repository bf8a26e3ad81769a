"""Worst-case rejection against divergence-bounded adversaries.

The discrete core solves a zero-sum game: pick per-event rejection rates
for a known target distribution so that the type I error budget is spent
exactly, while an adversary choosing any distribution at or above a
divergence bound gets the smallest possible acceptance.  Small instances
can be cross-checked against a lattice brute-force oracle, and a
quantile-calibrated kernel classifier carries the same budget discipline
to continuous samples.
"""

__version__ = "1.0.0"

from .adversary_oracle import (AdversaryInfeasible, BestResponse,
                               NoFeasiblePoint, OracleError, TooLarge,
                               TransferReport, best_response,
                               brute_force_best_response,
                               property_abc_transfer_check,
                               unrestricted_best_response)
from .continuous_scc import (GridSpec, ReferenceDensity, SccConfig, SccError,
                             SccModel, SoftClassifier, covered_cells,
                             fit_baseline_classifier, grid_key, reject,
                             reject_many, sample_synthetic, select_grid_pitch,
                             train_scc, umvufb_quantile)
from .core_model import (GameSpec, ModelError, Pmf, RejectionFunction,
                         make_pmf, rejection_rate, uniform_soft_rejector)
from .discrete_game import (ConstraintClasses, DualOutcome, HardOutcome,
                            LevelSet, LevelSetPartition, SolveOutcome,
                            classify_level_sets, pair_root,
                            partition_level_sets, solve_dual,
                            solve_hard_ldrs, solve_soft)
from .divergence import (BREGMAN_GENERATORS, DivergenceError, DivergenceKind,
                         TransferSpec, check_transfer_feasibility, evaluate,
                         point_mass_divergence)
from .experiments import (SweepConfig, SweepReport, gen_arbitrary_pmf,
                          gen_discretized_gaussian, raw_csv, run_sweep,
                          summary_csv)
from .lp_solver import (LinearProgram, LpError, LpSolution,
                        NumericalBreakdown, solve_lp)

__all__ = [
    "__version__",
    # core model
    "Pmf", "RejectionFunction", "GameSpec", "ModelError",
    "make_pmf", "rejection_rate", "uniform_soft_rejector",
    # divergences
    "DivergenceKind", "DivergenceError", "TransferSpec",
    "BREGMAN_GENERATORS", "evaluate", "point_mass_divergence",
    "check_transfer_feasibility",
    # LP
    "LinearProgram", "LpSolution", "LpError", "NumericalBreakdown",
    "solve_lp",
    # discrete game
    "LevelSet", "LevelSetPartition", "ConstraintClasses",
    "SolveOutcome", "HardOutcome", "DualOutcome",
    "partition_level_sets", "classify_level_sets", "pair_root",
    "solve_soft", "solve_hard_ldrs", "solve_dual",
    # adversary oracle
    "BestResponse", "TransferReport", "OracleError",
    "AdversaryInfeasible", "TooLarge", "NoFeasiblePoint",
    "best_response", "unrestricted_best_response",
    "brute_force_best_response", "property_abc_transfer_check",
    # continuous learner
    "GridSpec", "SccConfig", "SccModel", "SoftClassifier", "SccError",
    "ReferenceDensity", "grid_key", "covered_cells", "sample_synthetic",
    "select_grid_pitch", "fit_baseline_classifier", "umvufb_quantile",
    "train_scc", "reject", "reject_many",
    # experiments
    "SweepConfig", "SweepReport", "gen_arbitrary_pmf",
    "gen_discretized_gaussian", "run_sweep", "raw_csv", "summary_csv",
]
