"""Interactive many-objective optimizer over constrained configuration spaces."""

from .baselines import FlashConfig, NgaConfig, cart_fit, cart_predict, flash_run, nga_run
from .engine import (
    BudgetConfig,
    InteractionLog,
    Oracle,
    RunResult,
    auto_oracle,
    oracle_schema,
    pass1,
    pass2_sway,
    run_isneak,
    score_subtrees,
)
from .evalkit import RankedPool, bench, d2h, hamlet_samples, rank_all, sweep_S
from .geometry import ClusterNode, build_tree, distance, pick_poles, project_and_split
from .model_io import (
    Candidate,
    CandidatePool,
    CnfModel,
    ObjectiveSpec,
    check_validity,
    enumerate_valid,
    evaluate_goals,
    generate_synthetic_model,
    load_candidate_table,
    parse_dimacs,
)
from .preprocess import EncodingScheme, encode_pool, equal_width_bins, merge_bins
from .ranking import (
    GoalView,
    Question,
    boolean_dominates,
    build_question,
    half_support,
    infogain_rank,
    pref_worse,
    zitzler_worse,
)

__version__ = "0.1.0"
