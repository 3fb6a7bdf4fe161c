from .config import VERSION as __version__
from .config import Budget, DEFAULT_BUDGET, get_budget
from .errors import (
    BudgetExceeded,
    EncodingOverflow,
    GoldenMismatch,
    HypothesisViolated,
    InvalidParameter,
    LabError,
    ReferenceMismatch,
    TheoremViolation,
)
from .sets import (
    ApCover,
    DoublingReport,
    IntSet,
    LatticeSet,
    PairConstraint,
    count_three_term_progressions,
    decode_values,
    dilate,
    doubling_report,
    dump_json,
    embed_values,
    freiman_embed,
    load_json,
    midpoint_pairs,
    minimal_ap_cover,
    representation_counts,
    restricted_sumset,
    sumset,
)
from .bsg import (
    ExtractionResult,
    Group,
    RemovalInstance,
    RemovalSolution,
    bsg_extract,
    bsg_to_removal,
    check_ap_cover,
    dualize,
    exceptional_set,
    removal_to_bsg,
    solution_count,
    solve_removal,
)
from .geometry import (
    Carve,
    VolumeEstimate,
    annulus_volume,
    ball_volume,
    cap_volume,
    check_intersection_lemma,
    mc_check_prop42,
    mc_volume_Ry,
    mc_volume_T,
    sample_annulus,
    trimmed_annulus_volume,
)
from .search import SearchConfig, frontier_probe, shrink_search
from .annulus import (
    AnnulusSpec,
    CounterexampleSpec,
    build_annulus_set,
    build_counterexample,
    build_midpoint_gamma,
    check_interior_inclusion,
    check_neighbour_slabs,
    classify_missing_sums,
    greedy_adversarial_subset,
    interior,
    project_to_z,
    trimmed_count,
    verify_properties,
)
from .pipeline import RunManifest, pipeline_counterexample, suite_verify
