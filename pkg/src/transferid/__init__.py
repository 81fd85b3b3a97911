"""Online identification of linear time-invariant systems that fuses
abundant data from a similar, known system with a short snapshot stream from
the plant, returning at every step the unique consistent model closest to
the prior one, plus computable error diagnostics."""

from .subspace import (
    DEFAULT_POLICY,
    PrincipalDecomposition,
    RankPolicy,
    Subspace,
    add,
    aligned_bases,
    distance,
    intersect,
    is_partially_orthogonal,
    kernel,
    left_kernel,
    principal_decomposition,
    span,
)
from .datamat import (
    StackedData,
    Trajectory,
    block_hankel,
    load_trajectory,
    persistency_order,
    save_trajectory,
    snapshot,
    stack,
)
from .engine import (
    GeometryGuardError,
    InformativityError,
    LinearModel,
    StepReport,
    TransferIdentifier,
    extract_model,
    model_subspace,
)
from .bounds import (
    BoundReport,
    aligned_gap_bound,
    aligned_partition_deltas,
    gap_bound_similar,
    gap_bound_truth,
    similar_bound_report,
    truth_bound_report,
)
from .control import (
    PerturbationSpec,
    assignment_gap,
    closed_loop_eigs,
    controllability_matrix,
    is_controllable,
    pe_inputs,
    perturb,
    pole_place,
    random_model,
    simulate,
    simulate_autonomous,
)

__version__ = "0.1.0"

__all__ = [
    "DEFAULT_POLICY",
    "PrincipalDecomposition",
    "RankPolicy",
    "Subspace",
    "add",
    "aligned_bases",
    "distance",
    "intersect",
    "is_partially_orthogonal",
    "kernel",
    "left_kernel",
    "principal_decomposition",
    "span",
    "StackedData",
    "Trajectory",
    "block_hankel",
    "load_trajectory",
    "persistency_order",
    "save_trajectory",
    "snapshot",
    "stack",
    "GeometryGuardError",
    "InformativityError",
    "LinearModel",
    "StepReport",
    "TransferIdentifier",
    "extract_model",
    "model_subspace",
    "BoundReport",
    "aligned_gap_bound",
    "aligned_partition_deltas",
    "gap_bound_similar",
    "gap_bound_truth",
    "similar_bound_report",
    "truth_bound_report",
    "PerturbationSpec",
    "assignment_gap",
    "closed_loop_eigs",
    "controllability_matrix",
    "is_controllable",
    "pe_inputs",
    "perturb",
    "pole_place",
    "random_model",
    "simulate",
    "simulate_autonomous",
]
