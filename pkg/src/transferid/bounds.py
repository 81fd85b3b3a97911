"""Diagnostic error bounds for validation harnesses.

These quantities compare an identification run against a reference system
that is actually known (the plant in a simulation study, or the prior
model). They certify how far the aligned data bases, and hence the model
parameters, can drift; none of them is computable in deployment, where the
plant is unknown, so they live outside the identification path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .engine import LinearModel
from .subspace import Subspace, aligned_bases, distance

__all__ = [
    "BoundReport",
    "aligned_gap_bound",
    "gap_bound_truth",
    "gap_bound_similar",
    "aligned_partition_deltas",
    "truth_bound_report",
    "similar_bound_report",
]

_NAN = float("nan")


@dataclass(frozen=True, eq=False)
class BoundReport:
    """Evaluated bound ingredients at one step of a run.

    ``gamma``/``rhs_thm9``/``lhs_thm9`` measure against the true system,
    ``beta``/``rhs_thm10``/``lhs_thm10`` against the similar one; each report
    fills its own side and leaves the other as NaN. The lhs fields are the
    actual relative parameter errors, the rhs fields their certified upper
    bounds, so lhs <= rhs whenever the step used fresh data directions.
    """

    step: int
    gamma: float = _NAN
    beta: float = _NAN
    kappa_true: float = _NAN
    nu1: float = _NAN
    hb_norm: float = _NAN
    rhs_thm9: float = _NAN
    rhs_thm10: float = _NAN
    lhs_thm9: float = _NAN
    lhs_thm10: float = _NAN


def aligned_gap_bound(count: int, angle: float) -> float:
    """Upper bound 2 sqrt(count) sin(angle / 2) on the Frobenius distance of
    aligned principal bases when at most ``count`` principal angles are
    nonzero and none exceeds ``angle``."""
    if count < 0:
        raise ValueError("count must be nonnegative")
    if not 0.0 <= angle <= math.pi / 2 + 1e-12:
        raise ValueError(f"angle {angle} outside [0, pi/2]")
    return 2.0 * math.sqrt(count) * math.sin(angle / 2.0)


def gap_bound_truth(step: int, target_dim: int, angle: float) -> float:
    """Truth-side aligned-basis bound; shrinks as the step count grows and
    vanishes once all target_dim directions come from plant data."""
    if not 0 <= step <= target_dim:
        raise ValueError(f"step {step} outside [0, {target_dim}]")
    return aligned_gap_bound(target_dim - step, angle)


def gap_bound_similar(step: int, angle: float) -> float:
    """Prior-side aligned-basis bound; zero at step 0 and growing with it."""
    if step < 0:
        raise ValueError("step must be nonnegative")
    return aligned_gap_bound(step, angle)


def aligned_partition_deltas(
    reference_space: Subspace, estimate_space: Subspace, n: int, m: int
) -> tuple[float, float, float, float]:
    """Norms of the row-partitioned gap between aligned principal bases.

    Aligns the two subspaces, splits rows into the past block (n+m rows) and
    the next-state block (n rows), and returns (n1, n2, nu1, nu2): the
    Frobenius norms of the two blocks of the difference, of the reference
    past block, and of the estimate next-state block.
    """
    lam = n + m
    if reference_space.dim != lam or estimate_space.dim != lam:
        raise ValueError(
            f"both subspaces must have dimension {lam}, got "
            f"{reference_space.dim} and {estimate_space.dim}"
        )
    ref_hat, est_hat = aligned_bases(reference_space, estimate_space)
    delta = est_hat - ref_hat
    n1 = float(np.linalg.norm(delta[:lam]))
    n2 = float(np.linalg.norm(delta[lam:]))
    nu1 = float(np.linalg.norm(ref_hat[:lam]))
    nu2 = float(np.linalg.norm(est_hat[lam:]))
    return n1, n2, nu1, nu2


def _tail_norm(h1: np.ndarray, n: int, ambient: int) -> float:
    """Norm of the last n components of the unit vector along the first
    snapshot; a lower bound for the next-state block norm of any aligned
    basis containing that snapshot's direction."""
    h = np.asarray(h1, dtype=float).reshape(-1)
    if h.shape[0] != ambient:
        raise ValueError(f"first snapshot must have length {ambient}, got {h.shape[0]}")
    scale = float(np.linalg.norm(h))
    if scale <= 0.0:
        raise ValueError("first snapshot is zero; the bound is undefined")
    hb_norm = float(np.linalg.norm(h[-n:])) / scale
    if hb_norm <= 1e-14:
        raise ValueError(
            "next-state part of the first snapshot is numerically zero; the "
            "bound is undefined"
        )
    return hb_norm


def truth_bound_report(
    truth: LinearModel,
    estimate: LinearModel,
    truth_space: Subspace,
    estimate_space: Subspace,
    h1: np.ndarray,
    step: int,
) -> BoundReport:
    """Certified bound on the relative parameter error against the true system.

    ``step`` is the number of independent snapshot directions consumed (the
    rank of the plant data so far, which equals the step index on runs where
    every snapshot was fresh). ``h1`` is the first snapshot.
    """
    n, m = truth.n, truth.m
    lam = n + m
    d = distance(truth_space, estimate_space)
    gamma = gap_bound_truth(step, lam, d)
    truth_hat, _ = aligned_bases(truth_space, estimate_space)
    past = truth_hat[:lam]
    kappa = float(np.linalg.cond(past, 2))
    nu1 = float(np.linalg.norm(past))
    hb_norm = _tail_norm(h1, n, 2 * n + m)
    rhs = gamma * kappa * (1.0 / nu1 + 1.0 / hb_norm + gamma / (nu1 * hb_norm))
    lhs = estimate.gap(truth) / float(np.linalg.norm(estimate.theta))
    return BoundReport(
        step=step,
        gamma=gamma,
        kappa_true=kappa,
        nu1=nu1,
        hb_norm=hb_norm,
        rhs_thm9=rhs,
        lhs_thm9=lhs,
    )


def similar_bound_report(
    similar: LinearModel,
    estimate: LinearModel,
    similar_space: Subspace,
    estimate_space: Subspace,
    h1: np.ndarray,
    step: int,
) -> BoundReport:
    """Certified bound on the relative deviation from the similar system.

    Mirror of :func:`truth_bound_report` with the prior system as reference;
    the past-block norm and condition number come from the prior side of the
    aligned pair.
    """
    n, m = similar.n, similar.m
    lam = n + m
    d = distance(similar_space, estimate_space)
    beta = gap_bound_similar(step, d)
    similar_hat, _ = aligned_bases(similar_space, estimate_space)
    past = similar_hat[:lam]
    kappa = float(np.linalg.cond(past, 2))
    m1 = float(np.linalg.norm(past))
    hb_norm = _tail_norm(h1, n, 2 * n + m)
    rhs = beta * kappa * (1.0 / m1 + 1.0 / hb_norm + beta / (m1 * hb_norm))
    lhs = estimate.gap(similar) / float(np.linalg.norm(estimate.theta))
    return BoundReport(
        step=step,
        beta=beta,
        hb_norm=hb_norm,
        rhs_thm10=rhs,
        lhs_thm10=lhs,
    )
