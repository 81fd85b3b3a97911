"""Shared helpers: random subspaces and full randomized identification runs."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from transferid import (
    LinearModel,
    PerturbationSpec,
    StepReport,
    Subspace,
    TransferIdentifier,
    model_subspace,
    perturb,
    random_model,
    simulate,
    stack,
)


def random_orthonormal(rng: np.random.Generator, ambient: int, dim: int) -> np.ndarray:
    q, _ = np.linalg.qr(rng.normal(size=(ambient, dim)))
    return q[:, :dim]


def random_subspace(rng: np.random.Generator, ambient: int, dim: int) -> Subspace:
    return Subspace(random_orthonormal(rng, ambient, dim))


@dataclass
class RunContext:
    """One completed randomized identification run and its telemetry."""

    truth: LinearModel
    similar: LinearModel
    est: TransferIdentifier
    truth_space: Subspace
    snapshots: list = field(default_factory=list)
    reports: list = field(default_factory=list)
    spaces: list = field(default_factory=list)
    duplicates: list = field(default_factory=list)

    @property
    def h1(self) -> np.ndarray:
        return self.snapshots[0]

    @property
    def lam(self) -> int:
        return self.est.target_dim_


def run_transfer_experiment(
    seed: int,
    n: int,
    m: int,
    sigma: float = 0.5,
    distribution: str = "uniform",
    duplicate_every: int | None = None,
    prior_length: int | None = None,
    rank_tolerance: float = 1e-10,
) -> RunContext:
    """Build a random truth/prior pair, identify to completion, log every step.

    With ``duplicate_every`` = k, every k-th push is a random combination of
    the snapshots already seen (still a valid plant transition, but rank
    stagnant), exercising the rank-deficient code paths.
    """
    rng = np.random.default_rng(seed)
    truth = random_model(n, m, seed=seed)
    similar = perturb(truth, PerturbationSpec(sigma, distribution, seed=seed + 1))
    lam = n + m
    length = prior_length if prior_length is not None else 2 * lam + 4
    prior_traj = simulate(
        similar, rng.normal(size=n), rng.uniform(-1.0, 1.0, (m, length))
    )
    est = TransferIdentifier(rank_tolerance=rank_tolerance).fit(stack(prior_traj))
    truth_space = model_subspace(truth, est.policy_)
    ctx = RunContext(truth, similar, est, truth_space)

    plant = stack(
        simulate(truth, rng.normal(size=n), rng.uniform(-1.0, 1.0, (m, 3 * lam + 10)))
    )
    k = 0
    while not est.complete_ and k < plant.n_snapshots:
        duplicate = (
            duplicate_every is not None
            and len(ctx.snapshots) > 0
            and len(ctx.snapshots) % duplicate_every == duplicate_every - 1
        )
        if duplicate:
            seen = np.column_stack(ctx.snapshots)
            h = seen @ rng.normal(size=seen.shape[1])
        else:
            h = plant.matrix[:, k]
            k += 1
        report = est.push(h)
        ctx.snapshots.append(np.asarray(h, dtype=float))
        ctx.reports.append(report)
        ctx.spaces.append(est.current_subspace())
        ctx.duplicates.append(duplicate)
    assert est.complete_, f"run (seed={seed}, n={n}, m={m}) did not complete"
    return ctx
