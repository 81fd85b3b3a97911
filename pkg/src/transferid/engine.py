"""Incremental identifier that fuses prior-system data with streamed snapshots.

The estimator is fitted once on abundant data from a known, similar system
and then consumes transition snapshots of the plant one at a time. After
every snapshot it holds the unique state-space model that is consistent with
all plant data seen so far and, among all consistent models, closest (in the
maximal-angle metric on data subspaces) to the prior system. Once the plant
data alone pins the model down, the estimate coincides with the plant.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .datamat import StackedData, Trajectory, stack
from .subspace import DEFAULT_POLICY, RankPolicy, Subspace, distance, kernel, left_kernel, span

__all__ = [
    "LinearModel",
    "StepReport",
    "InformativityError",
    "GeometryGuardError",
    "extract_model",
    "model_subspace",
    "TransferIdentifier",
]


class InformativityError(ValueError):
    """Raised when a data set is too poor to determine a unique model."""


class GeometryGuardError(RuntimeError):
    """Raised when the constructed subspace loses the dimension needed for a
    unique model, which indicates the prior and plant data subspaces share an
    orthogonal direction (a non-generic configuration)."""


@dataclass(frozen=True, eq=False)
class LinearModel:
    """A discrete-time model x(k+1) = A x(k) + B u(k); B has zero columns
    when the system is autonomous."""

    A: np.ndarray
    B: np.ndarray
    provenance: str = "unspecified"

    def __post_init__(self) -> None:
        A = np.atleast_2d(np.array(self.A, dtype=float))
        B = np.array(self.B, dtype=float)
        if B.ndim == 1:
            B = B.reshape(A.shape[0], -1)
        if A.shape[0] != A.shape[1]:
            raise ValueError(f"A must be square, got shape {A.shape}")
        if B.shape[0] != A.shape[0]:
            raise ValueError(f"B must have {A.shape[0]} rows, got shape {B.shape}")
        if not (np.all(np.isfinite(A)) and np.all(np.isfinite(B))):
            raise ValueError("model entries must be finite")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return self.B.shape[1]

    @property
    def theta(self) -> np.ndarray:
        """The stacked parameter block [A B], shape (n, n+m)."""
        return np.hstack([self.A, self.B])

    def gap(self, other: "LinearModel") -> float:
        """Frobenius distance between the [A B] blocks of two models."""
        if (self.n, self.m) != (other.n, other.m):
            raise ValueError("models have different dimensions")
        return float(np.linalg.norm(self.theta - other.theta))

    def step(self, x: np.ndarray, u: np.ndarray | None = None) -> np.ndarray:
        """One transition of the recursion."""
        x = np.asarray(x, dtype=float).reshape(-1)
        out = self.A @ x
        if self.m:
            if u is None:
                raise ValueError(f"model has {self.m} inputs, u is required")
            out = out + self.B @ np.asarray(u, dtype=float).reshape(-1)
        return out


@dataclass(frozen=True, eq=False)
class StepReport:
    """Telemetry for one consumed snapshot.

    ``remaining_rank`` counts the directions still borrowed from the prior
    system; identification is complete exactly when it reaches zero.
    """

    step: int
    model: LinearModel
    remaining_rank: int
    rank_increased: bool
    d_to_similar: float
    complete: bool


def extract_model(
    H: np.ndarray,
    n: int,
    m: int,
    policy: RankPolicy = DEFAULT_POLICY,
    provenance: str = "unspecified",
) -> LinearModel:
    """Unique model consistent with a (2n+m)-row basis of a data subspace.

    Partitions the rows into current states, inputs, and next states, and
    solves next = [A B] @ [current; inputs] through a rank-aware
    pseudo-inverse. The past-data block must have full rank n+m; anything
    less means the basis does not determine a unique model.
    """
    H = np.asarray(H, dtype=float)
    if H.ndim != 2 or H.shape[0] != 2 * n + m:
        raise ValueError(f"basis must have {2 * n + m} rows, got shape {H.shape}")
    lam = n + m
    past = H[:lam]
    u, s, vt = np.linalg.svd(past, full_matrices=False)
    r = policy.rank(s, past.shape)
    if r < lam:
        raise InformativityError(
            f"past-data block has rank {r}, need {lam} for a unique model"
        )
    pinv = (vt[:r].T / s[:r]) @ u[:, :r].T
    theta = H[lam:] @ pinv
    return LinearModel(theta[:, :n], theta[:, n:], provenance)


def model_subspace(model: LinearModel, policy: RankPolicy = DEFAULT_POLICY) -> Subspace:
    """The (n+m)-dimensional subspace of all snapshots a model can produce.

    Spanned by [x; u; A x + B u] over all states and inputs; the inverse of
    :func:`extract_model` in the sense that extracting from this subspace's
    basis returns the model.
    """
    lam = model.n + model.m
    raw = np.vstack([np.eye(lam), model.theta])
    return span(raw, policy)


def _coerce_stacked(data, n: int | None, m: int | None) -> tuple[int, int, np.ndarray]:
    if isinstance(data, Trajectory):
        data = stack(data)
    if isinstance(data, StackedData):
        return data.n, data.m, data.matrix
    arr = np.asarray(data, dtype=float)
    if arr.ndim != 2:
        raise ValueError(f"expected a 2-d snapshot matrix, got shape {arr.shape}")
    if n is None or m is None:
        raise ValueError("raw matrices need explicit n and m")
    if arr.shape[0] != 2 * n + m:
        raise ValueError(
            f"snapshot matrix must have {2 * n + m} rows for n={n}, m={m}, "
            f"got {arr.shape[0]}"
        )
    return n, m, arr


class TransferIdentifier(BaseEstimator):
    """Online identification warm-started from a similar system's data.

    Parameters
    ----------
    rank_tolerance : float, default=1e-10
        Relative singular-value threshold for all rank decisions.

    Attributes (after fit)
    ----------------------
    n_, m_ : state and input dimensions.
    ambient_dim_ : snapshot length, 2n + m.
    target_dim_ : n + m, the data-subspace dimension a unique model needs.
    similar_model_ : model extracted from the prior data.
    model_ : current estimate; equals ``similar_model_`` before any snapshot.
    prior_space_ : Subspace spanned by the prior data.
    step_ : snapshots consumed so far (duplicates included).
    rank_ : dimension spanned by the consumed snapshots.
    remaining_rank_ : directions still taken from the prior subspace; zero
        exactly when identification is complete.
    history_ : list of StepReport, one per consumed snapshot.

    Examples
    --------
    >>> import numpy as np
    >>> from transferid import StackedData, TransferIdentifier
    >>> prior = StackedData.from_snapshots(1, 1, np.array([[1.0, 0.0], [0.0, 1.0], [0.7, 0.7]]))
    >>> est = TransferIdentifier().fit(prior)
    >>> report = est.push(np.array([1.0, 1.0, 1.0]))
    >>> np.round(report.model.theta, 6)
    array([[0.5, 0.5]])
    """

    def __init__(self, rank_tolerance: float = 1e-10):
        self.rank_tolerance = rank_tolerance

    # ------------------------------------------------------------------
    # sklearn-style surface
    # ------------------------------------------------------------------

    def fit(self, data, y=None, n: int | None = None, m: int | None = None):
        """Initialize from prior-system data.

        ``data`` may be a Trajectory, a StackedData, or a raw (2n+m) x N
        snapshot matrix together with explicit ``n`` and ``m``. The past-data
        rows must have full rank n+m; rank-deficient prior data cannot pin
        down the prior model and is rejected.
        """
        policy = RankPolicy(self.rank_tolerance)
        n, m, matrix = _coerce_stacked(data, n, m)
        if matrix.shape[1] < 1:
            raise InformativityError("prior data has no snapshots")
        lam = n + m
        s_past = np.linalg.svd(matrix[:lam], compute_uv=False)
        rank_past = policy.rank(s_past, matrix[:lam].shape)
        if rank_past < lam:
            raise InformativityError(
                f"prior data is rank-deficient: past-data rows have rank "
                f"{rank_past}, need {lam}"
            )
        prior = span(matrix, policy)
        if prior.dim != lam:
            raise InformativityError(
                f"prior data spans dimension {prior.dim}, expected {lam}; the "
                "snapshots are not consistent with a single linear model"
            )
        self.n_ = n
        self.m_ = m
        self.ambient_dim_ = 2 * n + m
        self.target_dim_ = lam
        self.policy_ = policy
        self.prior_space_ = prior
        self._prior_kernel_rows = left_kernel(prior).basis.T
        self.similar_model_ = extract_model(prior.basis, n, m, policy, "similar")
        self.model_ = self.similar_model_
        self.snapshots_ = []
        self._retained = np.zeros((self.ambient_dim_, 0))
        self._current_space = prior
        self.step_ = 0
        self.rank_ = 0
        self.remaining_rank_ = lam
        self.history_ = []
        return self

    def partial_fit(self, X, y=None):
        """Consume one snapshot or a batch and return self.

        Accepts a single length-(2n+m) vector, a time-major (k, 2n+m) array
        of snapshot rows, or a StackedData whose columns are pushed in order.
        """
        self._require_fitted()
        if isinstance(X, StackedData):
            columns = X.matrix.T
        else:
            arr = np.asarray(X, dtype=float)
            columns = arr[np.newaxis, :] if arr.ndim == 1 else arr
        for row in columns:
            self.push(row)
        return self

    def predict(self, X, U=None) -> np.ndarray:
        """One-step prediction with the current model.

        Rows of ``X`` (k, n) and ``U`` (k, m) map to rows A x + B u. ``U`` is
        required exactly when the model has inputs.
        """
        self._require_fitted()
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.n_:
            raise ValueError(f"X must have {self.n_} columns, got {X.shape[1]}")
        out = X @ self.model_.A.T
        if not self.m_:
            if U is not None:
                raise ValueError("autonomous model takes no inputs")
        else:
            if U is None:
                raise ValueError(f"model has {self.m_} inputs, U is required")
            U = np.atleast_2d(np.asarray(U, dtype=float))
            if U.shape != (X.shape[0], self.m_):
                raise ValueError(
                    f"U must have shape {(X.shape[0], self.m_)}, got {U.shape}"
                )
            out = out + U @ self.model_.B.T
        return out

    # ------------------------------------------------------------------
    # incremental core
    # ------------------------------------------------------------------

    @property
    def complete_(self) -> bool:
        self._require_fitted()
        return self.remaining_rank_ == 0

    def push(self, h) -> StepReport:
        """Consume one snapshot [x(k); u(k); x(k+1)] and re-estimate.

        Snapshots that bring no new direction are kept in the raw log but do
        not change the estimate. Pushing after completion is an error; at
        that point the plant data determines the model on its own.
        """
        self._require_fitted()
        h = np.asarray(h, dtype=float).reshape(-1)
        if h.shape[0] != self.ambient_dim_:
            raise ValueError(
                f"snapshot must have length {self.ambient_dim_}, got {h.shape[0]}"
            )
        if not np.all(np.isfinite(h)):
            raise ValueError("snapshot entries must be finite")
        if self.complete_:
            raise RuntimeError(
                "identification is complete; the model is determined by the "
                "plant data alone and accepts no further snapshots"
            )
        self.snapshots_.append(h.copy())
        self.step_ += 1

        candidate = np.column_stack([self._retained, h])
        s = np.linalg.svd(candidate, compute_uv=False)
        fresh = self.policy_.rank(s, candidate.shape) > self.rank_
        if fresh:
            self._retained = candidate
            self.rank_ += 1

        borrowed = self._borrowed_basis()
        mu = borrowed.shape[1]
        if self.rank_ + mu != self.target_dim_:
            raise GeometryGuardError(
                f"constructed subspace has dimension {self.rank_ + mu} instead "
                f"of {self.target_dim_} at step {self.step_}; the prior and "
                "plant data subspaces are probably partially orthogonal"
            )
        basis = np.hstack([self._retained, borrowed])
        model = extract_model(
            basis, self.n_, self.m_, self.policy_, provenance=f"step-{self.step_}"
        )
        self.model_ = model
        self.remaining_rank_ = mu
        self._current_space = span(basis, self.policy_)
        report = StepReport(
            step=self.step_,
            model=model,
            remaining_rank=mu,
            rank_increased=fresh,
            d_to_similar=distance(self.prior_space_, self._current_space),
            complete=mu == 0,
        )
        self.history_.append(report)
        return report

    def current_subspace(self) -> Subspace:
        """The data subspace behind the current estimate.

        Equals the prior subspace before any snapshot and the plant's own
        data subspace on completion.
        """
        self._require_fitted()
        return self._current_space

    def _borrowed_basis(self) -> np.ndarray:
        """Orthonormal basis of the prior-subspace directions orthogonal to
        every consumed snapshot: the kernel of the prior complement rows
        stacked over the (normalized) snapshot rows."""
        rows = [self._prior_kernel_rows]
        if self.rank_:
            retained = self._retained
            rows.append((retained / np.linalg.norm(retained, axis=0)).T)
        return kernel(np.vstack(rows), self.policy_).basis

    def _require_fitted(self) -> None:
        if not hasattr(self, "model_"):
            raise NotFittedError(
                "this TransferIdentifier is not fitted yet; call fit with "
                "prior-system data before streaming snapshots"
            )
