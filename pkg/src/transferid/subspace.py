"""Numerical subspace geometry over R^M.

Subspaces are carried around as explicit orthonormal bases and every
operation (spans, kernels, sums, intersections, principal angles, the
maximal-angle distance, partial-orthogonality tests) reduces to a singular
value decomposition with a shared numerical-rank policy.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

__all__ = [
    "RankPolicy",
    "DEFAULT_POLICY",
    "Subspace",
    "PrincipalDecomposition",
    "span",
    "kernel",
    "left_kernel",
    "add",
    "intersect",
    "principal_decomposition",
    "distance",
    "is_partially_orthogonal",
    "aligned_bases",
]


@dataclass(frozen=True)
class RankPolicy:
    """Relative singular-value threshold used for every rank decision.

    A singular value ``sigma`` of an ``r x c`` matrix counts toward the
    numerical rank iff ``sigma > relative_tolerance * sigma_max * max(r, c)``,
    which keeps the rule invariant under rescaling of the matrix.
    """

    relative_tolerance: float = 1e-10

    def __post_init__(self) -> None:
        if not self.relative_tolerance > 0:
            raise ValueError("relative_tolerance must be positive")

    def cutoff(self, singular_values: np.ndarray, shape: tuple[int, int]) -> float:
        if len(singular_values) == 0:
            return 0.0
        return self.relative_tolerance * float(singular_values[0]) * max(shape)

    def rank(self, singular_values: np.ndarray, shape: tuple[int, int]) -> int:
        cut = self.cutoff(singular_values, shape)
        return int(np.count_nonzero(singular_values > cut))


DEFAULT_POLICY = RankPolicy()


@dataclass(frozen=True, eq=False)
class Subspace:
    """A linear subspace of R^M stored as an M x k matrix with orthonormal columns.

    A k of zero (empty basis) is the zero subspace and participates in all
    operations. Instances are immutable; treat the basis as read-only.
    """

    basis: np.ndarray

    def __post_init__(self) -> None:
        basis = np.array(self.basis, dtype=float)
        if basis.ndim != 2:
            raise ValueError(f"basis must be a 2-d array, got shape {basis.shape}")
        if basis.shape[0] < 1:
            raise ValueError("ambient dimension must be at least 1")
        k = basis.shape[1]
        if k > basis.shape[0]:
            raise ValueError(f"{k} columns cannot be independent in R^{basis.shape[0]}")
        if k and not np.allclose(basis.T @ basis, np.eye(k), atol=1e-10):
            raise ValueError("basis columns are not orthonormal")
        object.__setattr__(self, "basis", basis)

    @property
    def ambient_dim(self) -> int:
        return self.basis.shape[0]

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    def project(self, vectors: np.ndarray) -> np.ndarray:
        """Orthogonal projection of one vector or a stack of columns."""
        v = np.asarray(vectors, dtype=float)
        return self.basis @ (self.basis.T @ v)

    def contains(self, vector: np.ndarray, tol: float = 1e-9) -> bool:
        """Membership up to a relative projection residual."""
        v = np.asarray(vector, dtype=float).reshape(-1)
        if v.shape[0] != self.ambient_dim:
            raise ValueError("vector length does not match ambient dimension")
        scale = max(1.0, float(np.linalg.norm(v)))
        return float(np.linalg.norm(v - self.project(v))) <= tol * scale


@dataclass(frozen=True, eq=False)
class PrincipalDecomposition:
    """Principal angles and paired principal vectors of two subspaces.

    ``angles`` is nondecreasing in [0, pi/2]; column j of ``left_vectors`` and
    ``right_vectors`` is the j-th principal pair, with nonnegative mutual
    inner product equal to cos(angles[j]).
    """

    angles: np.ndarray
    left_vectors: np.ndarray
    right_vectors: np.ndarray


def _check_same_ambient(a: Subspace, b: Subspace) -> None:
    if a.ambient_dim != b.ambient_dim:
        raise ValueError(
            f"ambient dimensions differ: {a.ambient_dim} vs {b.ambient_dim}"
        )


def span(matrix: np.ndarray, policy: RankPolicy = DEFAULT_POLICY) -> Subspace:
    """Column space of a matrix as a Subspace with orthonormal basis.

    The dimension is the numerical rank under ``policy``. An M x 0 matrix
    yields the zero subspace of R^M.
    """
    a = np.asarray(matrix, dtype=float)
    if a.ndim != 2 or a.shape[0] < 1:
        raise ValueError(f"need an M x p matrix with M >= 1, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix entries must be finite")
    if a.shape[1] == 0:
        return Subspace(np.zeros((a.shape[0], 0)))
    u, s, _ = np.linalg.svd(a, full_matrices=False)
    r = policy.rank(s, a.shape)
    return Subspace(u[:, :r])


def kernel(matrix: np.ndarray, policy: RankPolicy = DEFAULT_POLICY) -> Subspace:
    """Right null space {x : matrix @ x = 0} as a subspace of R^cols."""
    a = np.asarray(matrix, dtype=float)
    if a.ndim != 2 or a.shape[1] < 1:
        raise ValueError(f"need an r x c matrix with c >= 1, got shape {a.shape}")
    if a.shape[0] == 0:
        return Subspace(np.eye(a.shape[1]))
    _, s, vt = np.linalg.svd(a, full_matrices=True)
    r = policy.rank(s, a.shape)
    return Subspace(vt[r:, :].T)


def left_kernel(sub: Subspace) -> Subspace:
    """Orthogonal complement; dimensions of input and output sum to M."""
    if sub.dim == 0:
        return Subspace(np.eye(sub.ambient_dim))
    u, _, _ = np.linalg.svd(sub.basis, full_matrices=True)
    return Subspace(u[:, sub.dim:])


def add(a: Subspace, b: Subspace, policy: RankPolicy = DEFAULT_POLICY) -> Subspace:
    """Sum of two subspaces (smallest subspace containing both)."""
    _check_same_ambient(a, b)
    if a.dim == 0:
        return b
    if b.dim == 0:
        return a
    return span(np.hstack([a.basis, b.basis]), policy)


def intersect(a: Subspace, b: Subspace, policy: RankPolicy = DEFAULT_POLICY) -> Subspace:
    """Intersection, computed as the kernel of the stacked complement bases.

    A vector lies in both subspaces exactly when it is orthogonal to both
    orthogonal complements, so the intersection is the null space of the
    matrix whose rows span those complements.
    """
    _check_same_ambient(a, b)
    rows = np.vstack([left_kernel(a).basis.T, left_kernel(b).basis.T])
    if rows.shape[0] == 0:
        return Subspace(np.eye(a.ambient_dim))
    return kernel(rows, policy)


def _principal_cosines(a: Subspace, b: Subspace) -> np.ndarray:
    if a.dim < 1 or b.dim < 1:
        raise ValueError("principal angles require both subspaces to be nonzero")
    _check_same_ambient(a, b)
    s = np.linalg.svd(a.basis.T @ b.basis, compute_uv=False)
    if s.size and s[0] > 1.0 + 1e-8:
        raise ValueError("cosine exceeds 1 beyond roundoff; bases are not orthonormal")
    return np.clip(s, 0.0, 1.0)


def _principal_angle_values(a: Subspace, b: Subspace) -> np.ndarray:
    """Ascending principal angles, accurate down to machine precision.

    A plain arccos of the product singular values cannot resolve angles
    below ~1.5e-8 (one cosine ulp), so small angles are evaluated through
    the sine-based route; scipy's routine implements that hybrid.
    """
    if a.dim < 1 or b.dim < 1:
        raise ValueError("principal angles require both subspaces to be nonzero")
    _check_same_ambient(a, b)
    return scipy.linalg.subspace_angles(a.basis, b.basis)[::-1]


def principal_decomposition(a: Subspace, b: Subspace) -> PrincipalDecomposition:
    """Principal angles and vectors of a nonzero pair, via the SVD of Qa' Qb.

    Returns q = min(dim a, dim b) angles in nondecreasing order; their
    cosines are the singular values of the product of the two orthonormal
    bases, and the vector pairs are the corresponding singular vectors
    mapped back into R^M.
    """
    angles = _principal_angle_values(a, b)
    u, s, vt = np.linalg.svd(a.basis.T @ b.basis, full_matrices=False)
    if s[0] > 1.0 + 1e-8:
        raise ValueError("cosine exceeds 1 beyond roundoff; bases are not orthonormal")
    return PrincipalDecomposition(
        angles=angles,
        left_vectors=a.basis @ u,
        right_vectors=b.basis @ vt.T,
    )


def distance(a: Subspace, b: Subspace) -> float:
    """Maximal principal angle between two nonzero subspaces, in [0, pi/2].

    Computed over q = min(dim a, dim b) angles regardless of the argument
    order, so the value is symmetric.
    """
    return float(_principal_angle_values(a, b)[-1])


def is_partially_orthogonal(a: Subspace, b: Subspace, tol: float = 1e-8) -> bool:
    """Whether one subspace holds a nonzero vector orthogonal to all of the other.

    Equivalent to some principal angle equaling pi/2, tested as cos(theta)
    <= tol. When the dimensions differ the answer is True outright: the
    larger subspace meets the smaller one's complement by dimension count.
    """
    _check_same_ambient(a, b)
    if a.dim == 0 and b.dim == 0:
        return False
    if a.dim != b.dim:
        return True
    cosines = _principal_cosines(a, b)
    return bool(cosines[-1] <= tol)


def aligned_bases(a: Subspace, b: Subspace) -> tuple[np.ndarray, np.ndarray]:
    """Principal-vector bases (Qa U, Qb V) for two subspaces of equal dimension.

    Column j of the two outputs is the j-th principal pair; the SVD sign
    convention makes each pair's inner product the nonnegative cosine, so
    ||column difference||^2 = 4 sin^2(theta_j / 2) holds per column.
    """
    _check_same_ambient(a, b)
    if a.dim != b.dim:
        raise ValueError(f"dimensions differ: {a.dim} vs {b.dim}")
    if a.dim < 1:
        raise ValueError("aligned bases require nonzero subspaces")
    u, s, vt = np.linalg.svd(a.basis.T @ b.basis, full_matrices=False)
    if s[0] > 1.0 + 1e-8:
        raise ValueError("cosine exceeds 1 beyond roundoff; bases are not orthonormal")
    return a.basis @ u, b.basis @ vt.T
