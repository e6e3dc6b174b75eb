"""Dense real-matrix primitives used by the kernel constructions.

Everything here operates on small matrices (side <= 16 in practice), so the
implementations favor auditability over asymptotics: rank via full SVD,
Sylvester via the Kronecker-vectorized dense system, controllability via an
explicit Krylov matrix.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import (
    EigenvalueCollisionError,
    NonFiniteError,
    ShapeMismatchError,
    SolverFailureError,
)

# Singular values below RANK_RTOL * sigma_max count as zero.  Channel entries
# are O(1) and constructed nulls are exact up to fp rounding, so a fixed
# relative cutoff is adequate.
RANK_RTOL = 1e-9

# Below this spectral gap the Kronecker system is numerically singular.
EIGEN_COLLISION_TOL = 1e-8

# Guaranteed residual of a successful Sylvester solve.
SYLVESTER_RESIDUAL_RTOL = 1e-10


def require_finite(m, name: str = "matrix") -> np.ndarray:
    """Return `m` as a float/complex ndarray, rejecting NaN/Inf entries."""
    arr = np.asarray(m)
    if arr.dtype.kind not in "fc":
        arr = arr.astype(float)
    if not np.all(np.isfinite(arr.real)) or (
        arr.dtype.kind == "c" and not np.all(np.isfinite(arr.imag))
    ):
        raise NonFiniteError(f"{name} contains NaN or Inf entries")
    return arr


def _require_square(m, name: str) -> np.ndarray:
    arr = require_finite(m, name)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ShapeMismatchError(f"{name} must be square, got shape {arr.shape}")
    return arr


@dataclass(frozen=True)
class RankReport:
    """Numerical rank of a matrix together with the evidence for it."""

    rank: int
    singular_values: np.ndarray
    tolerance_used: float


def rank_with_tolerance(m, rel_tol: float = RANK_RTOL) -> RankReport:
    """Numerical rank: number of singular values above rel_tol * sigma_max.

    The all-zero matrix has rank 0 (strict inequality against a zero
    threshold).
    """
    if rel_tol <= 0:
        raise ValueError("rel_tol must be positive")
    arr = require_finite(m)
    if arr.size == 0:
        return RankReport(rank=0, singular_values=np.zeros(0), tolerance_used=0.0)
    svals = np.linalg.svd(arr, compute_uv=False)
    cutoff = rel_tol * (svals[0] if svals.size else 0.0)
    rank = int(np.sum(svals > cutoff))
    return RankReport(rank=rank, singular_values=svals, tolerance_used=float(cutoff))


def matrix_rank(m, rel_tol: float = RANK_RTOL) -> int:
    return rank_with_tolerance(m, rel_tol).rank


def eigen_separation(a, b) -> float:
    """Minimum pairwise distance in the complex plane between spec(a) and spec(b)."""
    a = _require_square(a, "a")
    b = _require_square(b, "b")
    lam = np.linalg.eigvals(a)
    mu = np.linalg.eigvals(b)
    return float(np.min(np.abs(lam[:, None] - mu[None, :])))


def solve_sylvester(a, b, c, collision_tol: float = EIGEN_COLLISION_TOL) -> np.ndarray:
    """Solve X a - b X = c for X via the Kronecker-vectorized dense system.

    Unique solvability requires disjoint spectra of `a` and `b`; a separation
    below `collision_tol` raises EigenvalueCollisionError.  The returned X
    satisfies ||X a - b X - c||_F <= 1e-10 * max(1, ||c||_F).

    With column-major vec, vec(X a) = (a^T kron I) vec(X) and
    vec(b X) = (I kron b) vec(X), so the system matrix is
    a^T kron I - I kron b.
    """
    a = _require_square(a, "a")
    b = _require_square(b, "b")
    c = _require_square(c, "c")
    if not (a.shape == b.shape == c.shape):
        raise ShapeMismatchError(
            f"operands must share one square shape, got {a.shape}, {b.shape}, {c.shape}"
        )
    sep = eigen_separation(a, b)
    if sep < collision_tol:
        raise EigenvalueCollisionError(
            f"eigenvalue separation {sep:.3e} below threshold {collision_tol:.0e}"
        )
    n = a.shape[0]
    eye = np.eye(n)
    system = np.kron(a.T, eye) - np.kron(eye, b)
    x = np.linalg.solve(system, c.flatten(order="F")).reshape((n, n), order="F")
    residual = np.linalg.norm(x @ a - b @ x - c)
    bound = SYLVESTER_RESIDUAL_RTOL * max(1.0, np.linalg.norm(c))
    if residual > bound:
        raise SolverFailureError(
            f"Sylvester residual {residual:.3e} exceeds bound {bound:.3e}"
        )
    return x


def krylov_matrix(a, v) -> np.ndarray:
    """Columns v, a v, ..., a^{n-1} v."""
    a = _require_square(a, "a")
    v = require_finite(v, "v").reshape(-1)
    n = a.shape[0]
    if v.shape[0] != n:
        raise ShapeMismatchError(f"vector length {v.shape[0]} != matrix side {n}")
    cols = np.empty((n, n), dtype=np.result_type(a, v))
    cols[:, 0] = v
    for k in range(1, n):
        cols[:, k] = a @ cols[:, k - 1]
    return cols


def krylov_full_rank(a, v, rel_tol: float = RANK_RTOL) -> bool:
    """True iff the columns v, a v, ..., a^{n-1} v are linearly independent.

    The raw Krylov matrix is scaled column by column before the rank test:
    the columns' magnitudes grow or decay geometrically with the powers of
    `a`, which makes the unnormalized singular-value ratio collapse even
    when the directions are healthily independent.
    """
    k = krylov_matrix(a, v)
    norms = np.linalg.norm(k, axis=0)
    if np.any(norms == 0):
        return False
    return rank_with_tolerance(k / norms, rel_tol).rank == k.shape[0]


def cyclic_shift_witness(n: int) -> np.ndarray:
    """Upper-shift matrix with a -1 in the bottom-left corner.

    Companion-form witness for which the Krylov conditions of the kernel
    constructions hold with determinant +/-1; used by tests and docs.
    """
    pi = np.zeros((n, n))
    for i in range(n - 1):
        pi[i, i + 1] = 1.0
    pi[n - 1, 0] = -1.0
    return pi
