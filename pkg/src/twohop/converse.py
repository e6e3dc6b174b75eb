"""Computable converse diagnostics.

Two exact algebraic facts make the end-to-end channel ill-conditioned no
matter how the kernels are chosen: on single-antenna channels every direct
block is a fixed linear combination of the two interference blocks
(coefficients below, by Cramer's rule), and on multi-antenna channels the
direct block decomposes into interference-block multiples plus a correction
of rank at most m-1.  Feeding the resulting block ranks into the three
genie-style bounds caps the per-channel-use slope: the three bound
coefficients always average to 4/3 (scalar, per symbol) or 2m - 2/3 (MIMO),
so their minimum can never exceed that value.

Bound (i) appears in its source with the same rank term printed twice; the
rank sum implemented here is rank(G12) + rank(G21), which is what the
underlying argument supports and what makes the average identity exact.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import REAL, ChannelPair, ZERO_TOL, check_scalar_conditions, scalar_gains
from .exceptions import (
    ConditionViolationError,
    DecompositionImpossibleError,
    ShapeMismatchError,
)
from .linalg import RANK_RTOL, matrix_rank, require_finite


def _rank_at_scale(m: np.ndarray, scale: float, rel_tol: float = RANK_RTOL) -> int:
    """Singular values below rel_tol * scale count as zero.

    Unlike rank_with_tolerance (relative to the matrix's own largest
    singular value), this measures rank at an external problem scale so a
    numerically-nulled block reports rank 0.
    """
    if m.size == 0 or scale <= 0:
        return 0
    svals = np.linalg.svd(m, compute_uv=False)
    return int(np.sum(svals > rel_tol * scale))


@dataclass(frozen=True)
class DecompositionCoefficients:
    """g11 = lambda1 g12 + lambda2 g21 and g22 = mu1 g12 + mu2 g21."""

    lambda1: float
    lambda2: float
    mu1: float
    mu2: float


def decomposition_coefficients(cp: ChannelPair) -> DecompositionCoefficients:
    """Closed-form coefficients tying direct blocks to interference blocks.

    With D the cross-gain determinant (condition c-3):
        lambda1 =  h_s1u h_s1v det(H2) / D,   lambda2 = -h_ud1 h_vd1 det(H1) / D,
        mu1     = -h_ud2 h_vd2 det(H1) / D,   mu2     =  h_s2u h_s2v det(H2) / D.
    The identity holds entrywise for kernels of any block size.
    """
    report = check_scalar_conditions(cp)
    d = report.det_values["cross_det"]
    if abs(d) <= ZERO_TOL:
        raise ConditionViolationError("cross-gain determinant is numerically zero")
    det1 = report.det_values["det_h1"]
    det2 = report.det_values["det_h2"]
    s1u, s1v, s2u, s2v, ud1, vd1, ud2, vd2 = scalar_gains(cp)
    return DecompositionCoefficients(
        lambda1=s1u * s1v * det2 / d,
        lambda2=-ud1 * vd1 * det1 / d,
        mu1=-ud2 * vd2 * det1 / d,
        mu2=s2u * s2v * det2 / d,
    )


def _kernel_pair(k):
    if hasattr(k, "a"):
        return np.asarray(k.a, float), np.asarray(k.b, float)
    a, b = k
    return np.asarray(a, float), np.asarray(b, float)


def scalar_end_to_end_blocks(cp: ChannelPair, a: np.ndarray, b: np.ndarray):
    """Blocks h_sju h_udi A + h_sjv h_vdi B for block-size-ell kernels on an
    m=1 channel (the relays code over blocks of ell symbols)."""
    s1u, s1v, s2u, s2v, ud1, vd1, ud2, vd2 = scalar_gains(cp)
    g11 = s1u * ud1 * a + s1v * vd1 * b
    g12 = s2u * ud1 * a + s2v * vd1 * b
    g21 = s1u * ud2 * a + s1v * vd2 * b
    g22 = s2u * ud2 * a + s2v * vd2 * b
    return g11, g12, g21, g22


def verify_decomposition(cp: ChannelPair, kernels) -> float:
    """Max relative residual of both decomposition identities over the kernels.

    Kernels may be RelayKernel instances or (a, b) array pairs of any equal
    square size.  The identities are exact; residuals measure fp noise only.
    """
    coeffs = decomposition_coefficients(cp)
    worst = 0.0
    for k in kernels:
        a, b = _kernel_pair(k)
        require_finite(a, "a")
        require_finite(b, "b")
        if a.shape != b.shape or a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ShapeMismatchError("kernel matrices must be square and equal-shaped")
        g11, g12, g21, g22 = scalar_end_to_end_blocks(cp, a, b)
        r1 = np.linalg.norm(g11 - coeffs.lambda1 * g12 - coeffs.lambda2 * g21)
        r2 = np.linalg.norm(g22 - coeffs.mu1 * g12 - coeffs.mu2 * g21)
        scale1 = max(1.0, np.linalg.norm(g11))
        scale2 = max(1.0, np.linalg.norm(g22))
        worst = max(worst, r1 / scale1, r2 / scale2)
    return worst


@dataclass(frozen=True)
class MimoDecomposition:
    """g11 = g12 lambda1 + lambda2 g21 + lambda3 [gamma1; 0-row], exact."""

    lambda1: np.ndarray
    lambda2: np.ndarray
    lambda3: np.ndarray
    gamma1: np.ndarray
    correction_rank: int
    residual: float


def mimo_decompose(g11, g12, g21, rel_tol: float = RANK_RTOL) -> MimoDecomposition:
    """Express a direct block through the interference blocks plus a
    rank-deficient correction.

    If g12 has rank >= 1, project g11 onto its column space (lambda1 via
    pseudoinverse) and pack the remainder, which lives in the orthogonal
    complement and so has rank <= m-1, into the correction term; otherwise
    use the row space of g21.  Both interference blocks zero with g11
    nonzero signals a non-generic channel and raises.
    """
    g11 = require_finite(g11, "g11")
    g12 = require_finite(g12, "g12")
    g21 = require_finite(g21, "g21")
    m = g11.shape[0]
    if g11.shape != (m, m) or g12.shape != (m, m) or g21.shape != (m, m):
        raise ShapeMismatchError("blocks must be square matrices of one size")

    r12 = matrix_rank(g12, rel_tol)
    r21 = matrix_rank(g21, rel_tol)
    lam1 = np.zeros((m, m))
    lam2 = np.zeros((m, m))
    if r12 >= 1:
        lam1 = np.linalg.pinv(g12, rcond=rel_tol) @ g11
        correction = g11 - g12 @ lam1
    elif r21 >= 1:
        lam2 = g11 @ np.linalg.pinv(g21, rcond=rel_tol)
        correction = g11 - lam2 @ g21
    elif matrix_rank(g11, rel_tol) == 0:
        correction = np.zeros((m, m))
    else:
        raise DecompositionImpossibleError(
            "both interference blocks vanish but the direct block does not"
        )

    # factor the correction through m-1 dimensions: T = lambda3 [gamma1; 0];
    # rank measured at the scale of g11 so an exact-cancellation remainder
    # counts as zero
    corr_rank = _rank_at_scale(correction, max(np.linalg.norm(g11, 2), 1e-300), rel_tol)
    lam3 = np.zeros((m, m))
    gamma1 = np.zeros((max(m - 1, 0), m))
    if corr_rank > 0:
        u, s, vt = np.linalg.svd(correction)
        keep = min(corr_rank, m - 1)
        lam3[:, :keep] = u[:, :keep] * s[:keep]
        gamma1[:keep, :] = vt[:keep, :]
    stacked = np.vstack([gamma1, np.zeros((1, m))]) if m >= 1 else gamma1
    recon = g12 @ lam1 + lam2 @ g21 + lam3 @ stacked
    residual = np.linalg.norm(g11 - recon) / max(1.0, np.linalg.norm(g11))
    return MimoDecomposition(
        lambda1=lam1,
        lambda2=lam2,
        lambda3=lam3,
        gamma1=gamma1,
        correction_rank=corr_rank,
        residual=float(residual),
    )


def mimo_decompose_g22(g22, g12, g21, rel_tol: float = RANK_RTOL) -> MimoDecomposition:
    """Mirror decomposition g22 = omega1 g12 + g21 omega2 + omega3 [gamma2; 0],
    obtained by running the g11 routine on transposes."""
    t = mimo_decompose(np.asarray(g22).T, np.asarray(g12).T, np.asarray(g21).T, rel_tol)
    return MimoDecomposition(
        lambda1=t.lambda1.T,
        lambda2=t.lambda2.T,
        lambda3=t.lambda3,
        gamma1=t.gamma1,
        correction_rank=t.correction_rank,
        residual=t.residual,
    )


@dataclass(frozen=True)
class DofBoundReport:
    """The three rank-based slope bounds and their minimum."""

    bound_i: float
    bound_ii: float
    bound_iii: float
    min_bound: float
    per_block_ranks: tuple  # (rank g12, rank g21) per kernel

    def to_dict(self) -> dict:
        return {
            "bound_i": self.bound_i,
            "bound_ii": self.bound_ii,
            "bound_iii": self.bound_iii,
            "min_bound": self.min_bound,
            "per_block_ranks": [list(r) for r in self.per_block_ranks],
        }


def dof_upper_bound(cp: ChannelPair, kernels, mode: str | None = None) -> DofBoundReport:
    """Rank-based slope bounds for a kernel sequence on a given channel.

    Scalar mode (m=1 channels, blocks of size ell):
        (i)   avg (r12 + r21) / ell
        (ii)  avg (2 ell - r12) / ell
        (iii) avg (2 ell - r21) / ell
    MIMO mode (m-antenna channels, one slot per block):
        (I)   avg (2m - 2 + r12 + r21)
        (II)  avg (2m - r12)
        (III) avg (2m - r21)
    The three always sum to 4 (scalar) or 3(2m - 2/3) (MIMO), so the minimum
    cannot exceed 4/3 resp. 2m - 2/3.
    """
    if cp.field != REAL:
        raise ShapeMismatchError("bounds are computed on real channels; augment first")
    if mode is None:
        mode = "scalar" if cp.m == 1 else "mimo"
    if mode not in ("scalar", "mimo"):
        raise ValueError(f"unknown mode {mode!r}")
    if not kernels:
        raise ShapeMismatchError("need at least one kernel")

    ranks = []
    sides = set()
    for k in kernels:
        a, b = _kernel_pair(k)
        if a.shape != b.shape or a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ShapeMismatchError("kernel matrices must be square and equal-shaped")
        sides.add(a.shape[0])
        if mode == "scalar":
            _, g12, g21, _ = scalar_end_to_end_blocks(cp, a, b)
        else:
            if a.shape[0] != cp.m:
                raise ShapeMismatchError(
                    f"kernel side {a.shape[0]} does not match antenna count {cp.m}"
                )
            from .relaying import RelayKernel, end_to_end

            e = end_to_end(cp, RelayKernel(a=a, b=b, scale=1.0))
            g12, g21 = e.g12, e.g21
        # both interference blocks share one scale so a nulled block is rank 0
        scale = max(np.linalg.norm(g12, 2), np.linalg.norm(g21, 2), 1e-300)
        ranks.append((_rank_at_scale(g12, scale), _rank_at_scale(g21, scale)))
    if len(sides) != 1:
        raise ShapeMismatchError("kernels must share one block size")

    count = len(ranks)
    sum_r12 = sum(r[0] for r in ranks)
    sum_r21 = sum(r[1] for r in ranks)
    if mode == "scalar":
        ell = sides.pop()
        bound_i = (sum_r12 + sum_r21) / (count * ell)
        bound_ii = (2 * ell * count - sum_r12) / (count * ell)
        bound_iii = (2 * ell * count - sum_r21) / (count * ell)
    else:
        m = cp.m
        bound_i = (2 * m - 2) + (sum_r12 + sum_r21) / count
        bound_ii = 2 * m - sum_r12 / count
        bound_iii = 2 * m - sum_r21 / count
    return DofBoundReport(
        bound_i=bound_i,
        bound_ii=bound_ii,
        bound_iii=bound_iii,
        min_bound=min(bound_i, bound_ii, bound_iii),
        per_block_ranks=tuple(ranks),
    )
