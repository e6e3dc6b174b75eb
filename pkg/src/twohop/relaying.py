"""Relay kernel construction for the S, Z and X end-to-end topologies.

A kernel is the pair of amplifying matrices (A for relay u, B for relay v)
applied to the previous received block.  The end-to-end link from source j to
destination i is

    G_ij = H_ud_i A H_s_ju + H_vd_i B H_s_jv.

Topology semantics (single source of truth, used by every phase map):

    phase 1 -> S : G12 = 0, leak G21 = scale * e1 eN^T
                   (source 2 invisible at d1; only source-1 antenna N
                    interferes, at d2 antenna 1)
    phase 2 -> Z : G21 = 0, leak G12 = scale * eN e1^T
    phase 3 -> X : on the modified-source split, G~12 = 0 and
                   G~21 = scale * e1 eN^T (last_first)
                   or    scale * e1 e1^T (first_first)

The S/Z/X pairs are the solutions of one Sylvester equation each; solvability
needs disjoint spectra of the two channel products, and invertibility of the
solution is equivalent to two Krylov full-rank conditions.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .channel import (
    LAST_FIRST,
    REAL,
    ChannelPair,
    ZERO_TOL,
    check_scalar_conditions,
    modified_source_channels,
    scalar_gains,
)
from .exceptions import (
    ConditionViolationError,
    ShapeMismatchError,
    SingularConstructionError,
)
from .linalg import (
    RANK_RTOL,
    krylov_full_rank,
    matrix_rank,
    require_finite,
    solve_sylvester,
)

PHASE_TOPOLOGIES = ("S", "Z", "X")

# Relative tolerance for nulled blocks and leak-pattern matches.
NULL_RTOL = 1e-8


@dataclass(frozen=True)
class RelayKernel:
    """Amplifying matrices for one phase, power scaling already applied."""

    a: np.ndarray
    b: np.ndarray
    scale: float
    label: str = "custom"
    x_variant: Optional[str] = None  # set only on Sylvester-built X kernels

    def __post_init__(self):
        a = np.array(self.a, dtype=float)
        b = np.array(self.b, dtype=float)
        require_finite(a, "a")
        require_finite(b, "b")
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape != b.shape:
            raise ShapeMismatchError(
                f"kernel matrices must be square and equal, got {a.shape}, {b.shape}"
            )
        a.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @property
    def n(self) -> int:
        return self.a.shape[0]

    def to_json(self) -> str:
        payload = {
            "a": self.a.tolist(),
            "b": self.b.tolist(),
            "scale": self.scale,
            "label": self.label,
        }
        if self.x_variant:
            payload["x_variant"] = self.x_variant
        return json.dumps(payload)

    @classmethod
    def from_json(cls, text) -> "RelayKernel":
        data = json.loads(text) if isinstance(text, str) else text
        return cls(
            a=np.array(data["a"], float),
            b=np.array(data["b"], float),
            scale=float(data["scale"]),
            label=data.get("label", "custom"),
            x_variant=data.get("x_variant"),
        )


@dataclass(frozen=True)
class EndToEndChannel:
    """Effective source->destination blocks plus the relay-noise map."""

    g11: np.ndarray
    g12: np.ndarray
    g21: np.ndarray
    g22: np.ndarray
    noise_map: np.ndarray  # [[ud1 A, vd1 B], [ud2 A, vd2 B]]

    def block(self, i: int, j: int) -> np.ndarray:
        return getattr(self, f"g{i}{j}")


def leak_matrix(topology: str, n: int, x_variant: str = LAST_FIRST) -> np.ndarray:
    """Unit-scale residual-interference pattern of a constructed kernel."""
    e = np.zeros((n, n))
    if topology == "S":
        e[0, n - 1] = 1.0
    elif topology == "Z":
        e[n - 1, 0] = 1.0
    elif topology == "X":
        e[0, n - 1 if x_variant == LAST_FIRST else 0] = 1.0
    else:
        raise ValueError(f"unknown topology {topology!r}")
    return e


def _blocks(cp: ChannelPair):
    if cp.field != REAL:
        raise ShapeMismatchError("kernels operate on real channels; augment first")
    return cp.s1u, cp.s1v, cp.s2u, cp.s2v, cp.ud1, cp.vd1, cp.ud2, cp.vd2


def end_to_end(cp: ChannelPair, kernel: RelayKernel) -> EndToEndChannel:
    """Compute the four effective blocks and the relay-noise map."""
    s1u, s1v, s2u, s2v, ud1, vd1, ud2, vd2 = _blocks(cp)
    if kernel.n != cp.m:
        raise ShapeMismatchError(
            f"kernel side {kernel.n} does not match antenna count {cp.m}"
        )
    a, b = kernel.a, kernel.b
    ua1, vb1 = ud1 @ a, vd1 @ b
    ua2, vb2 = ud2 @ a, vd2 @ b
    return EndToEndChannel(
        g11=ua1 @ s1u + vb1 @ s1v,
        g12=ua1 @ s2u + vb1 @ s2v,
        g21=ua2 @ s1u + vb2 @ s1v,
        g22=ua2 @ s2u + vb2 @ s2v,
        noise_map=np.block([[ua1, vb1], [ua2, vb2]]),
    )


def noise_covariance(cp: ChannelPair, kernel: RelayKernel) -> np.ndarray:
    """Covariance of the effective destination noise: relay noise forwarded
    through the kernels plus unit destination noise."""
    nm = end_to_end(cp, kernel).noise_map
    return nm @ nm.T + np.eye(nm.shape[0])


def relay_load(cp: ChannelPair, a: np.ndarray, b: np.ndarray):
    """Per-relay transmit power at P = 1 with per-antenna symbol power 1/m.

    Relay u forwards a(H_s1u x1 + H_s2u x2 + z), so its power under
    independent unit-total-power sources and unit noise is
    (||a H_s1u||_F^2 + ||a H_s2u||_F^2)/m + ||a||_F^2; power grows linearly
    in P below slope 1, so a kernel with load <= 1 respects the constraint
    at every P >= 1.
    """
    m = cp.m
    fu = (
        np.linalg.norm(a @ cp.s1u) ** 2 + np.linalg.norm(a @ cp.s2u) ** 2
    ) / m + np.linalg.norm(a) ** 2
    fv = (
        np.linalg.norm(b @ cp.s1v) ** 2 + np.linalg.norm(b @ cp.s2v) ** 2
    ) / m + np.linalg.norm(b) ** 2
    return float(fu), float(fv)


def _per_phase_scale(cp: ChannelPair, a: np.ndarray, b: np.ndarray) -> float:
    fu, fv = relay_load(cp, a, b)
    tu = 1.0 / np.sqrt(fu) if fu > 0 else np.inf
    tv = 1.0 / np.sqrt(fv) if fv > 0 else np.inf
    t = min(tu, tv)
    if not np.isfinite(t):
        raise SingularConstructionError("kernel pair is identically zero")
    return float(t)


def scalar_power_constant(cp: ChannelPair) -> float:
    """Shared conservative amplification constant (the loosest of the caps).

    c = min{ sqrt(1/(h_s1u^2 + h_s2u^2 + 1)),
             l * sqrt(1/(h_s1v^2 + h_s2v^2 + 1)) },
    l = min{ |h_vd1 h_s2v / (h_ud1 h_s2u)|, |h_vd2 h_s1v / (h_ud2 h_s1u)| }.
    One constant serves all three phases; the per-phase normalization below
    is tighter and is the default.
    """
    s1u, s1v, s2u, s2v, ud1, vd1, ud2, vd2 = scalar_gains(cp)
    for name, val in (("h_ud1*h_s2u", ud1 * s2u), ("h_ud2*h_s1u", ud2 * s1u)):
        if abs(val) <= ZERO_TOL:
            raise ConditionViolationError(f"{name} is numerically zero")
    ell = min(abs(vd1 * s2v / (ud1 * s2u)), abs(vd2 * s1v / (ud2 * s1u)))
    return min(
        np.sqrt(1.0 / (s1u**2 + s2u**2 + 1.0)),
        ell * np.sqrt(1.0 / (s1v**2 + s2v**2 + 1.0)),
    )


PER_PHASE = "per_phase"
SHARED = "shared"


def scalar_kernel(
    cp: ChannelPair, topology: str, normalization: str = PER_PHASE
) -> RelayKernel:
    """Time-varying scalar amplify-forward pair creating one topology.

    S cancels source 2 at d1 (g12 = 0), Z cancels source 1 at d2 (g21 = 0),
    X silences relay v so both cross links stay alive.  The nulling fixes
    the coefficient ratio; `per_phase` scales each phase to its own power
    cap, `shared` applies the one joint constant of scalar_power_constant
    to every phase.
    """
    if cp.m != 1 or cp.field != REAL:
        raise ShapeMismatchError("scalar kernels need an m=1 real channel")
    report = check_scalar_conditions(cp)
    if not report.all_pass:
        raise ConditionViolationError(f"channel fails genericity checks: {report}")
    s1u, s1v, s2u, s2v, ud1, vd1, ud2, vd2 = scalar_gains(cp)
    if topology == "S":
        ratio = -ud1 * s2u / (vd1 * s2v)
    elif topology == "Z":
        ratio = -ud2 * s1u / (vd2 * s1v)
    elif topology == "X":
        ratio = 0.0
    else:
        raise ValueError(f"unknown topology {topology!r}")
    if normalization == PER_PHASE:
        alpha = _per_phase_scale(cp, np.array([[1.0]]), np.array([[ratio]]))
    elif normalization == SHARED:
        alpha = scalar_power_constant(cp)
    else:
        raise ValueError(f"unknown normalization {normalization!r}")
    return RelayKernel(a=[[alpha]], b=[[alpha * ratio]], scale=alpha, label=topology)


def _inv(name: str, m: np.ndarray) -> np.ndarray:
    if abs(np.linalg.det(m)) <= ZERO_TOL:
        raise ConditionViolationError(f"hop block {name} is singular")
    return np.linalg.inv(m)


def _null_and_leak_pair(s1u, s1v, s2u, s2v, ud1, vd1, ud2, vd2, target):
    """Solve for (A, B) nulling source 2 at destination 1 with the given
    residual matrix from source 1 at destination 2.

    A is tied to B by the nulling constraint; B solves
        B (H_s1v H_s1u^-1 H_s2u H_s2v^-1) - (H_vd2^-1 H_ud2 H_ud1^-1 H_vd1) B
            = H_vd2^-1 target H_s1u^-1 H_s2u H_s2v^-1,
    whose right side is the rank-one q p^T determined by the target.
    Invertibility of B needs the two Krylov conditions on (A_syl^T, p) and
    (B_syl, q).
    """
    s1u_i = _inv("s1u", s1u)
    s2u_i = _inv("s2u", s2u)
    s2v_i = _inv("s2v", s2v)
    ud1_i = _inv("ud1", ud1)
    vd2_i = _inv("vd2", vd2)
    _inv("s1v", s1v)
    _inv("vd1", vd1)
    _inv("ud2", ud2)

    prod = s1u_i @ s2u @ s2v_i
    a_syl = s1v @ prod
    b_syl = vd2_i @ ud2 @ ud1_i @ vd1
    c_syl = vd2_i @ target @ prod

    # target = e_r e_s^T, so C = q p^T with q = col r of vd2^-1, p = row s of prod
    rows, cols = np.nonzero(target)
    r, s = int(rows[0]), int(cols[0])
    p = prod[s, :]
    q = vd2_i[:, r]
    if not krylov_full_rank(a_syl.T, p):
        raise SingularConstructionError("Krylov condition on (A_syl^T, p) fails")
    if not krylov_full_rank(b_syl, q):
        raise SingularConstructionError("Krylov condition on (B_syl, q) fails")

    b = solve_sylvester(a_syl, b_syl, c_syl)
    a = -ud1_i @ vd1 @ b @ s2v @ s2u_i
    return a, b


def _verify_pattern(g11, g12, g21, g22, target, n):
    ref = max(np.linalg.norm(g) for g in (g11, g12, g21, g22))
    if np.linalg.norm(g12) > NULL_RTOL * ref:
        raise SingularConstructionError("nulled block is not numerically zero")
    if np.linalg.norm(g21 - target) > NULL_RTOL * ref:
        raise SingularConstructionError("leak block does not match its pattern")
    if matrix_rank(g11, RANK_RTOL) != n or matrix_rank(g22, RANK_RTOL) != n:
        raise SingularConstructionError("a direct block lost rank")


def mimo_power_constant(cp: ChannelPair, kernels) -> float:
    """Scaling d keeping both relays within power P for any of the kernels.

    d = (1/l) min over relays of sqrt(1/(||H_s1r||^2 + ||H_s2r||^2 + m)) with
    l the largest spectral norm among the six unscaled matrices.
    """
    ell = max(max(np.linalg.norm(k[0], 2), np.linalg.norm(k[1], 2)) for k in kernels)
    nu = np.linalg.norm(cp.s1u, 2) ** 2 + np.linalg.norm(cp.s2u, 2) ** 2 + cp.m
    nv = np.linalg.norm(cp.s1v, 2) ** 2 + np.linalg.norm(cp.s2v, 2) ** 2 + cp.m
    return min(np.sqrt(1.0 / nu), np.sqrt(1.0 / nv)) / ell


def mimo_kernels(
    cp: ChannelPair, x_variant: str = LAST_FIRST, normalization: str = PER_PHASE
) -> dict:
    """Build the S, Z and X kernels for a real multi-antenna channel.

    The residual leak of topology T equals kernel.scale * leak_matrix(T, m,
    x_variant).  `per_phase` scales each pair to its own relay power cap;
    `shared` applies the joint constant of mimo_power_constant (largest
    spectral norm over all six matrices) to every phase.  Every pair is
    re-verified against its declared null/leak/rank pattern after the solve;
    a pattern failure raises SingularConstructionError rather than returning
    a silently broken kernel.
    """
    s1u, s1v, s2u, s2v, ud1, vd1, ud2, vd2 = _blocks(cp)
    n = cp.m

    raw = {}
    # S: null source 2 at d1, leak e1 eN^T from source 1 at d2.
    a, b = _null_and_leak_pair(
        s1u, s1v, s2u, s2v, ud1, vd1, ud2, vd2, leak_matrix("S", n)
    )
    raw["S"] = (a, b, (s1u, s1v, s2u, s2v), leak_matrix("S", n))
    # Z: same construction with sources and destinations swapped.
    a, b = _null_and_leak_pair(
        s2u, s2v, s1u, s1v, ud2, vd2, ud1, vd1, leak_matrix("Z", n)
    )
    raw["Z"] = (a, b, (s1u, s1v, s2u, s2v), leak_matrix("Z", n))
    # X: the S construction on the modified-source split.
    mod = modified_source_channels(cp, x_variant)
    a, b = _null_and_leak_pair(
        mod.s1u, mod.s1v, mod.s2u, mod.s2v, ud1, vd1, ud2, vd2,
        leak_matrix("X", n, x_variant),
    )
    raw["X"] = (a, b, (mod.s1u, mod.s1v, mod.s2u, mod.s2v), leak_matrix("X", n, x_variant))

    if normalization == PER_PHASE:
        scales = {t: _per_phase_scale(cp, raw[t][0], raw[t][1]) for t in PHASE_TOPOLOGIES}
    elif normalization == SHARED:
        d = mimo_power_constant(cp, [(raw[t][0], raw[t][1]) for t in PHASE_TOPOLOGIES])
        scales = {t: d for t in PHASE_TOPOLOGIES}
    else:
        raise ValueError(f"unknown normalization {normalization!r}")

    out = {}
    for topo in PHASE_TOPOLOGIES:
        a, b, (b1u, b1v, b2u, b2v), target = raw[topo]
        d = scales[topo]
        ua1, vb1 = ud1 @ a, vd1 @ b
        ua2, vb2 = ud2 @ a, vd2 @ b
        g11 = ua1 @ b1u + vb1 @ b1v
        g12 = ua1 @ b2u + vb1 @ b2v
        g21 = ua2 @ b1u + vb2 @ b1v
        g22 = ua2 @ b2u + vb2 @ b2v
        if topo == "Z":
            # swapped construction: nulled block is g21, leak sits in g12
            _verify_pattern(g22, g21, g12, g11, target, n)
        else:
            _verify_pattern(g11, g12, g21, g22, target, n)
        out[topo] = RelayKernel(
            a=d * a,
            b=d * b,
            scale=d,
            label=topo,
            x_variant=x_variant if topo == "X" else None,
        )
    return out


def mimo_kernel(
    cp: ChannelPair,
    topology: str,
    x_variant: str = LAST_FIRST,
    normalization: str = PER_PHASE,
) -> RelayKernel:
    """One topology kernel from the full verified set."""
    if topology not in PHASE_TOPOLOGIES:
        raise ValueError(f"unknown topology {topology!r}")
    return mimo_kernels(cp, x_variant, normalization)[topology]


def x_end_to_end_blocks(cp: ChannelPair, kernel: RelayKernel):
    """Effective blocks of an X kernel on the modified-source coordinates."""
    variant = kernel.x_variant or LAST_FIRST
    mod = modified_source_channels(cp, variant)
    a, b = kernel.a, kernel.b
    ua1, vb1 = cp.ud1 @ a, cp.vd1 @ b
    ua2, vb2 = cp.ud2 @ a, cp.vd2 @ b
    return (
        ua1 @ mod.s1u + vb1 @ mod.s1v,
        ua1 @ mod.s2u + vb1 @ mod.s2v,
        ua2 @ mod.s1u + vb2 @ mod.s1v,
        ua2 @ mod.s2u + vb2 @ mod.s2v,
    )


def kernel_verification_report(cp: ChannelPair, kernel: RelayKernel) -> dict:
    """Null/leak/rank summary of a constructed kernel against its pattern."""
    if kernel.label == "X" and kernel.x_variant:
        g11, g12, g21, g22 = x_end_to_end_blocks(cp, kernel)
    else:
        e = end_to_end(cp, kernel)
        g11, g12, g21, g22 = e.g11, e.g12, e.g21, e.g22
    if kernel.label == "Z":
        nulled, leak = g21, g12
    else:
        nulled, leak = g12, g21
    target = kernel.scale * leak_matrix(kernel.label, cp.m, kernel.x_variant or LAST_FIRST)
    ref = max(np.linalg.norm(g) for g in (g11, g12, g21, g22))
    return {
        "label": kernel.label,
        "nulled_block_relative_norm": float(np.linalg.norm(nulled) / ref),
        "leak_pattern_relative_error": float(np.linalg.norm(leak - target) / ref),
        "leak_rank": matrix_rank(leak),
        "direct_ranks": [matrix_rank(g11), matrix_rank(g22)],
        "scale": kernel.scale,
    }
