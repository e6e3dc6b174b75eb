"""Channel-pair construction and manipulation.

A two-hop network has two sources (s1, s2), two relays (u, v) and two
destinations (d1, d2); each node carries `m` antennas.  Hop 1 stacks the
source->relay blocks, hop 2 the relay->destination blocks:

    h1 = [[H_s1u, H_s2u],    h2 = [[H_ud1, H_vd1],
          [H_s1v, H_s2v]]          [H_ud2, H_vd2]]

Complex channels are stored as complex 2m x 2m matrices and reduced to real
4m x 4m ones by `augment` before any scheme math runs.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field as dc_field
from typing import NamedTuple

import numpy as np

from .exceptions import BadSpecError, ShapeMismatchError
from .linalg import require_finite

REAL = "real"
COMPLEX = "complex"

UNIFORM_PHASE = "uniform_phase"
GAUSSIAN = "gaussian"

# Swap variants for the modified-source split used by the X topology.
LAST_FIRST = "last_first"    # source-1 antenna m  <->  source-2 antenna 1
FIRST_FIRST = "first_first"  # source-1 antenna 1  <->  source-2 antenna 1

# Absolute tolerance on |det| and |entry| for the genericity checks.
ZERO_TOL = 1e-12


@dataclass(frozen=True)
class ChannelPair:
    """The two hop matrices of a two-hop interference network."""

    m: int
    field: str
    h1: np.ndarray
    h2: np.ndarray

    def __post_init__(self):
        if self.field not in (REAL, COMPLEX):
            raise BadSpecError(f"unknown field {self.field!r}")
        side = 2 * self.m
        dtype = np.float64 if self.field == REAL else np.complex128
        for name in ("h1", "h2"):
            arr = np.array(getattr(self, name), dtype=dtype)
            require_finite(arr, name)
            if arr.shape != (side, side):
                raise ShapeMismatchError(
                    f"{name} must be {side}x{side} for m={self.m}, got {arr.shape}"
                )
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    # hop-1 blocks
    @property
    def s1u(self) -> np.ndarray:
        return self.h1[: self.m, : self.m]

    @property
    def s2u(self) -> np.ndarray:
        return self.h1[: self.m, self.m :]

    @property
    def s1v(self) -> np.ndarray:
        return self.h1[self.m :, : self.m]

    @property
    def s2v(self) -> np.ndarray:
        return self.h1[self.m :, self.m :]

    # hop-2 blocks
    @property
    def ud1(self) -> np.ndarray:
        return self.h2[: self.m, : self.m]

    @property
    def vd1(self) -> np.ndarray:
        return self.h2[: self.m, self.m :]

    @property
    def ud2(self) -> np.ndarray:
        return self.h2[self.m :, : self.m]

    @property
    def vd2(self) -> np.ndarray:
        return self.h2[self.m :, self.m :]

    def to_json(self) -> str:
        if self.field == REAL:
            h1, h2 = self.h1.tolist(), self.h2.tolist()
        else:
            h1 = [[[z.real, z.imag] for z in row] for row in self.h1]
            h2 = [[[z.real, z.imag] for z in row] for row in self.h2]
        return json.dumps({"m": self.m, "field": self.field, "h1": h1, "h2": h2})

    @classmethod
    def from_json(cls, text: str) -> "ChannelPair":
        data = json.loads(text) if isinstance(text, str) else text
        m, fld = int(data["m"]), data["field"]
        if fld == REAL:
            h1, h2 = np.array(data["h1"], float), np.array(data["h2"], float)
        else:
            raw1, raw2 = np.array(data["h1"], float), np.array(data["h2"], float)
            h1 = raw1[..., 0] + 1j * raw1[..., 1]
            h2 = raw2[..., 0] + 1j * raw2[..., 1]
        return cls(m=m, field=fld, h1=h1, h2=h2)


@dataclass(frozen=True)
class EnsembleSpec:
    """Seeded random channel ensemble.

    `uniform_phase` reproduces the direct-gain-1 / cross-gain-sqrt(r) network
    with i.i.d. phases (complex only); `gaussian` draws every entry (or every
    real/imag part) i.i.d. standard normal.
    """

    m: int
    r: float = 1.0
    seed: int = 0
    distribution: str = UNIFORM_PHASE
    field: str = dc_field(default="")

    def __post_init__(self):
        if self.distribution not in (UNIFORM_PHASE, GAUSSIAN):
            raise BadSpecError(f"unknown distribution {self.distribution!r}")
        fld = self.field or (COMPLEX if self.distribution == UNIFORM_PHASE else REAL)
        if fld not in (REAL, COMPLEX):
            raise BadSpecError(f"unknown field {fld!r}")
        if self.distribution == UNIFORM_PHASE:
            if fld != COMPLEX:
                raise BadSpecError("uniform_phase ensembles are complex")
            if not (0.0 < self.r <= 1.0):
                raise BadSpecError(f"interference power r={self.r} outside (0, 1]")
        if self.m < 1:
            raise BadSpecError("m must be >= 1")
        object.__setattr__(self, "field", fld)


def sample_ensemble(spec: EnsembleSpec) -> ChannelPair:
    """Draw one channel pair; bitwise deterministic for a fixed spec."""
    rng = np.random.default_rng(spec.seed)
    m = spec.m
    if spec.distribution == UNIFORM_PHASE:
        def block(mag):
            theta = rng.uniform(0.0, 2.0 * np.pi, size=(m, m))
            return mag * np.exp(1j * theta)

        root_r = np.sqrt(spec.r)
        # draw order fixed: s1u, s2u, s1v, s2v, then ud1, vd1, ud2, vd2
        h1 = np.block([[block(1.0), block(root_r)], [block(root_r), block(1.0)]])
        h2 = np.block([[block(1.0), block(root_r)], [block(root_r), block(1.0)]])
        return ChannelPair(m=m, field=COMPLEX, h1=h1, h2=h2)

    side = 2 * m
    if spec.field == REAL:
        h1 = rng.standard_normal((side, side))
        h2 = rng.standard_normal((side, side))
        return ChannelPair(m=m, field=REAL, h1=h1, h2=h2)
    h1 = rng.standard_normal((side, side)) + 1j * rng.standard_normal((side, side))
    h2 = rng.standard_normal((side, side)) + 1j * rng.standard_normal((side, side))
    return ChannelPair(m=m, field=COMPLEX, h1=h1, h2=h2)


def scalar_gains(cp: ChannelPair):
    """The eight gains of an m=1 channel as Python scalars, in the order
    (s1u, s1v, s2u, s2v, ud1, vd1, ud2, vd2)."""
    if cp.m != 1:
        raise ShapeMismatchError("scalar gains need an m=1 channel")
    return (
        cp.s1u.item(), cp.s1v.item(), cp.s2u.item(), cp.s2v.item(),
        cp.ud1.item(), cp.vd1.item(), cp.ud2.item(), cp.vd2.item(),
    )


@dataclass(frozen=True)
class ConditionReport:
    """Genericity checks for the single-antenna real constructions."""

    c1_all_nonzero: bool
    c2_hops_invertible: bool
    c3_cross_det_nonzero: bool
    det_values: dict

    @property
    def all_pass(self) -> bool:
        return self.c1_all_nonzero and self.c2_hops_invertible and self.c3_cross_det_nonzero


def check_scalar_conditions(cp: ChannelPair) -> ConditionReport:
    """Evaluate the three nonzero/determinant conditions for m=1 real channels.

    The cross-product determinant is det([[h_s2u*h_ud1, h_s1u*h_ud2],
    [h_s2v*h_vd1, h_s1v*h_vd2]]); it also controls the converse
    decomposition coefficients.
    """
    if cp.m != 1 or cp.field != REAL:
        raise ShapeMismatchError("scalar conditions need an m=1 real channel")
    gains = [cp.h1[i, j].item() for i in range(2) for j in range(2)]
    gains += [cp.h2[i, j].item() for i in range(2) for j in range(2)]
    c1 = all(abs(g) > ZERO_TOL for g in gains)
    det_h1 = float(np.linalg.det(cp.h1))
    det_h2 = float(np.linalg.det(cp.h2))
    c2 = abs(det_h1) > ZERO_TOL and abs(det_h2) > ZERO_TOL
    s1u, s1v, s2u, s2v, ud1, vd1, ud2, vd2 = scalar_gains(cp)
    cross = s2u * ud1 * s1v * vd2 - s1u * ud2 * s2v * vd1
    c3 = abs(cross) > ZERO_TOL
    return ConditionReport(
        c1_all_nonzero=c1,
        c2_hops_invertible=c2,
        c3_cross_det_nonzero=c3,
        det_values={"det_h1": det_h1, "det_h2": det_h2, "cross_det": cross},
    )


def _augment_block(h: np.ndarray) -> np.ndarray:
    return np.block([[h.real, -h.imag], [h.imag, h.real]])


def augment(cp: ChannelPair) -> ChannelPair:
    """Real view of a complex channel: each block H becomes [[Re,-Im],[Im,Re]].

    The result is a real channel with 2m antennas per node; multiplication,
    addition and inversion commute with the mapping, so any real-channel
    construction applies unchanged.
    """
    if cp.field != COMPLEX:
        raise ShapeMismatchError("augment expects a complex channel")
    h1 = np.block(
        [
            [_augment_block(cp.s1u), _augment_block(cp.s2u)],
            [_augment_block(cp.s1v), _augment_block(cp.s2v)],
        ]
    )
    h2 = np.block(
        [
            [_augment_block(cp.ud1), _augment_block(cp.vd1)],
            [_augment_block(cp.ud2), _augment_block(cp.vd2)],
        ]
    )
    return ChannelPair(m=2 * cp.m, field=REAL, h1=h1, h2=h2)


class ModifiedSources(NamedTuple):
    s1u: np.ndarray
    s1v: np.ndarray
    s2u: np.ndarray
    s2v: np.ndarray


def modified_source_channels(cp: ChannelPair, variant: str = LAST_FIRST) -> ModifiedSources:
    """Hop-1 blocks after regrouping one antenna across the two sources.

    `last_first` trades source-1's last antenna for source-2's first;
    `first_first` trades the two first antennas (the variant used on
    augmented channels).  The union of columns is a permutation of the
    original ones, so the split is pure bookkeeping.
    """
    if cp.field != REAL:
        raise ShapeMismatchError("modified sources are defined on real channels")
    if variant not in (LAST_FIRST, FIRST_FIRST):
        raise BadSpecError(f"unknown variant {variant!r}")
    m = cp.m

    def split(b1, b2):
        if variant == LAST_FIRST:
            new1 = np.hstack([b1[:, : m - 1], b2[:, :1]])
            new2 = np.hstack([b1[:, m - 1 :], b2[:, 1:]])
        else:
            new1 = np.hstack([b2[:, :1], b1[:, 1:]])
            new2 = np.hstack([b1[:, :1], b2[:, 1:]])
        return new1, new2

    s1u, s2u = split(cp.s1u, cp.s2u)
    s1v, s2v = split(cp.s1v, cp.s2v)
    return ModifiedSources(s1u=s1u, s1v=s1v, s2u=s2u, s2v=s2v)
