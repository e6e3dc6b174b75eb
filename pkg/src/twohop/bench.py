"""Monte Carlo SNR sweeps, slope fitting and result emission.

Sweeps draw channels from a seeded ensemble, evaluate scheme sum-rates over
a dB power grid and aggregate mean/std per (scheme, power) cell.  Channel i
always uses seed base_seed XOR splitmix64(i), so results are byte-identical
under any parallel partitioning.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .channel import (
    COMPLEX,
    REAL,
    ChannelPair,
    EnsembleSpec,
    augment,
    check_scalar_conditions,
    sample_ensemble,
)
from .exceptions import BadConfigError, InsufficientDataError, IoFailureError, TwoHopError
from .relaying import PHASE_TOPOLOGIES, mimo_kernels
from .schemes import (
    af_rate,
    fixed_af_rate,
    refine_kernels,
    three_phase_complex_rate,
    three_phase_mi_rate,
    three_phase_mimo_rate,
    three_phase_scalar_rate,
    tdma_rate,
)

log = logging.getLogger(__name__)

HALF_LOG2 = "half-log2"
LOG2P = "log2"

CSV_COLUMNS = ("scheme", "p_db", "mean_sum_rate", "std_sum_rate", "n_channels", "skips")

MAX_REDRAWS = 1000


def splitmix64(x: int) -> int:
    """SplitMix64 finalizer; decorrelates per-channel seeds."""
    x = (x + 0x9E3779B97F4A7C15) & 0xFFFFFFFFFFFFFFFF
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & 0xFFFFFFFFFFFFFFFF
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & 0xFFFFFFFFFFFFFFFF
    return (z ^ (z >> 31)) & 0xFFFFFFFFFFFFFFFF


def db_to_linear(p_db: float) -> float:
    return 10.0 ** (p_db / 10.0)


@dataclass(frozen=True)
class SweepConfig:
    ensemble: EnsembleSpec
    schemes: tuple
    p_grid_db: tuple
    n_channels: int = 20
    seed: int = 0
    output_path: str | None = None
    refine_budget: int = 500

    def __post_init__(self):
        if not self.p_grid_db or list(self.p_grid_db) != sorted(set(self.p_grid_db)):
            raise BadConfigError("p_grid_db must be nonempty and strictly increasing")
        if self.n_channels < 1:
            raise BadConfigError("n_channels must be >= 1")
        unknown = [s for s in self.schemes if s not in SCHEMES]
        if unknown:
            raise BadConfigError(f"unknown schemes {unknown}; known: {sorted(SCHEMES)}")
        object.__setattr__(self, "schemes", tuple(self.schemes))
        object.__setattr__(self, "p_grid_db", tuple(float(x) for x in self.p_grid_db))

    @classmethod
    def from_json(cls, text) -> "SweepConfig":
        data = json.loads(text) if isinstance(text, str) else dict(text)
        ens = data["ensemble"]
        spec = EnsembleSpec(
            m=int(ens["m"]),
            r=float(ens.get("r", 1.0)),
            seed=int(ens.get("seed", 0)),
            distribution=ens.get("distribution", "uniform_phase"),
            field=ens.get("field", ""),
        )
        return cls(
            ensemble=spec,
            schemes=tuple(data["schemes"]),
            p_grid_db=tuple(data["p_grid_db"]),
            n_channels=int(data.get("n_channels", 20)),
            seed=int(data.get("seed", 0)),
            output_path=data.get("output_path"),
            refine_budget=int(data.get("refine_budget", 500)),
        )


@dataclass(frozen=True)
class DofFit:
    slope: float
    intercept: float
    residual: float
    fit_window_db: tuple

    def to_dict(self) -> dict:
        return {
            "slope": self.slope,
            "intercept": self.intercept,
            "residual": self.residual,
            "fit_window_db": list(self.fit_window_db),
        }


# --- scheme registry -------------------------------------------------------
# Each entry maps a label to a factory(channel, cfg) -> fn(p_linear) -> sum_rate.
# Factories run once per channel so kernel construction is shared across the
# power grid (kernels and noise variances do not depend on P).


def _three_phase_factory(cp: ChannelPair, cfg: SweepConfig):
    if cp.field == COMPLEX:
        return lambda p: three_phase_complex_rate(cp, p).sum_rate
    if cp.m == 1:
        return lambda p: three_phase_scalar_rate(cp, p).sum_rate
    return lambda p: three_phase_mimo_rate(cp, p).sum_rate


def _three_phase_refined_factory(cp: ChannelPair, cfg: SweepConfig):
    rcp = augment(cp) if cp.field == COMPLEX else cp
    kernels = [
        mimo_kernels(rcp, "first_first" if cp.field == COMPLEX else "last_first")[t]
        for t in PHASE_TOPOLOGIES
    ]

    def rate(p):
        _, value = refine_kernels(rcp, kernels, p, budget=cfg.refine_budget)
        return value

    return rate


def _tdma_factory(cp: ChannelPair, cfg: SweepConfig):
    return lambda p: tdma_rate(p).sum_rate


def _af_factory(cp: ChannelPair, cfg: SweepConfig):
    return lambda p: af_rate(cp, p).sum_rate


def _fixed_af_factory(cp: ChannelPair, cfg: SweepConfig):
    return lambda p: fixed_af_rate(cp, p).sum_rate


def _three_phase_mi_factory(cp: ChannelPair, cfg: SweepConfig):
    rcp = augment(cp) if cp.field == COMPLEX else cp
    kernels = [
        mimo_kernels(rcp, "first_first" if cp.field == COMPLEX else "last_first")[t]
        for t in PHASE_TOPOLOGIES
    ]
    return lambda p: three_phase_mi_rate(rcp, kernels, p).sum_rate


SCHEMES = {
    "three-phase": _three_phase_factory,
    "three-phase-mi": _three_phase_mi_factory,
    "three-phase-refined": _three_phase_refined_factory,
    "tdma": _tdma_factory,
    "af": _af_factory,
    "fixed-af": _fixed_af_factory,
}


def _channel_is_usable(cp: ChannelPair) -> bool:
    """Reject the measure-zero draws the constructions cannot handle."""
    try:
        if cp.field == REAL and cp.m == 1:
            return check_scalar_conditions(cp).all_pass
        rcp = augment(cp) if cp.field == COMPLEX else cp
        mimo_kernels(rcp, "first_first" if cp.field == COMPLEX else "last_first")
        return True
    except TwoHopError:
        return False


def draw_channel(spec: EnsembleSpec, base_seed: int, index: int):
    """Deterministic per-index channel draw with rejection; returns
    (channel, rejects)."""
    rejects = 0
    for attempt in range(MAX_REDRAWS):
        seed = (base_seed ^ splitmix64(index * MAX_REDRAWS + attempt)) & 0xFFFFFFFFFFFFFFFF
        cp = sample_ensemble(
            EnsembleSpec(
                m=spec.m, r=spec.r, seed=seed,
                distribution=spec.distribution, field=spec.field,
            )
        )
        if _channel_is_usable(cp):
            if rejects:
                log.info("channel %d accepted after %d rejected draws", index, rejects)
            return cp, rejects
        rejects += 1
    raise BadConfigError(f"no usable channel after {MAX_REDRAWS} draws for index {index}")


def _worker_count() -> int:
    raw = os.environ.get("TWOHOP_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def run_sweep(cfg: SweepConfig):
    """Evaluate every scheme over the power grid for each sampled channel.

    Returns rows [{scheme, p_db, mean_sum_rate, std_sum_rate, n_channels,
    skips}] in (scheme, p_db) order.  A scheme failure on one channel skips
    that (scheme, channel) pair and is counted in `skips`.
    """
    p_linear = [db_to_linear(p) for p in cfg.p_grid_db]

    def evaluate(index):
        cp, _ = draw_channel(cfg.ensemble, cfg.seed, index)
        out = {}
        for label in cfg.schemes:
            try:
                fn = SCHEMES[label](cp, cfg)
                out[label] = [fn(p) for p in p_linear]
            except TwoHopError as exc:
                log.warning("scheme %s skipped channel %d: %s", label, index, exc)
                out[label] = None
        return out

    workers = _worker_count()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            per_channel = list(pool.map(evaluate, range(cfg.n_channels)))
    else:
        per_channel = [evaluate(i) for i in range(cfg.n_channels)]

    rows = []
    for label in cfg.schemes:
        curves = [c[label] for c in per_channel if c[label] is not None]
        skips = cfg.n_channels - len(curves)
        for j, p_db in enumerate(cfg.p_grid_db):
            vals = np.array([c[j] for c in curves]) if curves else np.zeros(0)
            rows.append(
                {
                    "scheme": label,
                    "p_db": float(p_db),
                    "mean_sum_rate": float(np.mean(vals)) if vals.size else float("nan"),
                    "std_sum_rate": float(np.std(vals)) if vals.size else float("nan"),
                    "n_channels": int(vals.size),
                    "skips": int(skips),
                }
            )
    return rows


def fit_dof_slope(rows, normalizer: str = HALF_LOG2, window_db=(50.0, 80.0)) -> DofFit:
    """Least-squares slope of mean sum-rate against the DoF normalizer.

    Rows outside the window are ignored; at least 3 must remain.  Rows
    should belong to a single scheme (filter before calling).
    """
    lo, hi = window_db
    pts = [
        (r["p_db"], r["mean_sum_rate"])
        for r in rows
        if lo <= r["p_db"] <= hi and math.isfinite(r["mean_sum_rate"])
    ]
    if len(pts) < 3:
        raise InsufficientDataError(
            f"need >= 3 grid points in window [{lo}, {hi}] dB, have {len(pts)}"
        )
    if normalizer == HALF_LOG2:
        xs = np.array([0.5 * math.log2(db_to_linear(p)) for p, _ in pts])
    elif normalizer == LOG2P:
        xs = np.array([math.log2(db_to_linear(p)) for p, _ in pts])
    else:
        raise ValueError(f"unknown normalizer {normalizer!r}")
    ys = np.array([y for _, y in pts])
    design = np.column_stack([xs, np.ones_like(xs)])
    coef, *_ = np.linalg.lstsq(design, ys, rcond=None)
    resid = float(np.sqrt(np.mean((design @ coef - ys) ** 2)))
    return DofFit(
        slope=float(coef[0]),
        intercept=float(coef[1]),
        residual=resid,
        fit_window_db=(float(lo), float(hi)),
    )


def _fmt(value) -> str:
    if isinstance(value, float):
        return f"{value:.12g}"
    return str(value)


def render_csv(rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for row in rows:
        writer.writerow([_fmt(row[c]) for c in CSV_COLUMNS])
    return buf.getvalue()


def emit_results(rows, fmt: str = "csv", path: str | None = None) -> str:
    """Serialize sweep rows; writes to `path` when given, returns the text.

    Floats are emitted at 12 significant digits in both formats.
    """
    if fmt == "csv":
        text = render_csv(rows)
    elif fmt == "json":
        def clip(v):
            return float(f"{v:.12g}") if isinstance(v, float) else v

        text = json.dumps(
            [{c: clip(row[c]) for c in CSV_COLUMNS} for row in rows], indent=2
        ) + "\n"
    else:
        raise ValueError(f"unknown format {fmt!r}")
    if path:
        try:
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(text)
        except OSError as exc:
            raise IoFailureError(str(exc)) from exc
    return text


def parse_csv(text: str):
    reader = csv.DictReader(io.StringIO(text))
    rows = []
    for rec in reader:
        rows.append(
            {
                "scheme": rec["scheme"],
                "p_db": float(rec["p_db"]),
                "mean_sum_rate": float(rec["mean_sum_rate"]),
                "std_sum_rate": float(rec["std_sum_rate"]),
                "n_channels": int(rec["n_channels"]),
                "skips": int(rec["skips"]),
            }
        )
    return rows
