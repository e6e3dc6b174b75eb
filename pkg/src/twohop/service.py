"""HTTP service wrapping the core operations.

Request/response bodies mirror the JSON schemas of the CLI: channels as
{m, field, h1, h2} (complex entries as [re, im] pairs), kernels as
{a, b, scale, label}.  Start with `twohop serve` or any ASGI runner.
"""

from __future__ import annotations

import json
from typing import List, Optional

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from .bench import SweepConfig, fit_dof_slope, run_sweep
from .channel import COMPLEX, ChannelPair, EnsembleSpec, augment, sample_ensemble
from .converse import dof_upper_bound, mimo_decompose, verify_decomposition
from .exceptions import TwoHopError
from .relaying import (
    PHASE_TOPOLOGIES,
    RelayKernel,
    end_to_end,
    kernel_verification_report,
    mimo_kernels,
    scalar_kernel,
)
from .schemes import (
    af_rate,
    fixed_af_rate,
    simulate_transmission,
    three_phase_complex_rate,
    three_phase_mimo_rate,
    three_phase_scalar_rate,
    tdma_rate,
)

app = FastAPI(
    title="twohop",
    description="Linear relaying schemes and DoF diagnostics for two-hop interference channels",
)


class ChannelModel(BaseModel):
    m: int
    field: str
    h1: list
    h2: list

    def to_pair(self) -> ChannelPair:
        return ChannelPair.from_json(self.model_dump())

    @classmethod
    def from_pair(cls, cp: ChannelPair) -> "ChannelModel":
        return cls(**json.loads(cp.to_json()))


class KernelModel(BaseModel):
    a: List[List[float]]
    b: List[List[float]]
    scale: float
    label: str = "custom"
    x_variant: Optional[str] = None

    def to_kernel(self) -> RelayKernel:
        return RelayKernel.from_json(self.model_dump())

    @classmethod
    def from_kernel(cls, k: RelayKernel) -> "KernelModel":
        return cls(**json.loads(k.to_json()))


class EnsembleRequest(BaseModel):
    m: int = 1
    r: float = 1.0
    seed: int = 0
    distribution: str = "uniform_phase"
    field: str = ""


class TopologyRequest(BaseModel):
    channel: ChannelModel
    topology: str
    mimo: bool = False


class TopologyResponse(BaseModel):
    kernel: KernelModel
    verification: dict


class RateRequest(BaseModel):
    channel: Optional[ChannelModel] = None
    scheme: str
    power_db: float


class RateResponse(BaseModel):
    scheme: str
    p: float
    r1: float
    r2: float
    sum_rate: float
    stream_noise_vars: List[float] = Field(default_factory=list)
    extras: dict = Field(default_factory=dict)


class VerifyRequest(BaseModel):
    channel: ChannelModel
    kernels: List[KernelModel]


class SimulateRequest(BaseModel):
    channel: ChannelModel
    kernels: Optional[List[KernelModel]] = None
    power_db: float = 30.0
    n_symbols: int = 100_000
    seed: int = 0


class SweepRequest(BaseModel):
    ensemble: EnsembleRequest
    schemes: List[str]
    p_grid_db: List[float]
    n_channels: int = 20
    seed: int = 0
    refine_budget: int = 500


class DofRequest(BaseModel):
    sweep: SweepRequest
    normalizer: str = "half-log2"
    window_db: List[float] = Field(default_factory=lambda: [50.0, 80.0])


def _wrap(fn):
    try:
        return fn()
    except TwoHopError as exc:
        raise HTTPException(status_code=422, detail=str(exc)) from exc


@app.get("/health")
def health():
    return {"status": "ok"}


@app.post("/channels/sample", response_model=ChannelModel)
def channels_sample(req: EnsembleRequest):
    spec = _wrap(
        lambda: EnsembleSpec(
            m=req.m, r=req.r, seed=req.seed,
            distribution=req.distribution, field=req.field,
        )
    )
    return ChannelModel.from_pair(_wrap(lambda: sample_ensemble(spec)))


@app.post("/kernels/topology", response_model=TopologyResponse)
def kernels_topology(req: TopologyRequest):
    cp = _wrap(req.channel.to_pair)
    work = augment(cp) if cp.field == COMPLEX else cp
    if req.topology not in PHASE_TOPOLOGIES:
        raise HTTPException(status_code=422, detail=f"unknown topology {req.topology!r}")

    def build():
        if req.mimo or work.m > 1:
            variant = "first_first" if cp.field == COMPLEX else "last_first"
            return mimo_kernels(work, variant)[req.topology]
        return scalar_kernel(work, req.topology)

    kernel = _wrap(build)
    return TopologyResponse(
        kernel=KernelModel.from_kernel(kernel),
        verification=_wrap(lambda: kernel_verification_report(work, kernel)),
    )


@app.post("/rates", response_model=RateResponse)
def rates(req: RateRequest):
    p = 10.0 ** (req.power_db / 10.0)
    if req.scheme == "tdma":
        report = _wrap(lambda: tdma_rate(p))
        return RateResponse(**report.to_dict())
    if req.channel is None:
        raise HTTPException(status_code=422, detail="scheme needs a channel")
    cp = _wrap(req.channel.to_pair)

    def compute():
        if req.scheme == "af":
            return af_rate(cp, p)
        if req.scheme == "fixed-af":
            return fixed_af_rate(cp, p)
        if req.scheme == "three-phase":
            if cp.field == COMPLEX:
                return three_phase_complex_rate(cp, p)
            if cp.m == 1:
                return three_phase_scalar_rate(cp, p)
            return three_phase_mimo_rate(cp, p)
        raise HTTPException(status_code=422, detail=f"unknown scheme {req.scheme!r}")

    return RateResponse(**_wrap(compute).to_dict())


@app.post("/verify")
def verify(req: VerifyRequest):
    cp = _wrap(req.channel.to_pair)
    work = augment(cp) if cp.field == COMPLEX else cp
    kernels = [_wrap(k.to_kernel) for k in req.kernels]

    def compute():
        if work.m == 1:
            residual = verify_decomposition(work, kernels)
        else:
            residual = max(
                mimo_decompose(
                    end_to_end(work, k).g11,
                    end_to_end(work, k).g12,
                    end_to_end(work, k).g21,
                ).residual
                for k in kernels
            )
        return {
            "decomposition_max_residual": residual,
            "dof_bounds": dof_upper_bound(work, kernels).to_dict(),
        }

    return _wrap(compute)


@app.post("/simulate")
def simulate(req: SimulateRequest):
    cp = _wrap(req.channel.to_pair)
    work = augment(cp) if cp.field == COMPLEX else cp

    def compute():
        if req.kernels:
            kernels = [k.to_kernel() for k in req.kernels]
        elif work.m == 1:
            kernels = [scalar_kernel(work, t) for t in PHASE_TOPOLOGIES]
        else:
            variant = "first_first" if cp.field == COMPLEX else "last_first"
            built = mimo_kernels(work, variant)
            kernels = [built[t] for t in PHASE_TOPOLOGIES]
        stats = simulate_transmission(
            work, kernels,
            p=10.0 ** (req.power_db / 10.0),
            n_symbols=req.n_symbols,
            seed=req.seed,
        )
        return {
            "n_symbols": stats.n_symbols,
            "empirical_stream_vars": list(stats.empirical_stream_vars),
            "interference_leakage": list(stats.interference_leakage),
            "relay_power_used": list(stats.relay_power_used),
        }

    return _wrap(compute)


def _sweep_config(req: SweepRequest) -> SweepConfig:
    return SweepConfig(
        ensemble=EnsembleSpec(
            m=req.ensemble.m,
            r=req.ensemble.r,
            seed=req.ensemble.seed,
            distribution=req.ensemble.distribution,
            field=req.ensemble.field,
        ),
        schemes=tuple(req.schemes),
        p_grid_db=tuple(req.p_grid_db),
        n_channels=req.n_channels,
        seed=req.seed,
        refine_budget=req.refine_budget,
    )


@app.post("/sweeps")
def sweeps(req: SweepRequest):
    cfg = _wrap(lambda: _sweep_config(req))
    return {"rows": _wrap(lambda: run_sweep(cfg))}


@app.post("/dof")
def dof(req: DofRequest):
    cfg = _wrap(lambda: _sweep_config(req.sweep))
    rows = _wrap(lambda: run_sweep(cfg))
    out = {}
    for label in cfg.schemes:
        scheme_rows = [r for r in rows if r["scheme"] == label]
        out[label] = _wrap(
            lambda rows=scheme_rows: fit_dof_slope(
                rows, normalizer=req.normalizer, window_db=tuple(req.window_db)
            ).to_dict()
        )
    return out
