"""Command-line interface.

Subcommands: sweep, dof, topology, verify, simulate, serve.  Channel and
kernel files use the JSON schemas of ChannelPair / RelayKernel; sweep
configs follow SweepConfig.from_json (see README).
"""

from __future__ import annotations

import argparse
import json
import sys

from .bench import SweepConfig, emit_results, fit_dof_slope, run_sweep
from .channel import COMPLEX, ChannelPair, augment
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
from .schemes import simulate_transmission


def _load_channel(path: str) -> ChannelPair:
    with open(path, encoding="utf-8") as fh:
        return ChannelPair.from_json(fh.read())


def _load_kernels(path: str):
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    if isinstance(data, dict):
        data = [data]
    return [RelayKernel.from_json(k) for k in data]


def cmd_sweep(args) -> int:
    with open(args.config, encoding="utf-8") as fh:
        cfg = SweepConfig.from_json(fh.read())
    rows = run_sweep(cfg)
    path = args.out or cfg.output_path
    text = emit_results(rows, fmt=args.format, path=path)
    if not path:
        sys.stdout.write(text)
    return 0


def cmd_dof(args) -> int:
    with open(args.config, encoding="utf-8") as fh:
        cfg = SweepConfig.from_json(fh.read())
    rows = run_sweep(cfg)
    lo, hi = (float(x) for x in args.window.split(":"))
    fits = {}
    for label in cfg.schemes:
        scheme_rows = [r for r in rows if r["scheme"] == label]
        fits[label] = fit_dof_slope(
            scheme_rows, normalizer=args.normalizer, window_db=(lo, hi)
        ).to_dict()
    json.dump(fits, sys.stdout, indent=2)
    sys.stdout.write("\n")
    return 0


def cmd_topology(args) -> int:
    cp = _load_channel(args.channel)
    work = augment(cp) if cp.field == COMPLEX else cp
    if args.mimo or work.m > 1:
        variant = "first_first" if cp.field == COMPLEX else "last_first"
        kernel = mimo_kernels(work, variant)[args.topology]
    else:
        kernel = scalar_kernel(work, args.topology)
    payload = {
        "kernel": json.loads(kernel.to_json()),
        "verification": kernel_verification_report(work, kernel),
    }
    json.dump(payload, sys.stdout, indent=2)
    sys.stdout.write("\n")
    return 0


def cmd_verify(args) -> int:
    cp = _load_channel(args.channel)
    kernels = _load_kernels(args.kernels)
    work = augment(cp) if cp.field == COMPLEX else cp
    payload = {}
    if work.m == 1:
        payload["decomposition_max_residual"] = verify_decomposition(work, kernels)
    else:
        residuals = []
        for k in kernels:
            e = end_to_end(work, k)
            residuals.append(mimo_decompose(e.g11, e.g12, e.g21).residual)
        payload["decomposition_max_residual"] = max(residuals)
    payload["dof_bounds"] = dof_upper_bound(work, kernels).to_dict()
    json.dump(payload, sys.stdout, indent=2)
    sys.stdout.write("\n")
    return 0


def cmd_simulate(args) -> int:
    cp = _load_channel(args.channel)
    work = augment(cp) if cp.field == COMPLEX else cp
    if args.kernels:
        kernels = _load_kernels(args.kernels)
    elif work.m == 1:
        kernels = [scalar_kernel(work, t) for t in PHASE_TOPOLOGIES]
    else:
        variant = "first_first" if cp.field == COMPLEX else "last_first"
        built = mimo_kernels(work, variant)
        kernels = [built[t] for t in PHASE_TOPOLOGIES]
    stats = simulate_transmission(
        work,
        kernels,
        p=10.0 ** (args.power_db / 10.0),
        n_symbols=args.symbols,
        seed=args.seed,
    )
    json.dump(
        {
            "n_symbols": stats.n_symbols,
            "empirical_stream_vars": list(stats.empirical_stream_vars),
            "interference_leakage": list(stats.interference_leakage),
            "relay_power_used": list(stats.relay_power_used),
        },
        sys.stdout,
        indent=2,
    )
    sys.stdout.write("\n")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import app

    uvicorn.run(app, host=args.host, port=args.port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="twohop",
        description="Two-hop interference channel relaying toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_sweep = sub.add_parser("sweep", help="Monte Carlo SNR sweep over an ensemble")
    p_sweep.add_argument("--config", required=True)
    p_sweep.add_argument("--format", choices=("csv", "json"), default="csv")
    p_sweep.add_argument("--out", default=None)
    p_sweep.set_defaults(func=cmd_sweep)

    p_dof = sub.add_parser("dof", help="run a sweep and fit DoF slopes")
    p_dof.add_argument("--config", required=True)
    p_dof.add_argument("--window", default="50:80")
    p_dof.add_argument(
        "--normalizer", choices=("half-log2", "log2"), default="half-log2"
    )
    p_dof.set_defaults(func=cmd_dof)

    p_topo = sub.add_parser("topology", help="construct a relaying kernel")
    p_topo.add_argument("--channel", required=True)
    p_topo.add_argument("--topology", choices=PHASE_TOPOLOGIES, required=True)
    p_topo.add_argument("--mimo", action="store_true")
    p_topo.set_defaults(func=cmd_topology)

    p_verify = sub.add_parser(
        "verify", help="decomposition residuals and rank bounds for kernels"
    )
    p_verify.add_argument("--channel", required=True)
    p_verify.add_argument("--kernels", required=True)
    p_verify.set_defaults(func=cmd_verify)

    p_sim = sub.add_parser("simulate", help="symbol-level Monte Carlo transmission")
    p_sim.add_argument("--channel", required=True)
    p_sim.add_argument("--kernels", default=None)
    p_sim.add_argument("--power-db", type=float, default=30.0)
    p_sim.add_argument("--symbols", type=int, default=1_000_000)
    p_sim.add_argument("--seed", type=int, default=0)
    p_sim.set_defaults(func=cmd_simulate)

    p_serve = sub.add_parser("serve", help="run the HTTP service")
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=int, default=8000)
    p_serve.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except TwoHopError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
