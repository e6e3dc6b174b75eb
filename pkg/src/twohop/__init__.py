"""Linear relaying toolkit for two-hop interference channels."""

from .channel import (
    ChannelPair,
    ConditionReport,
    EnsembleSpec,
    augment,
    check_scalar_conditions,
    modified_source_channels,
    sample_ensemble,
)
from .converse import (
    DecompositionCoefficients,
    DofBoundReport,
    decomposition_coefficients,
    dof_upper_bound,
    mimo_decompose,
    mimo_decompose_g22,
    verify_decomposition,
)
from .bench import (
    DofFit,
    SweepConfig,
    emit_results,
    fit_dof_slope,
    run_sweep,
)
from .linalg import (
    RankReport,
    eigen_separation,
    krylov_full_rank,
    rank_with_tolerance,
    solve_sylvester,
)
from .relaying import (
    EndToEndChannel,
    RelayKernel,
    end_to_end,
    kernel_verification_report,
    leak_matrix,
    mimo_kernel,
    mimo_kernels,
    noise_covariance,
    scalar_kernel,
)
from .schemes import (
    SchemeRateReport,
    TransmissionStats,
    af_rate,
    fixed_af_rate,
    refine_kernels,
    simulate_transmission,
    three_phase_complex_rate,
    three_phase_mi_rate,
    three_phase_mimo_rate,
    three_phase_scalar_rate,
    tdma_rate,
)

__version__ = "0.1.0"

__all__ = [
    "ChannelPair",
    "ConditionReport",
    "DecompositionCoefficients",
    "DofBoundReport",
    "DofFit",
    "EndToEndChannel",
    "EnsembleSpec",
    "RankReport",
    "RelayKernel",
    "SchemeRateReport",
    "SweepConfig",
    "TransmissionStats",
    "af_rate",
    "augment",
    "check_scalar_conditions",
    "decomposition_coefficients",
    "dof_upper_bound",
    "eigen_separation",
    "emit_results",
    "end_to_end",
    "fit_dof_slope",
    "fixed_af_rate",
    "kernel_verification_report",
    "krylov_full_rank",
    "leak_matrix",
    "mimo_decompose",
    "mimo_decompose_g22",
    "mimo_kernel",
    "mimo_kernels",
    "modified_source_channels",
    "noise_covariance",
    "rank_with_tolerance",
    "refine_kernels",
    "run_sweep",
    "sample_ensemble",
    "scalar_kernel",
    "simulate_transmission",
    "solve_sylvester",
    "three_phase_complex_rate",
    "three_phase_mi_rate",
    "three_phase_mimo_rate",
    "three_phase_scalar_rate",
    "tdma_rate",
    "verify_decomposition",
]
