"""Achievable rates of the 3-phase schemes and baselines.

The 3-phase scheme cycles the S, Z and X topologies.  Each destination
collects 3N-1 interference-free streams over the three slots (N antennas per
node): the phase-3 block delivers the symbol that leaked during phase 2 of
the other user, which is then subtracted from the phase-2 observation, and
symmetrically for phase 1.  Per-stream effective noise variances depend only
on the channel and the kernels, never on the transmit power.

Stream order used throughout (analytic, simulated, and reported):
    destination 1: phase-1 streams (antenna order), phase-2 streams,
                   phase-3 fresh streams;
    destination 2: phase-2 streams, phase-3 fresh streams, phase-1 streams.

A 3-phase block spans three pipelined network uses, so a recovered stream
contributes (1/3) * (1/2) log2(1 + P_sym / sigma^2) bits per channel use;
the factor 1/2 is the real-Gaussian capacity prefactor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field

import numpy as np
from scipy import optimize

from .channel import (
    COMPLEX,
    FIRST_FIRST,
    LAST_FIRST,
    REAL,
    ChannelPair,
    ZERO_TOL,
    augment,
    scalar_gains,
)
from .exceptions import (
    ConditionViolationError,
    InfeasibleStartError,
    ShapeMismatchError,
)
from .relaying import (
    PHASE_TOPOLOGIES,
    RelayKernel,
    end_to_end,
    mimo_kernels,
    noise_covariance,
    scalar_kernel,
    x_end_to_end_blocks,
)

LOG2 = math.log(2.0)


@dataclass(frozen=True)
class SchemeRateReport:
    """Per-destination rates of one scheme at one transmit power."""

    scheme: str
    p: float
    r1: float
    r2: float
    sum_rate: float
    stream_noise_vars: tuple = ()
    extras: dict = dc_field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "scheme": self.scheme,
            "p": self.p,
            "r1": self.r1,
            "r2": self.r2,
            "sum_rate": self.sum_rate,
            "stream_noise_vars": list(self.stream_noise_vars),
            "extras": self.extras,
        }


@dataclass(frozen=True)
class TransmissionStats:
    """Empirical summary of a symbol-level Monte Carlo run."""

    n_symbols: int
    empirical_stream_vars: tuple
    interference_leakage: tuple
    relay_power_used: tuple  # (u, v) per phase, flattened


def _rate_from_vars(p_sym: float, noise_vars) -> float:
    return sum(math.log2(1.0 + p_sym / v) for v in noise_vars) / 6.0


def _phase_noise_covs(cp: ChannelPair, kernel: RelayKernel):
    """Effective-noise covariance blocks at the two destinations."""
    cov = noise_covariance(cp, kernel)
    n = cp.m
    return cov[:n, :n], cov[n:, n:]


# ---------------------------------------------------------------------------
# single-antenna scheme
# ---------------------------------------------------------------------------

def scalar_stream_noise_vars(cp: ChannelPair, kernels):
    """Per-stream noise variances of the 3-phase single-antenna scheme.

    Destination 1 reads its phase-1 symbol directly, solves the phase-3
    observation for the other user's phase-2 symbol using the phase-1
    estimate, and subtracts it from phase 2; destination 2 mirrors this.
    """
    gs = [end_to_end(cp, k) for k in kernels]
    g11 = [e.g11.item() for e in gs]
    g12 = [e.g12.item() for e in gs]
    g21 = [e.g21.item() for e in gs]
    g22 = [e.g22.item() for e in gs]
    v1 = [_phase_noise_covs(cp, k)[0].item() for k in kernels]
    v2 = [_phase_noise_covs(cp, k)[1].item() for k in kernels]

    for name, val in (
        ("g11 phase1", g11[0]), ("g11 phase2", g11[1]), ("g12 phase3", g12[2]),
        ("g22 phase1", g22[0]), ("g22 phase2", g22[1]), ("g21 phase3", g21[2]),
    ):
        if abs(val) <= ZERO_TOL:
            raise ConditionViolationError(f"{name} is numerically zero")

    sigma_a1 = v1[0] / g11[0] ** 2
    sigma_a2 = (
        v1[1]
        + (g12[1] / g12[2]) ** 2 * v1[2]
        + (g12[1] * g11[2] / (g12[2] * g11[0])) ** 2 * v1[0]
    ) / g11[1] ** 2
    sigma_b2 = v2[1] / g22[1] ** 2
    sigma_b1 = (
        v2[0]
        + (g21[0] / g21[2]) ** 2 * v2[2]
        + (g21[0] * g22[2] / (g21[2] * g22[1])) ** 2 * v2[1]
    ) / g22[0] ** 2
    return [sigma_a1, sigma_a2], [sigma_b2, sigma_b1]


def three_phase_scalar_rate(cp: ChannelPair, p: float) -> SchemeRateReport:
    """Analytic rate of the 3-phase scheme on an m=1 real channel."""
    if p <= 0:
        raise ValueError("power must be positive")
    kernels = [scalar_kernel(cp, t) for t in PHASE_TOPOLOGIES]
    d1_vars, d2_vars = scalar_stream_noise_vars(cp, kernels)
    r1 = _rate_from_vars(p, d1_vars)
    r2 = _rate_from_vars(p, d2_vars)
    return SchemeRateReport(
        scheme="three-phase-scalar",
        p=p,
        r1=r1,
        r2=r2,
        sum_rate=r1 + r2,
        stream_noise_vars=tuple(d1_vars + d2_vars),
    )


# ---------------------------------------------------------------------------
# multi-antenna scheme
# ---------------------------------------------------------------------------

def _x_slots(n: int, variant: str):
    """Index of the repeated symbol inside each phase-3 group.

    Group 1 carries the fresh symbols of user 1 plus user 2's repeated
    phase-2 symbol at `b_slot`; group 2 carries user 1's repeated phase-1
    symbol at slot 0 plus user 2's fresh symbols.
    """
    b_slot = n - 1 if variant == LAST_FIRST else 0
    return b_slot


def mimo_stream_noise_vars(cp: ChannelPair, kernels):
    """Per-stream noise variances of the 3-phase multi-antenna scheme.

    `kernels` is the (S, Z, X) triple.  Covariances propagate through the
    exact inverse/subtraction chain; noises of different phases are
    independent, so subtracted estimates add their variance through the leak
    coefficient.
    """
    n = cp.m
    k_s, k_z, k_x = kernels
    variant = k_x.x_variant or LAST_FIRST
    b_slot = _x_slots(n, variant)

    e_s = end_to_end(cp, k_s)
    e_z = end_to_end(cp, k_z)
    g11x, _, _, g22x = x_end_to_end_blocks(cp, k_x)

    s1_1, s1_2 = _phase_noise_covs(cp, k_s)
    s2_1, s2_2 = _phase_noise_covs(cp, k_z)
    s3_1, s3_2 = _phase_noise_covs(cp, k_x)

    w_s = np.linalg.inv(e_s.g11)
    w_z = np.linalg.inv(e_z.g11)
    w_x = np.linalg.inv(g11x)

    # destination 1: phase 1 direct, phase 3 direct, phase 2 after cleanup
    c1 = w_s @ s1_1 @ w_s.T
    c3 = w_x @ s3_1 @ w_x.T
    v_b = c3[b_slot, b_slot]
    leak2 = np.zeros((n, n))
    leak2[n - 1, n - 1] = k_z.scale**2 * v_b  # phase-2 leak arrives at antenna n
    c2 = w_z @ (s2_1 + leak2) @ w_z.T
    d1_vars = (
        list(np.diag(c1))
        + list(np.diag(c2))
        + [c3[i, i] for i in range(n) if i != b_slot]
    )

    # destination 2: phase 2 direct, phase 3 after cleanup, phase 1 after cleanup
    u_z = np.linalg.inv(e_z.g22)
    u_x = np.linalg.inv(g22x)
    u_s = np.linalg.inv(e_s.g22)
    d2_c2 = u_z @ s2_2 @ u_z.T
    w_b = d2_c2[0, 0]
    leak3 = np.zeros((n, n))
    leak3[0, 0] = k_x.scale**2 * w_b  # phase-3 leak arrives at antenna 1
    d2_c3 = u_x @ (s3_2 + leak3) @ u_x.T
    w_a = d2_c3[0, 0]
    leak1 = np.zeros((n, n))
    leak1[0, 0] = k_s.scale**2 * w_a  # phase-1 leak arrives at antenna 1
    d2_c1 = u_s @ (s1_2 + leak1) @ u_s.T
    d2_vars = (
        list(np.diag(d2_c2))
        + [d2_c3[i, i] for i in range(1, n)]
        + list(np.diag(d2_c1))
    )
    return [float(v) for v in d1_vars], [float(v) for v in d2_vars]


def three_phase_mimo_rate(
    cp: ChannelPair, p: float, x_variant: str = LAST_FIRST
) -> SchemeRateReport:
    """Analytic rate of the 3-phase scheme on a real multi-antenna channel.

    Per-antenna symbol power is P/m.  For m=1 this is the single-antenna
    scheme and delegates to it.
    """
    if p <= 0:
        raise ValueError("power must be positive")
    if cp.m == 1:
        base = three_phase_scalar_rate(cp, p)
        return SchemeRateReport(
            scheme="three-phase-mimo",
            p=p,
            r1=base.r1,
            r2=base.r2,
            sum_rate=base.sum_rate,
            stream_noise_vars=base.stream_noise_vars,
        )
    kernels = [mimo_kernels(cp, x_variant)[t] for t in PHASE_TOPOLOGIES]
    d1_vars, d2_vars = mimo_stream_noise_vars(cp, kernels)
    p_sym = p / cp.m
    r1 = _rate_from_vars(p_sym, d1_vars)
    r2 = _rate_from_vars(p_sym, d2_vars)
    return SchemeRateReport(
        scheme="three-phase-mimo",
        p=p,
        r1=r1,
        r2=r2,
        sum_rate=r1 + r2,
        stream_noise_vars=tuple(d1_vars + d2_vars),
    )


def three_phase_complex_rate(cp: ChannelPair, p: float) -> SchemeRateReport:
    """3-phase scheme on a complex channel via its real augmented view.

    Power splits evenly over the 2m real dimensions; rates are already per
    complex channel use, so the high-SNR slope is read against log2(P).
    """
    if cp.field != COMPLEX:
        raise ShapeMismatchError("three_phase_complex_rate expects a complex channel")
    base = three_phase_mimo_rate(augment(cp), p, x_variant=FIRST_FIRST)
    return SchemeRateReport(
        scheme="three-phase-complex",
        p=p,
        r1=base.r1,
        r2=base.r2,
        sum_rate=base.sum_rate,
        stream_noise_vars=base.stream_noise_vars,
    )


# ---------------------------------------------------------------------------
# baselines
# ---------------------------------------------------------------------------

def tdma_rate(p: float) -> SchemeRateReport:
    """Time sharing through the relays: sum rate log2(1+P), split evenly."""
    if p <= 0:
        raise ValueError("power must be positive")
    total = math.log2(1.0 + p)
    return SchemeRateReport(
        scheme="tdma", p=p, r1=total / 2, r2=total / 2, sum_rate=total
    )


def af_rate(cp: ChannelPair, p: float) -> SchemeRateReport:
    """Best fixed complex amplify-forward pair, interference treated as noise.

    Maximizes
        log2(1 + |g11|^2 P / (|g12|^2 P + |a|^2 + |b|^2 + 1))
      + log2(1 + |g22|^2 P / (|g21|^2 P + |a|^2 + |b|^2 + 1))
    over |a|, |b| <= sqrt(P/(P+1)), with g_ij = h_sju h_udi a + h_sjv h_vdi b.
    The objective only sees |g_ij|, so a global phase is free and `a` can be
    taken real nonnegative.  Heuristic: dense polar grid, then a local
    simplex polish; not certified global.
    """
    if cp.m != 1 or cp.field != COMPLEX:
        raise ShapeMismatchError("af_rate expects an m=1 complex channel")
    if p <= 0:
        raise ValueError("power must be positive")
    c11u, c11v = (cp.s1u * cp.ud1).item(), (cp.s1v * cp.vd1).item()
    c12u, c12v = (cp.s2u * cp.ud1).item(), (cp.s2v * cp.vd1).item()
    c21u, c21v = (cp.s1u * cp.ud2).item(), (cp.s1v * cp.vd2).item()
    c22u, c22v = (cp.s2u * cp.ud2).item(), (cp.s2v * cp.vd2).item()
    r_max = math.sqrt(p / (p + 1.0))

    def rates(alpha, beta):
        g11 = c11u * alpha + c11v * beta
        g12 = c12u * alpha + c12v * beta
        g21 = c21u * alpha + c21v * beta
        g22 = c22u * alpha + c22v * beta
        den = np.abs(alpha) ** 2 + np.abs(beta) ** 2 + 1.0
        t1 = np.log2(1.0 + np.abs(g11) ** 2 * p / (np.abs(g12) ** 2 * p + den))
        t2 = np.log2(1.0 + np.abs(g22) ** 2 * p / (np.abs(g21) ** 2 * p + den))
        return t1, t2

    mags = np.linspace(0.0, r_max, 16)
    phases = np.linspace(0.0, 2.0 * np.pi, 64, endpoint=False)
    alpha_grid, beta_grid = np.broadcast_arrays(
        mags[:, None, None].astype(complex),
        mags[None, :, None] * np.exp(1j * phases[None, None, :]),
    )
    t1, t2 = rates(alpha_grid, beta_grid)
    idx = np.unravel_index(np.argmax(t1 + t2), t1.shape)
    best = (float(mags[idx[0]]), complex(mags[idx[1]] * np.exp(1j * phases[idx[2]])))

    def neg_obj(x):
        a = min(max(x[0], 0.0), r_max)
        b = complex(x[1], x[2])
        if abs(b) > r_max:
            b *= r_max / abs(b)
        u1, u2 = rates(a, b)
        return -(u1 + u2)

    res = optimize.minimize(
        neg_obj,
        x0=[best[0], best[1].real, best[1].imag],
        method="Nelder-Mead",
        options={"maxfev": 400, "xatol": 1e-10, "fatol": 1e-12},
    )
    a_opt = min(max(res.x[0], 0.0), r_max)
    b_opt = complex(res.x[1], res.x[2])
    if abs(b_opt) > r_max:
        b_opt *= r_max / abs(b_opt)
    r1, r2 = rates(a_opt, b_opt)
    r1, r2 = float(r1), float(r2)
    return SchemeRateReport(
        scheme="af",
        p=p,
        r1=r1,
        r2=r2,
        sum_rate=r1 + r2,
        extras={"alpha": [a_opt, 0.0], "beta": [b_opt.real, b_opt.imag]},
    )


def fixed_af_kernel(cp: ChannelPair) -> RelayKernel:
    """Time-invariant scalar pair, equal coefficients, power normalized."""
    if cp.m != 1 or cp.field != REAL:
        raise ShapeMismatchError("fixed AF kernel needs an m=1 real channel")
    s1u, s1v, s2u, s2v, *_ = scalar_gains(cp)
    c0 = min(
        math.sqrt(1.0 / (s1u**2 + s2u**2 + 1.0)),
        math.sqrt(1.0 / (s1v**2 + s2v**2 + 1.0)),
    )
    return RelayKernel(a=[[c0]], b=[[c0]], scale=c0, label="custom")


def fixed_af_rate(cp: ChannelPair, p: float) -> SchemeRateReport:
    """Time-invariant scalar relaying with source time sharing.

    The fixed kernel turns the network into a static end-to-end channel;
    alternating the sources then yields the 1-DoF rate
    sum = (1/4)(log2(1+g11^2 P/v1) + log2(1+g22^2 P/v2)).
    """
    if p <= 0:
        raise ValueError("power must be positive")
    kern = fixed_af_kernel(cp)
    e = end_to_end(cp, kern)
    v1, v2 = _phase_noise_covs(cp, kern)
    s1 = v1.item() / e.g11.item() ** 2
    s2 = v2.item() / e.g22.item() ** 2
    r1 = 0.25 * math.log2(1.0 + p / s1)
    r2 = 0.25 * math.log2(1.0 + p / s2)
    return SchemeRateReport(
        scheme="fixed-af",
        p=p,
        r1=r1,
        r2=r2,
        sum_rate=r1 + r2,
        stream_noise_vars=(s1, s2),
    )


# ---------------------------------------------------------------------------
# stacked-observation mutual information and kernel refinement
# ---------------------------------------------------------------------------

def _phase_selectors(n: int, variant: str):
    """Symbol-to-antenna placement per phase as selector matrices.

    Users transmit 3n-1 symbols each, laid out [phase-1 block (n),
    phase-2 block (n), phase-3 fresh block (n-1)].  Phase 3 repeats user 1's
    phase-1 symbol n and user 2's phase-2 symbol 1 on the traded antennas.
    """
    n_sym = 3 * n - 1
    sel1 = [np.zeros((n, n_sym)) for _ in range(3)]
    sel2 = [np.zeros((n, n_sym)) for _ in range(3)]
    for i in range(n):
        sel1[0][i, i] = 1.0
        sel2[0][i, i] = 1.0
        sel1[1][i, n + i] = 1.0
        sel2[1][i, n + i] = 1.0
    if variant == LAST_FIRST:
        for i in range(n - 1):
            sel1[2][i, 2 * n + i] = 1.0  # fresh user-1 symbols on antennas 1..n-1
        sel1[2][n - 1, n - 1] = 1.0      # repeated phase-1 symbol on antenna n
    else:
        sel1[2][0, n - 1] = 1.0          # repeated phase-1 symbol on antenna 1
        for i in range(1, n):
            sel1[2][i, 2 * n + i - 1] = 1.0
    sel2[2][0, n] = 1.0                  # repeated phase-2 symbol on antenna 1
    for i in range(1, n):
        sel2[2][i, 2 * n + i - 1] = 1.0
    return sel1, sel2


def three_phase_mi_rate(
    cp: ChannelPair, kernels, p: float, x_variant: str = LAST_FIRST
) -> SchemeRateReport:
    """Gaussian mutual information of the stacked 3-phase observation model.

    Valid for arbitrary kernels (no topology structure assumed); with the
    constructed kernels it upper-bounds the per-stream rate, since the
    stream decoder is one particular receiver.
    """
    if cp.field != REAL:
        raise ShapeMismatchError("mutual information runs on real channels")
    n = cp.m
    variant = kernels[2].x_variant or x_variant
    sel1, sel2 = _phase_selectors(n, variant)
    p_sym = p / n

    rates = []
    for dest in (1, 2):
        f1_rows, f2_rows, noise_blocks = [], [], []
        for k, kern in enumerate(kernels):
            e = end_to_end(cp, kern)
            gi1 = e.g11 if dest == 1 else e.g21
            gi2 = e.g12 if dest == 1 else e.g22
            f1_rows.append(gi1 @ sel1[k])
            f2_rows.append(gi2 @ sel2[k])
            noise_blocks.append(_phase_noise_covs(cp, kern)[dest - 1])
        f1 = np.vstack(f1_rows)
        f2 = np.vstack(f2_rows)
        xi = np.zeros((3 * n, 3 * n))
        for k in range(3):
            xi[k * n : (k + 1) * n, k * n : (k + 1) * n] = noise_blocks[k]
        own, other = (f1, f2) if dest == 1 else (f2, f1)
        cov_full = p_sym * (own @ own.T + other @ other.T) + xi
        cov_cond = p_sym * (other @ other.T) + xi
        _, ld_full = np.linalg.slogdet(cov_full)
        _, ld_cond = np.linalg.slogdet(cov_cond)
        # bits per network use: the 3-phase block spans 3 pipelined slots
        rates.append(0.5 * (ld_full - ld_cond) / LOG2 / 3.0)

    return SchemeRateReport(
        scheme="three-phase-mi",
        p=p,
        r1=rates[0],
        r2=rates[1],
        sum_rate=rates[0] + rates[1],
    )


def _power_caps(cp: ChannelPair, p: float):
    nu = np.linalg.norm(cp.s1u, 2) ** 2 + np.linalg.norm(cp.s2u, 2) ** 2
    nv = np.linalg.norm(cp.s1v, 2) ** 2 + np.linalg.norm(cp.s2v, 2) ** 2
    return math.sqrt(p / (nu * p + 1.0)), math.sqrt(p / (nv * p + 1.0))


def _project_kernel(kern: RelayKernel, cap_a: float, cap_b: float) -> RelayKernel:
    a, b = np.array(kern.a), np.array(kern.b)
    na, nb = np.linalg.norm(a, 2), np.linalg.norm(b, 2)
    if na > cap_a:
        a *= cap_a / na
    if nb > cap_b:
        b *= cap_b / nb
    return RelayKernel(a=a, b=b, scale=kern.scale, label=kern.label, x_variant=kern.x_variant)


class _BudgetExhausted(Exception):
    pass


def refine_kernels(cp: ChannelPair, kernels, p: float, budget: int = 500):
    """Local improvement of the 3-phase kernels at finite power.

    Hill-climbs the stacked-observation mutual information inside the relay
    power set (spectral-norm balls, enforced by projection): a per-phase
    scale line search toward the power boundary seeds a quasi-Newton ascent
    with finite-difference gradients.  The returned objective never falls
    below the initial one; `budget` caps objective evaluations, and budget
    0 returns the inputs unchanged.  Deterministic for fixed inputs.
    """
    if budget < 0:
        raise ValueError("budget must be >= 0")
    cap_a, cap_b = _power_caps(cp, p)
    for kern in kernels:
        if (
            np.linalg.norm(kern.a, 2) > cap_a * (1 + 1e-9)
            or np.linalg.norm(kern.b, 2) > cap_b * (1 + 1e-9)
        ):
            raise InfeasibleStartError("initial kernels violate the relay power set")

    variant = kernels[2].x_variant or LAST_FIRST
    n = cp.m
    labels = [(k.label, k.x_variant, k.scale) for k in kernels]

    def unpack(x):
        out = []
        for k in range(3):
            base = 2 * k * n * n
            a = x[base : base + n * n].reshape(n, n)
            b = x[base + n * n : base + 2 * n * n].reshape(n, n)
            label, xv, scale = labels[k]
            out.append(
                _project_kernel(
                    RelayKernel(a=a, b=b, scale=scale, label=label, x_variant=xv),
                    cap_a,
                    cap_b,
                )
            )
        return out

    def pack(kerns):
        return np.concatenate(
            [np.concatenate([np.asarray(k.a).ravel(), np.asarray(k.b).ravel()]) for k in kerns]
        )

    if budget == 0:
        return list(kernels), three_phase_mi_rate(cp, kernels, p, x_variant=variant).sum_rate

    evals = 0
    best_val = -np.inf
    best_x = pack(kernels)

    def neg_objective(x):
        nonlocal evals, best_val, best_x
        if evals >= budget:
            raise _BudgetExhausted()
        evals += 1
        val = three_phase_mi_rate(cp, unpack(x), p, x_variant=variant).sum_rate
        if val > best_val:
            best_val = val
            best_x = np.array(x, copy=True)
        return -val

    try:
        neg_objective(pack(kernels))
        # per-phase joint rescale toward the power boundary
        for k in range(3):
            t_a = np.linalg.norm(kernels[k].a, 2)
            t_b = np.linalg.norm(kernels[k].b, 2)
            t_max = min(
                cap_a / t_a if t_a > 0 else np.inf,
                cap_b / t_b if t_b > 0 else np.inf,
            )
            if not np.isfinite(t_max):
                continue
            for frac in (1.0, 0.8, 0.6, 0.4, 0.2):
                cand = unpack(best_x)
                cand[k] = RelayKernel(
                    a=frac * t_max * np.asarray(kernels[k].a),
                    b=frac * t_max * np.asarray(kernels[k].b),
                    scale=labels[k][2],
                    label=labels[k][0],
                    x_variant=labels[k][1],
                )
                neg_objective(pack(cand))
        # quasi-Newton polish with numerical gradients
        optimize.minimize(
            neg_objective,
            best_x,
            method="L-BFGS-B",
            options={"maxfun": budget, "eps": 1e-6, "ftol": 1e-12, "gtol": 1e-10},
        )
    except _BudgetExhausted:
        pass
    return unpack(best_x), best_val


# ---------------------------------------------------------------------------
# symbol-level Monte Carlo
# ---------------------------------------------------------------------------

def _push_phase(cp, kern, x1, x2, rng, noise_scale):
    """One phase through both hops with fresh unit noise everywhere."""
    n, cnt = x1.shape
    zu = noise_scale * rng.standard_normal((n, cnt))
    zv = noise_scale * rng.standard_normal((n, cnt))
    z1 = noise_scale * rng.standard_normal((n, cnt))
    z2 = noise_scale * rng.standard_normal((n, cnt))
    yu = cp.s1u @ x1 + cp.s2u @ x2 + zu
    yv = cp.s1v @ x1 + cp.s2v @ x2 + zv
    xu = kern.a @ yu
    xv = kern.b @ yv
    y1 = cp.ud1 @ xu + cp.vd1 @ xv + z1
    y2 = cp.ud2 @ xu + cp.vd2 @ xv + z2
    pu = float(np.mean(np.sum(xu**2, axis=0)))
    pv = float(np.mean(np.sum(xv**2, axis=0)))
    return y1, y2, pu, pv


def _leakage(residuals, others):
    """Max squared correlation of each residual row against the other user's symbols."""
    out = []
    o = others - others.mean(axis=1, keepdims=True)
    o_norm = np.sqrt(np.sum(o**2, axis=1))
    for row in residuals:
        r = row - row.mean()
        r_norm = np.sqrt(np.sum(r**2))
        if r_norm < 1e-300:
            out.append(0.0)
            continue
        corr = (o @ r) / (o_norm * r_norm + 1e-300)
        out.append(float(np.max(corr**2)))
    return out


def simulate_transmission(
    cp: ChannelPair,
    kernels,
    p: float,
    n_symbols: int,
    seed: int = 0,
    noise_scale: float = 1.0,
) -> TransmissionStats:
    """Push Gaussian symbols through hop 1, the kernels, and hop 2, decode
    with the exact chain, and report empirical stream noise variances,
    cross-user leakage and relay power use.

    `n_symbols` counts independent 3-phase rounds.  The kernels decide the
    chain: scalar-style triples (m=1, no swap variant on the third kernel)
    use the single-antenna decoding, anything else the multi-antenna one.
    """
    if n_symbols < 1:
        raise ValueError("n_symbols must be >= 1")
    if cp.field != REAL:
        raise ShapeMismatchError("simulation runs on real channels; augment first")
    if len(kernels) != 3 or any(k.n != cp.m for k in kernels):
        raise ShapeMismatchError("need three kernels matching the antenna count")
    rng = np.random.default_rng(seed)
    n = cp.m
    cnt = int(n_symbols)
    p_sym = p / n
    amp = math.sqrt(p_sym)

    scalar_chain = n == 1 and kernels[2].x_variant is None
    gs = [end_to_end(cp, k) for k in kernels]

    if scalar_chain:
        a1 = amp * rng.standard_normal((1, cnt))
        b1 = amp * rng.standard_normal((1, cnt))
        a2 = amp * rng.standard_normal((1, cnt))
        b2 = amp * rng.standard_normal((1, cnt))
        y11, y21, pu1, pv1 = _push_phase(cp, kernels[0], a1, b1, rng, noise_scale)
        y12, y22, pu2, pv2 = _push_phase(cp, kernels[1], a2, b2, rng, noise_scale)
        y13, y23, pu3, pv3 = _push_phase(cp, kernels[2], a1, b2, rng, noise_scale)
        g11 = [e.g11.item() for e in gs]
        g12 = [e.g12.item() for e in gs]
        g21 = [e.g21.item() for e in gs]
        g22 = [e.g22.item() for e in gs]
        a1_hat = y11 / g11[0]
        b2_from3 = (y13 - g11[2] * a1_hat) / g12[2]
        a2_hat = (y12 - g12[1] * b2_from3) / g11[1]
        b2_hat = y22 / g22[1]
        a1_from3 = (y23 - g22[2] * b2_hat) / g21[2]
        b1_hat = (y21 - g21[0] * a1_from3) / g22[0]
        res_d1 = np.vstack([a1_hat - a1, a2_hat - a2])
        res_d2 = np.vstack([b2_hat - b2, b1_hat - b1])
        others_d1 = np.vstack([b1, b2])
        others_d2 = np.vstack([a1, a2])
        powers = (pu1, pv1, pu2, pv2, pu3, pv3)
    else:
        variant = kernels[2].x_variant or LAST_FIRST
        b_slot = _x_slots(n, variant)
        a1 = amp * rng.standard_normal((n, cnt))
        b1 = amp * rng.standard_normal((n, cnt))
        a2 = amp * rng.standard_normal((n, cnt))
        b2 = amp * rng.standard_normal((n, cnt))
        a3 = amp * rng.standard_normal((n - 1, cnt))
        b3 = amp * rng.standard_normal((n - 1, cnt))
        a_rep = a1[n - 1 : n]
        b_rep = b2[0:1]
        if variant == LAST_FIRST:
            x1_p3 = np.vstack([a3, a_rep])
        else:
            x1_p3 = np.vstack([a_rep, a3])
        x2_p3 = np.vstack([b_rep, b3])
        y11, y21, pu1, pv1 = _push_phase(cp, kernels[0], a1, b1, rng, noise_scale)
        y12, y22, pu2, pv2 = _push_phase(cp, kernels[1], a2, b2, rng, noise_scale)
        y13, y23, pu3, pv3 = _push_phase(cp, kernels[2], x1_p3, x2_p3, rng, noise_scale)

        g11x, _, _, g22x = x_end_to_end_blocks(cp, kernels[2])
        t_s, t_z, t_x = (k.scale for k in kernels)

        # destination 1
        a1_hat = np.linalg.solve(gs[0].g11, y11)
        xt1_hat = np.linalg.solve(g11x, y13)
        b_rep_hat = xt1_hat[b_slot : b_slot + 1]
        y12_clean = y12.copy()
        y12_clean[n - 1 : n] -= t_z * b_rep_hat
        a2_hat = np.linalg.solve(gs[1].g11, y12_clean)
        a3_hat = np.delete(xt1_hat, b_slot, axis=0)
        a3_truth = a3

        # destination 2
        b2_hat = np.linalg.solve(gs[1].g22, y22)
        y23_clean = y23.copy()
        y23_clean[0:1] -= t_x * b2_hat[0:1]
        xt2_hat = np.linalg.solve(g22x, y23_clean)
        y21_clean = y21.copy()
        y21_clean[0:1] -= t_s * xt2_hat[0:1]
        b1_hat = np.linalg.solve(gs[0].g22, y21_clean)
        b3_hat = xt2_hat[1:]

        res_d1 = np.vstack([a1_hat - a1, a2_hat - a2, a3_hat - a3_truth])
        res_d2 = np.vstack([b2_hat - b2, b3_hat - b3, b1_hat - b1])
        others_d1 = np.vstack([b1, b2, b3])
        others_d2 = np.vstack([a1, a2, a3])
        powers = (pu1, pv1, pu2, pv2, pu3, pv3)

    stream_vars = [float(np.mean(r**2)) for r in res_d1] + [
        float(np.mean(r**2)) for r in res_d2
    ]
    leakage = _leakage(res_d1, others_d1) + _leakage(res_d2, others_d2)
    return TransmissionStats(
        n_symbols=cnt,
        empirical_stream_vars=tuple(stream_vars),
        interference_leakage=tuple(leakage),
        relay_power_used=powers,
    )
