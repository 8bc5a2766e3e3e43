"""Uplink achievable rate for wirelessly powered users, total energy
efficiency (EE), and the closed-form EE-optimal transmit power.

A user spends a fraction ``xi`` of its harvested energy on pilots and the
rest on uplink data; the base station detects with a zero-forcing filter.
EE is the uplink sum rate over the total consumed base-station power.  The
EE-optimal transmit power in the harvester's linear range has a closed form
in the principal-branch Lambert-W function; a clamping heuristic extends it
across the inactive and saturated ranges.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from . import model_core
from .model_core import (
    INACTIVE,
    LINEAR,
    SATURATED,
    DownlinkConfig,
    FrameConfig,
    HarvesterSpec,
    with_users,
)
from .power_pte import BsPowerModel

_LN2 = math.log(2.0)
_INV_E = math.exp(-1.0)


@dataclass(frozen=True)
class RateReport:
    """Per-user and sum uplink rate (bits/s) with the effective SNR inside the
    rate logarithm and the harvester mode that produced it."""

    per_user_rate: float
    sum_rate: float
    snr_effective: float
    mode: str


@dataclass(frozen=True)
class WitPowerBreakdown:
    """Consumption terms (W) during combined energy and information transfer."""

    p_tx: float
    p_fix: float
    p_ant: float
    p_ce: float
    p_lp_zf: float
    p_dec: float

    @property
    def total(self) -> float:
        return (
            self.p_tx + self.p_fix + self.p_ant + self.p_ce + self.p_lp_zf + self.p_dec
        )


@dataclass(frozen=True)
class EeReport:
    ee: float
    sum_rate: float
    p_total: float
    breakdown: WitPowerBreakdown


@dataclass(frozen=True)
class LambertConstants:
    """Constants of the closed-form EE-optimal transmit energy: the SNR slope
    per unit transmit energy (``rho_tilde``, 1/J), and the affine decomposition
    ``c_tilde + M * d_tilde`` (W) of the antenna-independent and per-antenna
    consumed power."""

    rho_tilde: float
    c_tilde: float
    d_tilde: float


def lambert_w0(x: float) -> float:
    """Principal branch of the Lambert-W function for real ``x >= -1/e``.

    Returns ``w >= -1`` with `w * exp(w) = x`` to a relative residual of
    1e-12.  Initialized with a branch-point series near ``-1/e`` and a
    log-log asymptote for large arguments, then polished with Halley steps.
    """
    if math.isnan(x):
        raise ValueError("lambert_w0 is undefined for NaN")
    if x < -_INV_E:
        if x < -_INV_E - 1e-12 * _INV_E:
            raise ValueError("lambert_w0 requires x >= -1/e on the real axis")
        x = -_INV_E
    if x == 0.0:
        return 0.0

    if x < -0.25:
        p = math.sqrt(2.0 * (math.e * x + 1.0))
        w = -1.0 + p * (1.0 - p * (1.0 / 3.0 - 11.0 / 72.0 * p))
    elif x < 3.0:
        w = x / (1.0 + x)  # crude but inside Halley's basin
    else:
        lx = math.log(x)
        w = lx - math.log(lx)

    for _ in range(64):
        ew = math.exp(w)
        f = w * ew - x
        if f == 0.0:
            break
        w1 = w + 1.0
        step = f / (ew * w1 - (w + 2.0) * f / (2.0 * w1))
        w -= step
        if abs(step) <= 1e-16 * (1.0 + abs(w)):
            break
    return w


def golden_section_max(f, lo: float, hi: float, tol: float = 1e-12, max_iter: int = 300):
    """Maximize a unimodal ``f`` on ``[lo, hi]``; returns ``(x, f(x))``.

    ``tol`` is relative on the argument.
    """
    inv_phi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - inv_phi * (b - a)
    d = a + inv_phi * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if abs(b - a) <= tol * (abs(a) + abs(b)):
            break
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - inv_phi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + inv_phi * (b - a)
            fd = f(d)
    x = 0.5 * (a + b)
    return x, f(x)


def uplink_snr_coefficient(
    frame: FrameConfig, cfg: DownlinkConfig, harv: HarvesterSpec, beta: float
) -> float:
    """Effective-SNR slope against the array factors in the linear harvester
    range: uplink SNR is this coefficient times ``(M - K) * (1 + (M-1)/K)``.

    Proportional to the transmit symbol energy and to the *square* of the
    large-scale gain (one factor from downlink charging, one from uplink
    detection).
    """
    return (
        (1.0 - cfg.xi)
        * cfg.p_dl
        * frame.alpha_wet
        * harv.eta_eh
        * harv.eta_pa_eh
        * beta**2
        / (frame.alpha_wit * frame.sigma2)
    )


def uplink_rate(
    M: int,
    K: int,
    frame: FrameConfig,
    cfg: DownlinkConfig,
    harv: HarvesterSpec,
    beta_i: float,
    i: int = 0,
    imperfect_csi: bool = False,
) -> RateReport:
    """Uplink achievable rate of a wirelessly powered user under zero-forcing
    detection (lower bound on the ergodic rate; requires ``K < M``).

    The user transmits with per-symbol energy
    ``eta_pa_eh * (1 - xi) * harvested / alpha_wit`` and the zero-forcing
    array gain contributes ``beta_i * (M - K)``.  Below activation the rate
    is zero; past saturation the harvested energy is pinned at the saturated
    value while the detection gain keeps growing with M.

    By default the harvested energy feeding the rate uses the perfect-CSI
    expression (channel-estimation loss in harvested power is a minor effect
    and is ignored here); ``imperfect_csi=True`` switches to the
    estimated-CSI pipeline for sensitivity studies.
    """
    if K >= M:
        raise ValueError("zero-forcing detection requires K < M")
    if frame.alpha_wit <= 0.0:
        raise ValueError("uplink rate needs a positive information-transfer fraction")
    eff = with_users(cfg, M, K)

    if imperfect_csi:
        report = model_core.harvested_imperfect(eff, frame, harv, beta_i, 0)
    else:
        report = model_core.harvested_perfect(eff, frame, harv, beta_i, 0)

    if report.mode == INACTIVE:
        return RateReport(0.0, 0.0, 0.0, INACTIVE)

    # harvested energy per data symbol -> transmit SNR -> ZF array gain
    delta = report.harvested
    snr = (
        (1.0 - eff.xi)
        * beta_i
        * harv.eta_pa_eh
        * delta
        * (M - K)
        / (frame.alpha_wit * frame.sigma2)
    )
    rate = frame.alpha_wit * frame.B * math.log2(1.0 + snr)
    return RateReport(rate, K * rate, snr, report.mode)


def low_snr_rate(M: int, K: int, rho: float, alpha_wit: float, B: float) -> float:
    """First-order (low-SNR) rate expansion in the linear harvester range.

    Valid while ``rho * (M - K) * (1 + (M-1)/K) <= 0.5``; there the exact
    rate is underestimated by at most ~25%.
    """
    x = rho * (M - K) * (1.0 + (M - 1.0) / K)
    if x > 0.5 + 1e-12:
        raise ValueError("low-SNR expansion valid only for SNR <= 0.5")
    return alpha_wit * B * x / _LN2


def bs_power_wit(
    M: int,
    K: int,
    frame: FrameConfig,
    pm: BsPowerModel,
    p_dl_watts: float,
    sum_rate: float,
) -> WitPowerBreakdown:
    """Power breakdown when uplink data reception is active.

    Linear processing adds the zero-forcing filter construction
    (``K**3/3 + 3*M*K**2 + M*K`` flops per block) and one filter-vector
    product per uplink data symbol; decoding costs ``p_dec`` per bit/s.
    """
    if M < 1 or K < 1:
        raise ValueError("M and K must be at least 1")
    blocks = frame.B / (frame.S * pm.kappa_bs)
    p_lp_zf = (
        3.0 * M * K * blocks
        + (K**3 / 3.0 + 3.0 * M * K**2 + M * K) * blocks
        + 2.0 * frame.alpha_wit * M * K * frame.B / pm.kappa_bs
    )
    return WitPowerBreakdown(
        p_tx=p_dl_watts / pm.eta_pa_bs,
        p_fix=pm.p_fix,
        p_ant=M * pm.p_bs,
        p_ce=2.0 * M * K * K * blocks,
        p_lp_zf=p_lp_zf,
        p_dec=pm.p_dec * sum_rate,
    )


def ee(
    M: int,
    K: int,
    frame: FrameConfig,
    pm: BsPowerModel,
    cfg: DownlinkConfig,
    harv: HarvesterSpec,
    beta: float,
    imperfect_csi: bool = False,
) -> EeReport:
    """Total energy efficiency (bits/joule): uplink sum rate over consumed
    base-station power.  The sum rate appears in both numerator and the
    decoder term of the denominator."""
    rr = uplink_rate(M, K, frame, cfg, harv, beta, 0, imperfect_csi)
    eff = with_users(cfg, M, K)
    breakdown = bs_power_wit(
        M, K, frame, pm, eff.transmit_power(frame), rr.sum_rate
    )
    total = breakdown.total
    return EeReport(rr.sum_rate / total, rr.sum_rate, total, breakdown)


def ee_at_transmit_power(
    M: int,
    K: int,
    frame: FrameConfig,
    pm: BsPowerModel,
    cfg: DownlinkConfig,
    harv: HarvesterSpec,
    beta: float,
    p_dl_watts: float,
) -> EeReport:
    """EE with the transmit power overridden (watts), other settings as ``cfg``."""
    p_dl = p_dl_watts / (frame.alpha_wet * frame.B)
    eff = DownlinkConfig.equal_split(M, K, p_dl, cfg.xi)
    return ee(M, K, frame, pm, eff, harv, beta)


def lambert_constants(
    K: int,
    frame: FrameConfig,
    pm: BsPowerModel,
    harv: HarvesterSpec,
    beta: float,
    xi: float,
) -> LambertConstants:
    """Constants entering the closed-form EE-optimal transmit energy."""
    rho_tilde = (
        (1.0 - xi)
        * frame.alpha_wet
        * harv.eta_eh
        * harv.eta_pa_eh
        * beta**2
        / (frame.alpha_wit * frame.sigma2)
    )
    kb = pm.kappa_bs
    c_tilde = pm.p_fix + frame.B * K**3 / (3.0 * frame.S * kb)
    d_tilde = (
        pm.p_bs
        + (2.0 * frame.B / kb) * (1.0 + 2.0 / frame.S) * K
        + (3.0 * frame.B / (frame.S * kb)) * K**2
    )
    return LambertConstants(rho_tilde, c_tilde, d_tilde)


def ee_optimal_pdl(
    M: int,
    K: int,
    frame: FrameConfig,
    pm: BsPowerModel,
    cfg: DownlinkConfig,
    harv: HarvesterSpec,
    beta: float,
) -> float:
    """Closed-form EE-optimal transmit power (watts) in the linear harvester
    range.

    The EE as a function of the transmit symbol energy z has the shape
    ``g*log(1+b*z) / (c + d*z + h*log(1+b*z))``, whose maximizer is
    ``(exp(1 + W[b*c/(d*e) - 1/e]) - 1) / b`` on the principal W branch.
    """
    if K >= M:
        raise ValueError("requires K < M")
    lc = lambert_constants(K, frame, pm, harv, beta, cfg.xi)
    gain = (M - K) * (1.0 + (M - 1.0) / K)
    b = lc.rho_tilde * gain
    arg = (
        pm.eta_pa_bs
        * lc.rho_tilde
        * (lc.c_tilde + M * lc.d_tilde)
        * gain
        / (math.e * frame.B * frame.alpha_wet)
        - 1.0 / math.e
    )
    p_star = (math.exp(1.0 + lambert_w0(arg)) - 1.0) / b
    return frame.alpha_wet * frame.B * p_star


def algorithm1_select_pdl(
    M: int,
    K: int,
    frame: FrameConfig,
    pm: BsPowerModel,
    cfg: DownlinkConfig,
    harv: HarvesterSpec,
    beta: float,
    strict_saturation: bool = False,
) -> float:
    """Transmit-power heuristic (watts) covering all harvester ranges.

    Starts from the linear-range closed form, then clamps: raise the power to
    the activation level when the candidate would leave harvesters off, or cap
    it near the saturation level when the array is large enough that extra
    power would be wasted.  The saturation cap divides by ``M + K + 1``
    (slightly conservative); ``strict_saturation=True`` uses the exact
    ``M + K - 1`` crossing instead.
    """
    a_b = frame.alpha_wet * frame.B
    p_act = K * harv.theta_act / (a_b * beta * (M + K - 1.0))
    sat_div = (M + K - 1.0) if strict_saturation else (M + K + 1.0)
    p_sat = K * harv.theta_sat / (a_b * beta * sat_div)

    p = ee_optimal_pdl(M, K, frame, pm, cfg, harv, beta) / a_b

    if math.isinf(harv.theta_sat):
        m_sat = math.inf
    else:
        m_sat = model_core.floor_snapped(
            K * harv.theta_sat / (a_b * beta * p) - (K - 1.0)
        )
    if M > m_sat:
        p = min(p_sat, p)
    else:
        p = max(p_act, p)
    return a_b * p


def ee_optimal_pdl_search(
    M: int,
    K: int,
    frame: FrameConfig,
    pm: BsPowerModel,
    cfg: DownlinkConfig,
    harv: HarvesterSpec,
    beta: float,
    lo_watts: float = 1e-6,
    hi_watts: float = 1e6,
    coarse_points: int = 121,
) -> tuple[float, float]:
    """Search-based EE-optimal transmit power: coarse log scan bracketing the
    peak followed by golden-section refinement.

    Independent of the closed form; EE is quasiconcave in the transmit power
    on the harvester's operating range, so the scan-then-refine combination
    converges.  Returns ``(p_dl_watts, ee)``.
    """

    def ee_of(p_watts: float) -> float:
        return ee_at_transmit_power(M, K, frame, pm, cfg, harv, beta, p_watts).ee

    ratio = (hi_watts / lo_watts) ** (1.0 / (coarse_points - 1))
    grid = [lo_watts * ratio**j for j in range(coarse_points)]
    values = [ee_of(p) for p in grid]
    best = max(range(coarse_points), key=values.__getitem__)
    lo = grid[max(best - 1, 0)]
    hi = grid[min(best + 1, coarse_points - 1)]
    return golden_section_max(ee_of, lo, hi)
