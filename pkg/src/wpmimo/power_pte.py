"""Base-station power consumption for energy-transfer-only operation and
power-transfer-efficiency (PTE) optimization over antennas and users.

PTE is the total harvested user power divided by the total consumed
base-station power.  The consumption model scales with the array size and
user count: a fixed term, a per-RF-chain term, and computational terms for
channel estimation and precoding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from . import model_core
from .model_core import (
    DownlinkConfig,
    FrameConfig,
    HarvesterSpec,
    with_users,
)


@dataclass(frozen=True)
class BsPowerModel:
    """Scalable base-station power consumption.

    ``p_fix`` fixed overhead (W); ``p_bs`` per-RF-chain circuit power (W);
    ``kappa_bs`` computational efficiency (flops/W); ``eta_pa_bs`` transmit
    power-amplifier efficiency; ``p_dec`` decoder power per decoded bit/s
    (only the information-transfer path consumes it).
    """

    p_fix: float
    p_bs: float
    kappa_bs: float
    eta_pa_bs: float
    p_dec: float

    def __post_init__(self):
        for name in ("p_fix", "p_bs", "kappa_bs", "eta_pa_bs", "p_dec"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be positive")
        if self.eta_pa_bs >= 1.0:
            raise ValueError("eta_pa_bs must be below 1")


@dataclass(frozen=True)
class WetPowerBreakdown:
    """Consumption terms (W) during energy-transfer-only operation."""

    p_tx: float
    p_fix: float
    p_ant: float
    p_ce: float
    p_lp: float

    @property
    def total(self) -> float:
        return self.p_tx + self.p_fix + self.p_ant + self.p_ce + self.p_lp


@dataclass(frozen=True)
class PteReport:
    pte: float
    sum_harvested: float
    p_total: float
    breakdown: WetPowerBreakdown


def bs_power_wet(
    M: int, K: int, frame: FrameConfig, pm: BsPowerModel, p_dl_watts: float
) -> WetPowerBreakdown:
    """Power breakdown for charging ``K`` users from ``M`` antennas.

    Transmit power is the radiated power divided by the PA efficiency;
    channel estimation costs ``2*M*K**2*B/(S*kappa)`` and precoder
    computation ``3*M*K*B/(S*kappa)``, with ``B/S`` coherence blocks per
    second.
    """
    if M < 1 or K < 1:
        raise ValueError("M and K must be at least 1")
    blocks = frame.B / (frame.S * pm.kappa_bs)
    return WetPowerBreakdown(
        p_tx=p_dl_watts / pm.eta_pa_bs,
        p_fix=pm.p_fix,
        p_ant=M * pm.p_bs,
        p_ce=2.0 * M * K * K * blocks,
        p_lp=3.0 * M * K * blocks,
    )


def pte(
    M: int,
    K: int,
    frame: FrameConfig,
    pm: BsPowerModel,
    cfg: DownlinkConfig,
    harv: HarvesterSpec,
    beta: float,
    imperfect_csi: bool = False,
) -> PteReport:
    """Power transfer efficiency at ``(M, K)`` under equal energy split.

    All users share the average large-scale gain ``beta``, so the numerator
    is ``K`` times the per-user harvested power.  ``imperfect_csi`` switches
    the numerator to the estimated-CSI harvested energy.
    """
    eff = with_users(cfg, M, K)
    if imperfect_csi:
        report = model_core.harvested_imperfect(eff, frame, harv, beta)
    else:
        report = model_core.harvested_perfect(eff, frame, harv, beta)
    harvested_w = frame.B * K * report.harvested
    breakdown = bs_power_wet(M, K, frame, pm, eff.transmit_power(frame))
    total = breakdown.total
    return PteReport(harvested_w / total, harvested_w, total, breakdown)


def k_max(M: int, p_dl_watts: float, beta: float, harv: HarvesterSpec) -> float:
    """Largest user count for which every harvester still activates.

    Infinite when one antenna's worth of transmit power already clears the
    activation threshold (``theta_act <= p_dl_watts * beta``); zero means the
    threshold is out of reach even for a single user.
    """
    return _user_limit(M, p_dl_watts, beta, harv.theta_act)


def k_sat(M: int, p_dl_watts: float, beta: float, harv: HarvesterSpec) -> float:
    """Largest user count keeping every harvester saturated (0 if unreachable)."""
    return _user_limit(M, p_dl_watts, beta, harv.theta_sat)


def _user_limit(M: int, p_dl_watts: float, beta: float, theta: float) -> float:
    if M < 1:
        raise ValueError("M must be at least 1")
    if math.isinf(theta):
        return 0
    t = theta / (p_dl_watts * beta)
    if t <= 1.0:
        return math.inf
    return model_core.floor_snapped((M - 1) / (t - 1.0))


def pte_optimal_m(
    K: int,
    frame: FrameConfig,
    pm: BsPowerModel,
    cfg: DownlinkConfig,
    harv: HarvesterSpec,
    beta: float,
) -> int:
    """PTE-optimal antenna count for ``K`` users (finite thresholds required).

    PTE is a ratio of affine functions of M on the linear-mode segment, hence
    monotone there, and it decays beyond saturation; the integer optimum
    therefore sits at the activation count or at the saturation boundary.
    Both integers adjacent to the boundary are checked because the ceiling in
    the saturation count can overshoot the exact crossing by almost one
    antenna.  Ties go to the smaller count.
    """
    if harv.theta_act <= 0.0 or math.isinf(harv.theta_sat):
        raise ValueError("optimal antenna count needs finite, positive thresholds")
    m_act, m_sat = model_core.antenna_thresholds_perfect(
        with_users(cfg, 1, K), frame, harv, beta
    )
    m_act, m_sat = int(m_act), int(m_sat)
    candidates = {m_act, m_sat}
    if m_sat - 1 >= m_act:
        candidates.add(m_sat - 1)
    return _argmax_int(
        candidates, lambda m: pte(m, K, frame, pm, cfg, harv, beta).pte
    )


def pte_optimal_k(
    M: int,
    frame: FrameConfig,
    pm: BsPowerModel,
    cfg: DownlinkConfig,
    harv: HarvesterSpec,
    beta: float,
) -> int:
    """PTE-optimal user count for an ``M``-antenna array.

    For fixed M the PTE over K is a ratio of an affine numerator to a
    quadratic denominator on each harvester branch, hence quasiconcave; the
    optimum is the stationary point rounded to the better neighbour, clamped
    into the branch's feasible range.  Saturated operation (``K`` up to the
    saturation limit) and linear operation (up to the activation limit) are
    compared explicitly.  Ties go to the smaller count.
    """
    if M < 2:
        raise ValueError("M must be at least 2")
    p_dl_watts = cfg.transmit_power(frame)
    limit_act = k_max(M, p_dl_watts, beta, harv)
    limit_sat = k_sat(M, p_dl_watts, beta, harv)
    if limit_act == 0:
        return 1  # nothing activates at any K; PTE is identically zero

    d1 = 2.0 * M * frame.B / (frame.S * pm.kappa_bs)
    d2 = 3.0 * M * frame.B / (frame.S * pm.kappa_bs)
    d3 = p_dl_watts / pm.eta_pa_bs + pm.p_fix + M * pm.p_bs

    candidates: set[int] = set()

    if limit_sat >= 1:
        k_hat = math.sqrt(d3 / d1)
        candidates.update(_clamped_neighbours(k_hat, 1, limit_sat))

    linear_lo = 1 if limit_sat == 0 else limit_sat + 1
    if not math.isinf(limit_sat) and linear_lo <= limit_act:
        disc = (M - 1.0) ** 2 + (d3 - (M - 1.0) * d2) / d1
        k_tilde = -(M - 1.0) + math.sqrt(max(disc, 0.0))
        candidates.update(_clamped_neighbours(k_tilde, linear_lo, limit_act))

    return _argmax_int(
        candidates, lambda k: pte(M, k, frame, pm, cfg, harv, beta).pte
    )


def _clamped_neighbours(x: float, lo: float, hi: float) -> list[int]:
    """Integers adjacent to ``x`` clamped into ``[lo, hi]`` (``hi`` may be inf)."""
    picks = []
    for v in (math.floor(x), math.ceil(x)):
        v = max(v, int(lo))
        if not math.isinf(hi):
            v = min(v, int(hi))
        picks.append(int(v))
    return picks


def _argmax_int(candidates, value) -> int:
    best_k, best_v = None, -math.inf
    for k in sorted(candidates):
        v = value(k)
        if v > best_v:
            best_k, best_v = k, v
    return best_k
