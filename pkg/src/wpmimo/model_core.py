"""Closed-form energy analytics for downlink energy beamforming.

A base station with ``M`` antennas charges ``K`` single-antenna users by
conjugate (matched-filter) beamforming over an IID Rayleigh channel.  This
module provides the average received (incident) and harvested energy at a
user, under perfect channel knowledge and under pilot-based LS/MMSE
estimation, together with the antenna counts at which a piecewise-linear
harvester activates and saturates.

Unit conventions
----------------
All per-symbol quantities are energies in joules/symbol.  Powers in watts
appear only at reporting boundaries as ``bandwidth * energy``; keeping the
two separated avoids double-applying the frame-split fractions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import NamedTuple

INACTIVE = "inactive"
LINEAR = "linear"
SATURATED = "saturated"

_SUM_TOL = 1e-12

#: Default cap for the ascending antenna-count search used when harvester
#: thresholds must be located numerically (estimated-CSI case).
DEFAULT_SEARCH_CAP = 1_000_000


class ThresholdSearchError(RuntimeError):
    """No antenna count within the search cap satisfies a harvester threshold."""


def ceil_snapped(x: float, rel: float = 1e-9) -> int:
    """Integer ceiling that snaps near-integer arguments to the integer.

    Threshold counts come from inverting energy expressions whose exact
    solution may be an integer; plain ``ceil`` would then flip on float
    round-off even though the boundary is inclusive.
    """
    r = round(x)
    if abs(x - r) <= rel * max(1.0, abs(r)):
        return int(r)
    return math.ceil(x)


def floor_snapped(x: float, rel: float = 1e-9) -> int:
    """Integer floor with the same near-integer snapping as :func:`ceil_snapped`."""
    r = round(x)
    if abs(x - r) <= rel * max(1.0, abs(r)):
        return int(r)
    return math.floor(x)


@dataclass(frozen=True)
class GeometryModel:
    """Annulus user layout with a power-law distance loss.

    Users are uniformly distributed between ``r_min`` and ``r_max`` (meters)
    around the base station; the gain of a link at distance ``d`` is
    ``intercept * d ** -path_exponent``.
    """

    r_min: float
    r_max: float
    path_exponent: float
    intercept: float

    def __post_init__(self):
        if not (0.0 < self.r_min < self.r_max):
            raise ValueError("need 0 < r_min < r_max")
        if self.path_exponent <= 2.0:
            raise ValueError("path_exponent must exceed 2 for the annulus moment")
        if self.intercept <= 0.0:
            raise ValueError("intercept must be positive")


@dataclass(frozen=True)
class HarvesterSpec:
    """Piecewise-linear rectifier: activation/saturation thresholds (watts)
    and conversion efficiencies.

    ``theta_act = 0`` together with ``theta_sat = inf`` encodes the ideal
    (purely linear) harvester; every operation accepts that sentinel.
    ``eta_pa_eh`` is the power-amplifier efficiency the user pays when it
    spends harvested energy on transmission.
    """

    theta_act: float
    theta_sat: float
    eta_eh: float
    eta_pa_eh: float

    def __post_init__(self):
        if not (0.0 <= self.theta_act < self.theta_sat):
            raise ValueError("need 0 <= theta_act < theta_sat")
        if not (0.0 < self.eta_eh <= 1.0):
            raise ValueError("eta_eh must lie in (0, 1]")
        if not (0.0 < self.eta_pa_eh < 1.0):
            raise ValueError("eta_pa_eh must lie in (0, 1)")

    @classmethod
    def ideal(cls, eta_eh: float = 1.0, eta_pa_eh: float = 0.5) -> "HarvesterSpec":
        return cls(0.0, math.inf, eta_eh, eta_pa_eh)

    @property
    def is_ideal(self) -> bool:
        return self.theta_act == 0.0 and math.isinf(self.theta_sat)


@dataclass(frozen=True)
class FrameConfig:
    """Coherence-block layout: ``S`` symbols split between uplink training
    (``alpha_tr = tau / S``), downlink energy transfer and uplink data.

    ``sigma2`` is the receiver noise energy per symbol in joules (noise
    power spectral density when the symbol rate equals the bandwidth ``B``).
    """

    S: int
    B: float
    alpha_tr: float
    alpha_wet: float
    alpha_wit: float
    tau: int
    sigma2: float

    def __post_init__(self):
        if self.S < 1:
            raise ValueError("S must be at least 1 symbol")
        if self.B <= 0.0:
            raise ValueError("bandwidth must be positive")
        if self.sigma2 <= 0.0:
            raise ValueError("sigma2 must be positive")
        if not (1 <= self.tau < self.S):
            raise ValueError("pilot length must satisfy 1 <= tau < S")
        if abs(self.alpha_tr - self.tau / self.S) > _SUM_TOL:
            raise ValueError("alpha_tr must equal tau / S")
        for name in ("alpha_tr", "alpha_wet", "alpha_wit"):
            if not (0.0 <= getattr(self, name) < 1.0):
                raise ValueError(f"{name} must lie in [0, 1)")
        total = self.alpha_tr + self.alpha_wet + self.alpha_wit
        if abs(total - 1.0) > _SUM_TOL:
            raise ValueError(f"frame split must sum to 1, got {total!r}")

    @classmethod
    def wet_only(cls, S: int, B: float, tau: int, sigma2: float) -> "FrameConfig":
        """Training plus energy transfer only (no uplink data phase)."""
        alpha_tr = tau / S
        return cls(S, B, alpha_tr, 1.0 - alpha_tr, 0.0, tau, sigma2)

    @classmethod
    def with_harvest_fraction(
        cls, S: int, B: float, tau: int, sigma2: float, alpha_wet: float
    ) -> "FrameConfig":
        """Fix the energy-transfer fraction; the remainder carries uplink data."""
        alpha_tr = tau / S
        return cls(S, B, alpha_tr, alpha_wet, 1.0 - alpha_wet - alpha_tr, tau, sigma2)


@dataclass(frozen=True)
class DownlinkConfig:
    """Downlink transmission bundle: array size, user count, per-symbol
    transmit energy, per-user beam weights and the training-energy split.

    ``zeta[i]`` is the share of transmit energy beamformed toward user ``i``
    (shares sum to one); ``xi`` is the fraction of a user's harvested energy
    it reinvests in uplink pilots.
    """

    M: int
    K: int
    p_dl: float
    zeta: tuple[float, ...]
    xi: float

    def __post_init__(self):
        if self.M < 1 or self.K < 1:
            raise ValueError("M and K must be at least 1")
        if self.p_dl <= 0.0:
            raise ValueError("p_dl must be positive")
        if len(self.zeta) != self.K:
            raise ValueError("zeta must have one weight per user")
        if any(not (0.0 < z <= 1.0) for z in self.zeta):
            raise ValueError("each zeta weight must lie in (0, 1]")
        if abs(math.fsum(self.zeta) - 1.0) > _SUM_TOL:
            raise ValueError("zeta weights must sum to 1")
        if not (0.0 < self.xi < 1.0):
            raise ValueError("xi must lie in (0, 1)")

    @classmethod
    def equal_split(cls, M: int, K: int, p_dl: float, xi: float) -> "DownlinkConfig":
        return cls(M, K, p_dl, (1.0 / K,) * K, xi)

    def transmit_power(self, frame: FrameConfig) -> float:
        """Average transmit power in watts: ``alpha_wet * B * p_dl``."""
        return frame.alpha_wet * frame.B * self.p_dl


@dataclass(frozen=True)
class EnergyReport:
    """Average incident and harvested energy (J/symbol) at one user, with the
    harvester operating mode and the activation/saturation antenna counts."""

    incident: float
    harvested: float
    mode: str
    m_act: float
    m_sat: float


class ImperfectIncident(NamedTuple):
    psi_act: float
    psi_sat: float
    branch: str


def mean_pathloss_moment(geom: GeometryModel) -> float:
    """Average of ``d ** -path_exponent`` over the uniform annulus layout."""
    a = geom.path_exponent
    if a <= 2.0:  # unreachable through GeometryModel; guard direct misuse
        raise ValueError("path exponent must exceed 2")
    num = geom.r_max ** (2.0 - a) - geom.r_min ** (2.0 - a)
    den = (1.0 - 0.5 * a) * (geom.r_max**2 - geom.r_min**2)
    return num / den


def mean_large_scale_gain(geom: GeometryModel) -> float:
    """Average large-scale channel gain: intercept times the distance moment."""
    return geom.intercept * mean_pathloss_moment(geom)


def received_energy_perfect(
    cfg: DownlinkConfig, frame: FrameConfig, beta_i: float, i: int = 0
) -> float:
    """Average incident energy (J/symbol) at user ``i`` with perfect CSI.

    The conjugate beamformer delivers an array gain ``zeta_i * M`` from the
    user's own beam plus ``1 - zeta_i`` leaked from the other users' beams.
    """
    if beta_i <= 0.0:
        raise ValueError("beta_i must be positive")
    z = cfg.zeta[i]
    return frame.alpha_wet * cfg.p_dl * beta_i * (z * cfg.M + (1.0 - z))


def received_energy_limit(
    ratio: float, p_dl: float, beta: float, alpha_wet: float
) -> float:
    """Large-system incident energy when M and K grow with ``M / K = ratio``.

    Valid for ``ratio > 1``; the equal-split incident energy converges to
    ``alpha_wet * p_dl * beta * (1 + ratio)`` with an O(1/K) gap.
    """
    if ratio <= 1.0:
        raise ValueError("antenna/user ratio must exceed 1")
    return alpha_wet * p_dl * beta * (1.0 + ratio)


def _quadratic_coefficients(
    cfg: DownlinkConfig, frame: FrameConfig, harv: HarvesterSpec, beta_i: float, i: int
) -> tuple[float, float, float]:
    """Coefficients of the self-consistency relation for the estimated-CSI
    incident energy: own-beam slope, cross-beam offset, and the noise term
    coupling channel-estimation quality to the energy spent on pilots."""
    z = cfg.zeta[i]
    a1 = frame.alpha_wet * cfg.p_dl * beta_i * z
    a2 = frame.alpha_wet * cfg.p_dl * beta_i * (1.0 - z)
    a3 = frame.sigma2 / (cfg.xi * beta_i * harv.eta_pa_eh * harv.eta_eh * frame.S)
    return a1, a2, a3


def _active_incident_root(a1: float, a2: float, a3: float, M: int) -> float:
    """Larger root of ``g**2 - (a1*M + a2 - a3)*g - (a1 + a2)*a3 = 0``.

    This is the non-saturated incident energy solving the fixed point
    ``g = a1*M*(1 - (M-1)/M / (1 + g/a3)) + a2``.  Evaluated in the form
    that avoids cancellation for either sign of the linear coefficient.
    """
    b = a1 * M + a2 - a3
    c = (a1 + a2) * a3
    disc = b * b + 4.0 * c
    assert disc >= 0.0, "discriminant cannot be negative for positive coefficients"
    root = math.sqrt(disc)
    if b >= 0.0:
        return 0.5 * (b + root)
    return (2.0 * c) / (root - b)


def received_energy_imperfect(
    cfg: DownlinkConfig,
    frame: FrameConfig,
    harv: HarvesterSpec,
    beta_i: float,
    i: int = 0,
) -> ImperfectIncident:
    """Average incident energy at user ``i`` when the beamformer is built from
    LS/MMSE channel estimates whose pilots are paid for out of harvested energy.

    Returns the self-consistent non-saturated solution ``psi_act``, the
    saturated-mode solution ``psi_sat`` (pilot energy pinned by the saturated
    harvest), and which branch applies at this antenna count:

    * ``linear``     -- ``theta_act/B <= psi_act < theta_sat/B``
    * ``saturated``  -- ``psi_act >= theta_sat/B`` (use ``psi_sat``)
    * ``inactive``   -- ``psi_act`` below the activation level

    As ``sigma2 -> 0`` (or ``S -> inf``) both solutions collapse to the
    perfect-CSI incident energy.
    """
    if beta_i <= 0.0:
        raise ValueError("beta_i must be positive")
    a1, a2, a3 = _quadratic_coefficients(cfg, frame, harv, beta_i, i)
    psi_act = _active_incident_root(a1, a2, a3, cfg.M)

    if a3 == 0.0 or math.isinf(harv.theta_sat):
        psi_sat = a1 * cfg.M + a2
    else:
        shrink = 1.0 / (1.0 + harv.theta_sat / (frame.B * a3))
        psi_sat = a1 * cfg.M * (1.0 - (cfg.M - 1.0) / cfg.M * shrink) + a2

    if psi_act >= harv.theta_sat / frame.B:
        branch = SATURATED
    elif psi_act >= harv.theta_act / frame.B:
        branch = LINEAR
    else:
        branch = INACTIVE
    return ImperfectIncident(psi_act, psi_sat, branch)


def harvested_from_incident(gamma: float, harv: HarvesterSpec, B: float) -> float:
    """Piecewise-linear harvester output (J/symbol) for incident ``gamma``.

    Zero below the activation level, ``eta_eh * gamma`` in the linear range,
    clamped at ``eta_eh * theta_sat / B`` from the saturation level upward
    (the boundary itself saturates).
    """
    if gamma < 0.0:
        raise ValueError("incident energy cannot be negative")
    if gamma < harv.theta_act / B:
        return 0.0
    if gamma < harv.theta_sat / B:
        return harv.eta_eh * gamma
    return harv.eta_eh * harv.theta_sat / B


def antenna_thresholds_perfect(
    cfg: DownlinkConfig,
    frame: FrameConfig,
    harv: HarvesterSpec,
    beta_i: float,
    i: int = 0,
) -> tuple[float, float]:
    """Minimum antenna counts activating and saturating user ``i``'s harvester
    under perfect CSI.

    Closed form from inverting the incident-energy expression; both counts are
    clamped below at 1.  An ideal harvester yields ``(1, inf)``.
    """
    if beta_i <= 0.0:
        raise ValueError("beta_i must be positive")
    p_watts = cfg.transmit_power(frame)
    z = cfg.zeta[i]

    def threshold(theta: float) -> float:
        if theta == 0.0:
            return 1
        if math.isinf(theta):
            return math.inf
        exact = 1.0 + (theta / (beta_i * p_watts) - 1.0) / z
        return max(1, ceil_snapped(exact))

    m_act = threshold(harv.theta_act)
    m_sat = threshold(harv.theta_sat)
    return m_act, m_sat


def harvested_perfect(
    cfg: DownlinkConfig,
    frame: FrameConfig,
    harv: HarvesterSpec,
    beta_i: float,
    i: int = 0,
) -> EnergyReport:
    """Average harvested energy at user ``i`` with perfect CSI.

    The operating mode is decided by the antenna count against the
    activation/saturation thresholds; harvested energy is zero below
    activation, ``eta_eh`` times the incident energy in the linear range and
    pinned at ``eta_eh * theta_sat / B`` from saturation onward.
    """
    incident = received_energy_perfect(cfg, frame, beta_i, i)
    m_act, m_sat = antenna_thresholds_perfect(cfg, frame, harv, beta_i, i)
    if cfg.M < m_act:
        mode, harvested = INACTIVE, 0.0
    elif cfg.M < m_sat:
        mode, harvested = LINEAR, harv.eta_eh * incident
    else:
        mode, harvested = SATURATED, harv.eta_eh * harv.theta_sat / frame.B
    return EnergyReport(incident, harvested, mode, m_act, m_sat)


def antenna_thresholds_imperfect(
    cfg: DownlinkConfig,
    frame: FrameConfig,
    harv: HarvesterSpec,
    beta_i: float,
    i: int = 0,
    search_cap: int = DEFAULT_SEARCH_CAP,
) -> tuple[float, float]:
    """Minimum antenna counts activating and saturating user ``i``'s harvester
    when the beamformer uses estimated channels.

    The estimated-CSI incident energy has no tractable inverse in M, but it is
    strictly increasing in M, so an ascending integer scan locates both
    thresholds.  Raises :class:`ThresholdSearchError` if a finite threshold is
    not met within ``search_cap`` antennas.
    """
    act_level = harv.theta_act / frame.B
    sat_level = harv.theta_sat / frame.B
    m_act: float = 1 if harv.theta_act == 0.0 else 0
    m_sat: float = math.inf if math.isinf(harv.theta_sat) else 0

    if m_act and m_sat:
        return m_act, m_sat

    a1, a2, a3 = _quadratic_coefficients(cfg, frame, harv, beta_i, i)
    for m in range(1, search_cap + 1):
        psi = _active_incident_root(a1, a2, a3, m)
        if not m_act and psi >= act_level:
            m_act = m
        if not m_sat and psi >= sat_level:
            m_sat = m
        if m_act and m_sat:
            return m_act, m_sat
    raise ThresholdSearchError(
        f"no antenna count up to {search_cap} reaches the harvester threshold"
    )


def harvested_imperfect(
    cfg: DownlinkConfig,
    frame: FrameConfig,
    harv: HarvesterSpec,
    beta_i: float,
    i: int = 0,
    search_cap: int = DEFAULT_SEARCH_CAP,
) -> EnergyReport:
    """Average harvested energy at user ``i`` when the beamformer uses LS/MMSE
    channel estimates.

    Same branch structure as :func:`harvested_perfect` but with the
    self-consistent estimated-CSI incident energy and numerically located
    antenna thresholds.  In the inactive branch the reported incident value is
    the nominal non-saturated solution (no energy is harvested there, so the
    closed-loop pilot model is extrapolated).
    """
    m_act, m_sat = antenna_thresholds_imperfect(
        cfg, frame, harv, beta_i, i, search_cap
    )
    inc = received_energy_imperfect(cfg, frame, harv, beta_i, i)
    if cfg.M < m_act:
        mode, incident, harvested = INACTIVE, inc.psi_act, 0.0
    elif cfg.M < m_sat:
        mode, incident, harvested = LINEAR, inc.psi_act, harv.eta_eh * inc.psi_act
    else:
        mode, incident, harvested = (
            SATURATED,
            inc.psi_sat,
            harv.eta_eh * harv.theta_sat / frame.B,
        )
    return EnergyReport(incident, harvested, mode, m_act, m_sat)


def effective_harvested(report: EnergyReport, xi: float) -> float:
    """Harvested energy net of the share reinvested in uplink pilots."""
    if not (0.0 < xi < 1.0):
        raise ValueError("xi must lie in (0, 1)")
    return (1.0 - xi) * report.harvested


def with_users(cfg: DownlinkConfig, M: int, K: int) -> DownlinkConfig:
    """Equal-split variant of ``cfg`` for an ``(M, K)`` sweep point."""
    return replace(cfg, M=M, K=K, zeta=(1.0 / K,) * K)
