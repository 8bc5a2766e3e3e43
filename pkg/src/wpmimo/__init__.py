"""Wirelessly powered massive-MIMO cell models: closed-form harvested energy,
power-transfer efficiency, uplink rate and energy efficiency, their
optimizers, and a Monte Carlo link simulator that validates them."""

from .model_core import (
    DownlinkConfig,
    EnergyReport,
    FrameConfig,
    GeometryModel,
    HarvesterSpec,
    INACTIVE,
    LINEAR,
    SATURATED,
    ThresholdSearchError,
    antenna_thresholds_imperfect,
    antenna_thresholds_perfect,
    effective_harvested,
    harvested_from_incident,
    harvested_imperfect,
    harvested_perfect,
    mean_large_scale_gain,
    mean_pathloss_moment,
    received_energy_imperfect,
    received_energy_limit,
    received_energy_perfect,
)
from .power_pte import (
    BsPowerModel,
    PteReport,
    bs_power_wet,
    k_max,
    k_sat,
    pte,
    pte_optimal_k,
    pte_optimal_m,
)
from .rate_ee import (
    EeReport,
    LambertConstants,
    RateReport,
    algorithm1_select_pdl,
    bs_power_wit,
    ee,
    ee_at_transmit_power,
    ee_optimal_pdl,
    ee_optimal_pdl_search,
    golden_section_max,
    lambert_w0,
    low_snr_rate,
    uplink_rate,
    uplink_snr_coefficient,
)
from .mc_oracle import (
    ChannelRealization,
    McScenario,
    TrialStats,
    conjugate_beamformer,
    draw_realization,
    estimate_harvested_energy,
    estimate_received_energy,
)

__version__ = "0.1.0"
