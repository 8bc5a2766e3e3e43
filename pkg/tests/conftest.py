"""Shared fixtures: the two canonical simulation setups used across the suite.

``wet_setup`` is the energy-transfer-only configuration (1800-symbol frames,
10 W transmit power, 20 m cell); ``wit_setup`` the energy-plus-data
configuration (1% harvest fraction, 18 W fixed power, 50 m cell).
"""

import math
from dataclasses import dataclass

import pytest

from wpmimo import (
    BsPowerModel,
    DownlinkConfig,
    FrameConfig,
    GeometryModel,
    HarvesterSpec,
    mean_large_scale_gain,
)

# -174 dBm/Hz noise density == 10**-20.4 J per symbol at symbol rate B
SIGMA2 = 10.0 ** (-20.4)


@dataclass(frozen=True)
class Setup:
    geom: GeometryModel
    beta: float
    harv: HarvesterSpec
    pm: BsPowerModel
    frame: FrameConfig
    cfg: DownlinkConfig

    def at(self, M=None, K=None, p_dl_w=None, xi=None):
        """Clone with a different array size / user count / power / split."""
        K = K if K is not None else self.cfg.K
        M = M if M is not None else self.cfg.M
        xi = xi if xi is not None else self.cfg.xi
        if self.frame.alpha_wit == 0.0:
            frame = FrameConfig.wet_only(self.frame.S, self.frame.B, K, self.frame.sigma2)
        else:
            frame = FrameConfig.with_harvest_fraction(
                self.frame.S, self.frame.B, K, self.frame.sigma2, self.frame.alpha_wet
            )
        watts = (
            p_dl_w
            if p_dl_w is not None
            else self.cfg.transmit_power(self.frame)
        )
        cfg = DownlinkConfig.equal_split(M, K, watts / (frame.alpha_wet * frame.B), xi)
        return Setup(self.geom, self.beta, self.harv, self.pm, frame, cfg)


def _make(geom, harv, pm, K, M, p_dl_w, xi, S, B, alpha_wet=None):
    beta = mean_large_scale_gain(geom)
    if alpha_wet is None:
        frame = FrameConfig.wet_only(S, B, K, SIGMA2)
    else:
        frame = FrameConfig.with_harvest_fraction(S, B, K, SIGMA2, alpha_wet)
    cfg = DownlinkConfig.equal_split(M, K, p_dl_w / (frame.alpha_wet * frame.B), xi)
    return Setup(geom, beta, harv, pm, frame, cfg)


@pytest.fixture(scope="session")
def wet_setup() -> Setup:
    return _make(
        GeometryModel(5.0, 20.0, 3.2, 1.76e-4),
        HarvesterSpec(1e-5, 1e-3, 0.5, 0.3),
        BsPowerModel(p_fix=1.0, p_bs=1.0, kappa_bs=2e10, eta_pa_bs=0.39, p_dec=1e-9),
        K=1, M=100, p_dl_w=10.0, xi=0.1, S=1800, B=1e6,
    )


@pytest.fixture(scope="session")
def wit_setup() -> Setup:
    return _make(
        GeometryModel(5.0, 50.0, 3.2, 1.76e-4),
        HarvesterSpec(1e-5, 1e-3, 0.5, 0.3),
        BsPowerModel(p_fix=18.0, p_bs=1.0, kappa_bs=2e10, eta_pa_bs=0.39, p_dec=1e-9),
        K=2, M=100, p_dl_w=10.0, xi=0.1, S=1800, B=1e6, alpha_wet=0.01,
    )


@pytest.fixture(scope="session")
def ideal_harvester() -> HarvesterSpec:
    return HarvesterSpec.ideal(0.5, 0.3)
