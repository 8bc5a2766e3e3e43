"""Uplink rate, energy efficiency, the Lambert-W machinery and the
transmit-power selection heuristic."""

import math

import numpy as np
import pytest
import scipy.special

from wpmimo import (
    DownlinkConfig,
    FrameConfig,
    HarvesterSpec,
    INACTIVE,
    LINEAR,
    SATURATED,
    algorithm1_select_pdl,
    antenna_thresholds_perfect,
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
from wpmimo.model_core import with_users
from wpmimo.rate_ee import lambert_constants


def omega_constant_oracle():
    """Solve w*e^w = 1 by the classic contraction x <- exp(-x)."""
    x = 1.0
    for _ in range(2000):
        x = math.exp(-x)
    return x


class TestLambertW:
    def test_trivial_points(self):
        assert lambert_w0(0.0) == 0.0
        assert lambert_w0(math.e) == pytest.approx(1.0, abs=1e-14)
        assert lambert_w0(-1.0 / math.e) == pytest.approx(-1.0, abs=1e-7)

    def test_omega_constant_fixed_point(self):
        assert lambert_w0(1.0) == pytest.approx(omega_constant_oracle(), abs=1e-12)

    def test_residual_contract(self):
        rng = np.random.default_rng(5)
        xs = np.concatenate([
            -1.0 / math.e + 10.0 ** rng.uniform(-12, 0, 200),
            10.0 ** rng.uniform(-10, 12, 200),
        ])
        for x in xs:
            w = lambert_w0(float(x))
            assert w >= -1.0 - 1e-12
            assert abs(w * math.exp(w) - x) <= 1e-12 * max(1.0, abs(x))

    def test_agrees_with_scipy(self):
        for x in (-0.36, -0.1, 0.3, 1.0, 7.0, 1e3, 1e9):
            ref = float(scipy.special.lambertw(x).real)
            assert lambert_w0(x) == pytest.approx(ref, rel=1e-12, abs=1e-12)

    def test_domain_error(self):
        with pytest.raises(ValueError):
            lambert_w0(-0.5)

    def test_generic_ratio_maximizer_reduction(self):
        # argmax of log(1+b z)/(c + d z) at unit constants is e - 1
        b = c = d = 1.0
        z_star = (math.exp(lambert_w0(b * c / (d * math.e) - 1.0 / math.e) + 1.0) - 1.0) / b
        assert z_star == pytest.approx(math.e - 1.0, rel=1e-12)


class TestGoldenSection:
    def test_finds_parabola_peak(self):
        x, fx = golden_section_max(lambda t: -(t - 3.7) ** 2, 0.0, 10.0)
        assert x == pytest.approx(3.7, abs=1e-8)
        assert fx == pytest.approx(0.0, abs=1e-12)


class TestUplinkRate:
    def test_inactive_below_activation(self, wit_setup):
        s = wit_setup
        report = uplink_rate(30, 2, s.frame, s.cfg, s.harv, s.beta)
        assert report.mode == INACTIVE and report.per_user_rate == 0.0

    def test_zero_forcing_needs_more_antennas_than_users(self, wit_setup):
        s = wit_setup
        with pytest.raises(ValueError):
            uplink_rate(2, 2, s.frame, s.cfg, s.harv, s.beta)

    def test_needs_information_phase(self, wet_setup):
        s = wet_setup
        with pytest.raises(ValueError):
            uplink_rate(100, 1, s.frame, s.cfg, s.harv, s.beta)

    def test_equal_split_form_matches_general_expression(self, wit_setup):
        """Two algebraic routes to the linear-mode SNR must agree."""
        s = wit_setup.at(p_dl_w=40.0)  # hot enough to activate at small M
        K = 2
        rho = uplink_snr_coefficient(s.frame, s.cfg, s.harv, s.beta)
        for M in (3, 9, 33):
            report = uplink_rate(M, K, s.frame, s.cfg, s.harv, s.beta)
            if report.mode != LINEAR:
                continue
            expected_snr = rho * (M - K) * (1.0 + (M - 1.0) / K)
            assert report.snr_effective == pytest.approx(expected_snr, rel=1e-12)
            expected_rate = (
                s.frame.alpha_wit * s.frame.B * math.log2(1.0 + expected_snr)
            )
            assert report.per_user_rate == pytest.approx(expected_rate, rel=1e-12)
            assert report.sum_rate == pytest.approx(K * expected_rate, rel=1e-12)

    def test_monotone_in_antennas_across_saturation(self, wit_setup):
        s = wit_setup.at(p_dl_w=40.0)
        rates = [
            uplink_rate(M, 2, s.frame, s.cfg, s.harv, s.beta).per_user_rate
            for M in range(3, 4000, 13)
        ]
        assert all(b >= a - 1e-9 for a, b in zip(rates, rates[1:]))

    def test_saturated_mode_uses_clamped_harvest(self, wit_setup):
        s = wit_setup.at(p_dl_w=40.0)
        eff = with_users(s.cfg, 4000, 2)
        _, m_sat = antenna_thresholds_perfect(eff, s.frame, s.harv, s.beta)
        M = int(m_sat) + 10
        report = uplink_rate(M, 2, s.frame, s.cfg, s.harv, s.beta)
        assert report.mode == SATURATED
        expected = (
            (1.0 - s.cfg.xi)
            * s.beta
            * s.harv.eta_pa_eh
            * (s.harv.eta_eh * s.harv.theta_sat / s.frame.B)
            * (M - 2)
            / (s.frame.alpha_wit * s.frame.sigma2)
        )
        assert report.snr_effective == pytest.approx(expected, rel=1e-12)


class TestLowSnrRate:
    def test_vanishes_with_snr(self):
        assert low_snr_rate(8, 2, 0.0, 0.9, 1e6) == 0.0

    def test_quadratic_in_large_scale_gain(self, wit_setup):
        s = wit_setup
        rho1 = uplink_snr_coefficient(s.frame, s.cfg, s.harv, s.beta)
        rho2 = uplink_snr_coefficient(s.frame, s.cfg, s.harv, 2.0 * s.beta)
        assert rho2 == pytest.approx(4.0 * rho1, rel=1e-12)

    def test_window_boundary_ratio(self):
        M, K, awit, B = 6, 2, 0.9, 1e6
        gain = (M - K) * (1.0 + (M - 1.0) / K)
        rho = 0.5 / gain  # exactly at the expansion's validity edge
        approx = low_snr_rate(M, K, rho, awit, B)
        exact = awit * B * math.log2(1.5)
        assert approx / exact == pytest.approx(0.5 / math.log(1.5), rel=1e-12)

    def test_within_quarter_inside_window(self, wit_setup):
        s = wit_setup.at(p_dl_w=40.0)
        K = 2
        rho = uplink_snr_coefficient(s.frame, s.cfg, s.harv, s.beta)
        for M in range(3, 60):
            x = rho * (M - K) * (1.0 + (M - 1.0) / K)
            if x > 0.5:
                break
            report = uplink_rate(M, K, s.frame, s.cfg, s.harv, s.beta)
            if report.mode != LINEAR:
                continue
            approx = low_snr_rate(M, K, rho, s.frame.alpha_wit, s.frame.B)
            assert approx <= 1.25 * report.per_user_rate
            assert approx >= report.per_user_rate

    def test_rejects_out_of_window(self):
        with pytest.raises(ValueError):
            low_snr_rate(100, 2, 1.0, 0.9, 1e6)


class TestBsPowerWit:
    def test_wit_cell_breakdown_values(self, wit_setup):
        s = wit_setup
        bd = bs_power_wit(500, 50, s.frame, s.pm, 10.0, 0.0)
        blocks = 1e6 / (1800 * 2e10)
        cubic = (50**3 / 3.0) * blocks
        assert cubic == pytest.approx(1.157e-3, rel=1e-3)
        expected_lp = (
            3 * 500 * 50 * blocks
            + (50**3 / 3.0 + 3 * 500 * 50**2 + 500 * 50) * blocks
            + 2 * s.frame.alpha_wit * 500 * 50 * 1e6 / 2e10
        )
        assert bd.p_lp_zf == pytest.approx(expected_lp, rel=1e-12)
        assert bd.p_ant == pytest.approx(500.0)
        assert bd.p_lp_zf < 0.02 * bd.p_ant

    def test_no_information_phase_drops_per_symbol_term(self, wet_setup):
        s = wet_setup  # alpha_wit == 0
        bd = bs_power_wit(100, 2, s.frame, s.pm, 10.0, 0.0)
        blocks = s.frame.B / (s.frame.S * s.pm.kappa_bs)
        expected = (3 * 100 * 2 + (2**3 / 3.0 + 3 * 100 * 4 + 200)) * blocks
        assert bd.p_lp_zf == pytest.approx(expected, rel=1e-12)

    def test_no_rate_means_no_decoder_power(self, wit_setup):
        s = wit_setup
        assert bs_power_wit(100, 2, s.frame, s.pm, 10.0, 0.0).p_dec == 0.0
        assert bs_power_wit(100, 2, s.frame, s.pm, 10.0, 1e6).p_dec == pytest.approx(
            s.pm.p_dec * 1e6
        )


class TestEnergyEfficiency:
    def test_zero_rate_gives_zero_ee(self, wit_setup):
        s = wit_setup
        assert ee(30, 2, s.frame, s.pm, s.cfg, s.harv, s.beta).ee == 0.0

    def test_rate_in_numerator_and_decoder_term(self, wit_setup):
        s = wit_setup.at(p_dl_w=40.0)
        report = ee(200, 2, s.frame, s.pm, s.cfg, s.harv, s.beta)
        assert report.ee == pytest.approx(report.sum_rate / report.p_total, rel=1e-12)
        assert report.breakdown.p_dec == pytest.approx(
            s.pm.p_dec * report.sum_rate, rel=1e-12
        )

    def test_vanishes_in_the_large_array_regime(self, wit_setup):
        s = wit_setup
        peak = max(
            ee_at_transmit_power(
                M, 2, s.frame, s.pm, s.cfg, s.harv, s.beta,
                algorithm1_select_pdl(M, 2, s.frame, s.pm, s.cfg, s.harv, s.beta),
            ).ee
            for M in range(40, 120, 2)
        )
        tail = [
            ee_at_transmit_power(
                M, 2, s.frame, s.pm, s.cfg, s.harv, s.beta,
                algorithm1_select_pdl(M, 2, s.frame, s.pm, s.cfg, s.harv, s.beta),
            ).ee
            for M in (10_000, 31_623, 100_000)
        ]
        assert all(b < a for a, b in zip(tail, tail[1:]))
        assert tail[-1] < peak


class TestOptimalTransmitPower:
    def test_matches_independent_search(self, wit_setup, ideal_harvester):
        s = wit_setup
        for M in (16, 64, 256, 1024):
            p_cf = ee_optimal_pdl(M, 2, s.frame, s.pm, s.cfg, ideal_harvester, s.beta)
            e_cf = ee_at_transmit_power(
                M, 2, s.frame, s.pm, s.cfg, ideal_harvester, s.beta, p_cf
            ).ee
            _, e_gs = ee_optimal_pdl_search(
                M, 2, s.frame, s.pm, s.cfg, ideal_harvester, s.beta
            )
            assert abs(e_cf - e_gs) <= 1e-4 * e_gs

    def test_local_maximum_certificate(self, wit_setup, ideal_harvester):
        s = wit_setup
        for M in (10, 100, 1000):
            p_cf = ee_optimal_pdl(M, 2, s.frame, s.pm, s.cfg, ideal_harvester, s.beta)
            best = ee_at_transmit_power(
                M, 2, s.frame, s.pm, s.cfg, ideal_harvester, s.beta, p_cf
            ).ee
            for factor in (0.99, 1.01):
                nearby = ee_at_transmit_power(
                    M, 2, s.frame, s.pm, s.cfg, ideal_harvester, s.beta, factor * p_cf
                ).ee
                assert best >= nearby

    def test_power_grows_with_array_size_for_linear_harvesters(
        self, wit_setup, ideal_harvester
    ):
        # holds from the moderate-antenna regime on (small arrays sit on the
        # falling flank of a shallow U)
        s = wit_setup
        powers = [
            ee_optimal_pdl(M, 2, s.frame, s.pm, s.cfg, ideal_harvester, s.beta)
            for M in (64, 128, 256, 512, 1024, 2048, 4096)
        ]
        assert all(b > a for a, b in zip(powers, powers[1:]))

    def test_per_antenna_power_trend_decreases(self, wit_setup, ideal_harvester):
        s = wit_setup
        sweep = [8, 16, 32, 64, 128, 256, 512, 1024, 2048]
        per_antenna = [
            ee_optimal_pdl(M, 2, s.frame, s.pm, s.cfg, ideal_harvester, s.beta) / M
            for M in sweep
        ]
        violations = sum(b > a for a, b in zip(per_antenna, per_antenna[1:]))
        assert violations <= 1

    def test_constants_positive(self, wit_setup):
        s = wit_setup
        lc = lambert_constants(2, s.frame, s.pm, s.harv, s.beta, s.cfg.xi)
        assert lc.rho_tilde > 0 and lc.c_tilde > 0 and lc.d_tilde > 0


class TestPowerSelectionHeuristic:
    def test_small_arrays_boost_power_to_activate(self, wit_setup, ideal_harvester):
        s = wit_setup
        M, K = 30, 2
        candidate = ee_optimal_pdl(M, K, s.frame, s.pm, s.cfg, ideal_harvester, s.beta)
        chosen = algorithm1_select_pdl(M, K, s.frame, s.pm, s.cfg, s.harv, s.beta)
        assert chosen > candidate
        p_act = K * s.harv.theta_act / (s.beta * (M + K - 1))
        assert chosen == pytest.approx(p_act, rel=1e-12)
        # the boosted power actually turns the link on
        assert ee_at_transmit_power(M, K, s.frame, s.pm, s.cfg, s.harv, s.beta, chosen).ee > 0
        assert ee_at_transmit_power(M, K, s.frame, s.pm, s.cfg, s.harv, s.beta, candidate).ee == 0

    def test_large_arrays_cap_power_below_saturation(self, wit_setup, ideal_harvester):
        s = wit_setup
        M, K = 4096, 2
        candidate = ee_optimal_pdl(M, K, s.frame, s.pm, s.cfg, ideal_harvester, s.beta)
        chosen = algorithm1_select_pdl(M, K, s.frame, s.pm, s.cfg, s.harv, s.beta)
        assert chosen <= candidate
        p_sat = K * s.harv.theta_sat / (s.beta * (M + K + 1))
        assert chosen == pytest.approx(min(p_sat, candidate), rel=1e-12)

    def test_strict_saturation_variant(self, wit_setup):
        s = wit_setup
        M, K = 4096, 2
        printed = algorithm1_select_pdl(M, K, s.frame, s.pm, s.cfg, s.harv, s.beta)
        strict = algorithm1_select_pdl(
            M, K, s.frame, s.pm, s.cfg, s.harv, s.beta, strict_saturation=True
        )
        assert strict >= printed
        assert strict == pytest.approx(printed * (M + K + 1) / (M + K - 1), rel=1e-12)

    def test_mid_range_keeps_candidate(self, wit_setup, ideal_harvester):
        s = wit_setup
        M, K = 300, 2
        candidate = ee_optimal_pdl(M, K, s.frame, s.pm, s.cfg, ideal_harvester, s.beta)
        chosen = algorithm1_select_pdl(M, K, s.frame, s.pm, s.cfg, s.harv, s.beta)
        assert chosen == pytest.approx(candidate, rel=1e-12)

    def test_never_loses_to_naive_policy(self, wit_setup, ideal_harvester):
        s = wit_setup
        for M in (4, 8, 30, 100, 500, 2000, 8000):
            naive = ee_optimal_pdl(M, 2, s.frame, s.pm, s.cfg, ideal_harvester, s.beta)
            chosen = algorithm1_select_pdl(M, 2, s.frame, s.pm, s.cfg, s.harv, s.beta)
            ee_naive = ee_at_transmit_power(
                M, 2, s.frame, s.pm, s.cfg, s.harv, s.beta, naive
            ).ee
            ee_chosen = ee_at_transmit_power(
                M, 2, s.frame, s.pm, s.cfg, s.harv, s.beta, chosen
            ).ee
            assert ee_chosen >= ee_naive - 1e-12


class TestRateGrowthContrast:
    def test_linear_mode_snr_more_than_doubles(self, wit_setup, ideal_harvester):
        s = wit_setup.at(p_dl_w=40.0)
        K = 2
        for M in (4 * K, 8 * K, 16 * K, 64 * K):
            lo = uplink_rate(M, K, s.frame, s.cfg, ideal_harvester, s.beta)
            hi = uplink_rate(2 * M, K, s.frame, s.cfg, ideal_harvester, s.beta)
            assert lo.mode == hi.mode == LINEAR
            assert hi.snr_effective / lo.snr_effective > 2.0

    def test_saturated_mode_snr_ratio_approaches_two(self, wit_setup):
        hot = wit_setup.at(p_dl_w=20_000.0)  # saturates from 4K antennas on
        K = 2
        ratios = []
        for M in (4 * K, 16 * K, 64 * K):
            lo = uplink_rate(M, K, hot.frame, hot.cfg, hot.harv, hot.beta)
            hi = uplink_rate(2 * M, K, hot.frame, hot.cfg, hot.harv, hot.beta)
            assert lo.mode == hi.mode == SATURATED
            ratios.append(hi.snr_effective / lo.snr_effective)
        assert all(r > 2.0 for r in ratios)
        assert all(b < a for a, b in zip(ratios, ratios[1:]))
        assert ratios[-1] == pytest.approx(2.0, abs=0.02)
