"""Propagation, measurement, and report-generation tests."""

import math

import numpy as np
import pytest

from hosim.radio import (
    DETECTION_THRESHOLD_DBM,
    MAX_NEIGHBORS,
    CellSite,
    ChannelParams,
    MeasurementEntry,
    MeasurementReport,
    RadioEnvironment,
    free_space_reference_db,
    measure_rsrp,
    n_resource_blocks,
    noise_power_dbm,
    path_loss,
    re_scaling_db,
    rsrq,
    sinr,
    true_rsrp,
)

PARAMS = ChannelParams(shadowing_sigma_db=0.0, meas_noise_sigma_db=0.0, env_noise_sigma_db=0.0)
FREQ = 26e9


def make_site(cid=0, pos=(0.0, 0.0), tx=46.0, freq=FREQ, bw=400e6, nf=5.0):
    return CellSite(cid, pos, tx, freq, bw, nf)


class TestPathLoss:
    def test_reference_distance_identity(self):
        assert path_loss(1.0, PARAMS, FREQ) == pytest.approx(free_space_reference_db(FREQ))

    def test_ten_x_reference_adds_30db_at_exponent_3(self):
        base = path_loss(1.0, PARAMS, FREQ)
        assert path_loss(10.0, PARAMS, FREQ) == pytest.approx(base + 30.0)

    def test_hundred_x_reference_adds_60db(self):
        base = path_loss(1.0, PARAMS, FREQ)
        assert path_loss(100.0, PARAMS, FREQ) == pytest.approx(base + 60.0)

    def test_below_reference_clamps(self):
        assert path_loss(0.01, PARAMS, FREQ) == path_loss(1.0, PARAMS, FREQ)

    def test_non_finite_rejected(self):
        with pytest.raises(ValueError):
            path_loss(float("nan"), PARAMS, FREQ)
        with pytest.raises(ValueError):
            path_loss(float("inf"), PARAMS, FREQ)

    def test_monotone_in_distance(self):
        rng = np.random.default_rng(7)
        distances = np.sort(rng.uniform(0.5, 5000.0, size=200))
        losses = [path_loss(d, PARAMS, FREQ) for d in distances]
        assert all(b >= a for a, b in zip(losses, losses[1:]))


class TestTrueRsrp:
    def test_reference_distance_value(self):
        site = make_site()
        expected = 46.0 - free_space_reference_db(FREQ) - re_scaling_db(400e6)
        assert true_rsrp(site, (1.0, 0.0), 0.0, PARAMS) == pytest.approx(expected)

    def test_tx_power_shift_is_linear_in_db(self):
        lo = true_rsrp(make_site(tx=43.0), (50.0, 0.0), 0.0, PARAMS)
        hi = true_rsrp(make_site(tx=46.0), (50.0, 0.0), 0.0, PARAMS)
        assert hi - lo == pytest.approx(3.0)

    def test_shadowing_subtracts(self):
        site = make_site()
        clear = true_rsrp(site, (50.0, 0.0), 0.0, PARAMS)
        shadowed = true_rsrp(site, (50.0, 0.0), 5.0, PARAMS)
        assert clear - shadowed == pytest.approx(5.0)

    def test_strictly_decreasing_in_distance(self):
        site = make_site()
        values = [true_rsrp(site, (d, 0.0), 0.0, PARAMS) for d in (2, 5, 20, 90, 400)]
        assert all(b < a for a, b in zip(values, values[1:]))


class TestMeasureRsrp:
    def test_noiseless_identity(self):
        rng = np.random.default_rng(0)
        z = measure_rsrp(-80.0, PARAMS.env_noise_mean_dbm, PARAMS, rng)
        assert z == -80.0

    def test_env_noise_excursion_degrades(self):
        rng = np.random.default_rng(0)
        z = measure_rsrp(-80.0, PARAMS.env_noise_mean_dbm + 4.0, PARAMS, rng)
        assert z == pytest.approx(-84.0)

    def test_zero_mean_noise(self):
        params = ChannelParams(meas_noise_sigma_db=2.0)
        rng = np.random.default_rng(123)
        draws = np.array([measure_rsrp(-80.0, params.env_noise_mean_dbm, params, rng) for _ in range(100_000)])
        assert abs(draws.mean() + 80.0) < 0.05

    def test_noise_stdev_matches_sigma(self):
        params = ChannelParams(meas_noise_sigma_db=2.0)
        rng = np.random.default_rng(42)
        draws = np.array([measure_rsrp(-80.0, params.env_noise_mean_dbm, params, rng) for _ in range(100_000)])
        assert abs(draws.std() - 2.0) / 2.0 < 0.02


class TestRsrq:
    def test_identity_zero(self):
        assert rsrq(-80.0, -80.0, 1) == 0.0

    def test_hundred_blocks_twenty_db(self):
        assert rsrq(-80.0, -60.0, 100) == pytest.approx(0.0)

    def test_fifty_blocks(self):
        assert rsrq(-80.0, -60.0, 50) == pytest.approx(10 * math.log10(50) - 20, abs=1e-9)

    def test_rejects_zero_blocks(self):
        with pytest.raises(ValueError):
            rsrq(-80.0, -60.0, 0)


class TestSinr:
    def test_noise_equal_to_signal_gives_zero(self):
        site = make_site()
        noise = noise_power_dbm(site, PARAMS)
        # Place the UE so the received power equals the noise power.
        target_pl = site.tx_power_dbm - noise
        distance = 10 ** ((target_pl - free_space_reference_db(FREQ)) / 30.0)
        value = sinr(site, [], (distance, 0.0), PARAMS)
        assert value == pytest.approx(0.0, abs=1e-6)

    def test_single_equal_interferer(self):
        # Enough transmit power that thermal noise is negligible.
        serving = make_site(0, (0.0, 0.0), tx=140.0)
        other = make_site(1, (200.0, 0.0), tx=140.0)
        value = sinr(serving, [other], (100.0, 0.0), PARAMS)
        assert value == pytest.approx(0.0, abs=1e-3)

    def test_two_equal_interferers(self):
        serving = make_site(0, (0.0, 100.0), tx=140.0)
        others = [make_site(1, (-100.0, 0.0), tx=140.0), make_site(2, (100.0, 0.0), tx=140.0)]
        value = sinr(serving, others, (0.0, 0.0), PARAMS)
        assert value == pytest.approx(-10 * math.log10(2), abs=1e-3)

    def test_serving_listed_as_interferer_rejected(self):
        site = make_site()
        with pytest.raises(ValueError):
            sinr(site, [site], (10.0, 0.0), PARAMS)

    def test_interference_limited_power_shift_invariance(self):
        position = (70.0, 30.0)
        for shift in (0.0, 7.0):
            serving = make_site(0, (0.0, 0.0), tx=140.0 + shift)
            other = make_site(1, (200.0, 0.0), tx=140.0 + shift)
            if shift == 0.0:
                baseline = sinr(serving, [other], position, PARAMS)
            else:
                assert sinr(serving, [other], position, PARAMS) == pytest.approx(baseline, abs=1e-3)


class TestMeasurementTypes:
    def test_serving_must_not_be_neighbor(self):
        entry = MeasurementEntry(0, -80.0, -11.0)
        with pytest.raises(ValueError):
            MeasurementReport(1, 0.0, entry, (MeasurementEntry(0, -82.0, -12.0),))

    def test_entries_must_be_finite(self):
        with pytest.raises(ValueError):
            MeasurementEntry(0, float("nan"), -11.0)

    def test_entry_lookup(self):
        report = MeasurementReport(
            1, 0.0, MeasurementEntry(0, -80.0, -11.0), (MeasurementEntry(2, -90.0, -14.0),)
        )
        assert report.entry(0).cell == 0
        assert report.entry(2).rsrp_dbm == -90.0
        assert report.entry(5) is None


def make_env(sites, params=PARAMS, seed=0):
    return RadioEnvironment(sites, params, np.random.default_rng(seed))


class TestGenerateReport:
    def test_single_cell_empty_neighbors(self):
        env = make_env([make_site(0)])
        report = env.generate_report(0, (30.0, 0.0), 0, 0.0)
        assert report.neighbors == ()
        assert report.serving.cell == 0

    def test_equidistant_tie_order_by_cell_id(self):
        sites = [make_site(0, (0.0, 0.0)), make_site(1, (100.0, 0.0)), make_site(2, (-100.0, 0.0))]
        env = make_env(sites)
        report = env.generate_report(0, (0.0, 0.0), 0, 0.0)
        assert [n.cell for n in report.neighbors] == [1, 2]
        assert report.neighbors[0].rsrp_dbm == report.neighbors[1].rsrp_dbm

    def test_neighbor_order_tracks_distance(self):
        sites = [
            make_site(0, (0.0, 0.0)),
            make_site(1, (40.0, 0.0)),
            make_site(2, (80.0, 0.0)),
            make_site(3, (160.0, 0.0)),
        ]
        env = make_env(sites)
        report = env.generate_report(0, (0.0, 0.0), 0, 0.0)
        assert [n.cell for n in report.neighbors] == [1, 2, 3]

    def test_zero_noise_reports_are_pure_geometry(self):
        sites = [make_site(0, (0.0, 0.0)), make_site(1, (120.0, 0.0))]
        first = make_env(sites, seed=1).generate_report(0, (30.0, 10.0), 0, 0.0)
        second = make_env(sites, seed=99).generate_report(0, (30.0, 10.0), 0, 0.0)
        assert first == second

    def test_neighbor_list_truncated(self):
        sites = [make_site(i, (25.0 * i, 0.0)) for i in range(12)]
        env = make_env(sites)
        report = env.generate_report(0, (0.0, 0.0), 0, 0.0)
        assert len(report.neighbors) == MAX_NEIGHBORS

    def test_detection_threshold_filters_far_cells(self):
        far = 10 ** ((46.0 - re_scaling_db(400e6) - DETECTION_THRESHOLD_DBM - free_space_reference_db(FREQ)) / 30.0)
        sites = [make_site(0, (0.0, 0.0)), make_site(1, (far * 4.0, 0.0))]
        env = make_env(sites)
        report = env.generate_report(0, (0.0, 0.0), 0, 0.0)
        assert report.neighbors == ()

    def test_rsrq_values_negative_under_load(self):
        sites = [make_site(0, (0.0, 0.0)), make_site(1, (100.0, 0.0))]
        env = make_env(sites)
        report = env.generate_report(0, (50.0, 0.0), 0, 0.0)
        assert report.serving.rsrq_db < 0
        assert all(n.rsrq_db < 0 for n in report.neighbors)


class TestEnvironmentState:
    def test_env_noise_walk_is_bounded(self):
        params = ChannelParams(env_noise_sigma_db=2.0)
        env = RadioEnvironment([make_site(0)], params, np.random.default_rng(3))
        values = [env.advance_env_noise(0) for _ in range(2000)]
        bound = 3.0 * params.env_noise_sigma_db
        assert all(abs(v - params.env_noise_mean_dbm) <= bound + 1e-9 for v in values)

    def test_shadowing_block_constant_until_decorrelation(self):
        params = ChannelParams(shadowing_sigma_db=6.0)
        env = RadioEnvironment([make_site(0)], params, np.random.default_rng(5))
        a = env.shadowing_db(0, 0, (0.0, 0.0))
        assert env.shadowing_db(0, 0, (30.0, 0.0)) == a
        b = env.shadowing_db(0, 0, (60.0, 0.0))
        assert b != a

    def test_duplicate_site_ids_rejected(self):
        with pytest.raises(ValueError):
            RadioEnvironment([make_site(0), make_site(0, (10.0, 0.0))], PARAMS, np.random.default_rng(0))


class TestResourceBlocks:
    def test_counts_follow_bandwidth(self):
        assert n_resource_blocks(400e6) == 277
        assert n_resource_blocks(100e6) == 69

    def test_re_scaling_matches_subcarrier_count(self):
        assert re_scaling_db(400e6) == pytest.approx(10 * math.log10(12 * 277))


class TestSiteValidation:
    def test_bandwidth_positive(self):
        with pytest.raises(ValueError):
            CellSite(0, (0.0, 0.0), bandwidth_hz=0.0)

    def test_tx_power_finite(self):
        with pytest.raises(ValueError):
            CellSite(0, (0.0, 0.0), tx_power_dbm=float("inf"))
