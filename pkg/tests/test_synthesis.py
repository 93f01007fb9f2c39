import math

import numpy as np
import pytest

from rssaoa.geometry import CoincidentNodesError, PathLossParams, azimuth_true, elevation_true, rss_true
from rssaoa.synthesis import (
    SIGMA_FLOOR,
    HeteroNoiseSpec,
    MeasurementSeries,
    NoiseProfile,
    SeriesFormatError,
    generate_series,
    read_series_csv,
    sample_noise_profiles,
    time_average,
    write_series_csv,
)

PARAMS = PathLossParams(p0=-10.0, d0=1.0, gamma=2.7)
DEMO_ANCHORS = np.array([[10, 10, 10], [10, 30, 15], [30, 10, 20], [30, 30, 25]], dtype=float)
DEMO_PROFILES = [NoiseProfile(math.radians(5), math.radians(5), 1.0)] + [
    NoiseProfile(math.radians(10), math.radians(10), 2.0)
] * 3


class TestSampleNoiseProfiles:
    def test_determinism(self):
        spec = HeteroNoiseSpec(0.1, 0.2, 3.0)
        a = sample_noise_profiles(spec, 6, np.random.default_rng(99))
        b = sample_noise_profiles(spec, 6, np.random.default_rng(99))
        assert a == b

    def test_degenerate_means_clamp_to_floor(self):
        spec = HeteroNoiseSpec(1e-300, 1e-300, 1e-300)
        for profile in sample_noise_profiles(spec, 5, np.random.default_rng(0)):
            assert profile.sigma_m == SIGMA_FLOOR
            assert profile.sigma_v == SIGMA_FLOOR
            assert profile.sigma_n == SIGMA_FLOOR

    def test_sample_mean_matches_hyper_mean(self):
        # law of large numbers: 1e5 draws of sigma_m, mean within 2% of mu_m
        mu = math.radians(10)
        spec = HeteroNoiseSpec(mu, mu, 2.0)
        rng = np.random.default_rng(1234)
        draws = [
            p.sigma_m for _ in range(25000) for p in sample_noise_profiles(spec, 4, rng)
        ]
        assert np.mean(draws) == pytest.approx(mu, rel=0.02)

    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            sample_noise_profiles(HeteroNoiseSpec(0.1, 0.1, 1.0), 0, np.random.default_rng(0))


class TestGenerateSeries:
    def test_zero_noise_limit(self):
        # floor sigma is 1e-6, so individual draws reach a few times that
        profiles = [NoiseProfile(SIGMA_FLOOR, SIGMA_FLOOR, SIGMA_FLOOR)] * 4
        target = (20.0, 20.0, 0.0)
        series = generate_series(target, DEMO_ANCHORS, profiles, PARAMS, 3, np.random.default_rng(5))
        for i, anchor in enumerate(DEMO_ANCHORS):
            assert series.azimuth[i] == pytest.approx(azimuth_true(target, anchor), abs=5e-6)
            assert series.elevation[i] == pytest.approx(elevation_true(target, anchor), abs=5e-6)
            assert series.rss[i] == pytest.approx(rss_true(target, anchor, PARAMS), abs=5e-6)

    def test_determinism_bit_identical(self):
        a = generate_series((20, 20, 0), DEMO_ANCHORS, DEMO_PROFILES, PARAMS, 7, np.random.default_rng(42))
        b = generate_series((20, 20, 0), DEMO_ANCHORS, DEMO_PROFILES, PARAMS, 7, np.random.default_rng(42))
        assert np.array_equal(a.azimuth, b.azimuth)
        assert np.array_equal(a.elevation, b.elevation)
        assert np.array_equal(a.rss, b.rss)

    def test_demo_scene_shape(self):
        series = generate_series((20, 20, 0), DEMO_ANCHORS, DEMO_PROFILES, PARAMS, 5, np.random.default_rng(1))
        assert series.n_anchors == 4
        assert series.t_steps == 5

    def test_empirical_noise_scale(self):
        # single anchor, sigma_n = 2 dB: sample std over 1e5 steps within 2%
        anchor = np.array([[0.0, 0.0, 0.0]])
        profile = [NoiseProfile(0.01, 0.01, 2.0)]
        series = generate_series(
            (30, 4, 7), anchor, profile, PARAMS, 100000, np.random.default_rng(17)
        )
        noise = series.rss[0] - rss_true((30, 4, 7), anchor[0], PARAMS)
        assert np.std(noise) == pytest.approx(2.0, rel=0.02)
        assert np.mean(noise) == pytest.approx(0.0, abs=0.05)

    def test_length_mismatch_rejected(self):
        with pytest.raises(ValueError):
            generate_series((1, 2, 3), DEMO_ANCHORS, DEMO_PROFILES[:2], PARAMS, 3, np.random.default_rng(0))

    def test_propagates_coincidence(self):
        with pytest.raises(CoincidentNodesError):
            generate_series((10, 10, 10), DEMO_ANCHORS, DEMO_PROFILES, PARAMS, 3, np.random.default_rng(0))

    def test_averaging_variance_reduction(self):
        # Var of the T-step mean error must be sigma^2 / T.  Anchors with equal
        # profiles are independent replicas, giving 1e5 repetitions in one call.
        reps, t_steps, sigma = 100000, 5, 0.05
        anchors = np.tile([[0.0, 0.0, 0.0]], (reps, 1))
        profiles = [NoiseProfile(sigma, sigma, 1.0)] * reps
        target = (25.0, 14.0, 9.0)
        series = generate_series(target, anchors, profiles, PARAMS, t_steps, np.random.default_rng(3))
        avg = time_average(series)
        errors = avg.azimuth - azimuth_true(target, anchors[0])
        assert np.var(errors) == pytest.approx(sigma**2 / t_steps, rel=0.05)


class TestTimeAverage:
    def test_single_step_is_identity(self):
        series = MeasurementSeries(
            azimuth=[[0.3], [1.1]], elevation=[[1.0], [0.2]], rss=[[-40.0], [-50.0]]
        )
        avg = time_average(series)
        np.testing.assert_array_equal(avg.azimuth, [0.3, 1.1])
        np.testing.assert_array_equal(avg.rss, [-40.0, -50.0])

    def test_constant_series(self):
        series = MeasurementSeries(
            azimuth=np.full((3, 9), 0.7),
            elevation=np.full((3, 9), 1.2),
            rss=np.full((3, 9), -33.0),
        )
        avg = time_average(series)
        np.testing.assert_allclose(avg.azimuth, 0.7, atol=1e-15)

    def test_matches_naive_summation(self):
        rng = np.random.default_rng(8)
        series = generate_series((20, 20, 0), DEMO_ANCHORS, DEMO_PROFILES, PARAMS, 50, rng)
        avg = time_average(series)
        for i in range(4):
            expected = math.fsum(series.azimuth[i]) / 50
            assert avg.azimuth[i] == pytest.approx(expected, abs=1e-12)
            expected = math.fsum(series.rss[i]) / 50
            assert avg.rss[i] == pytest.approx(expected, abs=1e-12)

    def test_no_wrap_handling(self):
        # samples straddling +/-pi average arithmetically, by design
        series = MeasurementSeries(
            azimuth=[[math.pi - 0.1, -math.pi + 0.1]],
            elevation=[[1.0, 1.0]],
            rss=[[-40.0, -40.0]],
        )
        assert time_average(series).azimuth[0] == pytest.approx(0.0, abs=1e-15)


class TestSeriesValidation:
    def test_rejects_ragged_shapes(self):
        with pytest.raises(ValueError):
            MeasurementSeries(azimuth=np.zeros((2, 3)), elevation=np.zeros((2, 4)), rss=np.zeros((2, 3)))

    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            MeasurementSeries(azimuth=np.zeros((2, 0)), elevation=np.zeros((2, 0)), rss=np.zeros((2, 0)))


class TestSeriesCsv:
    def test_round_trip_lossless(self, tmp_path):
        series = generate_series((20, 20, 0), DEMO_ANCHORS, DEMO_PROFILES, PARAMS, 5, np.random.default_rng(2))
        path = tmp_path / "series.csv"
        write_series_csv(series, path)
        back = read_series_csv(path)
        assert np.array_equal(back.azimuth, series.azimuth)
        assert np.array_equal(back.elevation, series.elevation)
        assert np.array_equal(back.rss, series.rss)

    def test_repeated_writes_byte_identical(self, tmp_path):
        series = generate_series((20, 20, 0), DEMO_ANCHORS, DEMO_PROFILES, PARAMS, 5, np.random.default_rng(2))
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        write_series_csv(series, a)
        write_series_csv(series, b)
        assert a.read_bytes() == b.read_bytes()

    def test_row_count(self, tmp_path):
        series = generate_series((20, 20, 0), DEMO_ANCHORS, DEMO_PROFILES, PARAMS, 5, np.random.default_rng(2))
        path = tmp_path / "series.csv"
        write_series_csv(series, path)
        lines = path.read_text().strip().splitlines()
        assert len(lines) == 1 + 4 * 5  # header + one row per (anchor, step)

    def test_bad_header(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("a,b,c\n")
        with pytest.raises(SeriesFormatError) as excinfo:
            read_series_csv(path)
        assert excinfo.value.row == 1

    def test_malformed_row_reports_line_number(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text(
            "anchor_index,time_step,azimuth_rad,elevation_rad,rss_db\n"
            "0,0,0.1,0.2,-40\n"
            "0,1,not-a-number,0.2,-40\n"
        )
        with pytest.raises(SeriesFormatError) as excinfo:
            read_series_csv(path)
        assert excinfo.value.row == 3

    def test_wrong_field_count_reports_line_number(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text(
            "anchor_index,time_step,azimuth_rad,elevation_rad,rss_db\n0,0,0.1,0.2\n"
        )
        with pytest.raises(SeriesFormatError) as excinfo:
            read_series_csv(path)
        assert excinfo.value.row == 2

    def test_duplicate_entry_rejected(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text(
            "anchor_index,time_step,azimuth_rad,elevation_rad,rss_db\n"
            "0,0,0.1,0.2,-40\n"
            "0,0,0.1,0.2,-40\n"
        )
        with pytest.raises(SeriesFormatError) as excinfo:
            read_series_csv(path)
        assert excinfo.value.row == 3

    def test_incomplete_grid_rejected(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text(
            "anchor_index,time_step,azimuth_rad,elevation_rad,rss_db\n"
            "0,0,0.1,0.2,-40\n"
            "1,1,0.1,0.2,-40\n"
        )
        with pytest.raises(SeriesFormatError):
            read_series_csv(path)
