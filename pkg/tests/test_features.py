"""The eight per-frame statistics against direct-summation and scipy oracles."""

import numpy as np
import pytest

import oracles
from conftest import assert_rel_close
from triframe.audio_io import FrameTriple, MonoSignal, split_frames
from triframe.features import (
    BASELINE_NAMES,
    FEATURE_NAMES,
    DegenerateFrameError,
    extract_baseline_features,
    extract_feature_vector,
    extract_frame_features,
    fano_factor,
    power_spectral_density,
    standardized_moment,
    welch_psd,
)


def random_frame(rng, n=None):
    """A varied-shape amplitude frame in [-1, 1]."""
    if n is None:
        n = int(rng.integers(8, 20000))
    kind = rng.integers(0, 3)
    if kind == 0:
        x = rng.uniform(-0.8, 0.8, n) + rng.uniform(-0.2, 0.2)
    elif kind == 1:
        x = rng.normal(rng.uniform(-0.3, 0.3), rng.uniform(0.05, 0.3), n)
    else:  # skewed
        x = rng.exponential(rng.uniform(0.05, 0.2), n) - rng.uniform(0.0, 0.3)
    return np.clip(x, -1.0, 1.0)


class TestStandardizedMoment:
    def test_symmetric_two_point_skewness_zero(self):
        assert standardized_moment([1, -1, 1, -1], 3) == 0.0

    def test_symmetric_two_point_kurtosis_one(self):
        assert standardized_moment([1, -1, 1, -1], 4) == 1.0

    def test_gaussian_kurtosis_monte_carlo(self):
        # population kurtosis of a Gaussian is 3
        x = np.random.default_rng(2024).normal(0.0, 1.0, 10**6)
        assert abs(standardized_moment(x, 4) - 3.0) < 0.05

    def test_mean_and_variance_orders(self):
        x = [1.0, 2.0, 3.0, 4.0]
        assert standardized_moment(x, 1) == 2.5
        assert standardized_moment(x, 2) == 1.25

    def test_degenerate_sigma(self):
        for k in (3, 4, 5, 6):
            with pytest.raises(DegenerateFrameError):
                standardized_moment([0.3, 0.3, 0.3], k)

    def test_matches_naive_two_pass_oracle(self, rng):
        for _ in range(60):
            x = random_frame(rng, int(rng.integers(8, 3000)))
            for k in range(1, 7):
                assert_rel_close(
                    standardized_moment(x, k), oracles.naive_moment(x, k),
                    label="k=%d" % k,
                )

    def test_one_pass_vs_two_pass_agreement(self, rng):
        for _ in range(30):
            x = random_frame(rng, int(rng.integers(8, 2000)))
            for k in range(1, 7):
                assert_rel_close(
                    standardized_moment(x, k), oracles.one_pass_moment(x, k),
                    rtol=1e-10, atol=1e-13, label="k=%d" % k,
                )

    def test_scale_equivariance(self, rng):
        x = random_frame(rng, 500)
        c = 0.37
        assert_rel_close(standardized_moment(c * x, 1), c * standardized_moment(x, 1))
        assert_rel_close(standardized_moment(c * x, 2), c**2 * standardized_moment(x, 2))
        for k in (3, 4, 5, 6):
            assert_rel_close(
                standardized_moment(c * x, k), standardized_moment(x, k), rtol=1e-9
            )
        assert_rel_close(fano_factor(c * x), c * fano_factor(x), rtol=1e-9)

    def test_shift_behavior(self, rng):
        x = random_frame(rng, 500) * 0.5
        shift = 0.25
        assert_rel_close(
            standardized_moment(x + shift, 1), standardized_moment(x, 1) + shift
        )
        assert_rel_close(
            standardized_moment(x + shift, 2), standardized_moment(x, 2), rtol=1e-9
        )
        for k in (3, 4, 5, 6):
            assert_rel_close(
                standardized_moment(x + shift, k), standardized_moment(x, k),
                rtol=1e-7, atol=1e-9,
            )

    def test_kurtosis_skewness_population_inequality(self, rng):
        for _ in range(40):
            x = random_frame(rng)
            skew = standardized_moment(x, 3)
            kurt = standardized_moment(x, 4)
            assert kurt >= skew**2 + 1.0 - 1e-9

    def test_hyper_flatness_lower_bound(self, rng):
        for _ in range(20):
            x = random_frame(rng)
            assert standardized_moment(x, 6) >= 1.0 - 1e-9


class TestFanoFactor:
    def test_constant_samples(self):
        assert fano_factor([2, 2, 2, 2]) == 0.0

    def test_positive_mean(self):
        assert fano_factor([1, 3]) == 0.5

    def test_negative_mean(self):
        assert fano_factor([-1, -3]) == -0.5

    def test_zero_mean_guard_stays_finite(self):
        x = np.array([1e-15, -1e-15, 1e-15, -1e-15])
        value = fano_factor(x)
        assert np.isfinite(value)
        assert value >= 0.0  # zero mean counts as positive

    def test_matches_naive_oracle(self, rng):
        for _ in range(40):
            x = random_frame(rng)
            assert_rel_close(fano_factor(x), oracles.naive_fano(x), rtol=1e-9)


class TestPowerSpectralDensity:
    def test_zero_signal(self):
        assert power_spectral_density(np.zeros(4096), 8000.0) == 0.0

    def test_sine_matches_reference_welch(self):
        t = np.arange(4096) / 8000.0
        x = np.sin(2 * np.pi * 1000.0 * t)  # exact bin at nperseg=1024
        mine = power_spectral_density(x, 8000.0)
        ref = oracles.reference_psd_mean(x, 8000.0)
        assert_rel_close(mine, ref, rtol=1e-9, atol=0.0)

    def test_random_inputs_match_reference_welch(self, rng):
        for _ in range(25):
            n = int(rng.integers(8, 60000))
            x = random_frame(rng, n)
            rate = float(rng.choice([8000.0, 22050.0, 44100.0]))
            assert_rel_close(
                power_spectral_density(x, rate),
                oracles.reference_psd_mean(x, rate),
                rtol=1e-9, atol=1e-300,
            )

    def test_parseval_white_noise(self):
        x = np.random.default_rng(7).normal(0.0, 0.4, 65536)
        freqs, psd = welch_psd(x, 8000.0)
        df = freqs[1] - freqs[0]
        power = float(np.sum(psd) * df)
        variance = float(x.var())
        assert abs(power - variance) / variance < 0.02

    def test_segment_length_parameter(self, rng):
        x = random_frame(rng, 4000)
        short = welch_psd(x, 8000.0, segment_length=256)[1]
        assert short.size == 129  # 256 // 2 + 1


class TestFrameFeatures:
    def test_alternating_frame(self):
        frame = MonoSignal(8000, np.array([1.0, -1.0] * 4))
        feats = extract_frame_features(frame)
        assert feats.mean == 0.0
        assert feats.variance == 1.0
        assert feats.skewness == 0.0
        assert feats.kurtosis == 1.0

    def test_constant_frame_degenerate(self):
        frame = MonoSignal(8000, np.full(64, 0.3))
        with pytest.raises(DegenerateFrameError):
            extract_frame_features(frame)

    def test_minimum_length_enforced(self):
        with pytest.raises(ValueError):
            extract_frame_features(MonoSignal(8000, np.array([0.1, 0.2, 0.3])))


class TestFeatureVector:
    def test_name_order_is_statistic_major(self):
        assert FEATURE_NAMES[:4] == ("Mean-I", "Mean-II", "Mean-III", "Variance-I")
        assert FEATURE_NAMES[-1] == "PSD-III"
        assert len(FEATURE_NAMES) == 24
        assert BASELINE_NAMES == (
            "Mean", "Variance", "Skewness", "Kurtosis", "Hyper-skewness",
            "Hyper-flatness", "Fano-Factor", "PSD",
        )

    def test_identical_frames_give_identical_triples(self, rng):
        x = random_frame(rng, 600)
        frame = MonoSignal(8000, x)
        vec = extract_feature_vector(FrameTriple(frame, frame, frame))
        by_stat = vec.values.reshape(8, 3)
        for row in by_stat:
            assert row[0] == row[1] == row[2]

    def test_entries_compose_from_split(self, rng):
        x = random_frame(rng, 1000)
        frames = split_frames(MonoSignal(8000, x))
        vec = extract_feature_vector(frames)
        names = list(FEATURE_NAMES)
        assert vec.values[names.index("Mean-I")] == standardized_moment(x[:50], 1)
        assert vec.values[names.index("Variance-III")] == standardized_moment(
            x[-50:], 2
        )

    def test_loud_opening_shows_in_variance_one(self):
        rng = np.random.default_rng(99)
        n = 4000
        x = np.clip(rng.normal(0.1, 0.05, n), -1, 1)  # quiet middle
        x[:200] = np.clip(rng.normal(0.1, 0.4, 200), -1, 1)  # loud opening
        x[-200:] = np.clip(rng.normal(0.1, 0.4, 200), -1, 1)  # loud close
        vec = extract_feature_vector(split_frames(MonoSignal(8000, x)))
        names = list(FEATURE_NAMES)
        assert vec.values[names.index("Variance-I")] > vec.values[
            names.index("Variance-II")
        ]

    def test_degenerate_frame_identity_in_error(self):
        quiet = MonoSignal(8000, np.full(100, 0.2))
        noisy = MonoSignal(8000, np.random.default_rng(0).normal(0, 0.1, 100))
        with pytest.raises(DegenerateFrameError, match="frame II"):
            extract_feature_vector(FrameTriple(noisy, quiet, noisy))


class TestBaseline:
    def test_repeated_frame_matches_frame_statistics(self, rng):
        # time-domain statistics of a tiled signal equal the tile's; the PSD
        # estimate is segmentation-dependent and is checked elsewhere
        x = random_frame(rng, 500)
        whole = MonoSignal(8000, np.tile(x, 3))
        base = extract_baseline_features(whole)
        tile_feats = extract_frame_features(MonoSignal(8000, x))
        assert base.values[0] == pytest.approx(tile_feats.mean, rel=1e-12)
        assert base.values[1] == pytest.approx(tile_feats.variance, rel=1e-12)
        for idx in range(2, 6):
            assert base.values[idx] == pytest.approx(
                tile_feats.as_array()[idx], rel=1e-9
            )

    def test_constant_signal_degenerate(self):
        with pytest.raises(DegenerateFrameError):
            extract_baseline_features(MonoSignal(8000, np.full(500, 0.25)))

    def test_total_variance_bounds(self, rng):
        # law of total variance: the pooled variance is at least the convex
        # floor of the per-frame variances and at most the max of
        # variance + squared mean offset
        for _ in range(20):
            parts = [random_frame(rng, int(rng.integers(50, 400))) for _ in range(3)]
            whole = np.concatenate(parts)
            total_var = standardized_moment(whole, 2)
            mu = whole.mean()
            per_var = [standardized_moment(p, 2) for p in parts]
            per_shift = [
                v + (p.mean() - mu) ** 2 for v, p in zip(per_var, parts)
            ]
            assert total_var >= min(per_var) - 1e-12
            assert total_var <= max(per_shift) + 1e-12
