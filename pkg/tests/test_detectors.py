"""Streaming detector contract and the baseline implementations."""

import math
from datetime import datetime, timedelta

import pytest

from htmpm.detectors import (DetectorConfig, HtmDetector, NullDetector,
                             RandomDetector, ThresholdDetector,
                             WindowedGaussianDetector, build_detector,
                             run_file)
from htmpm.errors import DataError, StreamError, ValidationError

T0 = datetime(2021, 1, 1)


def series(values, step_seconds=60):
    return [(T0 + timedelta(seconds=i * step_seconds), float(v))
            for i, v in enumerate(values)]


class TestDetectorConfig:
    def test_unknown_kind_rejected(self):
        with pytest.raises(ValidationError):
            DetectorConfig("lstm", {})

    def test_unknown_parameter_rejected(self):
        with pytest.raises(ValidationError):
            DetectorConfig("null", {"window": 5})
        with pytest.raises(ValidationError):
            DetectorConfig("htm_hd", {"boost": 2.0})

    def test_known_parameters_accepted(self):
        DetectorConfig("windowed_gaussian", {"window": 100})
        DetectorConfig("threshold", {"threshold": 2.0, "feature": "rms"})
        DetectorConfig("htm_hd", {"n_columns": 1024, "value_min": 0.0,
                                  "value_max": 1.0})


class TestNullAndRandom:
    def test_null_is_constant_half(self):
        det = NullDetector()
        assert [det.step(t, v) for t, v in series([1, 2, 3, 4, 5])] == [0.5] * 5

    def test_random_seeded_and_bounded(self):
        a = RandomDetector(seed=7)
        b = RandomDetector(seed=7)
        sa = [a.step(t, v) for t, v in series(range(100))]
        sb = [b.step(t, v) for t, v in series(range(100))]
        assert sa == sb
        assert all(0.0 <= s < 1.0 for s in sa)

    def test_random_seeds_differ(self):
        a = RandomDetector(seed=1).step(T0, 0.0)
        b = RandomDetector(seed=2).step(T0, 0.0)
        assert a != b


class TestThresholdDetector:
    def test_fixed_threshold(self):
        det = ThresholdDetector(threshold=2.0)
        out = [det.step(t, v) for t, v in series([1.0, 2.5])]
        assert out == [0.0, 1.0]

    def test_absolute_value_feature(self):
        det = ThresholdDetector(threshold=2.0)
        assert det.step(T0, -3.0) == 1.0

    def test_calibration_mean_plus_sigmas(self):
        det = ThresholdDetector()
        det.calibrate([1.0, 2.0, 3.0])
        expected = 2.0 + 4.0 * math.sqrt(2.0 / 3.0)
        assert det.threshold == pytest.approx(expected)

    def test_calibration_on_empty_prefix_fails(self):
        with pytest.raises(DataError):
            ThresholdDetector().calibrate([])

    def test_uncalibrated_step_fails(self):
        with pytest.raises(ValidationError):
            ThresholdDetector().step(T0, 1.0)

    def test_rms_feature(self):
        det = ThresholdDetector(threshold=2.5, feature="rms", rms_window=2)
        out = [det.step(t, v) for t, v in series([3.0, 3.0, 0.0])]
        # rms windows: [3] -> 3, [3,3] -> 3, [3,0] -> 2.12
        assert out == [1.0, 1.0, 0.0]

    def test_bad_feature_rejected(self):
        with pytest.raises(ValidationError):
            ThresholdDetector(feature="peak")


class TestWindowedGaussian:
    def test_first_records_are_half(self):
        det = WindowedGaussianDetector()
        out = [det.step(t, v) for t, v in series([1.0, 2.0, 3.0])]
        assert out[0] == 0.5 and out[1] == 0.5

    def test_outlier_saturates(self):
        det = WindowedGaussianDetector(window=100)
        for t, v in series([0.0, 0.01] * 50):
            det.step(t, v)
        assert det.step(T0 + timedelta(days=1), 10.0) > 0.999999

    def test_in_distribution_value_scores_low(self):
        det = WindowedGaussianDetector(window=100)
        for t, v in series([0.0, 1.0] * 50):
            det.step(t, v)
        assert det.step(T0 + timedelta(days=1), 0.5) < 0.1

    def test_score_matches_two_sided_tail(self):
        det = WindowedGaussianDetector(window=10)
        vals = [1.0, 3.0, 5.0, 7.0]
        for t, v in series(vals):
            det.step(t, v)
        mu = sum(vals) / 4
        sigma = math.sqrt(sum((v - mu) ** 2 for v in vals) / 4)
        z = abs(10.0 - mu) / sigma
        expected = math.erf(z / math.sqrt(2.0))
        assert det.step(T0 + timedelta(days=1), 10.0) == pytest.approx(expected)

    def test_window_too_small_rejected(self):
        with pytest.raises(ValidationError):
            WindowedGaussianDetector(window=1)


class TestHtmDetector:
    def test_requires_range_or_calibration(self):
        det = HtmDetector({}, seed=0)
        with pytest.raises(ValidationError):
            det.step(T0, 1.0)

    def test_fixed_range_skips_calibration(self):
        det = HtmDetector({"value_min": 0.0, "value_max": 10.0}, seed=0)
        s = det.step(T0, 5.0)
        assert 0.0 <= s <= 1.0

    def test_raw_mode_emits_prediction_error(self):
        det = HtmDetector({"value_min": 0.0, "value_max": 10.0}, seed=0,
                          use_likelihood=False)
        # the very first record cannot have been predicted
        assert det.step(T0, 5.0) == 1.0

    def test_unknown_parameter_rejected(self):
        with pytest.raises(ValidationError):
            HtmDetector({"nonsense": 1}, seed=0)


class TestBuildDetector:
    @pytest.mark.parametrize("kind,cls", [
        ("null", NullDetector),
        ("random", RandomDetector),
        ("threshold", ThresholdDetector),
        ("windowed_gaussian", WindowedGaussianDetector),
        ("htm_hd", HtmDetector),
        ("htm_raw", HtmDetector),
    ])
    def test_factory_kinds(self, kind, cls):
        assert isinstance(build_detector(DetectorConfig(kind, {})), cls)

    def test_likelihood_flag_follows_kind(self):
        assert build_detector(DetectorConfig("htm_hd", {})).use_likelihood
        assert not build_detector(DetectorConfig("htm_raw", {})).use_likelihood


class TestRunFile:
    def test_score_count_and_training_suppression(self):
        recs = series(range(100))
        scores = run_file(DetectorConfig("null", {}), recs, train_fraction=0.15)
        assert len(scores) == 100
        assert scores[:15] == [0.0] * 15
        assert scores[15:] == [0.5] * 85

    def test_zero_train_fraction_scores_everything(self):
        recs = series(range(10))
        scores = run_file(DetectorConfig("null", {}), recs, train_fraction=0.0)
        assert scores == [0.5] * 10

    def test_empty_series_rejected(self):
        with pytest.raises(DataError):
            run_file(DetectorConfig("null", {}), [])

    def test_out_of_order_timestamps_rejected(self):
        recs = series(range(5))
        recs[3] = (recs[1][0] - timedelta(seconds=1), 0.0)
        with pytest.raises(StreamError):
            run_file(DetectorConfig("null", {}), recs)

    def test_bad_train_fraction_rejected(self):
        with pytest.raises(ValidationError):
            run_file(DetectorConfig("null", {}), series([1.0]), train_fraction=1.0)

    def test_seeded_rerun_is_identical(self):
        recs = series([0, 5, 9, 2, 7, 4] * 30)
        cfg = DetectorConfig("htm_hd", {}, seed=13)
        assert run_file(cfg, recs) == run_file(cfg, recs)

    def test_scores_within_unit_interval(self):
        recs = series([0, 5, 9, 2, 7, 4] * 20)
        for kind in ("htm_hd", "htm_raw", "windowed_gaussian", "threshold"):
            scores = run_file(DetectorConfig(kind, {}, seed=1), recs)
            assert all(0.0 <= s <= 1.0 for s in scores)
