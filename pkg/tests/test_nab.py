"""Benchmark scoring: windows, positional sigmoid, threshold sweep."""

import math
import random
from datetime import datetime, timedelta

import pytest

from htmpm.errors import DataError, ValidationError
from htmpm.nab import (LOW_FN, LOW_FP, PROFILES, STANDARD, AnomalyWindow,
                       ScoringProfile, benchmark, make_windows, normalize,
                       null_outputs, optimize_threshold, oracle_outputs,
                       score_run, sigma)

T0 = datetime(2021, 1, 1)
UNIT = ScoringProfile("unit", a_tp=1.0, a_fp=0.0, a_tn=0.0, a_fn=-1.0)


def ts(minutes):
    return T0 + timedelta(minutes=minutes)


def timeline(n, step_minutes=1):
    return [ts(i * step_minutes) for i in range(n)]


class TestTypes:
    def test_window_ordering_enforced(self):
        with pytest.raises(ValidationError):
            AnomalyWindow(ts(5), ts(5))

    def test_window_containment_inclusive(self):
        w = AnomalyWindow(ts(10), ts(20))
        assert ts(10) in w and ts(20) in w and ts(15) in w
        assert ts(9) not in w and ts(21) not in w

    def test_profile_weight_signs(self):
        with pytest.raises(ValidationError):
            ScoringProfile("bad", a_tp=0.0, a_fp=-0.1, a_tn=0.0, a_fn=-1.0)
        with pytest.raises(ValidationError):
            ScoringProfile("bad", a_tp=1.0, a_fp=0.1, a_tn=0.0, a_fn=-1.0)

    def test_reference_profiles(self):
        assert STANDARD.a_fp == -0.11 and STANDARD.a_fn == -1.0
        assert LOW_FP.a_fp == -0.22
        assert LOW_FN.a_fn == -2.0
        assert set(PROFILES) == {"standard", "low_fp", "low_fn"}


class TestMakeWindows:
    def test_single_label_centered_window(self):
        span = (ts(0), ts(1000))
        [w] = make_windows([ts(500)], span, window_budget_fraction=0.10)
        assert (w.end - w.start) == timedelta(minutes=100)
        assert w.start + (w.end - w.start) / 2 == ts(500)

    def test_budget_split_across_labels(self):
        span = (ts(0), ts(1000))
        windows = make_windows([ts(200), ts(800)], span, 0.10)
        assert all((w.end - w.start) == timedelta(minutes=50) for w in windows)

    def test_no_labels_no_windows(self):
        assert make_windows([], (ts(0), ts(100)), 0.10) == []

    def test_close_labels_merge(self):
        span = (ts(0), ts(1000))
        windows = make_windows([ts(500), ts(510)], span, 0.10)
        assert len(windows) == 1
        assert windows[0].start == ts(475) and windows[0].end == ts(535)

    def test_windows_clipped_to_span(self):
        span = (ts(0), ts(1000))
        [w] = make_windows([ts(0)], span, 0.10)
        assert w.start == ts(0) and w.end == ts(50)

    def test_label_outside_span_rejected(self):
        with pytest.raises(DataError):
            make_windows([ts(2000)], (ts(0), ts(1000)), 0.10)

    def test_degenerate_span_rejected(self):
        with pytest.raises(DataError):
            make_windows([ts(0)], (ts(0), ts(0)), 0.10)

    def test_bad_budget_rejected(self):
        with pytest.raises(ValidationError):
            make_windows([ts(5)], (ts(0), ts(10)), 1.5)


class TestSigma:
    def test_zero_at_window_right_edge(self):
        for profile in (UNIT, STANDARD, LOW_FP, LOW_FN):
            assert sigma(0.0, profile) == pytest.approx(0.0)

    def test_left_edge_value(self):
        assert sigma(-1.0, UNIT) == pytest.approx(0.9866142981514303)

    def test_fig_style_midwindow_value(self):
        assert sigma(-0.31, UNIT) == pytest.approx(0.65, abs=0.01)

    def test_saturation_past_three_window_lengths(self):
        assert sigma(3.1, UNIT) == -1.0
        assert sigma(100.0, STANDARD) == -(STANDARD.a_tp - STANDARD.a_fp)

    def test_strictly_decreasing_inside_operating_range(self):
        ys = [-3.0 + 0.25 * i for i in range(25)]
        vals = [sigma(y, STANDARD) for y in ys]
        assert all(a > b for a, b in zip(vals, vals[1:]))

    def test_scales_with_profile_weight(self):
        assert sigma(-1.0, STANDARD) == pytest.approx(1.11 * sigma(-1.0, UNIT))


class TestScoreRun:
    def test_all_missed_windows(self):
        windows = [AnomalyWindow(ts(10), ts(20)), AnomalyWindow(ts(50), ts(60))]
        output = [(t, 0.0) for t in timeline(100)]
        assert score_run(output, windows, 0.5, STANDARD) == pytest.approx(-2.0)

    def test_detection_at_left_edge(self):
        windows = [AnomalyWindow(ts(10), ts(20))]
        output = [(ts(10), 1.0)]
        assert score_run(output, windows, 0.5, UNIT) == pytest.approx(
            0.9866142981514303)

    def test_only_earliest_in_window_detection_counts(self):
        windows = [AnomalyWindow(ts(10), ts(20))]
        one = score_run([(ts(10), 1.0)], windows, 0.5, UNIT)
        many = score_run([(ts(10), 1.0), (ts(15), 1.0), (ts(20), 1.0)],
                         windows, 0.5, UNIT)
        assert many == pytest.approx(one)

    def test_fp_before_any_window_gets_full_penalty(self):
        windows = [AnomalyWindow(ts(50), ts(60))]
        got = score_run([(ts(5), 1.0)], windows, 0.5, STANDARD)
        assert got == pytest.approx(-(1.11) + STANDARD.a_fn)

    def test_fp_after_window_penalized_by_distance(self):
        windows = [AnomalyWindow(ts(10), ts(20))]
        near = score_run([(ts(21), 1.0)], windows, 0.5, UNIT)
        far = score_run([(ts(60), 1.0)], windows, 0.5, UNIT)
        # both totals include the missed-window penalty of -1
        assert far == pytest.approx(-2.0)  # saturated FP plus the miss
        assert far < near < -1.0

    def test_more_fps_never_score_better(self):
        windows = [AnomalyWindow(ts(10), ts(20))]
        base = [(ts(15), 1.0)]
        worse = base + [(ts(40), 1.0)]
        assert (score_run(worse, windows, 0.5, STANDARD)
                < score_run(base, windows, 0.5, STANDARD))

    def test_threshold_out_of_range_rejected(self):
        with pytest.raises(ValidationError):
            score_run([(ts(0), 0.5)], [], 1.1, STANDARD)


class TestOptimizeThreshold:
    def single_file(self, output, windows):
        return {"f.csv": output}, {"f.csv": windows}

    def test_silent_detector_misses_everything_at_threshold_one(self):
        windows = [AnomalyWindow(ts(10), ts(20)), AnomalyWindow(ts(50), ts(60))]
        outputs, wbf = self.single_file([(t, 0.0) for t in timeline(100)], windows)
        thr, raw = optimize_threshold(outputs, wbf, STANDARD)
        assert thr == 1.0 and raw == pytest.approx(-2.0)

    def test_oracle_like_detector(self):
        windows = [AnomalyWindow(ts(10), ts(20)), AnomalyWindow(ts(50), ts(60))]
        output = [(t, 1.0 if t in (ts(10), ts(50)) else 0.0)
                  for t in timeline(100)]
        outputs, wbf = self.single_file(output, windows)
        thr, raw = optimize_threshold(outputs, wbf, UNIT)
        assert 0.0 < thr <= 1.0
        assert raw == pytest.approx(2 * 0.9866142981514303)

    def test_tie_resolves_to_highest_threshold(self):
        windows = [AnomalyWindow(ts(0), ts(10))]
        outputs, wbf = self.single_file([(ts(5), 0.7)], windows)
        thr, _ = optimize_threshold(outputs, wbf, UNIT)
        assert thr == 0.7

    def test_empty_corpus_rejected(self):
        with pytest.raises(ValidationError):
            optimize_threshold({}, {}, STANDARD)

    def test_matches_brute_force_reference(self):
        rng = random.Random(11)
        outputs, wbf = {}, {}
        for name in ("a.csv", "b.csv"):
            times = timeline(60)
            outputs[name] = [(t, round(rng.random(), 3)) for t in times]
            labels = sorted(rng.sample(range(5, 55), 2))
            wbf[name] = make_windows([ts(m) for m in labels],
                                     (times[0], times[-1]), 0.10)
        for profile in (STANDARD, LOW_FP, LOW_FN, UNIT):
            candidates = {0.0, 1.0}
            for output in outputs.values():
                candidates.update(s for _, s in output)
            best_thr, best_raw = None, None
            for cand in sorted(candidates, reverse=True):
                total = sum(score_run(outputs[n], wbf[n], cand, profile)
                            for n in outputs)
                if best_raw is None or total > best_raw:
                    best_thr, best_raw = cand, total
            thr, raw = optimize_threshold(outputs, wbf, profile)
            assert thr == pytest.approx(best_thr)
            assert raw == pytest.approx(best_raw, abs=1e-9)


class TestNormalize:
    def test_null_maps_to_zero(self):
        assert normalize(-5.0, -5.0, 10.0) == 0.0

    def test_perfect_maps_to_hundred(self):
        assert normalize(10.0, -5.0, 10.0) == 100.0

    def test_worse_than_null_clamps_to_zero(self):
        assert normalize(-50.0, -5.0, 10.0) == 0.0

    def test_midpoint(self):
        assert normalize(2.5, -5.0, 10.0) == pytest.approx(50.0)

    def test_degenerate_bounds_rejected(self):
        with pytest.raises(ValidationError):
            normalize(0.0, 5.0, 5.0)


class TestBenchmark:
    def make_corpus(self):
        times = {"a.csv": timeline(200), "b.csv": timeline(200)}
        wbf = {
            "a.csv": make_windows([ts(60), ts(140)], (ts(0), ts(199)), 0.10),
            "b.csv": make_windows([ts(100)], (ts(0), ts(199)), 0.10),
        }
        return times, wbf

    def test_oracle_normalizes_to_hundred(self):
        times, wbf = self.make_corpus()
        outputs = oracle_outputs(times, wbf)
        results = benchmark("oracle", outputs, wbf, [STANDARD, LOW_FP, LOW_FN])
        for r in results:
            assert r.normalized_score == pytest.approx(100.0, abs=1e-9)

    def test_null_normalizes_to_zero(self):
        times, wbf = self.make_corpus()
        results = benchmark("null", null_outputs(times), wbf, [STANDARD])
        assert results[0].normalized_score == pytest.approx(0.0, abs=1e-9)

    def test_result_rows_per_profile(self):
        times, wbf = self.make_corpus()
        results = benchmark("x", null_outputs(times), wbf,
                            [STANDARD, LOW_FP, LOW_FN])
        assert [r.profile for r in results] == ["standard", "low_fp", "low_fn"]
