"""NAB-style benchmark scoring.

Labels (anomaly instants) become anomaly windows; detections are scored by
a scaled sigmoid of their position relative to the window, early in-window
detections earning close to the full credit and detections past the window
turning into penalties. Missed windows cost the false-negative weight.
Thresholds are optimized per profile over the whole corpus, and raw scores
are normalized to 0-100 against the null detector and a perfect oracle.

Note on the sigmoid: the scoring curve is (a_tp - a_fp) * (2/(1+e^{5y}) - 1),
which is +~1 at the window's left edge, 0 at its right edge, and saturates
to -(a_tp - a_fp) for detections more than 3 window-lengths late.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from datetime import datetime

from .errors import DataError, ValidationError


@dataclass(frozen=True)
class AnomalyWindow:
    start: datetime
    end: datetime
    source_file: str = ""

    def __post_init__(self):
        if not self.start < self.end:
            raise ValidationError(f"window start must precede end: {self.start}..{self.end}")

    def __contains__(self, t: datetime) -> bool:
        return self.start <= t <= self.end


@dataclass(frozen=True)
class ScoringProfile:
    name: str
    a_tp: float
    a_fp: float
    a_tn: float
    a_fn: float

    def __post_init__(self):
        if self.a_tp <= 0:
            raise ValidationError("a_tp must be positive")
        if self.a_fp > 0 or self.a_fn > 0:
            raise ValidationError("a_fp and a_fn are penalties and must be <= 0")


STANDARD = ScoringProfile("standard", a_tp=1.0, a_fp=-0.11, a_tn=0.0, a_fn=-1.0)
LOW_FP = ScoringProfile("low_fp", a_tp=1.0, a_fp=-0.22, a_tn=0.0, a_fn=-1.0)
LOW_FN = ScoringProfile("low_fn", a_tp=1.0, a_fp=-0.11, a_tn=0.0, a_fn=-2.0)
PROFILES = {p.name: p for p in (STANDARD, LOW_FP, LOW_FN)}


@dataclass(frozen=True)
class BenchmarkResult:
    detector: str
    profile: str
    raw_score: float
    normalized_score: float
    optimized_threshold: float


def make_windows(labels, file_span, window_budget_fraction: float = 0.10,
                 source_file: str = "") -> list[AnomalyWindow]:
    """One window per label, centered on it, the total window budget split
    evenly across labels. Overlapping windows merge; all clip to the span.
    """
    if not 0.0 < window_budget_fraction < 1.0:
        raise ValidationError("window budget fraction must be in (0, 1)")
    labels = sorted(labels)
    if not labels:
        return []
    span_start, span_end = file_span
    if span_start >= span_end:
        raise DataError(f"degenerate file span {span_start}..{span_end}")
    for t in labels:
        if not span_start <= t <= span_end:
            raise DataError(f"label {t} outside file span")
    half = (span_end - span_start) * window_budget_fraction / len(labels) / 2
    raw = [(max(t - half, span_start), min(t + half, span_end)) for t in labels]
    merged: list[tuple] = []
    for start, end in raw:
        if merged and start <= merged[-1][1]:
            merged[-1] = (merged[-1][0], max(merged[-1][1], end))
        else:
            merged.append((start, end))
    return [AnomalyWindow(s, e, source_file) for s, e in merged]


def sigma(y: float, profile: ScoringProfile) -> float:
    """Positional scoring curve. y maps the window interior to [-1, 0]
    (left edge -1, right edge 0); positions past the window are positive.
    Saturates to the full penalty beyond y = 3."""
    weight = profile.a_tp - profile.a_fp
    if y > 3.0:
        return -weight
    return weight * (2.0 / (1.0 + math.exp(5.0 * y)) - 1.0)


def _relative_position(t: datetime, window: AnomalyWindow) -> float:
    """Window interior maps to [-1, 0]; after the window, positive in units
    of the window length."""
    length = (window.end - window.start).total_seconds()
    return (t - window.end).total_seconds() / length


def score_run(output, windows: list[AnomalyWindow], threshold: float,
              profile: ScoringProfile) -> float:
    """Score one file's detector output against its windows.

    ``output`` is a sequence of (timestamp, score) pairs aligned with the
    file's records. Only the earliest detection inside each window counts;
    out-of-window detections are penalized relative to the nearest
    preceding window (full penalty when there is none). Every missed
    window deducts |a_fn|.
    """
    if not 0.0 <= threshold <= 1.0:
        raise ValidationError(f"threshold must be in [0, 1], got {threshold}")
    windows = sorted(windows, key=lambda w: w.start)
    detected: set[int] = set()
    total = 0.0
    for t, score in output:
        if score < threshold:
            continue
        inside = None
        for i, w in enumerate(windows):
            if t in w:
                inside = i
                break
        if inside is not None:
            if inside not in detected:
                detected.add(inside)
                total += sigma(_relative_position(t, windows[inside]), profile)
            continue
        preceding = None
        for w in windows:
            if w.end < t:
                preceding = w
            else:
                break
        if preceding is None:
            total += -(profile.a_tp - profile.a_fp)
        else:
            total += sigma(_relative_position(t, preceding), profile)
    total += (len(windows) - len(detected)) * profile.a_fn
    return total


def optimize_threshold(outputs: dict[str, list], windows_by_file: dict[str, list[AnomalyWindow]],
                       profile: ScoringProfile) -> tuple[float, float]:
    """Sweep every distinct score value (plus 0 and 1) over the whole corpus
    and return (threshold, raw score) maximizing the summed score; ties go
    to the highest threshold."""
    if not outputs:
        raise ValidationError("empty corpus")
    # Incremental sweep: walk candidates from high to low, activating
    # detections as the threshold drops and updating the running total.
    # Equivalent to re-scoring the corpus at every candidate (score_run is
    # the brute-force reference), but linear in the number of records.
    fp_events = []       # (score, penalty)
    tp_events = []       # (score, timestamp, window_key, sigma_value)
    n_windows = 0
    window_state: dict = {}   # window_key -> current contribution
    for name, output in outputs.items():
        windows = sorted(windows_by_file.get(name, []), key=lambda w: w.start)
        n_windows += len(windows)
        for i in range(len(windows)):
            window_state[(name, i)] = profile.a_fn
        for t, score in output:
            inside = None
            for i, w in enumerate(windows):
                if t in w:
                    inside = i
                    break
            if inside is not None:
                tp_events.append(
                    (score, t, (name, inside),
                     sigma(_relative_position(t, windows[inside]), profile))
                )
            else:
                preceding = None
                for w in windows:
                    if w.end < t:
                        preceding = w
                    else:
                        break
                if preceding is None:
                    penalty = -(profile.a_tp - profile.a_fp)
                else:
                    penalty = sigma(_relative_position(t, preceding), profile)
                fp_events.append((score, penalty))

    candidates = {0.0, 1.0}
    candidates.update(s for s, _ in fp_events)
    candidates.update(s for s, _, _, _ in tp_events)
    fp_events.sort(key=lambda e: -e[0])
    # for equal scores within a window, the earliest record must win
    tp_events.sort(key=lambda e: (-e[0], e[1]))
    earliest: dict = {}  # window_key -> earliest active detection timestamp

    total = n_windows * profile.a_fn
    best_t, best_score = None, None
    fp_i = tp_i = 0
    for t in sorted(candidates, reverse=True):
        while fp_i < len(fp_events) and fp_events[fp_i][0] >= t:
            total += fp_events[fp_i][1]
            fp_i += 1
        while tp_i < len(tp_events) and tp_events[tp_i][0] >= t:
            _, ts, key, value = tp_events[tp_i]
            tp_i += 1
            if key not in earliest or ts < earliest[key]:
                earliest[key] = ts
                total += value - window_state[key]
                window_state[key] = value
        if best_score is None or total > best_score:
            best_t, best_score = t, total
    return best_t, best_score


def normalize(raw: float, null_raw: float, perfect_raw: float) -> float:
    """Map a raw corpus score onto 0-100 between the null detector and a
    perfect oracle, clamped at both ends."""
    if perfect_raw <= null_raw:
        raise ValidationError(
            f"degenerate normalization bounds: perfect={perfect_raw}, null={null_raw}"
        )
    return min(max(100.0 * (raw - null_raw) / (perfect_raw - null_raw), 0.0), 100.0)


def oracle_outputs(timestamps_by_file: dict[str, list[datetime]],
                   windows_by_file: dict[str, list[AnomalyWindow]]) -> dict[str, list]:
    """Perfect-detector score streams: 1.0 exactly at the first record inside
    each window, 0.0 everywhere else."""
    outputs = {}
    for name, timestamps in timestamps_by_file.items():
        windows = sorted(windows_by_file.get(name, []), key=lambda w: w.start)
        hit: set[int] = set()
        scores = []
        for t in timestamps:
            val = 0.0
            for i, w in enumerate(windows):
                if t in w and i not in hit:
                    hit.add(i)
                    val = 1.0
                    break
            scores.append((t, val))
        outputs[name] = scores
    return outputs


def null_outputs(timestamps_by_file: dict[str, list[datetime]]) -> dict[str, list]:
    return {name: [(t, 0.5) for t in ts] for name, ts in timestamps_by_file.items()}


def benchmark(detector_name: str, outputs: dict[str, list],
              windows_by_file: dict[str, list[AnomalyWindow]],
              profiles) -> list[BenchmarkResult]:
    """Full corpus evaluation: optimize the threshold per profile, then
    normalize against the null detector and the perfect oracle."""
    timestamps = {name: [t for t, _ in output] for name, output in outputs.items()}
    nulls = null_outputs(timestamps)
    oracles = oracle_outputs(timestamps, windows_by_file)
    results = []
    for profile in profiles:
        threshold, raw = optimize_threshold(outputs, windows_by_file, profile)
        _, null_raw = optimize_threshold(nulls, windows_by_file, profile)
        _, perfect_raw = optimize_threshold(oracles, windows_by_file, profile)
        results.append(BenchmarkResult(
            detector=detector_name,
            profile=profile.name,
            raw_score=raw,
            normalized_score=normalize(raw, null_raw, perfect_raw),
            optimized_threshold=threshold,
        ))
    return results
