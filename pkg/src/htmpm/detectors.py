"""Streaming anomaly detectors behind one uniform contract.

Every detector consumes timestamped scalars one at a time and emits one
anomaly score in [0, 1] per record, in order. The HTM detector composes
encoder -> spatial pooler -> temporal memory -> raw prediction error ->
(optionally) HD anomaly likelihood. Baselines: windowed Gaussian,
threshold, random, null.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field

from . import anomaly
from .anomaly import LikelihoodState, raw_anomaly_score, update_likelihood
from .encoder import ScalarEncoderConfig, calibrated_config, encode
from .errors import DataError, StreamError, ValidationError
from .spatial_pooler import SpatialPooler
from .temporal_memory import TemporalMemory

DETECTOR_KINDS = ("htm_hd", "htm_raw", "windowed_gaussian", "threshold",
                  "random", "null")


@dataclass(frozen=True)
class DetectorConfig:
    kind: str
    parameters: dict = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        if self.kind not in DETECTOR_KINDS:
            raise ValidationError(
                f"unknown detector kind {self.kind!r}; expected one of {DETECTOR_KINDS}"
            )
        allowed = _ALLOWED_PARAMS[self.kind]
        unknown = set(self.parameters) - allowed
        if unknown:
            raise ValidationError(
                f"unknown parameter(s) for {self.kind}: {sorted(unknown)}"
            )


_HTM_PARAMS = {
    "encoder_bits", "encoder_width", "value_min", "value_max",
    "n_columns", "k_active", "m_cells",
    "sp_potential_fraction", "sp_connect_threshold", "sp_perm_inc", "sp_perm_dec",
    "tm_activation_threshold", "tm_connect_threshold", "tm_initial_permanence",
    "tm_perm_inc", "tm_perm_dec", "tm_perm_punish", "tm_sample_size",
    "tm_max_segments_per_cell", "tm_max_synapses_per_segment",
    "likelihood_capacity", "likelihood_short_window",
    "likelihood_warm_start",
}

_ALLOWED_PARAMS = {
    "htm_hd": _HTM_PARAMS,
    "htm_raw": _HTM_PARAMS,
    "windowed_gaussian": {"window"},
    "threshold": {"threshold", "feature", "rms_window", "calibration_sigmas"},
    "random": set(),
    "null": set(),
}


class NullDetector:
    def calibrate(self, values):
        pass

    def step(self, timestamp, value) -> float:
        return 0.5


class RandomDetector:
    def __init__(self, seed: int = 0):
        self._rng = random.Random(seed)

    def calibrate(self, values):
        pass

    def step(self, timestamp, value) -> float:
        return self._rng.random()


class ThresholdDetector:
    """Condition-monitoring style: score 1 whenever the feature value
    crosses a fixed level. The level defaults to mean + 4 sigma of the
    training prefix when not given explicitly."""

    def __init__(self, threshold: float | None = None, feature: str = "abs",
                 rms_window: int = 16, calibration_sigmas: float = 4.0):
        if feature not in ("abs", "rms"):
            raise ValidationError(f"feature must be 'abs' or 'rms', got {feature!r}")
        self.threshold = threshold
        self.feature = feature
        self.rms_window = rms_window
        self.calibration_sigmas = calibration_sigmas
        self._recent: list[float] = []

    def calibrate(self, values):
        if self.threshold is not None:
            return
        feats = [self._featurize(v) for v in values]
        if not feats:
            raise DataError("threshold detector cannot calibrate on empty prefix")
        mu = sum(feats) / len(feats)
        var = sum((f - mu) ** 2 for f in feats) / len(feats)
        self.threshold = mu + self.calibration_sigmas * math.sqrt(var)
        self._recent.clear()

    def _featurize(self, value: float) -> float:
        if self.feature == "abs":
            return abs(value)
        self._recent.append(value * value)
        if len(self._recent) > self.rms_window:
            self._recent.pop(0)
        return math.sqrt(sum(self._recent) / len(self._recent))

    def step(self, timestamp, value) -> float:
        if self.threshold is None:
            raise ValidationError("threshold detector used without a threshold")
        return 1.0 if self._featurize(value) >= self.threshold else 0.0


class WindowedGaussianDetector:
    """Score = 1 minus the two-sided Gaussian tail probability of the value
    against the mean/stdev of a sliding window of preceding values."""

    def __init__(self, window: int = 6000):
        if window < 2:
            raise ValidationError("window must hold at least 2 values")
        self.window = window
        self._values: list[float] = []
        self._sum = 0.0
        self._sumsq = 0.0

    def calibrate(self, values):
        pass

    def step(self, timestamp, value) -> float:
        n = len(self._values)
        if n >= 2:
            mu = self._sum / n
            var = max(self._sumsq / n - mu * mu, 0.0)
            sigma = max(math.sqrt(var), 1e-9)
            z = abs(value - mu) / sigma
            score = math.erf(z / math.sqrt(2.0))
        else:
            score = 0.5
        self._values.append(value)
        self._sum += value
        self._sumsq += value * value
        if len(self._values) > self.window:
            old = self._values.pop(0)
            self._sum -= old
            self._sumsq -= old * old
        return score


class HtmDetector:
    """The full pipeline of the streaming HTM detector.

    With use_likelihood the HD anomaly likelihood is the emitted score;
    without it the raw prediction error is emitted directly.
    """

    def __init__(self, parameters: dict, seed: int = 0, use_likelihood: bool = True):
        p = dict(parameters)
        self.encoder_bits = int(p.pop("encoder_bits", 400))
        self.encoder_width = int(p.pop("encoder_width", 21))
        value_min = p.pop("value_min", None)
        value_max = p.pop("value_max", None)
        self.encoder_cfg: ScalarEncoderConfig | None = None
        if value_min is not None and value_max is not None:
            self.encoder_cfg = ScalarEncoderConfig(
                self.encoder_bits, self.encoder_width,
                float(value_min), float(value_max), clip_input=True,
            )
        self.sp = SpatialPooler(
            n_input=self.encoder_bits,
            n_columns=int(p.pop("n_columns", 2048)),
            k_active=int(p.pop("k_active", 40)),
            potential_fraction=float(p.pop("sp_potential_fraction", 0.5)),
            connect_threshold=float(p.pop("sp_connect_threshold", 0.5)),
            perm_inc=float(p.pop("sp_perm_inc", 0.05)),
            perm_dec=float(p.pop("sp_perm_dec", 0.008)),
            seed=seed,
        )
        self.tm = TemporalMemory(
            n_columns=self.sp.n_columns,
            m_cells=int(p.pop("m_cells", 32)),
            activation_threshold=int(p.pop("tm_activation_threshold", 13)),
            connect_threshold=float(p.pop("tm_connect_threshold", 0.5)),
            initial_permanence=float(p.pop("tm_initial_permanence", 0.21)),
            perm_inc=float(p.pop("tm_perm_inc", 0.1)),
            perm_dec=float(p.pop("tm_perm_dec", 0.1)),
            perm_punish=float(p.pop("tm_perm_punish", 0.01)),
            sample_size=int(p.pop("tm_sample_size", 20)),
            max_segments_per_cell=int(p.pop("tm_max_segments_per_cell", 128)),
            max_synapses_per_segment=int(p.pop("tm_max_synapses_per_segment", 40)),
        )
        self.use_likelihood = use_likelihood
        # warm start: likelihood history accumulates through the training
        # prefix as well, not only the scored test stretch
        self.warm_start = bool(p.pop("likelihood_warm_start", True))
        self.likelihood_state = LikelihoodState(
            capacity=int(p.pop("likelihood_capacity", 1000)),
            short_window=int(p.pop("likelihood_short_window", 10)),
        )
        if p:
            raise ValidationError(f"unknown HTM parameter(s): {sorted(p)}")
        self.last_raw = 0.0
        self.last_likelihood = 0.5

    def calibrate(self, values):
        if self.encoder_cfg is None:
            self.encoder_cfg = calibrated_config(
                values, n_bits=self.encoder_bits, w_active=self.encoder_width
            )

    def step(self, timestamp, value) -> float:
        if self.encoder_cfg is None:
            raise ValidationError(
                "HTM detector needs value_min/value_max or a calibrate() call"
            )
        x = encode(value, self.encoder_cfg)
        cols = self.sp.compute(x, learn=True)
        predicted = self.tm.predictive_columns
        self.tm.step(cols, learn=True)
        raw = raw_anomaly_score(predicted, cols.active_columns)
        self.last_raw = raw
        self.last_likelihood = update_likelihood(raw, self.likelihood_state)
        return self.last_likelihood if self.use_likelihood else raw


def build_detector(cfg: DetectorConfig):
    if cfg.kind == "null":
        return NullDetector()
    if cfg.kind == "random":
        return RandomDetector(seed=cfg.seed)
    if cfg.kind == "threshold":
        return ThresholdDetector(**cfg.parameters)
    if cfg.kind == "windowed_gaussian":
        return WindowedGaussianDetector(**cfg.parameters)
    if cfg.kind == "htm_hd":
        return HtmDetector(cfg.parameters, seed=cfg.seed, use_likelihood=True)
    if cfg.kind == "htm_raw":
        return HtmDetector(cfg.parameters, seed=cfg.seed, use_likelihood=False)
    raise ValidationError(f"unknown detector kind {cfg.kind!r}")


def run_file(cfg: DetectorConfig, series, train_fraction: float = 0.15) -> list[float]:
    """Run a fresh detector over one file's records.

    The first train_fraction of records is still fed through the detector
    (online learning), but their emitted scores are forced to 0 so the
    scorer never credits detections inside the training stretch.
    """
    records = list(series)
    if not records:
        raise DataError("empty series")
    if not 0.0 <= train_fraction < 1.0:
        raise ValidationError(f"train_fraction must be in [0, 1), got {train_fraction}")
    n_train = int(len(records) * train_fraction)
    detector = build_detector(cfg)
    detector.calibrate([v for _, v in records[:n_train]] or [v for _, v in records])
    scores: list[float] = []
    prev_ts = None
    for i, (ts, value) in enumerate(records):
        if prev_ts is not None and ts < prev_ts:
            raise StreamError(f"timestamps out of order at record {i}: {ts} < {prev_ts}")
        prev_ts = ts
        score = detector.step(ts, value)
        scores.append(0.0 if i < n_train else score)
    return scores
