"""Scalar-to-SDR encoder.

Classic contiguous-block encoder: the input range is divided into
overlapping buckets and each value lights a block of w_active adjacent
bits. Nearby values share bits, so semantic similarity becomes overlap.
Stateless and deterministic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ValidationError
from .sdr import Sdr


@dataclass(frozen=True)
class ScalarEncoderConfig:
    n_bits: int
    w_active: int
    value_min: float
    value_max: float
    clip_input: bool = True

    def __post_init__(self):
        if self.w_active <= 0 or self.n_bits <= 0:
            raise ValidationError("n_bits and w_active must be positive")
        if self.w_active >= self.n_bits:
            raise ValidationError(
                f"w_active ({self.w_active}) must be < n_bits ({self.n_bits})"
            )
        if self.w_active % 2 == 0:
            raise ValidationError(f"w_active must be odd, got {self.w_active}")
        if not self.value_min < self.value_max:
            raise ValidationError(
                f"need value_min < value_max, got [{self.value_min}, {self.value_max}]"
            )

    @property
    def n_buckets(self) -> int:
        return self.n_bits - self.w_active + 1


def resolution(cfg: ScalarEncoderConfig) -> float:
    """Smallest value delta guaranteed to move the active block by one bit."""
    return (cfg.value_max - cfg.value_min) / (cfg.n_bits - cfg.w_active)


def encode(value: float, cfg: ScalarEncoderConfig) -> Sdr:
    """Map a scalar to an SDR with exactly w_active contiguous bits.

    Monotone: larger values shift the block rightward. value_min maps to
    bits {0..w-1}, value_max to the rightmost block.
    """
    if not math.isfinite(value):
        raise ValidationError(f"cannot encode non-finite value {value!r}")
    if cfg.clip_input:
        value = min(max(value, cfg.value_min), cfg.value_max)
    elif not cfg.value_min <= value <= cfg.value_max:
        raise ValidationError(
            f"value {value} outside [{cfg.value_min}, {cfg.value_max}] "
            "and clip_input is off"
        )
    span = cfg.value_max - cfg.value_min
    bucket = int((value - cfg.value_min) / span * (cfg.n_buckets - 1) + 0.5)
    bucket = min(bucket, cfg.n_buckets - 1)
    return Sdr(cfg.n_bits, tuple(range(bucket, bucket + cfg.w_active)))


def calibrated_config(
    training_values,
    n_bits: int = 400,
    w_active: int = 21,
    margin: float = 0.10,
) -> ScalarEncoderConfig:
    """Build a config from a training prefix: observed range plus a margin
    on each side, clipping enabled for out-of-range test values."""
    values = list(training_values)
    if not values:
        raise ValidationError("cannot calibrate encoder on an empty training prefix")
    lo, hi = min(values), max(values)
    if hi == lo:
        # degenerate constant prefix: open an arbitrary unit window
        pad = max(abs(lo), 1.0)
        lo, hi = lo - pad, hi + pad
    span = hi - lo
    return ScalarEncoderConfig(
        n_bits=n_bits,
        w_active=w_active,
        value_min=lo - margin * span,
        value_max=hi + margin * span,
        clip_input=True,
    )
