"""Streaming HTM anomaly detection for predictive-maintenance time series.

Subpackages: SDR math, scalar encoder, spatial pooler, temporal memory,
anomaly scoring and HD likelihood, streaming detectors, NAB-style benchmark
scoring, PSD-mapping synthesizer, and a CLI harness.
"""

__version__ = "0.1.0"
