"""Command-line harness: ``run``, ``score``, ``synth``, ``inspect``.

Exit codes: 0 success, 1 validation error, 2 data error. The default
config path can be set through the HTMPM_CONFIG environment variable.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import pickle
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from datetime import datetime, timedelta
from pathlib import Path

import numpy as np

from . import __version__
from .config import RunConfig, load_config
from .detectors import DETECTOR_KINDS, DetectorConfig, run_file
from .errors import DataError, HtmpmError, ValidationError
from .nab import PROFILES, benchmark, make_windows
from .psd_synth import DegradationModel, SynthSpec, generate_degradation, psd_map
from .series import (read_labels, read_scores, read_series, write_labels,
                     write_scores, write_series)

MODEL_FORMAT = "htmpm-model"
MODEL_VERSION = 1


def save_model(path, detector) -> None:
    """Versioned binary model-state file (pickle with a format header)."""
    payload = {"format": MODEL_FORMAT, "version": MODEL_VERSION,
               "package_version": __version__, "detector": detector}
    Path(path).write_bytes(pickle.dumps(payload))


def load_model(path):
    payload = pickle.loads(Path(path).read_bytes())
    if not isinstance(payload, dict) or payload.get("format") != MODEL_FORMAT:
        raise DataError(f"{path}: not a model-state file")
    if payload.get("version") != MODEL_VERSION:
        raise DataError(
            f"{path}: unsupported model version {payload.get('version')}"
        )
    return payload["detector"]


def _config_hash(cfg: RunConfig) -> str:
    canonical = json.dumps({
        "detector": cfg.detector.kind,
        "parameters": dict(sorted(cfg.detector.parameters.items())),
        "seed": cfg.seed,
        "train_fraction": cfg.train_fraction,
        "subsample": cfg.subsample,
    }, sort_keys=True)
    return hashlib.sha256(canonical.encode()).hexdigest()


def _run_one(args):
    cfg, path = args
    records = read_series(path)
    if cfg.subsample > 1:
        records = records[::cfg.subsample]
    started = time.perf_counter()
    scores = run_file(cfg.detector, records, cfg.train_fraction)
    elapsed = time.perf_counter() - started
    return path.name, records, scores, elapsed


def cmd_run(cfg: RunConfig, workers: int = 1) -> Path:
    files = sorted(cfg.corpus_dir.glob("*.csv"))
    if not files:
        raise DataError(f"no .csv series in {cfg.corpus_dir}")
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    jobs = [(cfg, path) for path in files]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(_run_one, jobs))
    else:
        outcomes = [_run_one(job) for job in jobs]
    manifest = {
        "config_hash": _config_hash(cfg),
        "seed": cfg.seed,
        "detector": cfg.detector.kind,
        "package_version": __version__,
        "train_fraction": cfg.train_fraction,
        "files": {},
    }
    # single deterministic writer, file-name order
    for name, records, scores, elapsed in sorted(outcomes):
        write_scores(cfg.output_dir / name, records, scores)
        manifest["files"][name] = {
            "records": len(records),
            "runtime_seconds": round(elapsed, 6),
            "records_per_second": round(len(records) / elapsed, 1) if elapsed else None,
        }
    (cfg.output_dir / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    return cfg.output_dir


def cmd_score(scores_dir, labels_path, profiles, output_dir,
              window_budget: float = 0.10, detector_name: str = "detector"):
    scores_dir, output_dir = Path(scores_dir), Path(output_dir)
    labels = read_labels(labels_path)
    if not profiles:
        raise ValidationError("no scoring profiles selected")
    unknown = [p for p in profiles if p not in PROFILES]
    if unknown:
        raise ValidationError(f"unknown profile(s) {unknown}; choose from {sorted(PROFILES)}")

    score_files = sorted(p for p in scores_dir.glob("*.csv"))
    outputs, windows_by_file = {}, {}
    names = {p.name for p in score_files}
    missing = sorted(set(labels) - names)
    if missing:
        raise DataError(f"labeled series without score files: {missing}")
    for path in score_files:
        rows = read_scores(path)
        outputs[path.name] = [(ts, score) for ts, _, score in rows]
        span = (rows[0][0], rows[-1][0])
        windows_by_file[path.name] = make_windows(
            labels.get(path.name, []), span, window_budget, source_file=path.name
        )

    results = benchmark(
        detector_name, outputs, windows_by_file,
        [PROFILES[p] for p in profiles],
    )
    output_dir.mkdir(parents=True, exist_ok=True)
    from .series import write_windows
    write_windows(output_dir / "windows.json", windows_by_file)
    (output_dir / "results.json").write_text(json.dumps([
        {
            "detector": r.detector,
            "profile": r.profile,
            "raw_score": r.raw_score,
            "normalized_score": r.normalized_score,
            "optimized_threshold": r.optimized_threshold,
        } for r in results
    ], indent=2) + "\n")

    header = f"{'Detector':<20} {'Profile':<10} {'Raw':>12} {'Normalized':>12} {'Threshold':>10}"
    print(header)
    print("-" * len(header))
    for r in results:
        print(f"{r.detector:<20} {r.profile:<10} {r.raw_score:>12.4f} "
              f"{r.normalized_score:>12.2f} {r.optimized_threshold:>10.4f}")
    return results


def cmd_synth_generate(output_dir, n_files, duration, sample_rate, seed,
                       start_time=None):
    """Seeded degradation corpus: one CSV per file plus a labels JSON."""
    output_dir = Path(output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    start_time = start_time or datetime(2021, 1, 1)
    labels_doc = {}
    rng = np.random.default_rng(seed)
    # fault frequencies with integer sample periods, so the healthy and
    # faulty regimes are exactly periodic and online detectors can settle
    fault_choices = (sample_rate / 10.0, sample_rate / 8.0, sample_rate / 5.0)
    for i in range(n_files):
        file_seed = seed + i
        fault_freq = float(fault_choices[int(rng.integers(len(fault_choices)))])
        base_amp = float(rng.uniform(1.0, 1.5))
        # fault onset plus two stepped escalations in the scored stretch
        breakpoints = tuple(
            (float(frac) * duration, base_amp * factor)
            for frac, factor in zip(
                sorted(rng.uniform(0.25, 0.95, size=3)), (1.0, 2.0, 3.5)
            )
        )
        model = DegradationModel(
            baseline_sigma=0.02,
            fault_freqs=(fault_freq,),
            growth=breakpoints,
            initial_amplitude=0.0,
        )
        values, label_times = generate_degradation(
            model, duration, sample_rate, seed=file_seed
        )
        records = [
            (start_time + timedelta(seconds=j / sample_rate), float(v))
            for j, v in enumerate(values)
        ]
        name = f"degradation_{i:02d}.csv"
        write_series(output_dir / name, records)
        labels_doc[name] = [
            start_time + timedelta(seconds=t) for t in label_times
        ]
    write_labels(output_dir / "labels.json", labels_doc)
    return output_dir


def cmd_synth_map(bearing_path, target_path, output_path, spec: SynthSpec):
    bearing = np.array([v for _, v in read_series(bearing_path)])
    target_records = read_series(target_path)
    target = np.array([v for _, v in target_records])
    mapped = psd_map(bearing, target, spec)
    write_series(output_path, [
        (ts, float(v)) for (ts, _), v in zip(target_records, mapped)
    ])
    return output_path


def cmd_inspect(path):
    path = Path(path)
    if path.suffix == ".json":
        doc = json.loads(path.read_text())
        print(f"{path}: JSON document with {len(doc)} top-level entries")
        return
    if path.suffix in (".bin", ".model", ".pkl"):
        detector = load_model(path)
        print(f"{path}: model state ({type(detector).__name__})")
        return
    first = path.read_text().split("\n", 1)[0]
    rows = read_scores(path) if "anomaly_score" in first else [
        (ts, v, None) for ts, v in read_series(path)
    ]
    values = [v for _, v, _ in rows]
    print(f"{path}: {len(rows)} rows, span {rows[0][0]} .. {rows[-1][0]}, "
          f"value range [{min(values)}, {max(values)}]")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="htmpm")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a detector over a corpus")
    p_run.add_argument("--config", default=os.environ.get("HTMPM_CONFIG"))
    p_run.add_argument("--corpus")
    p_run.add_argument("--output")
    p_run.add_argument("--detector", choices=DETECTOR_KINDS)
    p_run.add_argument("--seed", type=int)
    p_run.add_argument("--train-fraction", type=float)
    p_run.add_argument("--subsample", type=int)
    p_run.add_argument("--param", action="append", default=[],
                       metavar="KEY=VALUE", help="detector parameter override")
    p_run.add_argument("--workers", type=int, default=1)

    p_score = sub.add_parser("score", help="score a run against labels")
    p_score.add_argument("--scores", required=True)
    p_score.add_argument("--labels", required=True)
    p_score.add_argument("--output", required=True)
    p_score.add_argument("--profiles", default="standard,low_fp,low_fn")
    p_score.add_argument("--budget", type=float, default=0.10)
    p_score.add_argument("--name", default="detector")

    p_synth = sub.add_parser("synth", help="generate or map synthetic data")
    p_synth.add_argument("--mode", choices=("generate", "map"), required=True)
    p_synth.add_argument("--output", required=True)
    p_synth.add_argument("--files", type=int, default=10)
    p_synth.add_argument("--duration", type=float, default=60.0)
    p_synth.add_argument("--sample-rate", type=float, default=50.0)
    p_synth.add_argument("--seed", type=int, default=0)
    p_synth.add_argument("--bearing")
    p_synth.add_argument("--target")
    p_synth.add_argument("--window-len", type=int, default=256)
    p_synth.add_argument("--hop", type=int)
    p_synth.add_argument("--bin-size", type=float)
    p_synth.add_argument("--taper", default="hann")

    p_inspect = sub.add_parser("inspect", help="summarize a data or model file")
    p_inspect.add_argument("path")
    return parser


def _parse_params(pairs):
    from .config import _coerce
    params = {}
    for pair in pairs:
        if "=" not in pair:
            raise ValidationError(f"--param expects KEY=VALUE, got {pair!r}")
        key, _, value = pair.partition("=")
        params[key.strip()] = _coerce(value.strip())
    return params


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            entries = load_config(args.config) if args.config else {}
            cfg = RunConfig.from_entries(
                entries,
                corpus_dir=args.corpus, output_dir=args.output,
                detector_kind=args.detector, seed=args.seed,
                train_fraction=args.train_fraction, subsample=args.subsample,
            )
            if args.param:
                params = dict(cfg.detector.parameters)
                params.update(_parse_params(args.param))
                cfg.detector = DetectorConfig(cfg.detector.kind, params, cfg.seed)
            cmd_run(cfg, workers=args.workers)
        elif args.command == "score":
            profiles = [p.strip() for p in args.profiles.split(",") if p.strip()]
            cmd_score(args.scores, args.labels, profiles, args.output,
                      window_budget=args.budget, detector_name=args.name)
        elif args.command == "synth":
            if args.mode == "generate":
                cmd_synth_generate(args.output, args.files, args.duration,
                                   args.sample_rate, args.seed)
            else:
                if not args.bearing or not args.target:
                    raise ValidationError("synth --mode map needs --bearing and --target")
                spec = SynthSpec(
                    window_len=args.window_len,
                    hop=args.hop or args.window_len // 2,
                    bin_size=args.bin_size or args.sample_rate / args.window_len,
                    sample_rate=args.sample_rate,
                    taper=args.taper,
                )
                cmd_synth_map(args.bearing, args.target, args.output, spec)
        elif args.command == "inspect":
            cmd_inspect(args.path)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (DataError, HtmpmError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
