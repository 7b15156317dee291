"""Command-line batch driver: synthesize, align, take median beats, benchmark, analyze.

Every record is one task. Workers own a record end to end (read, detect,
align, write), so outputs do not depend on the worker count or on the order
inputs are given in.
"""
from __future__ import annotations

import argparse
import glob
import json
import logging
import os
import statistics
import sys
import tempfile
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from . import io as eio
from .align import STRATEGIES, HrcCoefficients, align, design_template
from .analysis import (auc_scorer, default_intervals, ece, grouped_permutation_importance,
                       interval_pca, kmeans, logreg_fit, pca_fit, pca_transform, v_measure,
                       ward_cluster)
from .errors import EcgAlignError, ParameterError
from .rpeak import annotate
from .synth import SynthSpec, generate_ecg

log = logging.getLogger("ecgalign")

EXIT_OK, EXIT_CONFIG, EXIT_PARTIAL, EXIT_TOTAL = 0, 1, 2, 3
FORMATS = ("wfdb", "csv", "array")
OUT_FORMATS = ("array", "csv")
_EXT = {"wfdb": ".hea", "csv": ".csv", "array": ".npy"}


class ConfigError(ParameterError):
    """Invalid command line or config file."""


@dataclass
class RunConfig:
    """Settings of one batch run; ``inputs`` are files, directories or globs."""

    inputs: list = field(default_factory=list)
    input_format: str | None = None
    strategy: str = "linear"
    output_kind: str = "full"
    duration_s: float = 10.0
    fs: float = 500.0
    bpm: float = 60.0
    offset: int | None = None
    hrc_ap: float = 1 / 280
    hrc_bp: float = 0.14
    hrc_at: float = 1 / 330
    hrc_bt: float = 0.96
    hrc_fmax: float = 0.9
    workers: int = 1
    out: str = "out"
    out_format: str = "array"
    seed: int = 0

    def validate(self):
        if self.input_format is not None and self.input_format not in FORMATS:
            raise ConfigError(f"--format must be one of {FORMATS}")
        if self.strategy not in STRATEGIES:
            raise ConfigError(f"--strategy must be one of {STRATEGIES}")
        if self.output_kind not in ("full", "median"):
            raise ConfigError("--output-kind must be 'full' or 'median'")
        if self.strategy == "none" and self.output_kind == "full":
            raise ConfigError("strategy 'none' only produces median beats")
        if self.out_format not in OUT_FORMATS:
            raise ConfigError(f"--out-format must be one of {OUT_FORMATS}")
        if int(self.workers) != self.workers or self.workers < 1:
            raise ConfigError("--workers must be a positive integer")
        self.template()
        self.coeffs()
        return self

    def template(self):
        return design_template(self.duration_s, self.fs, self.bpm, self.offset)

    def coeffs(self):
        return HrcCoefficients(self.hrc_ap, self.hrc_bp, self.hrc_at, self.hrc_bt, self.hrc_fmax)


def expand_inputs(patterns, fmt=None):
    """Resolve files, directories and globs to a sorted, de-duplicated path list."""
    exts = {_EXT[fmt]} if fmt else set(_EXT.values())
    found = set()
    for pat in patterns:
        p = Path(pat)
        if p.is_dir():
            found.update(q for q in p.iterdir() if q.suffix in exts)
        elif p.is_file():
            found.add(p)
        else:
            found.update(Path(q) for q in glob.glob(str(pat)) if Path(q).suffix in exts)
    return sorted(found)


def _write_matrix(path, matrix, out_format, names=()):
    # write-then-rename keeps a crashed task from leaving a half-written file
    tmp = path.with_name(path.name + ".part")
    if out_format == "array":
        eio.write_array(tmp, matrix)
    else:
        eio.write_csv(tmp, np.asarray(matrix).T, list(names) or None)
    os.replace(tmp, path)


def _align_one(task):
    path, cfg = task
    name = Path(path).stem
    try:
        record = eio.read_record(path, cfg.input_format, cfg.fs)
        ann = annotate(record)
        template = None if cfg.strategy == "none" else cfg.template()
        res = align(record, ann, template, cfg.strategy, cfg.output_kind, cfg.coeffs())
        out = Path(cfg.out) / (name + (".npy" if cfg.out_format == "array" else ".csv"))
        _write_matrix(out, res.signal, cfg.out_format, res.lead_names)
        return name, None
    except (EcgAlignError, OSError, ValueError) as exc:
        return name, f"{type(exc).__name__}: {exc}"


def run_align(cfg: RunConfig, paths=None):
    """Align every input record and write one output file each plus ``summary.json``.

    Returns the summary dict; ``summary["exit_code"]`` is 0, 2 (some records
    failed) or 3 (all failed).
    """
    cfg.validate()
    paths = expand_inputs(cfg.inputs, cfg.input_format) if paths is None else list(paths)
    if not paths:
        raise ConfigError("no input records found")
    stems = [Path(p).stem for p in paths]
    if len(set(stems)) != len(stems):
        raise ConfigError("input records must have distinct file stems")
    Path(cfg.out).mkdir(parents=True, exist_ok=True)

    t0 = time.perf_counter()
    tasks = [(str(p), cfg) for p in paths]
    if cfg.workers == 1:
        results = list(map(_align_one, tasks))
    else:
        chunk = max(1, len(tasks) // (4 * cfg.workers))
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            results = list(pool.map(_align_one, tasks, chunksize=chunk))
    wall = time.perf_counter() - t0

    failures = [{"record": n, "error": e} for n, e in results if e is not None]
    for n, e in results:
        log.info("%s: %s", n, "ok" if e is None else e)
    n_ok = len(results) - len(failures)
    code = EXIT_OK if not failures else (EXIT_TOTAL if n_ok == 0 else EXIT_PARTIAL)
    summary = {"processed": len(results), "succeeded": n_ok, "failures": failures,
               "workers": cfg.workers, "wall_time_s": wall, "exit_code": code}
    with open(Path(cfg.out) / "summary.json", "w") as fh:
        json.dump(summary, fh, indent=2)
    return summary


def run_bench(cfg: RunConfig, worker_counts=(1, 2, 4, 8, 16), repeats=3, report=None):
    """Time ``run_align`` for each worker count; median of ``repeats`` runs.

    Rows are ``{"workers", "median_s", "times", "identical"}``, where
    ``identical`` says whether that worker count produced byte-identical
    files to the first one. Written as CSV to ``report`` if given.
    """
    cfg.validate()
    paths = expand_inputs(cfg.inputs, cfg.input_format)
    if not paths:
        raise ConfigError("no input records found")
    rows, reference = [], None
    with tempfile.TemporaryDirectory() as tmp:
        for w in worker_counts:
            times = []
            for r in range(repeats):
                out = Path(tmp) / f"w{w}_r{r}"
                run = RunConfig(**{**asdict(cfg), "workers": int(w), "out": str(out)})
                times.append(run_align(run, paths)["wall_time_s"])
            digest = _tree_bytes(out)
            reference = digest if reference is None else reference
            rows.append({"workers": int(w), "median_s": statistics.median(times),
                         "times": times, "identical": digest == reference})
    if report is not None:
        with open(report, "w") as fh:
            fh.write("workers,median_s,identical\n")
            for row in rows:
                fh.write(f"{row['workers']},{row['median_s']!r},{int(row['identical'])}\n")
    return rows


def _tree_bytes(directory):
    return {p.name: p.read_bytes() for p in sorted(Path(directory).iterdir())
            if p.name != "summary.json"}


def run_synth(out, count, fmt="wfdb", fs=500.0, duration_s=10.0, bpm=60.0, bpm_max=None,
              jitter=0.0, snr_db=None, seed=0):
    """Write ``count`` synthetic 12-lead records; heart rates uniform in ``[bpm, bpm_max]``."""
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    rates = rng.uniform(bpm, bpm_max, count) if bpm_max is not None else np.full(count, bpm)
    written = []
    for i, rate in enumerate(rates):
        name = f"synth_{i:05d}"
        spec = SynthSpec(fs=fs, duration_s=duration_s, bpm=float(rate), rr_jitter=jitter,
                         noise_snr_db=snr_db, seed=seed * 100003 + i)
        record, _ = generate_ecg(spec, name)
        if fmt == "wfdb":
            eio.write_wfdb(record, out, name)
        elif fmt == "csv":
            eio.write_csv(out / f"{name}.csv", record.signal.T, list(record.lead_names))
        else:
            eio.write_array(out / f"{name}.npy", record.signal)
        written.append(out / (name + _EXT[fmt]))
    return written


def _load_matrix(path):
    path = Path(path)
    if path.suffix == ".npy":
        return eio.read_array(path)
    return np.loadtxt(path, delimiter=",", ndmin=1)


def _analyze(args, cfg):
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    if not cfg.inputs:
        raise ConfigError("--input is required")
    X = _load_matrix(cfg.inputs[0])
    labels = _load_matrix(args.labels) if args.labels else None
    kind = args.analysis
    if kind in ("ece", "vmeasure", "gpi") and labels is None:
        raise ConfigError(f"analyze {kind} needs --labels")
    result = {}
    if kind == "pca":
        if args.wave:
            res = interval_pca(X, cfg.template(), args.wave, coeffs=cfg.coeffs())
        else:
            res = pca_fit(X, args.k)
        eio.write_array(out / "components.npy", res.components)
        eio.write_array(out / "scores.npy", pca_transform(res, X))
        result = {"explained_variance": res.explained_variance.tolist(),
                  "explained_variance_ratio": res.explained_variance_ratio.tolist()}
    elif kind in ("kmeans", "ward"):
        res = kmeans(X, args.k, seed=cfg.seed) if kind == "kmeans" else ward_cluster(X, args.k)
        eio.write_csv(out / f"{kind}_labels.csv", res.labels, ["label"])
        result = {"labels": res.labels.tolist()}
        if kind == "kmeans":
            result["inertia"] = res.inertia
    elif kind == "ece":
        rep = ece(X, labels.astype(int), args.bins)
        eio.write_csv(out / "calibration.csv",
                      np.column_stack([rep.edges[:-1], rep.edges[1:], rep.counts, rep.accuracy,
                                       rep.confidence]),
                      ["lo", "hi", "count", "accuracy", "confidence"])
        result = {"ece": rep.ece}
    elif kind == "vmeasure":
        result = {"v_measure": v_measure(X, labels)}
    elif kind == "gpi":
        if not (args.train and args.train_labels):
            raise ConfigError("analyze gpi needs --train and --train-labels")
        model = logreg_fit(_load_matrix(args.train), _load_matrix(args.train_labels).astype(int),
                           l2=args.l2)
        beat = cfg.template().rr_samples if args.beat_len is None else args.beat_len
        if X.shape[1] % beat:
            raise ConfigError(f"{X.shape[1]} columns are not a multiple of the beat length {beat}")
        ivs = default_intervals(X.shape[1] // beat, beat)
        imp = grouped_permutation_importance(auc_scorer(model), X, labels.astype(int), ivs,
                                             args.n_repeats, cfg.seed)
        eio.write_csv(out / "importance.csv",
                      np.column_stack([[a for a, _ in ivs], [b for _, b in ivs], imp.mean_drop,
                                       imp.std]),
                      ["start", "end", "mean_drop", "std"])
        result = {"baseline_auc": imp.baseline}
    print(json.dumps(result))
    return EXIT_OK


# flag name -> RunConfig field, in the order they are documented
_FLAGS = {"input": "inputs", "format": "input_format", "strategy": "strategy",
          "output-kind": "output_kind", "duration": "duration_s", "fs": "fs", "bpm": "bpm",
          "offset": "offset", "workers": "workers", "out": "out", "out-format": "out_format",
          "seed": "seed", "hrc-ap": "hrc_ap", "hrc-bp": "hrc_bp", "hrc-at": "hrc_at",
          "hrc-bt": "hrc_bt", "hrc-fmax": "hrc_fmax"}


def _coerce(name, value):
    kind = {f.name: f.type for f in fields(RunConfig)}[name]
    if name == "inputs":
        return value if isinstance(value, list) else [v for v in str(value).split(",") if v]
    if value is None:
        return None
    if "None" in kind and isinstance(value, str) and value.lower() in ("", "none"):
        return None
    try:
        if "int" in kind:
            return int(value)
        if "float" in kind:
            return float(value)
    except ValueError:
        raise ConfigError(f"{name}: cannot parse {value!r}") from None
    return str(value)


def read_config_file(path):
    """Parse ``key = value`` lines; keys are flag names with or without dashes."""
    values = {}
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}") from None
    for lineno, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.lstrip("-").replace("_", "-")
        if key not in _FLAGS:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        values[_FLAGS[key]] = value.strip().strip('"')
    return values


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def build_parser():
    common = _Parser(add_help=False, argument_default=argparse.SUPPRESS)
    common.add_argument("--config", help="key=value file; command-line flags override it")
    common.add_argument("--input", action="append", help="file, directory or glob (repeatable)")
    common.add_argument("--format", choices=FORMATS)
    common.add_argument("--strategy", choices=STRATEGIES)
    common.add_argument("--output-kind", choices=("full", "median"))
    common.add_argument("--duration", help="template duration in seconds")
    common.add_argument("--fs", help="sampling rate in Hz (template and input)")
    common.add_argument("--bpm", help="template heart rate")
    common.add_argument("--offset", help="first template R-peak sample")
    common.add_argument("--workers")
    common.add_argument("--out")
    common.add_argument("--out-format", choices=OUT_FORMATS)
    common.add_argument("--seed")
    for flag in ("ap", "bp", "at", "bt", "fmax"):
        common.add_argument(f"--hrc-{flag}")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = _Parser(prog="ecgalign", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("align", parents=[common], help="align records to the template")
    sub.add_parser("median", parents=[common], help="aligned median beat per record")
    syn = sub.add_parser("synth", parents=[common], help="write synthetic records")
    syn.add_argument("--count", type=int, default=10)
    syn.add_argument("--bpm-max", type=float, default=None,
                     help="draw heart rates uniformly from [--bpm, --bpm-max]")
    syn.add_argument("--jitter", type=float, default=0.0, help="relative RR jitter")
    syn.add_argument("--snr", type=float, default=None, help="noise SNR in dB")
    bench = sub.add_parser("bench", parents=[common], help="time alignment per worker count")
    bench.add_argument("--worker-counts", default="1,2,4,8,16")
    bench.add_argument("--repeats", type=int, default=3)
    ana = sub.add_parser("analyze", parents=[common], help="analyses of aligned matrices")
    ana.add_argument("analysis", choices=("pca", "kmeans", "ward", "ece", "gpi", "vmeasure"))
    ana.add_argument("--labels", help="reference labels (ece, vmeasure, gpi)")
    ana.add_argument("--k", type=int, default=2)
    ana.add_argument("--wave", choices=("QRS", "T"), help="interval PCA on one wave")
    ana.add_argument("--bins", type=int, default=10)
    ana.add_argument("--train")
    ana.add_argument("--train-labels")
    ana.add_argument("--l2", type=float, default=1e-3)
    ana.add_argument("--n-repeats", type=int, default=20)
    ana.add_argument("--beat-len", type=int, default=None)
    return parser


def config_from_args(args):
    """Merge defaults, the optional config file and explicit flags, in that order."""
    raw = read_config_file(args.config) if getattr(args, "config", None) else {}
    for flag, name in _FLAGS.items():
        dest = flag.replace("-", "_")
        if hasattr(args, dest):
            raw[name] = getattr(args, dest)
    values = {name: _coerce(name, v) for name, v in raw.items()}
    return RunConfig(**values)


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
        logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
                            format="%(levelname)s %(message)s")
        cfg = config_from_args(args)
        if args.command in ("align", "median"):
            if args.command == "median":
                cfg.output_kind = "median"
            summary = run_align(cfg)
            print(json.dumps({k: summary[k] for k in ("processed", "succeeded", "wall_time_s")}))
            return summary["exit_code"]
        if args.command == "synth":
            fmt = cfg.input_format or "wfdb"
            paths = run_synth(cfg.out, args.count, fmt, cfg.fs, cfg.duration_s, cfg.bpm,
                              args.bpm_max, args.jitter, args.snr, cfg.seed)
            print(json.dumps({"written": len(paths), "out": cfg.out}))
            return EXIT_OK
        if args.command == "bench":
            counts = [int(c) for c in args.worker_counts.split(",") if c]
            if not counts or min(counts) < 1:
                raise ConfigError("--worker-counts must list positive integers")
            Path(cfg.out).mkdir(parents=True, exist_ok=True)
            rows = run_bench(cfg, counts, args.repeats, Path(cfg.out) / "bench.csv")
            for row in rows:
                print(f"workers={row['workers']} median_s={row['median_s']:.3f} "
                      f"identical={row['identical']}")
            return EXIT_OK
        return _analyze(args, cfg)
    except (ConfigError, ParameterError) as exc:
        print(f"ecgalign: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (EcgAlignError, OSError, ValueError) as exc:
        print(f"ecgalign: {exc}", file=sys.stderr)
        return EXIT_TOTAL
