"""Corpus benchmark: effectiveness ranks, efficiency ranks and timings.

For every image and noise level the image is corrupted once (seed derived
from the base seed, the image index and the level), every filter is applied,
and MAE/MSE/NCD against the clean image are recorded.  Within one
(image, level, criterion) cell the filters are ranked, with rank = number of
strictly better filters (ties share the lower rank, ranks start at 0).
Tables report the per-filter mean rank over the corpus.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import time
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.stats import spearmanr

from . import noise as nz
from . import quality
from .errors import FormatError, NumericError, UndefinedMetricError
from .filter import FilterSpec, PreparedFilter, all_filter_specs, prepare_filter
from .imagecore import atomic_writer, load_image

log = logging.getLogger(__name__)

CRITERIA = ("MAE", "MSE", "NCD")
IMAGE_SUFFIXES = (".png", ".ppm", ".pnm")

# Overall mean effectiveness ranks published for the 18 filters on a
# 100-image corpus; used only for rank-correlation against local runs.
REFERENCE_MEAN_RANKS = {
    "cfs": 0.33,
    "fmds": 2.06,
    "fms": 2.54,
    "d1": 3.67,
    "divergence": 4.26,
    "d2": 5.88,
    "chord": 7.73,
    "canberra": 8.04,
    "ddf": 8.07,
    "bray": 8.75,
    "goude": 9.19,
    "soergel": 9.22,
    "dinf": 10.64,
    "ware": 11.56,
    "fds": 14.30,
    "d2sq": 15.08,
    "cosine": 15.27,
    "none": 16.40,
}


@dataclass
class BenchConfig:
    corpus: list
    levels: tuple = (0.10, 0.20, 0.30)
    filters: list = field(default_factory=all_filter_specs)
    seed: int = 7
    reps: int = 10
    timing: bool = True
    channel_probs: tuple = (0.25, 0.25, 0.25)
    threads: int = 1

    def __post_init__(self):
        if not self.corpus:
            raise ValueError("benchmark corpus is empty")
        if not self.filters:
            raise ValueError("no filters to benchmark")
        if self.reps < 1:
            raise ValueError(f"reps must be >= 1, got {self.reps}")
        names = [f.name for f in self.filters]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate filters in benchmark: {names}")

    def echo(self) -> dict:
        """Resolved configuration, embedded in every report."""
        return {
            "corpus": [str(p) for p in self.corpus],
            "levels": list(self.levels),
            "filters": [str(f) for f in self.filters],
            "window": self.filters[0].window,
            "seed": self.seed,
            "reps": self.reps,
            "timing": self.timing,
            "channel_probs": list(self.channel_probs),
            "prng": nz.PRNG_ID,
            "seed_derivation": "numpy SeedSequence([seed, image_index, round(level * 1e6)])",
            "lab": quality.LAB_CONSTANTS,
            "border": "replicate padding; cfs positions clamped to the image",
        }


@dataclass
class Record:
    image: str
    level: float
    filter: str
    mae: float
    mse: float
    ncd: float
    time_ms: float = math.nan


def rank_measures(scores, lower_is_better: bool = True) -> np.ndarray:
    """Rank = number of strictly better scores; NaN scores are excluded (rank NaN)."""
    s = np.asarray(scores, dtype=np.float64)
    bad = np.isnan(s)
    if bad.any():
        warnings.warn(f"{int(bad.sum())} NaN score(s) excluded from ranking", stacklevel=2)
    ranks = np.full(s.shape, np.nan)
    good = s[~bad]
    if not lower_is_better:
        good = -good
    ranks[~bad] = [(good < v).sum() for v in good]
    return ranks


@dataclass
class RankTable:
    filters: list
    columns: list  # (criterion, level) pairs
    cells: np.ndarray  # (len(filters), len(columns)) mean ranks

    @property
    def mean(self) -> np.ndarray:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            return np.nanmean(self.cells, axis=1)

    def order(self) -> list:
        """Row indices sorted by overall mean (stable)."""
        return sorted(range(len(self.filters)), key=lambda i: (self.mean[i], i))

    def column(self, criterion: str, level: float) -> np.ndarray:
        return self.cells[:, self.columns.index((criterion, level))]

    def row(self, name: str) -> np.ndarray:
        return self.cells[self.filters.index(name)]

    def mean_of(self, name: str) -> float:
        return float(self.mean[self.filters.index(name)])

    def _header(self):
        return ["filter"] + [f"{c} {lvl:.0%}" for c, lvl in self.columns] + ["mean"]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self._header())
        for i in self.order():
            w.writerow([self.filters[i]] + [f"{v:.4f}" for v in self.cells[i]] + [f"{self.mean[i]:.4f}"])
        return buf.getvalue()

    def to_markdown(self) -> str:
        head = self._header()
        lines = ["| " + " | ".join(head) + " |", "|" + "---|" * len(head)]
        for i in self.order():
            vals = [f"{v:.2f}" for v in self.cells[i]] + [f"{self.mean[i]:.2f}"]
            lines.append("| " + " | ".join([self.filters[i]] + vals) + " |")
        return "\n".join(lines)


def _rank_table(records, filters, levels, criteria, value_of, lower_is_better=True) -> RankTable:
    columns = [(c, lvl) for c in criteria for lvl in levels]
    images = sorted({r.image for r in records}, key=[r.image for r in records].index)
    index = {(r.image, r.level, r.filter): r for r in records}
    cells = np.full((len(filters), len(columns)), np.nan)
    for k, (crit, lvl) in enumerate(columns):
        per_image = []
        for img in images:
            rows = [index.get((img, lvl, f)) for f in filters]
            if any(r is None for r in rows):
                continue
            per_image.append(rank_measures([value_of(r, crit) for r in rows], lower_is_better))
        if per_image:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", RuntimeWarning)
                cells[:, k] = np.nanmean(np.array(per_image), axis=0)
    return RankTable(list(filters), columns, cells)


def effectiveness_table(records, filters, levels) -> RankTable:
    return _rank_table(records, filters, levels, CRITERIA, lambda r, c: getattr(r, c.lower()))


def efficiency_table(records, filters, levels) -> RankTable:
    return _rank_table(records, filters, levels, ("Time",), lambda r, c: r.time_ms)


def times_table(records, filters) -> list:
    """(filter, mean ms, relative units) rows; units are multiples of the fastest real filter."""
    means = {}
    for f in filters:
        ts = [r.time_ms for r in records if r.filter == f and not math.isnan(r.time_ms)]
        means[f] = float(np.mean(ts)) if ts else math.nan
    real = [t for f, t in means.items() if f != "none" and t > 0 and not math.isnan(t)]
    unit = min(real) if real else math.nan
    rows = []
    for f in sorted(filters, key=lambda f: (means[f] if not math.isnan(means[f]) else math.inf, filters.index(f))):
        t = means[f]
        rel = round(t / unit) if unit and not math.isnan(t) and not math.isnan(unit) else math.nan
        rows.append((f, t, rel))
    return rows


def time_prepared(pf: PreparedFilter, img: np.ndarray, reps: int) -> float:
    """Mean wall time in ms of ``reps`` single-threaded runs after one warm-up run."""
    if pf.spec.criterion is None:
        return 0.0
    pf(img)
    total = 0.0
    for _ in range(reps):
        start = time.perf_counter()
        pf(img, threads=1)
        total += time.perf_counter() - start
    return 1000.0 * total / reps


def time_measure(img: np.ndarray, fspec: FilterSpec, reps: int = 10) -> float:
    """Mean filtering time in ms, excluding table construction (see ``prepare_filter``)."""
    if reps < 1:
        raise ValueError(f"reps must be >= 1, got {reps}")
    return time_prepared(prepare_filter(fspec), img, reps)


@dataclass
class BenchReport:
    config: BenchConfig
    records: list
    failures: list
    effectiveness: RankTable
    efficiency: RankTable | None
    times: list
    build_ms: dict

    @property
    def filters(self) -> list:
        return [f.name for f in self.config.filters]

    def reference_correlation(self) -> float:
        """Spearman correlation of overall mean ranks with the published ordering."""
        names = [f for f in self.effectiveness.filters if f in REFERENCE_MEAN_RANKS]
        if len(names) < 3:
            return math.nan
        ours = [self.effectiveness.mean_of(f) for f in names]
        ref = [REFERENCE_MEAN_RANKS[f] for f in names]
        return float(spearmanr(ours, ref).statistic)


def list_corpus(directory) -> list:
    directory = Path(directory)
    if not directory.is_dir():
        raise FileNotFoundError(f"corpus directory not found: {directory}")
    return sorted(p for p in directory.iterdir() if p.suffix.lower() in IMAGE_SUFFIXES)


def run_benchmark(cfg: BenchConfig, progress=None) -> BenchReport:
    prepared = [prepare_filter(f) for f in cfg.filters]
    build_ms = {pf.spec.name: 1000.0 * pf.build_seconds for pf in prepared}
    records, failures = [], []
    names = [Path(p).name for p in cfg.corpus]
    for idx, path in enumerate(cfg.corpus):
        try:
            clean = load_image(path)
        except (OSError, FormatError) as exc:
            warnings.warn(f"skipping {path}: {exc}", stacklevel=2)
            failures.append((str(path), str(exc)))
            continue
        log.info("image %d/%d: %s", idx + 1, len(cfg.corpus), names[idx])
        for level in cfg.levels:
            ncfg = nz.NoiseConfig(level, *cfg.channel_probs, seed=nz.derive_seed(cfg.seed, idx, level))
            noisy, _ = nz.corrupt(clean, ncfg)
            for pf in prepared:
                name = pf.spec.name
                try:
                    out = pf(noisy, threads=cfg.threads)
                except NumericError as exc:
                    warnings.warn(f"{names[idx]} @ {level:g}, {name}: {exc}", stacklevel=2)
                    failures.append((str(path), f"{name} at {level:g}: {exc}"))
                    continue
                try:
                    ncd = quality.ncd(clean, out)
                except UndefinedMetricError:
                    ncd = math.nan
                t = time_prepared(pf, noisy, cfg.reps) if cfg.timing else math.nan
                records.append(Record(names[idx], level, name, quality.mae(clean, out), quality.mse(clean, out), ncd, t))
                if progress:
                    progress(names[idx], level, name)
    if not records:
        raise RuntimeError("benchmark produced no results (every image failed)")
    filters = [f.name for f in cfg.filters]
    levels = list(cfg.levels)
    eff = effectiveness_table(records, filters, levels)
    tim = efficiency_table(records, filters, levels) if cfg.timing else None
    times = times_table(records, filters) if cfg.timing else []
    return BenchReport(cfg, records, failures, eff, tim, times, build_ms)


# ---------------------------------------------------------------------------
# report files

RECORD_FIELDS = [f for f in Record.__dataclass_fields__]


def records_to_csv(records) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(RECORD_FIELDS)
    for r in records:
        w.writerow([r.image, repr(r.level), r.filter, repr(r.mae), repr(r.mse), repr(r.ncd), repr(r.time_ms)])
    return buf.getvalue()


def records_from_csv(text: str) -> list:
    rows = list(csv.DictReader(io.StringIO(text)))
    return [
        Record(
            r["image"], float(r["level"]), r["filter"], float(r["mae"]), float(r["mse"]), float(r["ncd"]), float(r["time_ms"])
        )
        for r in rows
    ]


def _times_csv(report: BenchReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["filter", "mean_ms", "relative_units", "table_build_ms"])
    for f, t, rel in report.times:
        w.writerow([f, f"{t:.3f}", rel, f"{report.build_ms.get(f, 0.0):.3f}"])
    return buf.getvalue()


def render_markdown(report: BenchReport) -> str:
    cfg = report.config
    parts = ["# Vector filter benchmark", ""]
    parts += ["## Configuration", "", "```json", json.dumps(cfg.echo(), indent=2), "```", ""]
    parts += [
        "## Effectiveness (mean rank, 0 = best)",
        "",
        report.effectiveness.to_markdown(),
        "",
        f"Spearman correlation of the overall mean ranks with the published ordering: "
        f"{report.reference_correlation():.3f}",
        "",
    ]
    if report.efficiency is not None:
        parts += ["## Efficiency (mean time rank)", "", report.efficiency.to_markdown(), ""]
        parts += ["## Mean filtering time", "", "| filter | ms | relative |", "|---|---|---|"]
        parts += [f"| {f} | {t:.3f} | {rel}t |" for f, t, rel in report.times]
        parts.append("")
    if report.failures:
        parts += ["## Skipped", ""] + [f"- {p}: {why}" for p, why in report.failures] + [""]
    return "\n".join(parts)


def _write(path: Path, text: str):
    with atomic_writer(path, "w") as fh:
        fh.write(text)


def write_report(report: BenchReport, out_dir) -> list:
    """Write CSV, JSON and Markdown outputs; returns the written paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    files = {
        "results.csv": records_to_csv(report.records),
        "effectiveness.csv": report.effectiveness.to_csv(),
        "config.json": json.dumps(report.config.echo(), indent=2) + "\n",
        "report.md": render_markdown(report),
    }
    if report.efficiency is not None:
        files["efficiency.csv"] = report.efficiency.to_csv()
        files["times.csv"] = _times_csv(report)
    written = []
    for name, text in files.items():
        _write(out / name, text)
        written.append(out / name)
    return written
