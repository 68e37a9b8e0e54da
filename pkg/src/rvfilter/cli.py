"""Command line interface: ``noise``, ``filter``, ``metrics`` and ``bench``.

Every subcommand accepts ``--config FILE`` holding ``key = value`` lines
whose keys are long option names (``phi``, ``measure``, ``seed`` ...);
flags given on the command line override the file.

Exit status: 0 success, 2 I/O or file format error, 3 configuration error,
4 numeric error, 1 anything else.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path

from . import bench, measures, noise, quality
from .errors import ConfigError, FormatError, NumericError
from .filter import ALL_FILTERS, FilterSpec, parse_filter
from .imagecore import atomic_writer, load_image, save_image

log = logging.getLogger("rvfilter")

EXIT_OK, EXIT_FAIL, EXIT_IO, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3, 4

MEASURE_HELP = (
    "measures (id:default parameters):\n"
    + measures.describe_measures()
    + "\n  ddf:p=2                directional-distance criterion (minimize)"
    + "\n  none                   identity filter"
)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(f"{self.prog}: {message}")


@dataclass
class CliConfig:
    command: str
    options: dict = field(default_factory=dict)
    filter_spec: FilterSpec | None = None
    noise_config: noise.NoiseConfig | None = None
    filter_specs: list = field(default_factory=list)
    levels: tuple = ()


def _window(text: str) -> int:
    try:
        side = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if side < 3 or side % 2 == 0:
        raise argparse.ArgumentTypeError(f"window side must be an odd integer >= 3, got {side}")
    return side


def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {v}")
    return v


def build_parser() -> argparse.ArgumentParser:
    fmt = argparse.RawDescriptionHelpFormatter
    parser = _Parser(prog="rvfilter", description="Reduced-ordering vector filters for color images.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("noise", help="add correlated impulsive noise", epilog=MEASURE_HELP, formatter_class=fmt)
    p.add_argument("--phi", type=float, required=True, help="pixel corruption probability")
    p.add_argument("--phi1", type=float, default=0.25, help="red-only branch weight (default 0.25)")
    p.add_argument("--phi2", type=float, default=0.25, help="green-only branch weight (default 0.25)")
    p.add_argument("--phi3", type=float, default=0.25, help="blue-only branch weight (default 0.25)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--mask", type=Path, help="also write the corruption mask as an RGB image")
    p.add_argument("--config", type=Path)
    p.add_argument("input", type=Path)
    p.add_argument("output", type=Path)

    p = sub.add_parser("filter", help="filter an image", epilog=MEASURE_HELP, formatter_class=fmt)
    p.add_argument("--measure", default="d2", help="ordering criterion, e.g. d1, fms:K=1024, cfs:C=150,t=4, ddf:p=2")
    p.add_argument("--window", type=_window, default=3, help="window side (odd, default 3 -> n=9)")
    p.add_argument("--no-shortcut", action="store_true", help="run d2sq through the generic engine")
    p.add_argument("--threads", type=_positive_int, default=1)
    p.add_argument("--config", type=Path)
    p.add_argument("input", type=Path)
    p.add_argument("output", type=Path)

    p = sub.add_parser("metrics", help="MAE, MSE and NCD of a filtered image", epilog=MEASURE_HELP, formatter_class=fmt)
    group = p.add_mutually_exclusive_group()
    group.add_argument("--json", dest="format", action="store_const", const="json")
    group.add_argument("--csv", dest="format", action="store_const", const="csv")
    p.set_defaults(format="json")
    p.add_argument("--out", type=Path, help="write to a file instead of stdout")
    p.add_argument("--config", type=Path)
    p.add_argument("original", type=Path)
    p.add_argument("filtered", type=Path)

    p = sub.add_parser("bench", help="rank filters over an image corpus", epilog=MEASURE_HELP, formatter_class=fmt)
    p.add_argument("--corpus", type=Path, required=True, help="directory of .png/.ppm images")
    p.add_argument("--levels", default="0.1,0.2,0.3", help="comma separated noise probabilities")
    p.add_argument("--measures", default="all", help="'all' or a comma separated list of filters")
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--reps", type=_positive_int, default=10, help="timed runs per filter")
    p.add_argument("--no-timing", action="store_true", help="skip timing (effectiveness only)")
    p.add_argument("--window", type=_window, default=3)
    p.add_argument("--threads", type=_positive_int, default=1, help="workers for untimed filtering")
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--config", type=Path)
    return parser


def _subparser(parser, command):
    for action in parser._subparsers._group_actions:
        if command in action.choices:
            return action.choices[command]
    return None


def _config_argv(sub: argparse.ArgumentParser, path: Path) -> list:
    """Turn a key = value file into option tokens for ``sub``."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"--config: cannot read {path}: {exc.strerror}") from exc
    options = {a.dest: a for a in sub._actions if a.option_strings}
    argv = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip().replace("-", "_"), value.strip()
        if not sep or not key:
            raise ConfigError(f"--config {path}:{lineno}: expected 'key = value', got {raw!r}")
        action = options.get(key)
        if action is None or key in ("config", "help"):
            raise ConfigError(f"--config {path}:{lineno}: unknown key {key!r}")
        flag = action.option_strings[-1]
        if isinstance(action, (argparse._StoreTrueAction, argparse._StoreConstAction)):
            if value.lower() in ("1", "true", "yes", "on"):
                argv.append(flag)
            elif value.lower() not in ("0", "false", "no", "off"):
                raise ConfigError(f"--config {path}:{lineno}: {key} expects true/false, got {value!r}")
        else:
            argv += [flag, value]
    return argv


def split_filter_list(text: str) -> list:
    """Split ``"d1,cfs:C=150,t=4,fms"`` into filter strings; bare ``k=v`` items extend the previous one."""
    items = []
    for tok in (t.strip() for t in text.split(",")):
        if not tok:
            continue
        if "=" in tok and ":" not in tok and items:
            items[-1] += "," + tok
        else:
            items.append(tok)
    return items


def _parse_levels(text: str) -> tuple:
    try:
        levels = tuple(float(t) for t in text.split(",") if t.strip())
    except ValueError:
        raise ConfigError(f"--levels: not a comma separated list of numbers: {text!r}") from None
    if not levels:
        raise ConfigError("--levels: no noise levels given")
    for lvl in levels:
        if not 0.0 <= lvl <= 1.0:
            raise ConfigError(f"--levels: probability {lvl} outside [0, 1]")
    return levels


def parse_args(argv) -> CliConfig:
    argv = list(argv)
    parser = build_parser()
    if "--config" in argv:
        i = argv.index("--config")
        if i + 1 >= len(argv):
            raise ConfigError("--config: missing file name")
        cmd = next((a for a in argv if not a.startswith("-")), None)
        sub = _subparser(parser, cmd)
        if sub is None:
            raise ConfigError(f"--config needs a subcommand, got {cmd!r}")
        pos = argv.index(cmd)
        argv = argv[: pos + 1] + _config_argv(sub, Path(argv[i + 1])) + argv[pos + 1 :]
    ns = parser.parse_args(argv)
    cfg = CliConfig(ns.command, vars(ns))

    if ns.command == "noise":
        cfg.noise_config = noise.NoiseConfig(ns.phi, ns.phi1, ns.phi2, ns.phi3, ns.seed)
    elif ns.command == "filter":
        try:
            cfg.filter_spec = parse_filter(ns.measure, ns.window, shortcut=not ns.no_shortcut)
        except ConfigError as exc:
            raise ConfigError(f"--measure: {exc}") from None
    elif ns.command == "bench":
        cfg.levels = _parse_levels(ns.levels)
        names = list(ALL_FILTERS) if ns.measures.strip() == "all" else split_filter_list(ns.measures)
        try:
            cfg.filter_specs = [parse_filter(n, ns.window) for n in names]
        except ConfigError as exc:
            raise ConfigError(f"--measures: {exc}") from None
        if not cfg.filter_specs:
            raise ConfigError("--measures: no filters given")
        if len({f.name for f in cfg.filter_specs}) != len(cfg.filter_specs):
            raise ConfigError("--measures: each filter may appear only once")
    return cfg


# ---------------------------------------------------------------------------


def _cmd_noise(cfg: CliConfig) -> None:
    o = cfg.options
    img = load_image(o["input"])
    noisy, labels = noise.corrupt(img, cfg.noise_config)
    save_image(noisy, o["output"])
    if o["mask"]:
        save_image(noise.mask_to_image(labels), o["mask"])
    counts = {name: int((labels == k).sum()) for k, name in enumerate(noise.LABELS)}
    log.info("corrupted %d of %d pixels %s", labels.size - counts["clean"], labels.size, counts)


def _cmd_filter(cfg: CliConfig) -> None:
    from .filter import filter_image

    o = cfg.options
    img = load_image(o["input"])
    out = filter_image(img, cfg.filter_spec, threads=o["threads"])
    save_image(out, o["output"])
    log.info("filtered %s with %s (window %dx%d)", o["input"], cfg.filter_spec, cfg.filter_spec.window, cfg.filter_spec.window)


def _cmd_metrics(cfg: CliConfig) -> None:
    o = cfg.options
    x, y = load_image(o["original"]), load_image(o["filtered"])
    if x.shape != y.shape:
        raise ConfigError(f"image dimensions differ: {x.shape[:2]} vs {y.shape[:2]}")
    rep = quality.evaluate(x, y)
    if o["format"] == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["original", "filtered", "mae", "mse", "ncd"])
        w.writerow([o["original"], o["filtered"], repr(rep.mae), repr(rep.mse), repr(rep.ncd)])
        text = buf.getvalue()
    else:
        payload = {"original": str(o["original"]), "filtered": str(o["filtered"]), **rep.as_dict()}
        text = json.dumps(payload, indent=2) + "\n"
    if o["out"]:
        with atomic_writer(o["out"], "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _cmd_bench(cfg: CliConfig) -> None:
    o = cfg.options
    corpus = bench.list_corpus(o["corpus"])
    if not corpus:
        raise ConfigError(f"--corpus: no .png/.ppm images in {o['corpus']}")
    bcfg = bench.BenchConfig(
        corpus=corpus,
        levels=cfg.levels,
        filters=cfg.filter_specs,
        seed=o["seed"],
        reps=o["reps"],
        timing=not o["no_timing"],
        threads=o["threads"],
    )
    report = bench.run_benchmark(bcfg, progress=lambda im, lvl, f: log.info("%s @ %g: %s", im, lvl, f))
    for path in bench.write_report(report, o["out"]):
        log.info("wrote %s", path)


_COMMANDS = {"noise": _cmd_noise, "filter": _cmd_filter, "metrics": _cmd_metrics, "bench": _cmd_bench}


def run(cfg: CliConfig) -> int:
    try:
        _COMMANDS[cfg.command](cfg)
    except ConfigError as exc:
        print(f"rvfilter: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericError as exc:
        print(f"rvfilter: numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (OSError, FormatError) as exc:
        print(f"rvfilter: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except Exception as exc:  # noqa: BLE001
        print(f"rvfilter: error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        cfg = parse_args(argv)
    except ConfigError as exc:
        print(f"rvfilter: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    logging.basicConfig(level=logging.INFO if cfg.options.get("verbose") else logging.WARNING, format="%(message)s")
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
