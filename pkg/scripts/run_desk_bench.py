"""Build the desk corpus and run the full 18-filter benchmark on it.

Usage: python scripts/run_desk_bench.py OUT_DIR [--size 512] [--reps 10] [--no-timing]

Writes the corpus to OUT_DIR/corpus and the report to OUT_DIR/report.
"""

import argparse
import sys
from pathlib import Path

from make_desk_corpus import load_desk_images

from rvfilter.cli import main as cli_main
from rvfilter.imagecore import save_image


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("out", type=Path)
    ap.add_argument("--size", type=int, default=512)
    ap.add_argument("--reps", type=int, default=10)
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--no-timing", action="store_true")
    args = ap.parse_args()

    corpus = args.out / "corpus"
    corpus.mkdir(parents=True, exist_ok=True)
    for name, img in load_desk_images(args.size).items():
        save_image(img, corpus / f"{name}.png")

    argv = ["-v", "bench", "--corpus", str(corpus), "--seed", str(args.seed), "--reps", str(args.reps)]
    argv += ["--out", str(args.out / "report")]
    if args.no_timing:
        argv.append("--no-timing")
    return cli_main(argv)


if __name__ == "__main__":
    sys.exit(main())
