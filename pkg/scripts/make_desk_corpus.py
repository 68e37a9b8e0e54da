"""Write the five-image desk corpus used by the acceptance benchmark.

Images come from scikit-image's bundled data and are center-cropped to at
most 512x512.  Usage: python scripts/make_desk_corpus.py OUT_DIR [--size N]
"""

import argparse
from pathlib import Path

from rvfilter.imagecore import save_image

# bundled with scikit-image, no download needed
DESK_IMAGES = ("astronaut", "chelsea", "coffee", "immunohistochemistry", "rocket")


def load_desk_images(size: int = 512) -> dict:
    from skimage import data

    out = {}
    for name in DESK_IMAGES:
        img = getattr(data, name)()[..., :3]
        m, n = img.shape[:2]
        h, w = min(size, m), min(size, n)
        r0, c0 = (m - h) // 2, (n - w) // 2
        out[name] = img[r0 : r0 + h, c0 : c0 + w].copy()
    return out


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("out", type=Path)
    ap.add_argument("--size", type=int, default=512)
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)
    for name, img in load_desk_images(args.size).items():
        save_image(img, args.out / f"{name}.png")
        print(f"{name}: {img.shape[0]}x{img.shape[1]}")


if __name__ == "__main__":
    main()
