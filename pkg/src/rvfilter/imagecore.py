"""Image representation, PNG/PPM I/O, replicate padding and window extraction.

An image is a ``(M, N, 3)`` ``uint8`` numpy array in RGB order.  Nothing here
performs any color-space transformation: values read from disk are the values
written back.
"""

from __future__ import annotations

import contextlib
import io
import math
import os
import struct
import tempfile
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image as PILImage

from .errors import ConfigError, FormatError

PNG_SIGNATURE = b"\x89PNG\r\n\x1a\n"
# PNG color types
_GRAY, _RGB, _PALETTE, _GRAY_ALPHA, _RGBA = 0, 2, 3, 4, 6


def as_image(data) -> np.ndarray:
    """Validate ``data`` as an RGB image and return it as a ``uint8`` array."""
    arr = np.asarray(data)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise ValueError(f"image must have shape (M, N, 3), got {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError(f"image must be at least 1x1, got {arr.shape[:2]}")
    if arr.dtype != np.uint8:
        if arr.size and (arr.min() < 0 or arr.max() > 255):
            raise ValueError("pixel components must lie in [0, 255]")
        if np.issubdtype(arr.dtype, np.floating) and not np.all(arr == np.round(arr)):
            raise ValueError("pixel components must be integers")
        arr = arr.astype(np.uint8)
    return arr


# ---------------------------------------------------------------------------
# file I/O


def load_image(path) -> np.ndarray:
    """Read an 8-bit RGB PNG or a binary PPM (P6, maxval 255)."""
    path = Path(path)
    with open(path, "rb") as fh:
        data = fh.read()
    if data.startswith(PNG_SIGNATURE):
        return _decode_png(data, path)
    if data[:2] == b"P6":
        return _decode_ppm(data, path)
    raise FormatError(f"{path}: unrecognized file signature {data[:8]!r} (expected PNG or P6 PPM)")


def _decode_png(data: bytes, path: Path) -> np.ndarray:
    # Pillow silently narrows 16-bit RGB to 8 bits, so read IHDR ourselves.
    if len(data) < 33 or data[12:16] != b"IHDR":
        raise FormatError(f"{path}: truncated PNG header")
    width, height, bit_depth, color_type = struct.unpack(">IIBB", data[16:26])
    if color_type in (_GRAY, _GRAY_ALPHA):
        raise FormatError(f"{path}: unsupported PNG color type {color_type} (grayscale)")
    if color_type in (_RGB, _RGBA) and bit_depth != 8:
        raise FormatError(f"{path}: unsupported PNG bit depth {bit_depth} (only 8-bit is supported)")
    if color_type not in (_RGB, _PALETTE, _RGBA):
        raise FormatError(f"{path}: unsupported PNG color type {color_type}")
    try:
        with PILImage.open(io.BytesIO(data)) as im:
            im.load()
            if color_type == _RGBA:
                warnings.warn(f"{path}: alpha channel ignored", stacklevel=3)
            arr = np.asarray(im.convert("RGB"), dtype=np.uint8)
    except (OSError, SyntaxError) as exc:
        raise FormatError(f"{path}: corrupt PNG data ({exc})") from exc
    if arr.shape[:2] != (height, width):
        raise FormatError(f"{path}: decoded size {arr.shape[:2]} disagrees with header")
    return np.ascontiguousarray(arr)


def _ppm_tokens(data: bytes, count: int):
    """Return ``count`` whitespace separated header tokens and the offset after them."""
    tokens, pos = [], 2
    while len(tokens) < count:
        if pos >= len(data):
            raise FormatError("truncated PPM header")
        ch = data[pos : pos + 1]
        if ch == b"#":
            end = data.find(b"\n", pos)
            pos = len(data) if end < 0 else end + 1
        elif ch.isspace():
            pos += 1
        else:
            start = pos
            while pos < len(data) and not data[pos : pos + 1].isspace() and data[pos : pos + 1] != b"#":
                pos += 1
            tokens.append(data[start:pos])
    # exactly one whitespace byte separates the header from the raster
    return tokens, pos + 1


def _decode_ppm(data: bytes, path: Path) -> np.ndarray:
    try:
        tokens, offset = _ppm_tokens(data, 3)
        width, height, maxval = (int(t) for t in tokens)
    except (FormatError, ValueError) as exc:
        raise FormatError(f"{path}: malformed PPM header ({exc})") from exc
    if maxval != 255:
        raise FormatError(f"{path}: unsupported PPM maxval {maxval} (only 255 is supported)")
    if width < 1 or height < 1:
        raise FormatError(f"{path}: invalid PPM dimensions {width}x{height}")
    size = width * height * 3
    raster = data[offset : offset + size]
    if len(raster) != size:
        raise FormatError(f"{path}: PPM raster has {len(raster)} bytes, expected {size}")
    return np.frombuffer(raster, dtype=np.uint8).reshape(height, width, 3).copy()


def encode_image(img: np.ndarray, fmt: str) -> bytes:
    """Canonical byte encoding of ``img`` as ``"png"`` or ``"ppm"``."""
    img = as_image(img)
    if fmt == "ppm":
        m, n, _ = img.shape
        return b"P6\n%d %d\n255\n" % (n, m) + np.ascontiguousarray(img).tobytes()
    if fmt == "png":
        buf = io.BytesIO()
        PILImage.fromarray(np.ascontiguousarray(img), "RGB").save(buf, format="PNG", compress_level=6)
        return buf.getvalue()
    raise FormatError(f"unsupported output format {fmt!r}")


def _format_for(path: Path) -> str:
    ext = path.suffix.lower()
    if ext == ".png":
        return "png"
    if ext in (".ppm", ".pnm"):
        return "ppm"
    raise FormatError(f"{path}: unsupported file extension {ext!r} (use .png or .ppm)")


@contextlib.contextmanager
def atomic_writer(path, mode: str = "wb"):
    """Open a temp file beside ``path`` and rename it into place on success."""
    path = Path(path)
    directory = path.parent if str(path.parent) else Path(".")
    try:
        fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=directory)
    except OSError as exc:
        raise OSError(exc.errno, f"cannot write {path}: {exc.strerror}", str(path)) from exc
    try:
        with os.fdopen(fd, mode) as fh:
            yield fh
        os.replace(tmp, path)
    except BaseException:
        with contextlib.suppress(OSError):
            os.unlink(tmp)
        raise


def save_image(img: np.ndarray, path) -> None:
    """Write ``img`` to ``path``; the format follows the extension (.png / .ppm)."""
    path = Path(path)
    payload = encode_image(img, _format_for(path))
    with atomic_writer(path) as fh:
        fh.write(payload)


# ---------------------------------------------------------------------------
# padding and windows


def window_radius(n: int) -> int:
    """Radius of a square window holding ``n`` pixels; ``sqrt(n)`` must be odd and >= 3."""
    side = math.isqrt(n) if n > 0 else 0
    if side * side != n or side < 3 or side % 2 == 0:
        raise ConfigError(f"window size n={n} is not the square of an odd integer >= 3")
    return (side - 1) // 2


def pad_replicate(img: np.ndarray, radius: int) -> np.ndarray:
    if radius < 0:
        raise ValueError(f"radius must be non-negative, got {radius}")
    img = as_image(img)
    if radius == 0:
        return img.copy()
    return np.pad(img, ((radius, radius), (radius, radius), (0, 0)), mode="edge")


@dataclass(frozen=True)
class Window:
    """The ``n`` vectors of one sliding window in raster order.

    ``positions`` are (row, col) in the unpadded image, clamped for pixels
    that came from replicate padding.
    """

    vectors: np.ndarray  # (n, 3) uint8
    positions: np.ndarray  # (n, 2) int64

    @property
    def n(self) -> int:
        return len(self.vectors)

    @property
    def center(self) -> int:
        """0-based index of the center element."""
        return self.n // 2


def window_at(padded: np.ndarray, r: int, c: int, n: int = 9) -> Window:
    """Window of ``n`` pixels centered on padded-frame coordinate ``(r, c)``."""
    rad = window_radius(n)
    mp, np_, _ = padded.shape
    if not (rad <= r < mp - rad and rad <= c < np_ - rad):
        raise IndexError(f"window center ({r}, {c}) out of range for padded image {mp}x{np_}, radius {rad}")
    m, ncols = mp - 2 * rad, np_ - 2 * rad
    block = padded[r - rad : r + rad + 1, c - rad : c + rad + 1]
    rows = np.clip(np.arange(r - rad, r + rad + 1) - rad, 0, m - 1)
    cols = np.clip(np.arange(c - rad, c + rad + 1) - rad, 0, ncols - 1)
    rr, cc = np.meshgrid(rows, cols, indexing="ij")
    positions = np.stack([rr.ravel(), cc.ravel()], axis=1).astype(np.int64)
    return Window(np.ascontiguousarray(block.reshape(n, 3)), positions)
