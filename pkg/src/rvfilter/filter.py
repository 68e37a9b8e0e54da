"""Reduced-ordering vector filters.

Each output pixel is the window vector whose aggregate score over the whole
window is lowest (distances) or highest (similarities).  Ties go to the
lowest window index.  Each unordered pair in a window is scored once (all
measures are symmetric) and every aggregate is summed in window order,
self term included.
"""

from __future__ import annotations

import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from numba import njit

from . import measures as ms
from .errors import ConfigError, NumericError
from .imagecore import Window, as_image, pad_replicate, window_radius

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class DDF:
    """Directional-distance criterion: aggregate Minkowski times aggregate angle."""

    p: float = 2.0

    def __post_init__(self):
        if not self.p >= 1:
            raise ConfigError(f"ddf exponent p must be >= 1, got {self.p}")

    @property
    def id(self) -> str:
        return "ddf"

    def __str__(self) -> str:
        return f"ddf:p={self.p:g}"


@dataclass(frozen=True)
class FilterSpec:
    """What to filter with.

    ``criterion`` is a :class:`MeasureSpec`, a :class:`DDF`, or ``None`` for
    the identity filter.  ``window`` is the side length of the square window.
    ``shortcut`` routes d2sq through the mean-vector shortcut.
    """

    criterion: ms.MeasureSpec | DDF | None
    window: int = 3
    shortcut: bool = True

    def __post_init__(self):
        window_radius(self.window * self.window)

    @property
    def n(self) -> int:
        return self.window * self.window

    @property
    def name(self) -> str:
        return "none" if self.criterion is None else self.criterion.id

    def __str__(self) -> str:
        return "none" if self.criterion is None else str(self.criterion)


def parse_filter(text: str, window: int = 3, shortcut: bool = True) -> FilterSpec:
    """``"none"``, ``"ddf[:p=2]"`` or any measure string accepted by :func:`parse_measure`."""
    text = text.strip()
    ident, _, rest = text.partition(":")
    if ident == "none":
        if rest:
            raise ConfigError("the identity filter 'none' takes no parameters")
        return FilterSpec(None, window, shortcut)
    if ident == "ddf":
        params = ms.parse_params(rest, text)
        unknown = set(params) - {"p"}
        if unknown:
            raise ConfigError(f"ddf has no parameter {sorted(unknown)[0]!r} (parameters: p)")
        return FilterSpec(DDF(params.get("p", 2.0)), window, shortcut)
    return FilterSpec(ms.parse_measure(text), window, shortcut)


ALL_FILTERS = ("none",) + ms.MEASURE_IDS + ("ddf",)


def all_filter_specs(window: int = 3) -> list[FilterSpec]:
    """The identity filter, every measure with default parameters, and ddf."""
    return [parse_filter(name, window) for name in ALL_FILTERS]


# ---------------------------------------------------------------------------
# numba engines


@njit(nogil=True)
def _pair_scores(v, n, kernel, p, lut, out):
    # Visiting pairs (i, j>=i) in row-major order adds to every out[k] in
    # j order 0..n-1, so each sum matches a plain sequential loop.
    for i in range(n):
        out[i] = 0.0
    for i in range(n):
        acc = out[i]
        for j in range(i, n):
            s = kernel(v[i, 0], v[i, 1], v[i, 2], v[j, 0], v[j, 1], v[j, 2], p, lut)
            acc += s
            if j != i:
                out[j] += s
        out[i] = acc


@njit(cache=True, nogil=True)
def _unit_vectors(v, n, u):
    # Normalize each window vector once instead of once per pair; the
    # operations are those of ms._fds_k, so scores are bit-identical.
    for i in range(n):
        x0, x1, x2 = float(v[i, 0]), float(v[i, 1]), float(v[i, 2])
        nx = math.sqrt(x0 * x0 + x1 * x1 + x2 * x2)
        u[i, 3] = nx
        if nx != 0.0:
            r = 1.0 / nx
            u[i, 0] = x0 * r
            u[i, 1] = x1 * r
            u[i, 2] = x2 * r


@njit(cache=True, nogil=True)
def _dir_scores(v, u, n, k, lut, with_mag, out):
    for i in range(n):
        out[i] = 0.0
    for i in range(n):
        acc = out[i]
        for j in range(i, n):
            if u[i, 3] == 0.0 or u[j, 3] == 0.0:
                s = 1.0 if u[i, 3] == u[j, 3] else 0.0
            else:
                num = (min(u[i, 0], u[j, 0]) + k) * (min(u[i, 1], u[j, 1]) + k) * (min(u[i, 2], u[j, 2]) + k)
                den = (max(u[i, 0], u[j, 0]) + k) * (max(u[i, 1], u[j, 1]) + k) * (max(u[i, 2], u[j, 2]) + k)
                s = num / den
            if with_mag:
                s = (lut[v[i, 0], v[j, 0]] * lut[v[i, 1], v[j, 1]] * lut[v[i, 2], v[j, 2]]) * s
            acc += s
            if j != i:
                out[j] += s
        out[i] = acc


@njit(cache=True, nogil=True)
def _cfs_scores(v, pos, n, c, spatial, out):
    for i in range(n):
        out[i] = 0.0
    for i in range(n):
        acc = out[i]
        for j in range(i, n):
            off = max(abs(pos[i, 0] - pos[j, 0]), abs(pos[i, 1] - pos[j, 1]))
            s = ms._cfs_color(v[i, 0], v[i, 1], v[i, 2], v[j, 0], v[j, 1], v[j, 2], c) * spatial[off]
            acc += s
            if j != i:
                out[j] += s
        out[i] = acc


@njit(nogil=True)
def _ddf_scores(v, n, mkernel, p, mag, ang, out):
    for i in range(n):
        mag[i] = 0.0
        ang[i] = 0.0
    for i in range(n):
        for j in range(i, n):
            a = mkernel(v[i, 0], v[i, 1], v[i, 2], v[j, 0], v[j, 1], v[j, 2], p, ms._NOLUT)
            b = ms._cosine(v[i, 0], v[i, 1], v[i, 2], v[j, 0], v[j, 1], v[j, 2], p, ms._NOLUT)
            mag[i] += a
            ang[i] += b
            if j != i:
                mag[j] += a
                ang[j] += b
    for i in range(n):
        out[i] = mag[i] * ang[i]


@njit(cache=True, nogil=True)
def _select(d, n, maximize):
    """Index of the best score, lowest index on ties; -1 if any score is NaN."""
    best = 0
    bv = d[0]
    if bv != bv:
        return -1
    for i in range(1, n):
        x = d[i]
        if x != x:
            return -1
        if maximize:
            if x > bv:
                bv = x
                best = i
        elif x < bv:
            bv = x
            best = i
    return best


@njit(cache=True, nogil=True)
def _gather(padded, r, c, w, v):
    k = 0
    for dr in range(w):
        for dc in range(w):
            v[k, 0] = padded[r + dr, c + dc, 0]
            v[k, 1] = padded[r + dr, c + dc, 1]
            v[k, 2] = padded[r + dr, c + dc, 2]
            k += 1


@njit(nogil=True)
def _rank_rows(padded, w, r0, r1, out, kernel, p, lut, maximize):
    n = w * w
    ncols = out.shape[1]
    v = np.empty((n, 3), np.int64)
    d = np.empty(n)
    for r in range(r0, r1):
        for c in range(ncols):
            _gather(padded, r, c, w, v)
            _pair_scores(v, n, kernel, p, lut, d)
            best = _select(d, n, maximize)
            if best < 0:
                return r * ncols + c
            out[r, c, 0] = v[best, 0]
            out[r, c, 1] = v[best, 1]
            out[r, c, 2] = v[best, 2]
    return -1


@njit(cache=True, nogil=True)
def _dir_rows(padded, w, r0, r1, out, k, lut, with_mag):
    n = w * w
    ncols = out.shape[1]
    v = np.empty((n, 3), np.int64)
    u = np.empty((n, 4))
    d = np.empty(n)
    for r in range(r0, r1):
        for c in range(ncols):
            _gather(padded, r, c, w, v)
            _unit_vectors(v, n, u)
            _dir_scores(v, u, n, k, lut, with_mag, d)
            best = _select(d, n, True)
            if best < 0:
                return r * ncols + c
            out[r, c, 0] = v[best, 0]
            out[r, c, 1] = v[best, 1]
            out[r, c, 2] = v[best, 2]
    return -1


@njit(cache=True, nogil=True)
def _cfs_rows(padded, w, r0, r1, out, c_param, spatial):
    n = w * w
    rad = (w - 1) // 2
    m, ncols = out.shape[0], out.shape[1]
    v = np.empty((n, 3), np.int64)
    pos = np.empty((n, 2), np.int64)
    d = np.empty(n)
    for r in range(r0, r1):
        for c in range(ncols):
            _gather(padded, r, c, w, v)
            k = 0
            for dr in range(w):
                pr = min(max(r + dr - rad, 0), m - 1)
                for dc in range(w):
                    pos[k, 0] = pr
                    pos[k, 1] = min(max(c + dc - rad, 0), ncols - 1)
                    k += 1
            _cfs_scores(v, pos, n, c_param, spatial, d)
            best = _select(d, n, True)
            if best < 0:
                return r * ncols + c
            out[r, c, 0] = v[best, 0]
            out[r, c, 1] = v[best, 1]
            out[r, c, 2] = v[best, 2]
    return -1


@njit(nogil=True)
def _ddf_rows(padded, w, r0, r1, out, mkernel, p):
    n = w * w
    ncols = out.shape[1]
    v = np.empty((n, 3), np.int64)
    mag = np.empty(n)
    ang = np.empty(n)
    d = np.empty(n)
    for r in range(r0, r1):
        for c in range(ncols):
            _gather(padded, r, c, w, v)
            _ddf_scores(v, n, mkernel, p, mag, ang, d)
            best = _select(d, n, False)
            if best < 0:
                return r * ncols + c
            out[r, c, 0] = v[best, 0]
            out[r, c, 1] = v[best, 1]
            out[r, c, 2] = v[best, 2]
    return -1


@njit(cache=True, nogil=True)
def _mean_index(v, n):
    # n^2 * ||x_i - mean||^2 in exact integer arithmetic
    s0 = 0
    s1 = 0
    s2 = 0
    for j in range(n):
        s0 += v[j, 0]
        s1 += v[j, 1]
        s2 += v[j, 2]
    best = 0
    bv = -1
    for i in range(n):
        e0 = n * v[i, 0] - s0
        e1 = n * v[i, 1] - s1
        e2 = n * v[i, 2] - s2
        q = e0 * e0 + e1 * e1 + e2 * e2
        if bv < 0 or q < bv:
            bv = q
            best = i
    return best


@njit(cache=True, nogil=True)
def _mean_rows(padded, w, r0, r1, out):
    n = w * w
    ncols = out.shape[1]
    v = np.empty((n, 3), np.int64)
    for r in range(r0, r1):
        for c in range(ncols):
            _gather(padded, r, c, w, v)
            best = _mean_index(v, n)
            out[r, c, 0] = v[best, 0]
            out[r, c, 1] = v[best, 1]
            out[r, c, 2] = v[best, 2]
    return -1


def _minkowski_kernel(p: float):
    if p == 1:
        return ms._d1
    if p == 2:
        return ms._d2
    if math.isinf(p):
        return ms._dinf
    return ms._minkowski


# ---------------------------------------------------------------------------
# window-level API


def _window_vectors(w: Window) -> np.ndarray:
    return np.ascontiguousarray(w.vectors, dtype=np.int64)


def aggregate_scores(w: Window, spec: ms.MeasureSpec, luts: ms.PreparedMeasure | None = None) -> np.ndarray:
    """Aggregate score of every window vector against the whole window."""
    v = _window_vectors(w)
    n = len(v)
    out = np.empty(n)
    if spec.id == "cfs":
        side = math.isqrt(n)
        spatial = ms.spatial_offsets(side, spec.param("t"))
        pos = np.ascontiguousarray(w.positions, dtype=np.int64)
        _cfs_scores(v, pos, n, spec.param("C"), spatial, out)
        return out
    prepared = luts if luts is not None else ms.prepare_measure(spec)
    prepared.check(spec)
    if spec.id in ("fds", "fmds"):
        u = np.empty((n, 4))
        _unit_vectors(v, n, u)
        if spec.id == "fds":
            _dir_scores(v, u, n, spec.param("K"), ms._NOLUT, False, out)
        else:
            table = ms.build_pair_lut("fms", spec.param("K1")).table
            _dir_scores(v, u, n, spec.param("K2"), table, True, out)
        return out
    _pair_scores(v, n, prepared.kernel, prepared.params, prepared.lut, out)
    return out


def ddf_scores(w: Window, p: float = 2.0) -> np.ndarray:
    DDF(p)
    v = _window_vectors(w)
    n = len(v)
    out = np.empty(n)
    params = np.array([float(p), 0.0])
    _ddf_scores(v, n, _minkowski_kernel(p), params, np.empty(n), np.empty(n), out)
    return out


def select_output(scores, maximize: bool | str = False, measure: str = "") -> int:
    """0-based index of the winning score (lowest index on ties)."""
    if isinstance(maximize, str):
        maximize = maximize == ms.MAXIMIZE
    d = np.ascontiguousarray(scores, dtype=np.float64)
    if d.size == 0:
        raise ValueError("empty score vector")
    best = _select(d, d.size, bool(maximize))
    if best < 0:
        raise NumericError(f"NaN aggregate score for measure {measure or '?'}")
    return int(best)


# ---------------------------------------------------------------------------
# image-level API


@dataclass
class PreparedFilter:
    """A filter with its tables built, ready to run repeatedly."""

    spec: FilterSpec
    prepared: ms.PreparedMeasure | None
    extra: np.ndarray | None
    build_seconds: float

    def run_rows(self, padded: np.ndarray, out: np.ndarray, r0: int, r1: int) -> int:
        crit = self.spec.criterion
        w = self.spec.window
        if crit is None:
            rad = (w - 1) // 2
            out[r0:r1] = padded[r0 + rad : r1 + rad, rad : rad + out.shape[1]]
            return -1
        if isinstance(crit, DDF):
            return _ddf_rows(padded, w, r0, r1, out, _minkowski_kernel(crit.p), self.extra)
        if crit.id == "cfs":
            return _cfs_rows(padded, w, r0, r1, out, crit.param("C"), self.extra)
        if crit.id == "d2sq" and self.spec.shortcut:
            return _mean_rows(padded, w, r0, r1, out)
        p = self.prepared
        if crit.id == "fds":
            return _dir_rows(padded, w, r0, r1, out, crit.param("K"), ms._NOLUT, False)
        if crit.id == "fmds":
            return _dir_rows(padded, w, r0, r1, out, crit.param("K2"), self.extra, True)
        return _rank_rows(padded, w, r0, r1, out, p.kernel, p.params, p.lut, crit.maximize)

    def __call__(self, img: np.ndarray, threads: int = 1) -> np.ndarray:
        img = as_image(img)
        rad = (self.spec.window - 1) // 2
        padded = pad_replicate(img, rad)
        out = np.empty_like(img)
        m = img.shape[0]
        if threads <= 1 or m < 2:
            bad = [self.run_rows(padded, out, 0, m)]
        else:
            bounds = np.linspace(0, m, min(threads, m) + 1).astype(int)
            with ThreadPoolExecutor(max_workers=threads) as pool:
                jobs = [pool.submit(self.run_rows, padded, out, a, b) for a, b in zip(bounds[:-1], bounds[1:])]
                bad = [j.result() for j in jobs]
        for flat in bad:
            if flat >= 0:
                r, c = divmod(int(flat), img.shape[1])
                raise NumericError(f"NaN aggregate score for measure {self.spec} at pixel ({r}, {c})")
        return out


def prepare_filter(spec: FilterSpec) -> PreparedFilter:
    start = time.perf_counter()
    crit = spec.criterion
    prepared, extra = None, None
    if isinstance(crit, DDF):
        extra = np.array([float(crit.p), 0.0])
    elif crit is not None and crit.id == "cfs":
        extra = ms.spatial_offsets(spec.window, crit.param("t"))
    elif crit is not None and crit.id == "fmds":
        extra = ms.build_pair_lut("fms", crit.param("K1")).table
    elif crit is not None and not (crit.id == "d2sq" and spec.shortcut):
        prepared = ms.prepare_measure(crit)
    elapsed = time.perf_counter() - start
    log.debug("prepared %s in %.1f ms", spec, 1000 * elapsed)
    return PreparedFilter(spec, prepared, extra, elapsed)


def filter_image(img: np.ndarray, fspec: FilterSpec, threads: int = 1) -> np.ndarray:
    """Filter ``img``; output is independent of ``threads``."""
    return prepare_filter(fspec)(img, threads=threads)


def filter_d2sq_shortcut(img: np.ndarray, n: int = 9) -> np.ndarray:
    """Pick, per window, the vector nearest (squared Euclidean) to the window mean."""
    side = 2 * window_radius(n) + 1
    return filter_image(img, FilterSpec(ms.MeasureSpec("d2sq"), side, shortcut=True))
