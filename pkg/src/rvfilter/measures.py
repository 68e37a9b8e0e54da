"""Pairwise distance and similarity measures between RGB vectors.

Every measure is a numba kernel with the signature

    kernel(a0, a1, a2, b0, b1, b2, params, lut) -> float

taking the two vectors component-wise as integers in [0, 255].  ``params``
is a float64 array of measure parameters and ``lut`` a 2-D float64 table
(a 1x1 dummy when unused).  The same kernels back scalar evaluation,
batch evaluation and the filter engines, so all paths share one arithmetic.

Lookup tables are filled by calling the per-component term functions used
by the direct kernels, which makes the table path bit-identical to the
direct path.

Conventions for zero vectors:

* canberra, divergence, ware: a component with both values 0 contributes 0.
* bray, goude, soergel: distance 0 when both vectors are zero.
* cosine: pi when exactly one vector is zero, 0 when both are.
* fds: 0 when exactly one vector is zero, 1 when both are.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from numba import njit

from .errors import ConfigError

MINIMIZE = "minimize"
MAXIMIZE = "maximize"

_NOLUT = np.zeros((1, 1))
_NOPARAM = np.zeros(2)

# ---------------------------------------------------------------------------
# per-component terms (shared by direct kernels and LUT builders)


@njit(cache=True, nogil=True, inline="always")
def _canberra_term(a, b):
    if a == 0 and b == 0:
        return 0.0
    return abs(float(a) - float(b)) / (float(a) + float(b))


@njit(cache=True, nogil=True, inline="always")
def _divergence_term(a, b):
    if a == 0 and b == 0:
        return 0.0
    d = float(a) - float(b)
    return d * d / (float(a) + float(b))


@njit(cache=True, nogil=True, inline="always")
def _ware_term(a, b):
    if a == 0 and b == 0:
        return 0.0
    return abs(float(a) - float(b)) / float(max(a, b))


@njit(cache=True, nogil=True, inline="always")
def _fms_term(a, b, k):
    return (min(a, b) + k) / (max(a, b) + k)


@njit(cache=True, nogil=True, inline="always")
def _sqrt_term(v):
    return math.sqrt(float(v))


@njit(cache=True, nogil=True, inline="always")
def _spatial_term(offset, t):
    return t / (t + offset)


# ---------------------------------------------------------------------------
# direct kernels


@njit(cache=True, nogil=True)
def _d1(a0, a1, a2, b0, b1, b2, p, lut):
    return abs(float(a0) - float(b0)) + abs(float(a1) - float(b1)) + abs(float(a2) - float(b2))


@njit(cache=True, nogil=True)
def _d2sq(a0, a1, a2, b0, b1, b2, p, lut):
    x = float(a0) - float(b0)
    y = float(a1) - float(b1)
    z = float(a2) - float(b2)
    return x * x + y * y + z * z


@njit(cache=True, nogil=True)
def _d2(a0, a1, a2, b0, b1, b2, p, lut):
    x = float(a0) - float(b0)
    y = float(a1) - float(b1)
    z = float(a2) - float(b2)
    return math.sqrt(x * x + y * y + z * z)


@njit(cache=True, nogil=True)
def _dinf(a0, a1, a2, b0, b1, b2, p, lut):
    return max(abs(float(a0) - float(b0)), abs(float(a1) - float(b1)), abs(float(a2) - float(b2)))


@njit(cache=True, nogil=True)
def _minkowski(a0, a1, a2, b0, b1, b2, p, lut):
    e = p[0]
    s = (
        abs(float(a0) - float(b0)) ** e
        + abs(float(a1) - float(b1)) ** e
        + abs(float(a2) - float(b2)) ** e
    )
    return s ** (1.0 / e)


@njit(cache=True, nogil=True)
def _bray(a0, a1, a2, b0, b1, b2, p, lut):
    den = (float(a0) + float(b0)) + (float(a1) + float(b1)) + (float(a2) + float(b2))
    if den == 0.0:
        return 0.0
    num = abs(float(a0) - float(b0)) + abs(float(a1) - float(b1)) + abs(float(a2) - float(b2))
    return num / den


@njit(cache=True, nogil=True)
def _canberra(a0, a1, a2, b0, b1, b2, p, lut):
    return _canberra_term(a0, b0) + _canberra_term(a1, b1) + _canberra_term(a2, b2)


@njit(cache=True, nogil=True)
def _chord(a0, a1, a2, b0, b1, b2, p, lut):
    x = _sqrt_term(a0) - _sqrt_term(b0)
    y = _sqrt_term(a1) - _sqrt_term(b1)
    z = _sqrt_term(a2) - _sqrt_term(b2)
    return math.sqrt(x * x + y * y + z * z)


@njit(cache=True, nogil=True)
def _cosine(a0, a1, a2, b0, b1, b2, p, lut):
    x0, x1, x2 = float(a0), float(a1), float(a2)
    y0, y1, y2 = float(b0), float(b1), float(b2)
    sx = x0 * x0 + x1 * x1 + x2 * x2
    sy = y0 * y0 + y1 * y1 + y2 * y2
    if sx == 0.0 or sy == 0.0:
        return 0.0 if sx == sy else math.pi
    # sx * sy is an exact integer, so collinear vectors give exactly cos = 1
    c = (x0 * y0 + x1 * y1 + x2 * y2) / math.sqrt(sx * sy)
    if c > 1.0:
        c = 1.0
    elif c < -1.0:
        c = -1.0
    return math.acos(c)


@njit(cache=True, nogil=True)
def _divergence(a0, a1, a2, b0, b1, b2, p, lut):
    return math.sqrt(_divergence_term(a0, b0) + _divergence_term(a1, b1) + _divergence_term(a2, b2))


@njit(cache=True, nogil=True)
def _goude(a0, a1, a2, b0, b1, b2, p, lut):
    x0, x1, x2 = float(a0), float(a1), float(a2)
    y0, y1, y2 = float(b0), float(b1), float(b2)
    sq = (x0 * x0 + x1 * x1 + x2 * x2) + (y0 * y0 + y1 * y1 + y2 * y2)
    dot2 = 2.0 * (x0 * y0 + x1 * y1 + x2 * y2)
    den = sq + dot2
    if den == 0.0:
        return 0.0
    return math.sqrt((sq - dot2) / den)


@njit(cache=True, nogil=True)
def _soergel(a0, a1, a2, b0, b1, b2, p, lut):
    den = float(max(a0, b0)) + float(max(a1, b1)) + float(max(a2, b2))
    if den == 0.0:
        return 0.0
    num = abs(float(a0) - float(b0)) + abs(float(a1) - float(b1)) + abs(float(a2) - float(b2))
    return num / den


@njit(cache=True, nogil=True)
def _ware(a0, a1, a2, b0, b1, b2, p, lut):
    return _ware_term(a0, b0) + _ware_term(a1, b1) + _ware_term(a2, b2)


@njit(cache=True, nogil=True)
def _fms(a0, a1, a2, b0, b1, b2, p, lut):
    k = p[0]
    return _fms_term(float(a0), float(b0), k) * _fms_term(float(a1), float(b1), k) * _fms_term(float(a2), float(b2), k)


@njit(cache=True, nogil=True, inline="always")
def _fds_k(a0, a1, a2, b0, b1, b2, k):
    x0, x1, x2 = float(a0), float(a1), float(a2)
    y0, y1, y2 = float(b0), float(b1), float(b2)
    nx = math.sqrt(x0 * x0 + x1 * x1 + x2 * x2)
    ny = math.sqrt(y0 * y0 + y1 * y1 + y2 * y2)
    if nx == 0.0 or ny == 0.0:
        return 1.0 if nx == ny else 0.0
    rx = 1.0 / nx
    ry = 1.0 / ny
    u0, u1, u2 = x0 * rx, x1 * rx, x2 * rx
    w0, w1, w2 = y0 * ry, y1 * ry, y2 * ry
    # one division for the product of the three per-channel ratios
    num = (min(u0, w0) + k) * (min(u1, w1) + k) * (min(u2, w2) + k)
    den = (max(u0, w0) + k) * (max(u1, w1) + k) * (max(u2, w2) + k)
    return num / den


@njit(cache=True, nogil=True)
def _fds(a0, a1, a2, b0, b1, b2, p, lut):
    return _fds_k(a0, a1, a2, b0, b1, b2, p[0])


@njit(cache=True, nogil=True)
def _fmds(a0, a1, a2, b0, b1, b2, p, lut):
    f = _fds_k(a0, a1, a2, b0, b1, b2, p[1])
    return _fms(a0, a1, a2, b0, b1, b2, p, lut) * f


@njit(cache=True, nogil=True)
def _cfs_color(a0, a1, a2, b0, b1, b2, c):
    return c / (c + _d2(a0, a1, a2, b0, b1, b2, _NOPARAM, _NOLUT))


@njit(cache=True, nogil=True)
def _cfs(a0, a1, a2, b0, b1, b2, offset, c, t):
    return _cfs_color(a0, a1, a2, b0, b1, b2, c) * _spatial_term(float(offset), t)


# ---------------------------------------------------------------------------
# table kernels


@njit(cache=True, nogil=True)
def _canberra_lut(a0, a1, a2, b0, b1, b2, p, lut):
    return lut[a0, b0] + lut[a1, b1] + lut[a2, b2]


@njit(cache=True, nogil=True)
def _ware_lut(a0, a1, a2, b0, b1, b2, p, lut):
    return lut[a0, b0] + lut[a1, b1] + lut[a2, b2]


@njit(cache=True, nogil=True)
def _divergence_lut(a0, a1, a2, b0, b1, b2, p, lut):
    return math.sqrt(lut[a0, b0] + lut[a1, b1] + lut[a2, b2])


@njit(cache=True, nogil=True)
def _fms_lut(a0, a1, a2, b0, b1, b2, p, lut):
    return lut[a0, b0] * lut[a1, b1] * lut[a2, b2]


@njit(cache=True, nogil=True)
def _fmds_lut(a0, a1, a2, b0, b1, b2, p, lut):
    f = _fds_k(a0, a1, a2, b0, b1, b2, p[1])
    return (lut[a0, b0] * lut[a1, b1] * lut[a2, b2]) * f


@njit(cache=True, nogil=True)
def _chord_lut(a0, a1, a2, b0, b1, b2, p, lut):
    s = lut[0]
    x = s[a0] - s[b0]
    y = s[a1] - s[b1]
    z = s[a2] - s[b2]
    return math.sqrt(x * x + y * y + z * z)


@njit(cache=True)
def _fill_pair_table(which, k):
    out = np.empty((256, 256))
    for a in range(256):
        for b in range(256):
            if which == 0:
                out[a, b] = _canberra_term(a, b)
            elif which == 1:
                out[a, b] = _divergence_term(a, b)
            elif which == 2:
                out[a, b] = _ware_term(a, b)
            else:
                out[a, b] = _fms_term(float(a), float(b), k)
    return out


@njit(cache=True)
def _fill_sqrt_table():
    out = np.empty(256)
    for v in range(256):
        out[v] = _sqrt_term(v)
    return out


@njit(cache=True)
def _fill_spatial_offsets(side, t):
    out = np.empty(side)
    for d in range(side):
        out[d] = _spatial_term(float(d), t)
    return out


@njit(nogil=True)
def _batch(kernel, x, y, p, lut, out):
    for i in range(x.shape[0]):
        out[i] = kernel(x[i, 0], x[i, 1], x[i, 2], y[i, 0], y[i, 1], y[i, 2], p, lut)


@njit(cache=True, nogil=True)
def _batch_cfs(x, px, y, py, c, t, out):
    for i in range(x.shape[0]):
        off = max(abs(px[i, 0] - py[i, 0]), abs(px[i, 1] - py[i, 1]))
        out[i] = _cfs(x[i, 0], x[i, 1], x[i, 2], y[i, 0], y[i, 1], y[i, 2], off, c, t)


# ---------------------------------------------------------------------------
# registry and specs


@dataclass(frozen=True)
class _Entry:
    kernel: object
    lut_kernel: object = None
    defaults: tuple = ()
    orientation: str = MINIMIZE
    description: str = ""


REGISTRY: dict[str, _Entry] = {
    "d1": _Entry(_d1, description="city-block distance"),
    "d2": _Entry(_d2, description="Euclidean distance"),
    "d2sq": _Entry(_d2sq, description="squared Euclidean distance"),
    "dinf": _Entry(_dinf, description="chessboard distance"),
    "bray": _Entry(_bray, description="Bray-Curtis distance"),
    "canberra": _Entry(_canberra, _canberra_lut, description="Canberra distance"),
    "chord": _Entry(_chord, _chord_lut, description="chord distance"),
    "cosine": _Entry(_cosine, description="angular distance"),
    "divergence": _Entry(_divergence, _divergence_lut, description="divergence coefficient"),
    "goude": _Entry(_goude, description="Goude distance"),
    "soergel": _Entry(_soergel, description="Soergel distance"),
    "ware": _Entry(_ware, _ware_lut, description="Ware-Hedges distance"),
    "fms": _Entry(_fms, _fms_lut, (("K", 1024.0),), MAXIMIZE, "fuzzy magnitude similarity"),
    "fds": _Entry(_fds, None, (("K", 4.0),), MAXIMIZE, "fuzzy directional similarity"),
    "fmds": _Entry(_fmds, _fmds_lut, (("K1", 1024.0), ("K2", 4.0)), MAXIMIZE, "fuzzy magnitude-directional similarity"),
    "cfs": _Entry(None, None, (("C", 150.0), ("t", 4.0)), MAXIMIZE, "combined fuzzy similarity (color and spatial)"),
}

MEASURE_IDS = tuple(REGISTRY)
DISTANCE_IDS = tuple(k for k, e in REGISTRY.items() if e.orientation == MINIMIZE)
SIMILARITY_IDS = tuple(k for k, e in REGISTRY.items() if e.orientation == MAXIMIZE)


@dataclass(frozen=True)
class MeasureSpec:
    """A measure id plus its parameters; orientation follows from the id."""

    id: str
    params: tuple = field(default=())

    def __post_init__(self):
        if self.id not in REGISTRY:
            raise ConfigError(f"unknown measure id {self.id!r}; known: {', '.join(MEASURE_IDS)}")
        defaults = dict(REGISTRY[self.id].defaults)
        given = dict(self.params)
        for name in given:
            if name not in defaults:
                allowed = ", ".join(defaults) or "none"
                raise ConfigError(f"measure {self.id!r} has no parameter {name!r} (parameters: {allowed})")
        merged = []
        for name, default in defaults.items():
            value = float(given.get(name, default))
            if not (value > 0.0 and math.isfinite(value)):
                raise ConfigError(f"parameter {name} of {self.id!r} must be a positive finite number, got {value}")
            merged.append((name, value))
        object.__setattr__(self, "params", tuple(merged))

    @classmethod
    def make(cls, id: str, **params) -> "MeasureSpec":
        return cls(id, tuple(params.items()))

    @property
    def orientation(self) -> str:
        return REGISTRY[self.id].orientation

    @property
    def maximize(self) -> bool:
        return self.orientation == MAXIMIZE

    def param(self, name: str) -> float:
        return dict(self.params)[name]

    def param_array(self) -> np.ndarray:
        arr = np.zeros(2)
        for i, (_, v) in enumerate(self.params):
            arr[i] = v
        return arr

    def __str__(self) -> str:
        if not self.params:
            return self.id
        return self.id + ":" + ",".join(f"{k}={v:g}" for k, v in self.params)


def parse_params(text: str, what: str) -> dict[str, float]:
    params: dict[str, float] = {}
    for item in filter(None, (s.strip() for s in text.split(","))):
        name, sep, value = item.partition("=")
        if not sep or not name.strip():
            raise ConfigError(f"malformed parameter {item!r} in {what!r} (expected name=value)")
        try:
            params[name.strip()] = float(value)
        except ValueError:
            raise ConfigError(f"parameter {name.strip()!r} in {what!r} is not a number: {value!r}") from None
    return params


def parse_measure(text: str) -> MeasureSpec:
    """Parse ``"id"`` or ``"id:name=value,..."``, e.g. ``"cfs:C=150,t=4"``."""
    ident, _, rest = text.strip().partition(":")
    return MeasureSpec.make(ident.strip(), **parse_params(rest, text))


def describe_measures() -> str:
    """One line per measure id with its default parameters (used by CLI help)."""
    lines = []
    for ident, entry in REGISTRY.items():
        defaults = ",".join(f"{k}={v:g}" for k, v in entry.defaults)
        label = f"{ident}:{defaults}" if defaults else ident
        lines.append(f"  {label:<22} {entry.description} ({entry.orientation})")
    return "\n".join(lines)


def _components(v):
    arr = np.asarray(v)
    if arr.shape != (3,):
        raise ValueError(f"RGB vector must have 3 components, got shape {arr.shape}")
    if np.issubdtype(arr.dtype, np.floating) and not np.all(arr == np.round(arr)):
        raise ValueError(f"RGB components must be integers, got {v!r}")
    vals = [int(x) for x in arr]
    if any(x < 0 or x > 255 for x in vals):
        raise ValueError(f"RGB components must lie in [0, 255], got {vals}")
    return vals


def eval_measure(spec: MeasureSpec, x, y) -> float:
    """Evaluate one measure directly (no tables) on two RGB vectors."""
    if spec.id == "cfs":
        raise ConfigError("cfs needs pixel positions; use eval_cfs")
    a, b = _components(x), _components(y)
    return float(REGISTRY[spec.id].kernel(*a, *b, spec.param_array(), _NOLUT))


def eval_cfs(x, px, y, py, C: float = 150.0, t: float = 4.0) -> float:
    """Combined fuzzy similarity of vectors at (row, col) positions ``px``, ``py``."""
    if not (C > 0 and t > 0):
        raise ConfigError(f"cfs parameters must be positive, got C={C}, t={t}")
    a, b = _components(x), _components(y)
    off = max(abs(int(px[0]) - int(py[0])), abs(int(px[1]) - int(py[1])))
    return float(_cfs(*a, *b, off, float(C), float(t)))


def eval_pairs(spec: MeasureSpec, x: np.ndarray, y: np.ndarray, prepared: "PreparedMeasure | None" = None) -> np.ndarray:
    """Evaluate ``spec`` row-wise on two ``(k, 3)`` integer arrays.

    With ``prepared`` the table kernel is used, otherwise the direct kernel.
    """
    if spec.id == "cfs":
        raise ConfigError("cfs needs pixel positions; use eval_cfs_pairs")
    x = np.ascontiguousarray(x, dtype=np.int64)
    y = np.ascontiguousarray(y, dtype=np.int64)
    out = np.empty(len(x))
    if prepared is None:
        _batch(REGISTRY[spec.id].kernel, x, y, spec.param_array(), _NOLUT, out)
    else:
        prepared.check(spec)
        _batch(prepared.kernel, x, y, prepared.params, prepared.lut, out)
    return out


def eval_cfs_pairs(x, px, y, py, C: float = 150.0, t: float = 4.0) -> np.ndarray:
    x = np.ascontiguousarray(x, dtype=np.int64)
    y = np.ascontiguousarray(y, dtype=np.int64)
    px = np.ascontiguousarray(px, dtype=np.int64)
    py = np.ascontiguousarray(py, dtype=np.int64)
    out = np.empty(len(x))
    _batch_cfs(x, px, y, py, float(C), float(t), out)
    return out


# ---------------------------------------------------------------------------
# lookup tables


_PAIR_TERMS = {"canberra": 0, "divergence": 1, "ware": 2, "fms": 3}


@dataclass(frozen=True)
class PairLut:
    """256x256 table of one per-component term."""

    term: str
    table: np.ndarray
    K: float | None = None


@dataclass(frozen=True)
class SqrtLut:
    table: np.ndarray


@lru_cache(maxsize=None)
def build_pair_lut(term: str, K: float | None = None) -> PairLut:
    """Tabulate the per-component term of canberra, divergence, ware or fms."""
    if term not in _PAIR_TERMS:
        raise ConfigError(f"no pair table for {term!r}; choose from {', '.join(_PAIR_TERMS)}")
    if term == "fms":
        if K is None or not K > 0:
            raise ConfigError("fms pair table needs a positive K")
        K = float(K)
    else:
        K = None
    table = _fill_pair_table(_PAIR_TERMS[term], 0.0 if K is None else K)
    table.flags.writeable = False
    return PairLut(term, table, K)


@lru_cache(maxsize=None)
def build_sqrt_lut() -> SqrtLut:
    table = _fill_sqrt_table()
    table.flags.writeable = False
    return SqrtLut(table)


def spatial_offsets(side: int, t: float) -> np.ndarray:
    """Spatial proximity factor indexed by Chebyshev offset 0..side-1."""
    return _fill_spatial_offsets(side, float(t))


def build_spatial_lut(n: int, t: float) -> np.ndarray:
    """n x n spatial proximity table between window indices (unclamped positions)."""
    side = math.isqrt(n)
    per_offset = spatial_offsets(side, t)
    idx = np.arange(n)
    rows, cols = idx // side, idx % side
    off = np.maximum(np.abs(rows[:, None] - rows[None, :]), np.abs(cols[:, None] - cols[None, :]))
    return per_offset[off]


@dataclass(frozen=True)
class PreparedMeasure:
    """A measure bound to the tables it needs; built once, shared read-only."""

    spec: MeasureSpec
    kernel: object
    params: np.ndarray
    lut: np.ndarray
    build_seconds: float = 0.0

    def check(self, spec: MeasureSpec) -> None:
        if spec != self.spec:
            raise ConfigError(f"tables were prepared for {self.spec}, not {spec}")


def prepare_measure(spec: MeasureSpec, use_luts: bool = True) -> PreparedMeasure:
    """Build the lookup tables for ``spec`` (cfs is handled by the filter engine)."""
    if spec.id == "cfs":
        raise ConfigError("cfs tables depend on the window; use the filter engine")
    entry = REGISTRY[spec.id]
    start = time.perf_counter()
    lut = _NOLUT
    kernel = entry.kernel
    if use_luts and entry.lut_kernel is not None:
        kernel = entry.lut_kernel
        if spec.id == "chord":
            lut = build_sqrt_lut().table.reshape(1, 256)
        elif spec.id in ("fms", "fmds"):
            lut = build_pair_lut("fms", spec.params[0][1]).table
        else:
            lut = build_pair_lut(spec.id).table
    return PreparedMeasure(spec, kernel, spec.param_array(), lut, time.perf_counter() - start)


def lut_eval(spec: MeasureSpec, luts: PreparedMeasure, x, y) -> float:
    """Evaluate ``spec`` through its prepared tables; equals :func:`eval_measure` exactly."""
    luts.check(spec)
    a, b = _components(x), _components(y)
    return float(luts.kernel(*a, *b, luts.params, luts.lut))
