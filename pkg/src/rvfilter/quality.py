"""Effectiveness criteria: MAE, MSE and the normalized color difference.

NCD is computed in CIELAB.  RGB values are taken as sRGB (IEC 61966-2-1
transfer curve), converted to XYZ with the sRGB/D65 matrix below, and the
reference white is the XYZ image of RGB white under that matrix, so white
maps to a* = b* = 0 exactly.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .errors import UndefinedMetricError
from .imagecore import as_image

RGB_TO_XYZ = np.array(
    [
        [0.4124564, 0.3575761, 0.1804375],
        [0.2126729, 0.7151522, 0.0721750],
        [0.0193339, 0.1191920, 0.9503041],
    ]
)
WHITE_XYZ = RGB_TO_XYZ.sum(axis=1)
LAB_EPSILON = 216.0 / 24389.0
LAB_KAPPA = 24389.0 / 27.0
LAB_CONSTANTS = (
    "sRGB transfer curve, sRGB->XYZ matrix (D65) "
    f"{RGB_TO_XYZ.tolist()}, white {WHITE_XYZ.tolist()}, epsilon=216/24389, kappa=24389/27"
)


def _check_pair(x, y):
    x, y = as_image(x), as_image(y)
    if x.shape != y.shape:
        raise ValueError(f"image dimensions differ: {x.shape[:2]} vs {y.shape[:2]}")
    return x, y


def mae(x: np.ndarray, y: np.ndarray) -> float:
    x, y = _check_pair(x, y)
    diff = np.abs(x.astype(np.int64) - y.astype(np.int64))
    return float(diff.sum()) / diff.size


def mse(x: np.ndarray, y: np.ndarray) -> float:
    x, y = _check_pair(x, y)
    diff = x.astype(np.int64) - y.astype(np.int64)
    return float((diff * diff).sum()) / diff.size


def _linearize(c: np.ndarray) -> np.ndarray:
    c = c / 255.0
    return np.where(c <= 0.04045, c / 12.92, ((c + 0.055) / 1.055) ** 2.4)


_LINEAR = _linearize(np.arange(256, dtype=np.float64))


def _f(t: np.ndarray) -> np.ndarray:
    return np.where(t > LAB_EPSILON, np.cbrt(t), (LAB_KAPPA * t + 16.0) / 116.0)


def rgb_to_lab(rgb) -> np.ndarray:
    """Convert ``(..., 3)`` 8-bit sRGB values to CIELAB (L*, a*, b*)."""
    rgb = np.asarray(rgb)
    if rgb.shape[-1] != 3:
        raise ValueError(f"last axis must hold 3 channels, got shape {rgb.shape}")
    if rgb.size and (rgb.min() < 0 or rgb.max() > 255):
        raise ValueError("components must lie in [0, 255]")
    lin = _LINEAR[rgb.astype(np.intp)]
    xyz = lin @ RGB_TO_XYZ.T / WHITE_XYZ
    fx, fy, fz = _f(xyz[..., 0]), _f(xyz[..., 1]), _f(xyz[..., 2])
    yr = xyz[..., 1]
    lightness = np.where(yr > LAB_EPSILON, 116.0 * fy - 16.0, LAB_KAPPA * yr)
    return np.stack([lightness, 500.0 * (fx - fy), 200.0 * (fy - fz)], axis=-1)


def ncd(x: np.ndarray, y: np.ndarray) -> float:
    """Sum of CIELAB distances normalized by the CIELAB magnitude of ``x``."""
    x, y = _check_pair(x, y)
    lx, ly = rgb_to_lab(x), rgb_to_lab(y)
    den = float(np.sqrt((lx * lx).sum(axis=-1)).sum())
    if den == 0.0:
        raise UndefinedMetricError("NCD is undefined: the reference image is entirely black")
    d = lx - ly
    return float(np.sqrt((d * d).sum(axis=-1)).sum()) / den


@dataclass(frozen=True)
class QualityReport:
    mae: float
    mse: float
    ncd: float

    def as_dict(self) -> dict:
        return asdict(self)


def evaluate(original: np.ndarray, filtered: np.ndarray) -> QualityReport:
    return QualityReport(mae(original, filtered), mse(original, filtered), ncd(original, filtered))
