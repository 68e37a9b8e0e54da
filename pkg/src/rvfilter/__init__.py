"""Reduced-ordering vector filters for impulsive noise in color images."""

from .errors import ConfigError, FormatError, NumericError, UndefinedMetricError
from .filter import DDF, FilterSpec, filter_d2sq_shortcut, filter_image, parse_filter
from .imagecore import load_image, pad_replicate, save_image, window_at
from .measures import MeasureSpec, eval_cfs, eval_measure, lut_eval, parse_measure, prepare_measure
from .noise import NoiseConfig, corrupt
from .quality import mae, mse, ncd, rgb_to_lab

__all__ = [
    "ConfigError",
    "DDF",
    "FilterSpec",
    "FormatError",
    "MeasureSpec",
    "NoiseConfig",
    "NumericError",
    "UndefinedMetricError",
    "corrupt",
    "eval_cfs",
    "eval_measure",
    "filter_d2sq_shortcut",
    "filter_image",
    "load_image",
    "lut_eval",
    "mae",
    "mse",
    "ncd",
    "pad_replicate",
    "parse_filter",
    "parse_measure",
    "prepare_measure",
    "rgb_to_lab",
    "save_image",
    "window_at",
]
