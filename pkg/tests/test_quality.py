import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from rvfilter import quality
from rvfilter.errors import UndefinedMetricError

pair = st.tuples(st.integers(1, 6), st.integers(1, 6)).flatmap(
    lambda s: st.tuples(arrays(np.uint8, (*s, 3)), arrays(np.uint8, (*s, 3)))
)


def _scalar(x, y):
    total_abs = total_sq = 0
    for a, b in zip(x.ravel().tolist(), y.ravel().tolist()):
        total_abs += abs(a - b)
        total_sq += (a - b) ** 2
    return total_abs / x.size, total_sq / x.size


def test_identical_images():
    x = np.full((3, 3, 3), 90, np.uint8)
    assert quality.mae(x, x) == quality.mse(x, x) == quality.ncd(x, x) == 0.0


def test_uniform_offset():
    x, y = np.zeros((4, 4, 3), np.uint8), np.full((4, 4, 3), 3, np.uint8)
    assert quality.mae(x, y) == 3.0
    assert quality.mse(x, y) == 9.0


def test_random_pairs_match_oracle(rng):
    for _ in range(20):
        x = rng.integers(0, 256, (8, 8, 3), dtype=np.uint8)
        y = rng.integers(0, 256, (8, 8, 3), dtype=np.uint8)
        o_mae, o_mse = _scalar(x, y)
        assert abs(quality.mae(x, y) - o_mae) <= 1e-12
        assert abs(quality.mse(x, y) - o_mse) <= 1e-12


@given(pair)
def test_mae_mse_properties(xy):
    x, y = xy
    assert quality.mae(x, y) == quality.mae(y, x)
    assert quality.mae(x, y) ** 2 <= quality.mse(x, y) + 1e-9


def test_lab_anchors():
    assert np.allclose(quality.rgb_to_lab([255, 255, 255]), [100, 0, 0], atol=1e-9)
    assert quality.rgb_to_lab([0, 0, 0]).tolist() == [0.0, 0.0, 0.0]
    L, a, b = quality.rgb_to_lab([119, 119, 119])
    assert L == pytest.approx(50, abs=0.5) and abs(a) < 1e-9 and abs(b) < 1e-9


def test_lab_against_skimage():
    color = pytest.importorskip("skimage.color")
    rng = np.random.default_rng(3)
    rgb = rng.integers(0, 256, (200, 3))
    ref = color.rgb2lab(rgb[None] / 255.0, illuminant="D65")[0]
    # the white point differs slightly between implementations
    assert np.max(np.abs(quality.rgb_to_lab(rgb) - ref)) < 0.05


def test_lab_shapes_and_validation():
    assert quality.rgb_to_lab(np.zeros((2, 5, 3), np.uint8)).shape == (2, 5, 3)
    with pytest.raises(ValueError):
        quality.rgb_to_lab([1, 2])
    with pytest.raises(ValueError):
        quality.rgb_to_lab([300, 0, 0])


def test_ncd_black_reference_undefined():
    black = np.zeros((2, 2, 3), np.uint8)
    with pytest.raises(UndefinedMetricError):
        quality.ncd(black, np.full((2, 2, 3), 5, np.uint8))


def test_ncd_against_black_is_one(rng):
    x = rng.integers(0, 256, (5, 5, 3), dtype=np.uint8)
    assert quality.ncd(x, np.zeros_like(x)) == pytest.approx(1.0, abs=1e-12)


def test_ncd_single_pixel():
    x, y = np.array([[[255, 255, 255]]], np.uint8), np.array([[[0, 0, 0]]], np.uint8)
    assert quality.ncd(x, y) == pytest.approx(1.0)
    gray = np.array([[[119, 119, 119]]], np.uint8)
    lx, lg = quality.rgb_to_lab(x)[0, 0], quality.rgb_to_lab(gray)[0, 0]
    assert quality.ncd(x, gray) == pytest.approx(math.dist(lx, lg) / np.linalg.norm(lx))


@pytest.mark.parametrize("fn", [quality.mae, quality.mse, quality.ncd])
def test_dimension_mismatch(fn):
    with pytest.raises(ValueError):
        fn(np.zeros((2, 2, 3), np.uint8), np.zeros((2, 3, 3), np.uint8))


def test_evaluate_report():
    x = np.full((2, 2, 3), 10, np.uint8)
    y = np.full((2, 2, 3), 12, np.uint8)
    report = quality.evaluate(x, y)
    assert report.as_dict() == {"mae": 2.0, "mse": 4.0, "ncd": quality.ncd(x, y)}
