import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rvfilter import measures as ms
from rvfilter.errors import ConfigError

rgb = st.lists(st.integers(0, 255), min_size=3, max_size=3)
nonzero_rgb = rgb.filter(any)
PAIRWISE = [m for m in ms.MEASURE_IDS if m != "cfs"]


def ev(ident, x, y, **params):
    return ms.eval_measure(ms.MeasureSpec.make(ident, **params), x, y)


class TestExamples:
    @given(x=rgb)
    def test_d2_self(self, x):
        assert ev("d2", x, x) == 0.0

    def test_cosine_orthogonal(self):
        assert ev("cosine", [1, 0, 0], [0, 1, 0]) == pytest.approx(math.pi / 2)

    def test_cosine_zero_vector(self):
        assert ev("cosine", [0, 0, 0], [10, 10, 10]) == math.pi
        assert ev("cosine", [0, 0, 0], [0, 0, 0]) == 0.0

    @pytest.mark.parametrize("ident", ["bray", "goude", "soergel"])
    def test_zero_pair_conventions(self, ident):
        assert ev(ident, [0, 0, 0], [0, 0, 0]) == 0.0

    def test_fds_zero_conventions(self):
        assert ev("fds", [0, 0, 0], [5, 0, 0]) == 0.0
        assert ev("fds", [0, 0, 0], [0, 0, 0]) == 1.0

    @given(x=rgb)
    def test_fms_self(self, x):
        assert ev("fms", x, x) == 1.0

    def test_d1(self):
        assert ev("d1", [10, 20, 30], [13, 24, 35]) == 12.0

    def test_canberra_skips_zero_channel(self):
        assert ev("canberra", [0, 10, 40], [0, 10, 60]) == pytest.approx(0.2)

    def test_fms_extremes(self):
        assert ev("fms", [0, 0, 0], [255, 255, 255]) == pytest.approx((1024 / 1279) ** 3, rel=1e-15)

    def test_dinf_and_minkowski_family(self):
        assert ev("dinf", [0, 0, 0], [3, 7, 2]) == 7.0
        assert ev("d2sq", [0, 0, 0], [3, 4, 0]) == 25.0
        assert ev("d2", [0, 0, 0], [3, 4, 0]) == 5.0

    def test_divergence_and_ware(self):
        assert ev("divergence", [1, 0, 0], [3, 0, 0]) == pytest.approx(1.0)
        assert ev("ware", [10, 0, 5], [20, 0, 5]) == pytest.approx(0.5)

    def test_chord(self):
        assert ev("chord", [0, 0, 0], [4, 9, 16]) == pytest.approx(math.sqrt(4 + 9 + 16))

    def test_parameters_change_values(self):
        assert ev("fms", [0, 0, 0], [255, 0, 0], K=1) < ev("fms", [0, 0, 0], [255, 0, 0], K=1024)


class TestCfs:
    def test_identical_same_position(self):
        assert ms.eval_cfs([5, 6, 7], (1, 1), [5, 6, 7], (1, 1)) == 1.0

    def test_offset_one(self):
        assert ms.eval_cfs([5, 6, 7], (0, 0), [5, 6, 7], (1, 0), t=4) == pytest.approx(0.8)

    def test_distance_equals_c(self):
        assert ms.eval_cfs([0, 0, 0], (2, 2), [90, 120, 0], (2, 2), C=150) == pytest.approx(0.5)

    def test_chebyshev_offset(self):
        a = ms.eval_cfs([1, 1, 1], (0, 0), [1, 1, 1], (2, 1))
        assert a == pytest.approx(4 / 6)

    def test_needs_positions(self):
        with pytest.raises(ConfigError):
            ms.eval_measure(ms.MeasureSpec("cfs"), [1, 2, 3], [1, 2, 3])
        with pytest.raises(ConfigError):
            ms.prepare_measure(ms.MeasureSpec("cfs"))


class TestProperties:
    @pytest.mark.parametrize("ident", PAIRWISE)
    @given(x=rgb, y=rgb)
    def test_symmetric(self, ident, x, y):
        assert ev(ident, x, y) == ev(ident, y, x)

    @pytest.mark.parametrize("ident", ms.DISTANCE_IDS)
    @given(x=rgb, y=rgb)
    def test_distances_non_negative(self, ident, x, y):
        assert ev(ident, x, y) >= 0.0

    @pytest.mark.parametrize("ident", [m for m in ms.SIMILARITY_IDS if m != "cfs"])
    @given(x=rgb, y=rgb)
    def test_similarities_in_unit_interval(self, ident, x, y):
        assert 0.0 <= ev(ident, x, y) <= 1.0

    @given(x=nonzero_rgb, c=st.integers(2, 4))
    def test_fds_scale_invariant(self, x, c):
        y = [v * c for v in x]
        if max(y) <= 255:
            assert ev("fds", x, y) == pytest.approx(1.0, abs=1e-12)


class TestSpecs:
    def test_parse_with_params(self):
        spec = ms.parse_measure("cfs:C=150,t=4")
        assert spec.id == "cfs" and spec.param("C") == 150 and spec.param("t") == 4
        assert str(spec) == "cfs:C=150,t=4"
        assert spec.maximize

    def test_defaults_merged(self):
        assert ms.parse_measure("fmds:K2=8").params == (("K1", 1024.0), ("K2", 8.0))
        assert ms.parse_measure("fms") == ms.MeasureSpec.make("fms", K=1024)

    def test_orientation(self):
        assert set(ms.SIMILARITY_IDS) == {"fms", "fds", "fmds", "cfs"}
        assert ms.MeasureSpec("d2").orientation == ms.MINIMIZE

    @pytest.mark.parametrize(
        "text", ["nope", "d1:K=3", "fms:K=-1", "fms:K=abc", "fms:K", "cfs:C=0", "fms:K=inf"]
    )
    def test_rejects(self, text):
        with pytest.raises(ConfigError):
            ms.parse_measure(text)

    def test_describe_lists_every_measure(self):
        text = ms.describe_measures()
        for ident in ms.MEASURE_IDS:
            assert ident in text
        assert "cfs:C=150,t=4" in text

    @pytest.mark.parametrize("bad", [[1, 2], [0, 0, 256], [1.5, 0, 0], [-1, 0, 0]])
    def test_bad_vectors(self, bad):
        with pytest.raises(ValueError):
            ev("d1", bad, [0, 0, 0])


class TestTables:
    def test_canberra_origin(self):
        assert ms.build_pair_lut("canberra").table[0, 0] == 0.0

    def test_ware_diagonal(self):
        assert np.all(np.diag(ms.build_pair_lut("ware").table) == 0.0)

    def test_divergence_entry(self):
        assert ms.build_pair_lut("divergence").table[1, 3] == 1.0

    def test_tables_are_read_only_and_cached(self):
        lut = ms.build_pair_lut("fms", 1024.0)
        assert lut is ms.build_pair_lut("fms", 1024.0)
        with pytest.raises(ValueError):
            lut.table[0, 0] = 5.0

    def test_fms_table_needs_k(self):
        with pytest.raises(ConfigError):
            ms.build_pair_lut("fms")
        with pytest.raises(ConfigError):
            ms.build_pair_lut("cosine")

    def test_spatial_lut(self):
        lut = ms.build_spatial_lut(9, 4.0)
        assert lut.shape == (9, 9)
        assert np.all(np.diag(lut) == 1.0)
        assert lut[0, 8] == pytest.approx(4 / 6)
        assert lut[4, 0] == pytest.approx(0.8)

    def test_mismatched_tables(self):
        prepared = ms.prepare_measure(ms.MeasureSpec.make("fms", K=1024))
        with pytest.raises(ConfigError):
            ms.lut_eval(ms.MeasureSpec.make("fms", K=10), prepared, [1, 2, 3], [4, 5, 6])

    @given(x=rgb, y=rgb)
    def test_canberra_and_chord_lut_equal_direct(self, x, y):
        for ident in ("canberra", "chord"):
            spec = ms.MeasureSpec(ident)
            assert ms.lut_eval(spec, ms.prepare_measure(spec), x, y) == ms.eval_measure(spec, x, y)

    def test_fms_random_pairs(self, rng):
        spec = ms.MeasureSpec("fms")
        x, y = rng.integers(0, 256, (10_000, 3)), rng.integers(0, 256, (10_000, 3))
        diff = ms.eval_pairs(spec, x, y, ms.prepare_measure(spec)) - ms.eval_pairs(spec, x, y)
        assert np.max(np.abs(diff)) == 0.0

    def test_prepare_without_tables_uses_direct_kernel(self):
        spec = ms.MeasureSpec("canberra")
        assert ms.prepare_measure(spec, use_luts=False).kernel is ms.REGISTRY["canberra"].kernel
