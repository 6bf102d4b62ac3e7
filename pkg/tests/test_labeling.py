import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from playaffinity.errors import ConfigurationError
from playaffinity.ingest import Observation
from playaffinity.labeling import (
    LabeledSamples, WeightingKind, binarize, confidence_weight, label_samples, label_stream,
)
from playaffinity.vocab import EntityTypeTable, build_vocabulary

CURVED = [k for k in WeightingKind if k is not WeightingKind.UNIFORM]


class TestBinarize:
    def test_short_song_is_negative(self):
        assert binarize(10.0, 30.0) == -1

    def test_long_station_is_positive(self):
        assert binarize(900.0, 180.0) == 1

    def test_boundary_is_positive(self):
        assert binarize(30.0, 30.0) == 1

    @pytest.mark.parametrize("T", [0.0, -5.0])
    def test_bad_threshold(self, T):
        with pytest.raises(ConfigurationError):
            binarize(1.0, T)

    def test_vectorized(self):
        np.testing.assert_array_equal(binarize([0, 29.9, 30, 31], 30), [-1, -1, 1, 1])


class TestConfidenceWeight:
    @pytest.mark.parametrize("kind", CURVED)
    def test_zero_at_threshold(self, kind):
        assert confidence_weight(30.0, 30.0, kind) == 0.0

    @pytest.mark.parametrize("kind", list(WeightingKind))
    def test_saturates_beyond_ten_t(self, kind):
        assert confidence_weight(12 * 30.0, 30.0, kind) == 1.0

    @pytest.mark.parametrize("kind, expected", [
        ("linear", 0.5), ("convex_quadratic", 0.25), ("concave_quadratic", 0.75),
        # log curve: ln(1 + 4.5) / ln(10), evaluated at 30 digits with mpmath
        ("log", 0.740362689494243845536461076519),
    ])
    def test_half_threshold(self, kind, expected):
        assert confidence_weight(15.0, 30.0, kind) == pytest.approx(expected, abs=1e-15)

    @pytest.mark.parametrize("kind, expected", [("linear", 0.5), ("convex_quadratic", 0.25),
                                                 ("concave_quadratic", 0.75)])
    def test_positive_branch_midpoint(self, kind, expected):
        # u = (165 - 30) / 270 = 0.5
        assert confidence_weight(165.0, 30.0, kind) == pytest.approx(expected, abs=1e-15)

    def test_uniform_is_one_everywhere(self):
        t = np.linspace(0, 500, 101)
        np.testing.assert_array_equal(confidence_weight(t, 30.0, "uniform"), 1.0)

    def test_parse_cli_names(self):
        assert WeightingKind.parse("convex-quad") is WeightingKind.CONVEX_QUADRATIC
        assert WeightingKind.parse("concave-quad") is WeightingKind.CONCAVE_QUADRATIC
        with pytest.raises(ConfigurationError):
            WeightingKind.parse("cubic")


@given(st.floats(0, 1e4), st.floats(0.5, 1e3), st.sampled_from(list(WeightingKind)))
def test_weight_in_unit_interval(t, T, kind):
    w = confidence_weight(t, T, kind)
    assert 0.0 <= w <= 1.0
    if t > 10 * T:
        assert w == 1.0


@given(st.floats(0.5, 1e3), st.sampled_from(CURVED))
def test_weight_continuous_at_branch_points(T, kind):
    eps = T * 1e-9
    for point in (T, 10 * T):
        assert abs(confidence_weight(point - eps, T, kind) - confidence_weight(point + eps, T, kind)) < 1e-6
    assert confidence_weight(0.0, T, kind) == 1.0


@given(st.floats(0.5, 1e3), st.floats(0.001, 0.999))
def test_curve_ordering(T, frac):
    above = T + frac * 9 * T
    below = frac * T
    for t in (above, below):
        cvx, lin, ccv = (confidence_weight(t, T, k) for k in ("convex_quadratic", "linear", "concave_quadratic"))
        assert cvx < lin < ccv


@given(st.floats(0, 1e4), st.floats(0, 1e4), st.floats(0.5, 1e3))
def test_binarize_monotone(t1, t2, T):
    lo, hi = sorted((t1, t2))
    assert binarize(lo, T) <= binarize(hi, T)


def _fixture():
    obs = ([Observation("User_3", "song", "Entity_5", 10.0, 41)]
           + [Observation("User_3", "song", "Entity_5", 40.0, 40)] * 5
           + [Observation("rare", "station", "Entity_5", 900.0, 40)])
    uv = build_vocabulary((o.user for o in obs), 5, "<User_UNK>")
    ev = build_vocabulary((o.entity for o in obs), 5, "<Entity_UNK>")
    return obs, uv, ev


class TestLabelStream:
    def test_table_row(self):
        obs, uv, ev = _fixture()
        s = next(label_stream(obs, uv, ev, EntityTypeTable(), "linear"))
        assert (s.user_index, s.entity_index, s.entity_type, s.label) == (uv.lookup("User_3"), ev.lookup("Entity_5"),
                                                                          "song", -1)
        assert s.weight == pytest.approx(confidence_weight(10.0, 30.0, "linear"))

    def test_rare_user_gets_unk(self):
        obs, uv, ev = _fixture()
        last = list(label_stream(obs, uv, ev, EntityTypeTable()))[-1]
        assert last.user_index == uv.unk_index
        assert last.label == 1

    def test_empty(self):
        _, uv, ev = _fixture()
        assert list(label_stream([], uv, ev, EntityTypeTable())) == []
        assert len(label_samples([], uv, ev, EntityTypeTable())) == 0

    def test_unknown_type(self):
        _, uv, ev = _fixture()
        with pytest.raises(ConfigurationError, match="video"):
            list(label_stream([Observation("a", "video", "b", 1.0, 1)], uv, ev, EntityTypeTable()))

    @pytest.mark.parametrize("kind", list(WeightingKind))
    def test_batch_matches_stream(self, kind):
        obs, uv, ev = _fixture()
        batch = label_samples(obs, uv, ev, EntityTypeTable(), kind)
        assert list(batch.samples()) == list(label_stream(obs, uv, ev, EntityTypeTable(), kind))
        again = LabeledSamples.from_samples(batch.samples())
        np.testing.assert_array_equal(again.weights, batch.weights)

    def test_positives(self):
        obs, uv, ev = _fixture()
        batch = label_samples(obs, uv, ev, EntityTypeTable())
        assert len(batch.positives()) == 6
        assert np.all(batch.positives().labels == 1)
