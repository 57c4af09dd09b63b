"""Domain type invariants."""

import numpy as np
import pytest

from rim.core import (
    IGNORE_LABEL,
    AttentionStack,
    CategoryReference,
    LabelMap,
    NumericError,
    RankingDistribution,
    ReferenceSet,
    Region,
    RegionSet,
    RimError,
    SoftMask,
    Tensor,
    ValidationError,
)


def test_error_taxonomy():
    assert issubclass(ValidationError, RimError)
    assert issubclass(NumericError, RimError)
    assert issubclass(RimError, Exception)


class TestTensor:
    def test_round_trip(self):
        a = np.arange(24, dtype=np.float32).reshape(2, 3, 4)
        t = Tensor.from_array(a)
        assert t.shape == (2, 3, 4)
        assert np.array_equal(t.as_array(), a)
        assert t.as_array().dtype == np.float32

    def test_shape_product_must_match(self):
        with pytest.raises(ValidationError):
            Tensor((2, 3), np.zeros(5, dtype=np.float32))

    def test_rejects_empty_shape(self):
        with pytest.raises(ValidationError):
            Tensor((), np.zeros(1, dtype=np.float32))

    def test_rejects_zero_dim(self):
        with pytest.raises(ValidationError):
            Tensor((2, 0), np.zeros(0, dtype=np.float32))

    def test_rejects_non_finite(self):
        with pytest.raises(ValidationError):
            Tensor((2,), [1.0, np.nan])
        with pytest.raises(ValidationError):
            Tensor((2,), [1.0, np.inf])

    def test_data_is_read_only(self):
        t = Tensor.from_array(np.zeros((2, 2), dtype=np.float32))
        with pytest.raises(ValueError):
            t.data[0] = 5.0


class TestSoftMask:
    def test_accepts_soft_weights(self):
        m = SoftMask([[0.0, 0.5], [1.0, 0.25]])
        assert (m.height, m.width) == (2, 2)
        assert not m.is_binary()
        assert m.foreground_count() == 3

    def test_binary_detection(self):
        assert SoftMask([[0.0, 1.0]]).is_binary()

    def test_rejects_out_of_range(self):
        with pytest.raises(ValidationError):
            SoftMask([[1.5]])
        with pytest.raises(ValidationError):
            SoftMask([[-0.1]])

    def test_rejects_non_2d(self):
        with pytest.raises(ValidationError):
            SoftMask([0.5, 0.5])


class TestAttentionStack:
    def test_shape_and_counts(self):
        s = AttentionStack(np.ones((2, 3, 4, 5), dtype=np.float32))
        assert (s.layer_count, s.step_count) == (2, 3)
        assert s.maps.shape == (2, 3, 4, 5)

    def test_rejects_negative(self):
        a = np.ones((1, 1, 2, 2), dtype=np.float32)
        a[0, 0, 0, 0] = -0.5
        with pytest.raises(ValidationError):
            AttentionStack(a)

    def test_rejects_all_zero_map(self):
        a = np.ones((2, 2, 2, 2), dtype=np.float32)
        a[1, 0] = 0.0
        with pytest.raises(ValidationError, match="layer=1, step=0"):
            AttentionStack(a)

    def test_rejects_wrong_rank(self):
        with pytest.raises(ValidationError):
            AttentionStack(np.ones((2, 4, 5), dtype=np.float32))


class TestCategoryReference:
    def _make(self, t=2, k=4, d=8):
        rng = np.random.default_rng(0)
        return CategoryReference(
            3, rng.normal(size=d), rng.normal(size=(t, d)), k
        )

    def test_fields(self):
        c = self._make()
        assert c.category_id == 3
        assert c.feature_dim == 8
        assert c.subcategory_count == 2
        assert c.sample_count == 4

    def test_subcategory_count_bounds(self):
        rng = np.random.default_rng(0)
        with pytest.raises(ValidationError):
            CategoryReference(0, rng.normal(size=4), rng.normal(size=(5, 4)), 4)
        with pytest.raises(ValidationError):
            CategoryReference(0, rng.normal(size=4), rng.normal(size=(0, 4)), 4)

    def test_dim_mismatch(self):
        rng = np.random.default_rng(0)
        with pytest.raises(ValidationError):
            CategoryReference(0, rng.normal(size=4), rng.normal(size=(2, 5)), 4)

    def test_zero_norm_rejected(self):
        with pytest.raises(ValidationError):
            CategoryReference(0, np.zeros(4), np.ones((1, 4)), 2)


def _ref_set(c=3, d=8):
    rng = np.random.default_rng(1)
    cats = [
        CategoryReference(k, rng.normal(size=d), rng.normal(size=(2, d)), 5)
        for k in range(c)
    ]
    return ReferenceSet(cats, rng.normal(size=d), [f"name{k}" for k in range(c)])


class TestReferenceSet:
    def test_layout(self):
        rs = _ref_set()
        assert rs.category_count == 3
        assert rs.feature_dim == 8
        assert rs.class_names() == ["background", "name0", "name1", "name2"]
        table = rs.holistic_by_label()
        assert table.shape == (4, 8)
        assert np.array_equal(table[0], rs.background)
        assert np.array_equal(table[2], rs.categories[1].holistic)

    def test_sorts_categories_by_id(self):
        rng = np.random.default_rng(2)
        cats = [
            CategoryReference(k, rng.normal(size=4), rng.normal(size=(1, 4)), 2)
            for k in (2, 0, 1)
        ]
        rs = ReferenceSet(cats, rng.normal(size=4), ["a", "b", "c"])
        assert [c.category_id for c in rs.categories] == [0, 1, 2]

    def test_rejects_sparse_ids(self):
        rng = np.random.default_rng(3)
        cats = [
            CategoryReference(k, rng.normal(size=4), rng.normal(size=(1, 4)), 2)
            for k in (0, 2)
        ]
        with pytest.raises(ValidationError, match="dense"):
            ReferenceSet(cats, rng.normal(size=4), ["a", "b"])

    def test_rejects_name_count_mismatch(self):
        rng = np.random.default_rng(4)
        cats = [CategoryReference(0, rng.normal(size=4), rng.normal(size=(1, 4)), 2)]
        with pytest.raises(ValidationError):
            ReferenceSet(cats, rng.normal(size=4), ["a", "b"])

    def test_rejects_background_dim_mismatch(self):
        rng = np.random.default_rng(5)
        cats = [CategoryReference(0, rng.normal(size=4), rng.normal(size=(1, 4)), 2)]
        with pytest.raises(ValidationError):
            ReferenceSet(cats, rng.normal(size=6), ["a"])


class TestRegion:
    def test_requires_foreground(self):
        with pytest.raises(ValidationError):
            Region(SoftMask(np.zeros((2, 2), dtype=np.float32)), np.ones(4))

    def test_region_set_checks_dims(self):
        m = SoftMask(np.ones((2, 2), dtype=np.float32))
        r1 = Region(m, np.ones(4))
        r2 = Region(m, np.ones(5))
        with pytest.raises(ValidationError):
            RegionSet([r1, r2], "img")
        rs = RegionSet([r1], "img")
        assert rs.feature_dim == 4
        assert rs.image_id == "img"


class TestRankingDistribution:
    def test_valid(self):
        rd = RankingDistribution((4, 7), [0.25, 0.75])
        assert rd.agent_count == 2
        assert rd.agent_ids == (4, 7)

    def test_rejects_duplicate_agents(self):
        with pytest.raises(ValidationError):
            RankingDistribution((1, 1), [0.5, 0.5])

    def test_rejects_wrong_length(self):
        with pytest.raises(ValidationError):
            RankingDistribution((0, 1), [1.0])

    def test_rejects_bad_sum(self):
        with pytest.raises(ValidationError):
            RankingDistribution((0, 1), [0.6, 0.6])

    def test_rejects_negative(self):
        with pytest.raises(ValidationError):
            RankingDistribution((0, 1), [1.2, -0.2])


class TestLabelMap:
    def test_accepts_integral_floats(self):
        lm = LabelMap(np.array([[0.0, 2.0], [255.0, 1.0]]), class_count=2)
        assert lm.labels.dtype == np.int32
        assert lm.labels[1, 0] == IGNORE_LABEL

    def test_rejects_fractional(self):
        with pytest.raises(ValidationError, match="integral"):
            LabelMap(np.array([[0.5]]), class_count=1)

    def test_rejects_out_of_range(self):
        with pytest.raises(ValidationError):
            LabelMap(np.array([[3]]), class_count=2)
        with pytest.raises(ValidationError):
            LabelMap(np.array([[-1]]), class_count=2)

    def test_ignore_label_always_allowed(self):
        lm = LabelMap(np.full((2, 2), IGNORE_LABEL), class_count=1)
        assert np.all(lm.labels == IGNORE_LABEL)
