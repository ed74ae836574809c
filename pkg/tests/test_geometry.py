import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lshqs import Dataset, SeedSpec, derive_seed, squared_euclidean


class TestSquaredEuclidean:
    def test_3_4_5_triangle(self):
        assert squared_euclidean([0, 0], [3, 4]) == 25.0

    def test_identity(self):
        x = np.array([1.5, -2.25, 0.125])
        assert squared_euclidean(x, x) == 0.0

    def test_matches_scalar_loop(self):
        rng = np.random.default_rng(17)
        a = rng.normal(size=10)
        b = rng.normal(size=10)
        reference = 0.0
        for j in range(10):
            reference += (a[j] - b[j]) ** 2
        assert squared_euclidean(a, b) == pytest.approx(reference, rel=1e-14)

    def test_symmetry(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            a, b = rng.normal(size=(2, 6))
            assert squared_euclidean(a, b) == squared_euclidean(b, a)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            squared_euclidean([1, 2], [1, 2, 3])

    @settings(max_examples=200, deadline=None)
    @given(st.integers(0, 2**32))
    def test_triangle_inequality(self, seed):
        rng = np.random.default_rng(seed)
        a, b, c = rng.uniform(-100, 100, size=(3, 4))
        ab = np.sqrt(squared_euclidean(a, b))
        bc = np.sqrt(squared_euclidean(b, c))
        ac = np.sqrt(squared_euclidean(a, c))
        assert ac <= (ab + bc) * (1 + 1e-9)


class TestDeriveSeed:
    def test_deterministic(self):
        assert derive_seed(7, "lsh", 0) == derive_seed(7, "lsh", 0)

    def test_index_changes_seed(self):
        assert derive_seed(7, "lsh", 0) != derive_seed(7, "lsh", 1)

    def test_master_changes_seed(self):
        assert derive_seed(7, "lsh", 0) != derive_seed(8, "lsh", 0)

    def test_tag_changes_seed(self):
        assert derive_seed(7, "lsh", 0) != derive_seed(7, "hbe", 0)

    def test_no_collisions_across_grid(self):
        seen = {
            derive_seed(m, tag, i)
            for m in range(4) for tag in ("a", "b", "c") for i in range(50)
        }
        assert len(seen) == 4 * 3 * 50

    def test_spec_child_streams(self):
        spec = SeedSpec(9)
        assert spec.child("x", 1) == derive_seed(9, "x", 1)
        r1 = spec.rng("x").normal(size=4)
        r2 = spec.rng("x").normal(size=4)
        np.testing.assert_array_equal(r1, r2)


class TestDataset:
    def test_basic_shape(self):
        d = Dataset([[1, 2], [3, 4], [5, 6]])
        assert (d.n, d.dim) == (3, 2)
        assert d.labels is None

    def test_rejects_nan(self):
        with pytest.raises(ValueError, match="NaN or Inf"):
            Dataset([[1.0, np.nan]])

    def test_rejects_inf(self):
        with pytest.raises(ValueError, match="NaN or Inf"):
            Dataset([[np.inf, 0.0]])

    def test_rejects_ragged(self):
        with pytest.raises(ValueError):
            Dataset([[1, 2], [3]])

    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            Dataset(np.empty((0, 2)))

    def test_labels_length_checked(self):
        with pytest.raises(ValueError, match="labels"):
            Dataset([[1], [2]], labels=[0])

    def test_labels_kept(self):
        d = Dataset([[1], [2], [3]], labels=[4, 4, 9])
        np.testing.assert_array_equal(d.labels, [4, 4, 9])

    def test_immutable_after_construction(self):
        d = Dataset([[1.0, 2.0]])
        with pytest.raises(ValueError):
            d.X[0, 0] = 5.0

    def test_row_major_contiguous(self):
        d = Dataset(np.asfortranarray(np.ones((4, 3))))
        assert d.X.flags["C_CONTIGUOUS"]
