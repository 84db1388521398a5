import random

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cflr.sparse import (
    COL,
    COL_BY_COL,
    ROW,
    ROW_BY_ROW,
    BoolMat,
    OpCounter,
    block_collapse,
    block_diagonalize,
    block_offset,
    convert,
    difference,
    horizontal_to_vertical,
    spgemm,
    union,
    vertical_to_horizontal,
)
from _support import from_dense, random_boolmat, to_dense


def entry_lists(rows, cols):
    return st.lists(
        st.tuples(st.integers(0, rows - 1), st.integers(0, cols - 1)),
        max_size=rows * cols,
    )


class TestSpgemm:
    def test_identity(self):
        x = BoolMat.from_entries(3, 4, [(0, 1), (2, 3), (2, 0)])
        assert spgemm(BoolMat.identity(3), x) == x

    def test_single_path_composition(self):
        a = BoolMat.from_entries(3, 3, [(0, 1)])
        b = BoolMat.from_entries(3, 3, [(1, 2)])
        assert spgemm(a, b).entry_set() == {(0, 2)}

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            spgemm(BoolMat.empty(2, 3), BoolMat.empty(4, 2))

    def test_layout_precondition(self):
        a = BoolMat.from_entries(3, 3, [(0, 1)], layout=COL)
        b = BoolMat.from_entries(3, 3, [(1, 2)])
        with pytest.raises(ValueError):
            spgemm(a, b, ROW_BY_ROW)

    @given(
        st.integers(1, 32),
        st.integers(1, 32),
        st.integers(1, 32),
        st.randoms(use_true_random=False),
    )
    @settings(max_examples=120, deadline=None)
    def test_matches_dense_product_both_orientations(self, n, m, p, rng):
        a = random_boolmat(rng, n, m, density=0.25)
        b = random_boolmat(rng, m, p, density=0.25)
        want = from_dense(to_dense(a) @ to_dense(b))
        assert spgemm(a, b, ROW_BY_ROW) == want
        got_col = spgemm(convert(a, COL), convert(b, COL), COL_BY_COL)
        assert got_col.layout == COL
        assert got_col == want

    def test_inputs_unmodified(self):
        a = random_boolmat(random.Random(0), 8, 8)
        b = random_boolmat(random.Random(1), 8, 8)
        snap_a, snap_b = a.entry_set(), b.entry_set()
        spgemm(a, b)
        union(a, b)
        difference(a, b)
        convert(a, COL)
        assert a.entry_set() == snap_a and b.entry_set() == snap_b

    def test_counter_determinism(self):
        rng1, rng2 = random.Random(42), random.Random(42)
        counters = []
        for rng in (rng1, rng2):
            c = OpCounter()
            a = random_boolmat(rng, 16, 16)
            b = random_boolmat(rng, 16, 16)
            spgemm(a, b, ROW_BY_ROW, c)
            union(a, b, c)
            counters.append(c)
        assert counters[0] == counters[1]

    def test_scalar_ops_counts_visited_pairs(self):
        # one left entry hitting a three-entry right line: three pairs visited
        a = BoolMat.from_entries(2, 2, [(0, 1)])
        b = BoolMat.from_entries(2, 3, [(1, 0), (1, 1), (1, 2)])
        c = OpCounter()
        spgemm(a, b, ROW_BY_ROW, c)
        assert c.spgemm_calls == 1 and c.scalar_ops == 3


class TestUnionDifference:
    def test_union_with_empty_is_identity(self):
        a = BoolMat.from_entries(4, 4, [(1, 2), (3, 0)])
        assert union(a, BoolMat.empty(4, 4)) == a

    def test_union_idempotent(self):
        a = BoolMat.from_entries(1, 1, [(0, 0)])
        assert union(a, a).entry_set() == {(0, 0)}

    def test_difference_trivial(self):
        a = BoolMat.from_entries(4, 4, [(1, 2), (3, 0)])
        assert difference(a, BoolMat.empty(4, 4)) == a
        assert difference(a, a).nnz == 0

    @given(st.integers(1, 16), st.randoms(use_true_random=False))
    @settings(max_examples=80, deadline=None)
    def test_matches_dense_bitset(self, n, rng):
        a = random_boolmat(rng, n, n, density=0.3)
        b = random_boolmat(rng, n, n, density=0.3)
        assert union(a, b) == from_dense(to_dense(a) | to_dense(b))
        assert difference(a, b) == from_dense(to_dense(a) & ~to_dense(b))

    @given(st.integers(1, 12), st.randoms(use_true_random=False))
    @settings(max_examples=60, deadline=None)
    def test_set_algebra_properties(self, n, rng):
        a = random_boolmat(rng, n, n, density=0.3)
        b = random_boolmat(rng, n, n, density=0.3)
        u, d = union(a, b), difference(a, b)
        assert difference(u, b).entry_set() <= a.entry_set()
        assert a.entry_set() <= u.entry_set()
        assert not d.entry_set() & b.entry_set()

    def test_union_nnz_bound(self):
        a = BoolMat.from_entries(3, 3, [(0, 0), (1, 1)])
        b = BoolMat.from_entries(3, 3, [(1, 1), (2, 2)])
        assert union(a, b).nnz <= a.nnz + b.nnz

    def test_cross_layout_difference(self):
        a = BoolMat.from_entries(4, 4, [(0, 1), (2, 3), (1, 1)])
        b = convert(BoolMat.from_entries(4, 4, [(2, 3)]), COL)
        assert difference(a, b).entry_set() == {(0, 1), (1, 1)}

    def test_shape_and_layout_errors(self):
        with pytest.raises(ValueError):
            union(BoolMat.empty(2, 2), BoolMat.empty(3, 3))
        with pytest.raises(ValueError):
            union(BoolMat.empty(2, 2, ROW), BoolMat.empty(2, 2, COL))
        with pytest.raises(ValueError):
            difference(BoolMat.empty(2, 2), BoolMat.empty(2, 3))


class TestConvert:
    def test_involution(self):
        a = random_boolmat(random.Random(5), 9, 7)
        assert convert(convert(a, COL), ROW) == a

    def test_storage_structure(self):
        a = BoolMat.from_entries(6, 6, [(0, 5), (3, 5)])
        c = convert(a, COL)
        assert c.layout == COL
        assert c.lines == {5: [0, 3]}

    @given(st.integers(1, 20), st.integers(1, 20), st.randoms(use_true_random=False))
    @settings(max_examples=100, deadline=None)
    def test_nnz_preserved(self, r, c, rng):
        a = random_boolmat(rng, r, c, density=0.3)
        assert convert(a, COL).nnz == a.nnz


class TestBlocks:
    def test_offset_zero_slot_keeps_coordinates(self):
        a = BoolMat.from_entries(4, 4, [(1, 2), (3, 3)])
        h = block_offset(a, 0, 3, "horizontal")
        assert h.shape() == (4, 12)
        assert h.entry_set() == a.entry_set()

    def test_offset_coordinate_arithmetic(self):
        a = BoolMat.from_entries(10, 10, [(1, 2)])
        assert block_offset(a, 3, 5, "horizontal").entry_set() == {(1, 32)}
        assert block_offset(a, 3, 5, "vertical").entry_set() == {(31, 2)}

    def test_offset_nnz_preserved_and_range_checked(self):
        a = random_boolmat(random.Random(2), 6, 6)
        assert block_offset(a, 2, 4, "vertical").nnz == a.nnz
        with pytest.raises(ValueError):
            block_offset(a, 4, 4, "horizontal")

    def test_diagonalize_single_block_is_identity_transform(self):
        v = BoolMat.from_entries(5, 5, [(2, 3)])
        assert block_diagonalize(v, 5, 1).entry_set() == {(2, 3)}

    def test_diagonalize_coordinate_arithmetic(self):
        v = BoolMat.from_entries(20, 10, [(12, 3)])
        assert block_diagonalize(v, 10, 2).entry_set() == {(12, 13)}

    def test_diagonalized_product_equals_per_slot_products(self):
        rng = random.Random(9)
        for _ in range(25):
            n, k = rng.randint(1, 10), rng.randint(1, 4)
            left = [random_boolmat(rng, n, n, 0.3) for _ in range(k)]
            right = [random_boolmat(rng, n, n, 0.3) for _ in range(k)]

            def stack(mats):
                ents = []
                for t, m in enumerate(mats):
                    ents += [(t * n + i, j) for i, j in m.entries()]
                return BoolMat.from_entries(k * n, n, ents)

            got = spgemm(block_diagonalize(stack(left), n, k), stack(right))
            want_ents = []
            for t in range(k):
                dense = to_dense(left[t]) @ to_dense(right[t])
                want_ents += [
                    (t * n + int(i), int(j)) for i, j in zip(*np.nonzero(dense))
                ]
            assert got == BoolMat.from_entries(k * n, n, want_ents)

    def test_collapse_single_block(self):
        h = BoolMat.from_entries(4, 4, [(0, 1), (2, 2)])
        assert block_collapse(h, 4, 1) == h

    def test_collapse_unions_slots(self):
        h = BoolMat.from_entries(3, 9, [(0, 1), (0, 7)])  # slot 0 and slot 2, both (0,1)
        assert block_collapse(h, 3, 3).entry_set() == {(0, 1)}

    def test_collapse_equals_slice_union(self):
        rng = random.Random(13)
        for _ in range(25):
            n, k = rng.randint(1, 8), rng.randint(1, 4)
            h = random_boolmat(rng, n, k * n, 0.2)
            dense = to_dense(h)
            want = np.zeros((n, n), dtype=bool)
            for t in range(k):
                want |= dense[:, t * n : (t + 1) * n]
            assert block_collapse(h, n, k) == from_dense(want)

    def test_horizontal_vertical_round_trip(self):
        rng = random.Random(21)
        h = random_boolmat(rng, 6, 24, 0.2)
        v = horizontal_to_vertical(h, 6, 4)
        assert v.shape() == (24, 6) and v.nnz == h.nnz
        assert vertical_to_horizontal(v, 6, 4) == h


class TestDebugSerialization:
    def test_golden_coordinate_text(self):
        m = BoolMat.from_entries(4, 4, [(3, 0), (0, 2), (0, 1)])
        assert m.coordinate_text() == "0 1\n0 2\n3 0"
        assert convert(m, COL).coordinate_text() == "0 1\n0 2\n3 0"
