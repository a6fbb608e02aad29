import numpy as np
import pytest

from nettrack.errors import InvariantError, ParseError, SizeLimitError
from nettrack.states import (
    GraphSnapshot,
    RowState,
    hamming,
    index_to_state,
    popcount_array,
    read_dense,
    read_edge_list,
    state_space_size,
    state_to_index,
    write_dense,
    write_edge_list,
)

import reference


class TestStateSpaceSize:
    def test_smallest_order(self):
        assert state_space_size(2) == 2

    def test_order_fourteen(self):
        assert state_space_size(14) == 8192

    def test_order_sixteen(self):
        assert state_space_size(16) == 32768

    @pytest.mark.parametrize("n", [0, 1, 25, 100])
    def test_out_of_range_names_bound(self, n):
        with pytest.raises(SizeLimitError, match="24"):
            state_space_size(n)


class TestIndexStateConversion:
    def test_zero_index_is_empty_row(self):
        assert index_to_state(0, 0, 3).bits == (0, 0, 0)

    def test_bits_map_to_columns_skipping_owner(self):
        assert index_to_state(1, 3, 3).bits == (1, 0, 1)
        assert index_to_state(2, 1, 3).bits == (1, 0, 0)

    def test_index_out_of_range(self):
        with pytest.raises(IndexError):
            index_to_state(0, 4, 3)
        with pytest.raises(IndexError):
            index_to_state(0, -1, 3)

    def test_state_to_index_examples(self):
        assert state_to_index(RowState(bits=(0, 0, 0), owner=0)) == 0
        assert state_to_index(RowState(bits=(1, 0, 1), owner=1)) == 3

    def test_round_trip_order_four(self):
        for owner in range(4):
            for i in range(state_space_size(4)):
                assert state_to_index(index_to_state(owner, i, 4)) == i

    def test_self_loop_bit_rejected(self):
        with pytest.raises(InvariantError):
            RowState(bits=(0, 1, 0), owner=1)

    @pytest.mark.parametrize("n", [2, 3, 5, 8, 12])
    def test_bijection_exhaustive(self, n):
        size = state_space_size(n)
        for owner in range(n):
            seen = set()
            for i in range(size):
                state = index_to_state(owner, i, n)
                assert state.bits[owner] == 0
                back = state_to_index(state)
                assert back == i
                seen.add(state.bits)
            assert len(seen) == size

    @pytest.mark.parametrize("n", [3, 4, 5])
    def test_matches_reference_enumeration(self, n):
        for owner in range(n):
            expected = reference.enumerate_row_states(owner, n)
            for i in range(state_space_size(n)):
                got = index_to_state(owner, i, n).as_array()
                assert np.array_equal(got, expected[i])


class TestHamming:
    def test_examples(self):
        assert hamming(5, 3) == 2
        assert hamming(7, 7) == 0

    @pytest.mark.parametrize("n", [2, 5, 14, 24])
    def test_extreme_states_differ_everywhere(self, n):
        assert hamming(0, state_space_size(n) - 1) == n - 1

    def test_negative_rejected(self):
        with pytest.raises(IndexError):
            hamming(-1, 0)

    def test_symmetry_exhaustive_order_eight(self):
        size = state_space_size(8)
        idx = np.arange(size, dtype=np.uint64)
        dist = popcount_array(idx[:, None] ^ idx[None, :])
        assert np.array_equal(dist, dist.T)
        assert np.array_equal(np.diag(dist), np.zeros(size, dtype=dist.dtype))

    def test_triangle_inequality_exhaustive_order_eight(self):
        size = state_space_size(8)
        idx = np.arange(size, dtype=np.uint64)
        dist = popcount_array(idx[:, None] ^ idx[None, :]).astype(np.int64)
        via = dist[:, :, None] + dist[None, :, :]  # (i, j, k)
        assert (dist[:, None, :] <= via).all()

    def test_counts_differing_edge_slots(self):
        # the index metric agrees with vector disagreement between rows
        n = 5
        rng = np.random.default_rng(0)
        for _ in range(50):
            owner = int(rng.integers(n))
            i, j = (int(v) for v in rng.integers(state_space_size(n), size=2))
            a = index_to_state(owner, i, n).as_array()
            b = index_to_state(owner, j, n).as_array()
            assert hamming(i, j) == int(np.abs(a - b).sum())


class TestGraphSnapshot:
    def test_row_round_trip(self):
        mat = np.array([[0, 1, 0], [1, 0, 1], [0, 0, 0]])
        snap = GraphSnapshot(mat)
        rows = [snap.row(node) for node in range(3)]
        rebuilt = GraphSnapshot.from_rows(rows)
        assert rebuilt == snap
        assert snap.row_index(1) == state_to_index(rows[1])

    def test_diagonal_must_be_zero(self):
        with pytest.raises(InvariantError):
            GraphSnapshot(np.eye(3, dtype=int))

    def test_non_square_rejected(self):
        with pytest.raises(Exception):
            GraphSnapshot(np.zeros((2, 3), dtype=int))

    def test_non_binary_rejected(self):
        mat = np.zeros((3, 3), dtype=int)
        mat[0, 1] = 2
        with pytest.raises(InvariantError):
            GraphSnapshot(mat)


class TestEdgeListFormat:
    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(5)
        mat = (rng.random((6, 6)) < 0.4).astype(np.int64)
        np.fill_diagonal(mat, 0)
        snap = GraphSnapshot(mat)
        path = tmp_path / "graph.csv"
        write_edge_list(snap, path)
        assert read_edge_list(path, 6) == snap

    def test_edge_direction_convention(self, tmp_path):
        # a line "src,dst" means signal flows src -> dst: entry [dst][src]
        path = tmp_path / "graph.csv"
        path.write_text("src,dst\n0,2\n")
        snap = read_edge_list(path, 3)
        assert snap.matrix[2, 0] == 1
        assert snap.matrix.sum() == 1

    def test_write_uses_same_convention(self, tmp_path):
        mat = np.zeros((3, 3), dtype=np.int64)
        mat[2, 0] = 1
        path = tmp_path / "graph.csv"
        write_edge_list(GraphSnapshot(mat), path)
        assert path.read_text().splitlines() == ["src,dst", "0,2"]

    def test_bad_header(self, tmp_path):
        path = tmp_path / "graph.csv"
        path.write_text("from,to\n0,1\n")
        with pytest.raises(ParseError, match=":1"):
            read_edge_list(path, 3)

    def test_parse_error_carries_line_number(self, tmp_path):
        path = tmp_path / "graph.csv"
        path.write_text("src,dst\n0,1\nbogus\n")
        with pytest.raises(ParseError, match=":3"):
            read_edge_list(path, 3)

    def test_self_loop_rejected(self, tmp_path):
        path = tmp_path / "graph.csv"
        path.write_text("src,dst\n1,1\n")
        with pytest.raises(ParseError):
            read_edge_list(path, 3)

    def test_out_of_range_node_rejected(self, tmp_path):
        path = tmp_path / "graph.csv"
        path.write_text("src,dst\n0,7\n")
        with pytest.raises(ParseError):
            read_edge_list(path, 3)

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            read_edge_list(tmp_path / "absent.csv", 3)


class TestDenseFormat:
    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(9)
        mat = (rng.random((5, 5)) < 0.5).astype(np.int64)
        np.fill_diagonal(mat, 0)
        snap = GraphSnapshot(mat)
        path = tmp_path / "dense.txt"
        write_dense(snap, path)
        assert read_dense(path) == snap
