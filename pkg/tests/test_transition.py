import numpy as np
import pytest

from nettrack.errors import DimensionError, DomainError, InvariantError, SizeLimitError
from nettrack.randomness import substream
from nettrack.states import GraphSnapshot, RowState, index_to_state, state_space_size
from nettrack.transition import (
    DynamicsSchedule,
    EdgeMarkov,
    KernelPlan,
    TransitionKernel,
    build_closure_kernel,
    build_edgewise_kernel,
    build_flip_kernel,
    flip_kernel_dense,
    identity_kernel,
    kernel_apply,
    sample_next_graph,
    sample_transition,
)

import reference


def random_simplex(size, rng):
    raw = rng.random(size) + 1e-3
    return raw / raw.sum()


class TestEdgeMarkov:
    def test_block_layout(self):
        block = EdgeMarkov(p_appear=0.3, p_vanish=0.1).block()
        assert np.allclose(block, [[0.7, 0.1], [0.3, 0.9]])
        assert np.allclose(block.sum(axis=0), 1.0)

    @pytest.mark.parametrize("bad", [-0.1, 1.5])
    def test_probability_domain(self, bad):
        with pytest.raises(DomainError):
            EdgeMarkov(p_appear=bad, p_vanish=0.5)


class TestFlipKernel:
    def test_matches_reference_matrix(self):
        for n, p in [(3, 0.2), (4, 0.3), (5, 0.01)]:
            got = flip_kernel_dense(n, p)
            want = reference.dense_flip_matrix(n, p)
            assert np.allclose(got, want, atol=1e-15)

    def test_single_difference_entry(self):
        dense = flip_kernel_dense(3, 0.2)
        assert dense[0, 1] == pytest.approx(0.2 * 0.8)
        assert dense[2, 0] == pytest.approx(0.2 * 0.8)

    def test_zero_probability_is_identity(self):
        kernel = build_flip_kernel(0, 4, 0.0)
        assert np.array_equal(kernel.dense(), np.eye(8))

    def test_certain_flip_reverses_all_bits(self):
        dense = flip_kernel_dense(3, 1.0)
        size = 4
        for j in range(size):
            col = dense[:, j]
            assert col[j ^ (size - 1)] == 1.0
            assert col.sum() == 1.0

    def test_columns_sum_to_one(self):
        dense = flip_kernel_dense(4, 0.3)
        assert np.allclose(dense.sum(axis=0), 1.0, atol=1e-12)

    def test_symmetric_and_fixes_uniform(self):
        for p in [0.05, 0.2, 0.5, 0.9]:
            dense = flip_kernel_dense(5, p)
            assert np.allclose(dense, dense.T, atol=1e-15)
            uniform = np.full(16, 1 / 16)
            assert np.allclose(dense @ uniform, uniform, atol=1e-12)

    def test_tiny_probability_stays_stochastic(self):
        # below the log-space switch point the columns must still normalize
        for p in [1e-3, 9.9e-4, 1e-6]:
            dense = flip_kernel_dense(6, p)
            assert np.allclose(dense.sum(axis=0), 1.0, atol=1e-9)
            assert (dense > 0).all()

    def test_log_space_agrees_with_direct(self):
        lo = flip_kernel_dense(5, 9.999e-4)  # log-space branch
        hi = flip_kernel_dense(5, 1.001e-3)  # direct branch
        assert np.allclose(lo, hi, rtol=1e-2)

    def test_invalid_probability(self):
        with pytest.raises(DomainError):
            build_flip_kernel(0, 4, 1.2)


class TestEdgewiseKernel:
    def test_uniform_rates_equal_flip_kernel(self):
        n, p = 4, 0.25
        params = [EdgeMarkov(p_appear=p, p_vanish=p) for _ in range(n - 1)]
        kernel = build_edgewise_kernel(1, n, params)
        assert np.allclose(kernel.dense(), flip_kernel_dense(n, p), atol=1e-14)

    def test_zero_rates_identity(self):
        params = [EdgeMarkov(0.0, 0.0) for _ in range(3)]
        kernel = build_edgewise_kernel(0, 4, params)
        assert np.array_equal(kernel.dense(), np.eye(8))

    def test_heterogeneous_rates_match_bitwise_product(self):
        # owner 0, N=3: bit 0 -> column 1, bit 1 -> column 2
        params = [EdgeMarkov(p_appear=1.0, p_vanish=0.0), EdgeMarkov(p_appear=0.0, p_vanish=1.0)]
        kernel = build_edgewise_kernel(0, 3, params)
        blocks = [p.block() for p in params]
        want = np.empty((4, 4))
        for i in range(4):
            for j in range(4):
                value = 1.0
                for k in range(2):
                    value *= blocks[k][(i >> k) & 1, (j >> k) & 1]
                want[i, j] = value
        assert np.allclose(kernel.dense(), want, atol=1e-15)

    def test_wrong_parameter_count(self):
        with pytest.raises(DimensionError):
            build_edgewise_kernel(0, 4, [EdgeMarkov(0.1, 0.1)] * 2)


class TestClosureKernel:
    def test_inert_parameters_identity(self):
        nominal = index_to_state(1, 3, 3)
        kernel = build_closure_kernel(1, 3, 0.0, 0.0, nominal)
        assert np.allclose(kernel.dense(), np.eye(4), atol=1e-15)

    def test_certain_closure(self):
        nominal = index_to_state(0, 2, 3)
        dense = build_closure_kernel(0, 3, 1.0, 0.0, nominal).dense()
        for j in range(1, 4):
            assert dense[0, j] == 1.0
            assert dense[:, j].sum() == 1.0

    def test_reopen_column(self):
        nominal = RowState(bits=(1, 0, 1), owner=1)  # index 3
        dense = build_closure_kernel(1, 3, 0.1, 0.5, nominal).dense()
        col = dense[:, 0]
        assert col[3] == pytest.approx(0.5)
        assert col[0] == pytest.approx(0.5)
        assert col[1] == col[2] == 0.0

    def test_empty_nominal_keeps_zero_absorbing(self):
        nominal = index_to_state(0, 0, 3)
        dense = build_closure_kernel(0, 3, 0.2, 0.7, nominal).dense()
        assert dense[0, 0] == 1.0

    def test_owner_mismatch(self):
        nominal = index_to_state(2, 1, 3)
        with pytest.raises(InvariantError):
            build_closure_kernel(0, 3, 0.1, 0.1, nominal)

    def test_columns_stochastic(self):
        nominal = index_to_state(0, 5, 4)
        dense = build_closure_kernel(0, 4, 0.3, 0.4, nominal).dense()
        assert np.allclose(dense.sum(axis=0), 1.0, atol=1e-12)

    def test_apply_matches_dense_matvec(self):
        rng = np.random.default_rng(42)
        nominal = index_to_state(2, 9, 5)
        kernel = build_closure_kernel(2, 5, 0.15, 0.3, nominal)
        dense = kernel.dense()
        for _ in range(20):
            vec = random_simplex(16, rng)
            assert np.allclose(kernel.apply(vec), dense @ vec, atol=1e-14)


class TestKernelApply:
    def test_identity_returns_input(self):
        rng = np.random.default_rng(1)
        vec = random_simplex(8, rng)
        out = kernel_apply(identity_kernel(0, 4), vec)
        assert np.array_equal(out, vec)
        assert out is not vec

    def test_uniform_fixed_by_flip(self):
        kernel = build_flip_kernel(2, 6, 0.35)
        uniform = np.full(32, 1 / 32)
        assert np.allclose(kernel.apply(uniform), uniform, atol=1e-12)

    @pytest.mark.parametrize("n", [3, 4, 6, 8, 10])
    def test_factorized_equals_dense(self, n):
        rng = np.random.default_rng(n)
        kernel = build_flip_kernel(0, n, 0.2)
        dense = kernel.dense()
        for _ in range(10):
            vec = random_simplex(state_space_size(n), rng)
            fast = kernel.apply(vec)
            slow = dense @ vec
            assert np.max(np.abs(fast - slow)) < 1e-12

    def test_output_stays_simplex(self):
        rng = np.random.default_rng(7)
        kernel = build_flip_kernel(1, 9, 0.37)
        vec = random_simplex(256, rng)
        out = kernel.apply(vec)
        assert abs(out.sum() - 1.0) < 1e-12
        assert (out >= 0).all()

    def test_dimension_mismatch(self):
        kernel = build_flip_kernel(0, 4, 0.2)
        with pytest.raises(DimensionError):
            kernel.apply(np.full(4, 0.25))

    def test_dense_materialization_cap(self):
        kernel = build_flip_kernel(0, 18, 0.2)  # 131072 states
        with pytest.raises(SizeLimitError):
            kernel.dense()

    def test_stochasticity_exhaustive_small_orders(self):
        for n in range(2, 7):
            size = state_space_size(n)
            for kernel in [
                build_flip_kernel(0, n, 0.23),
                build_closure_kernel(0, n, 0.2, 0.3, index_to_state(0, size - 1, n)),
            ]:
                basis = np.eye(size)
                cols = np.stack([kernel.apply(basis[j]) for j in range(size)], axis=1)
                assert np.allclose(cols.sum(axis=0), 1.0, atol=1e-12)
                assert (cols >= 0).all()

    def test_stochasticity_spot_columns_large_order(self):
        n = 14
        size = state_space_size(n)
        kernel = build_flip_kernel(3, n, 0.2)
        rng = np.random.default_rng(3)
        for j in rng.integers(size, size=5):
            basis = np.zeros(size)
            basis[j] = 1.0
            col = kernel.apply(basis)
            assert abs(col.sum() - 1.0) < 1e-12


class TestSampleNextGraph:
    def _snapshot(self, n=5, seed=0, p=0.4):
        rng = np.random.default_rng(seed)
        mat = (rng.random((n, n)) < p).astype(np.int64)
        np.fill_diagonal(mat, 0)
        return GraphSnapshot(mat)

    def test_static_unchanged(self):
        snap = self._snapshot()
        schedule = DynamicsSchedule(kind="static")
        assert sample_next_graph(snap, schedule, 17, substream(0, "dynamics")) == snap

    def test_no_flip_off_schedule(self):
        snap = self._snapshot()
        schedule = DynamicsSchedule(kind="periodic-flip", period=200, flip_prob=0.2)
        assert sample_next_graph(snap, schedule, 1, substream(0, "dynamics")) == snap

    def test_certain_flip_complements_off_diagonal(self):
        snap = self._snapshot()
        schedule = DynamicsSchedule(kind="periodic-flip", period=10, flip_prob=1.0)
        out = sample_next_graph(snap, schedule, 11, substream(0, "dynamics"))
        expect = 1 - snap.matrix
        np.fill_diagonal(expect, 0)
        assert np.array_equal(out.matrix, expect)
        # the regime holds through its last step
        held = sample_next_graph(snap, schedule, 10, substream(0, "dynamics"))
        assert held == snap

    def test_empirical_flip_rate(self):
        # every step is a change event; >= 10,000 entry-level flip draws
        n, p_c, steps = 5, 0.2, 500
        schedule = DynamicsSchedule(kind="periodic-flip", period=1, flip_prob=p_c)
        rng = substream(123, "dynamics")
        graph = self._snapshot(n=n)
        flips = 0
        draws = 0
        for t in range(2, steps + 2):
            nxt = sample_next_graph(graph, schedule, t, rng)
            diff = np.abs(nxt.matrix - graph.matrix)
            flips += int(diff.sum())
            draws += n * (n - 1)
            graph = nxt
        rate = flips / draws
        se = np.sqrt(p_c * (1 - p_c) / draws)
        assert abs(rate - p_c) < 3 * se

    def test_closure_zeroes_and_reopens(self):
        nominal = self._snapshot(n=4, p=0.9)
        schedule = DynamicsSchedule(
            kind="closure", close_prob=1.0, reopen_prob=1.0, nominal=nominal
        )
        closed = sample_next_graph(nominal, schedule, 1, substream(0, "dynamics"))
        assert closed.matrix.sum() == 0
        reopened = sample_next_graph(closed, schedule, 2, substream(0, "dynamics"))
        assert reopened == nominal

    def test_custom_uses_kernel_factory(self):
        n = 4
        size = state_space_size(n)

        def to_full(t, node):
            # deterministic kernel: everything moves to the all-ones row
            mat = np.zeros((size, size))
            mat[size - 1, :] = 1.0
            return TransitionKernel(node=node, n_nodes=n, form="dense", matrix=mat)

        schedule = DynamicsSchedule(kind="custom", kernel_fn=to_full)
        out = sample_next_graph(self._snapshot(n=n), schedule, 1, substream(0, "dynamics"))
        expect = np.ones((n, n), dtype=np.int64)
        np.fill_diagonal(expect, 0)
        assert np.array_equal(out.matrix, expect)


class TestSampleTransition:
    def test_identity_stays_put(self):
        kernel = identity_kernel(0, 5)
        rng = substream(1, "dynamics")
        for i in [0, 3, 15]:
            assert sample_transition(kernel, i, rng) == i

    def test_factorized_marginal_rate(self):
        kernel = build_flip_kernel(0, 4, 0.3)
        rng = substream(2, "dynamics")
        draws = np.array([sample_transition(kernel, 0, rng) for _ in range(4000)])
        # each of the 3 bits flips independently with probability 0.3
        bit_rates = [(draws >> k & 1).mean() for k in range(3)]
        se = np.sqrt(0.3 * 0.7 / 4000)
        for rate in bit_rates:
            assert abs(rate - 0.3) < 4 * se


class TestDynamicsSchedule:
    def test_unknown_kind(self):
        with pytest.raises(DomainError):
            DynamicsSchedule(kind="wiggle")

    def test_bad_period(self):
        with pytest.raises(DomainError):
            DynamicsSchedule(kind="periodic-flip", period=0, flip_prob=0.1)

    def test_bad_probability(self):
        with pytest.raises(DomainError):
            DynamicsSchedule(kind="closure", close_prob=1.4)

    def test_custom_needs_factory(self):
        with pytest.raises(DomainError):
            DynamicsSchedule(kind="custom")


class TestKernelPlan:
    def test_periodic_alternates(self):
        schedule = DynamicsSchedule(kind="periodic-flip", period=10, flip_prob=0.2)
        plan = KernelPlan(schedule, 4)
        assert all(k.form == "identity" for k in plan.kernels_at(1))
        assert all(k.form == "identity" for k in plan.kernels_at(10))
        assert all(k.form != "identity" for k in plan.kernels_at(11))
        assert all(k.form == "identity" for k in plan.kernels_at(12))
        assert all(k.form != "identity" for k in plan.kernels_at(21))

    def test_closure_needs_nominal(self):
        schedule = DynamicsSchedule(kind="closure", close_prob=0.1)
        with pytest.raises(DomainError):
            KernelPlan(schedule, 4)

    def test_static_always_identity(self):
        plan = KernelPlan(DynamicsSchedule(kind="static"), 3)
        for t in [1, 5, 100]:
            assert all(k.form == "identity" for k in plan.kernels_at(t))
