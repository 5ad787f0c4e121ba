import io

import numpy as np
import pytest

from simga.errors import GuardError, InputFormatError, NumericError, ParameterError
from simga.graph import build_graph, random_graph
from simga.simrank import (
    SimMatrix,
    class_score_histogram,
    dump_sparse_sim,
    load_sparse_sim,
    simrank_fixedpoint,
    simrank_localpush,
    simrank_power_series,
    simrank_production,
    sparse_aggregate,
    topk_from_push,
    topk_prune,
)

from conftest import graph_from_text, two_cliques


class TestFixedPoint:
    def test_unit_diagonal(self):
        g = random_graph(30, avg_degree=4, seed=0)
        s = simrank_fixedpoint(g, 0.6, 10)
        assert np.all(np.diag(s.values) == 1.0)

    def test_single_edge_pair_is_zero(self):
        g = graph_from_text("0 1")
        s = simrank_fixedpoint(g, 0.6, 20)
        assert s.values[0, 1] == 0.0

    def test_star_leaves(self, star2):
        s = simrank_fixedpoint(star2, 0.6, 20)
        assert s.values[0, 2] == pytest.approx(0.6, abs=1e-12)

    def test_bad_decay_rejected(self, star2):
        for c in (0.0, 1.0, -0.2, 1.5):
            with pytest.raises(ParameterError):
                simrank_fixedpoint(star2, c, 5)

    def test_symmetric_bounded(self):
        g = random_graph(50, avg_degree=5, seed=3)
        v = simrank_fixedpoint(g, 0.6, 15).values
        assert np.abs(v - v.T).max() <= 1e-12
        assert v.min() >= 0.0 and v.max() <= 1.0 + 1e-9

    @pytest.mark.parametrize("seed", range(3))
    def test_entries_monotone_in_decay(self, seed):
        g = random_graph(40, avg_degree=5, seed=seed, min_degree=1)
        lo = simrank_fixedpoint(g, 0.4, 25).values
        mid = simrank_fixedpoint(g, 0.6, 25).values
        hi = simrank_fixedpoint(g, 0.8, 25).values
        assert np.all(lo <= mid + 1e-12)
        assert np.all(mid <= hi + 1e-12)

    def test_disconnected_pairs_exactly_zero(self):
        g = two_cliques(4)
        s = simrank_fixedpoint(g, 0.6, 20)
        assert np.all(s.values[:4, 4:] == 0.0)

    def test_isolated_node_row(self):
        g = graph_from_text("0 2")  # node 1 isolated
        s = simrank_fixedpoint(g, 0.6, 10)
        assert s.values[1, 1] == 1.0
        assert s.values[1, 0] == 0.0 and s.values[1, 2] == 0.0


class TestPowerSeries:
    def test_zero_terms(self, triangle):
        s = simrank_power_series(triangle, 0.6, 0)
        assert np.allclose(s.values, 0.4 * np.eye(3))

    def test_entries_nondecreasing_in_terms(self):
        g = random_graph(25, avg_degree=4, seed=5)
        prev = simrank_power_series(g, 0.6, 2).values
        for terms in (5, 10, 20):
            cur = simrank_power_series(g, 0.6, terms).values
            assert np.all(cur >= prev - 1e-15)
            prev = cur

    def test_star_gap_to_fixed_point_is_real_and_measured(self, star2):
        # the series and the pinned fixed point are distinct objects; the gap
        # on a 2-leaf star is ~0.1125 and is recorded, not asserted equal
        series = simrank_power_series(star2, 0.6, 20).values
        fixed = simrank_fixedpoint(star2, 0.6, 20).values
        gap = abs(series[0, 2] - fixed[0, 2])
        assert 0.05 < gap < 0.2


class TestLocalPush:
    def test_single_isolated_node(self):
        g = build_graph(1, [])
        raw = simrank_localpush(g, 0.6, 0.1)
        assert raw.estimate == {0: 1.0}
        assert raw.residual == {}

    def test_bad_eps_rejected(self, star2):
        with pytest.raises(ParameterError):
            simrank_localpush(star2, 0.6, 0.0)

    @pytest.mark.parametrize("eps", [0.1, 0.02])
    def test_residual_guard_on_exit(self, eps):
        g = random_graph(60, avg_degree=6, seed=2)
        raw = simrank_localpush(g, 0.6, eps)
        assert raw.max_residual() <= (1 - 0.6) * eps

    @pytest.mark.parametrize("seed", range(6))
    def test_rescaled_estimate_matches_power_series(self, seed):
        eps = 0.05
        g = random_graph(40 + 7 * seed, avg_degree=6, seed=seed, min_degree=2)
        raw = simrank_localpush(g, 0.6, eps)
        series = simrank_power_series(g, 0.6, 50).values
        assert np.abs(0.4 * raw.estimate_dense() - series).max() <= eps

    def test_estimate_symmetric_within_pop_threshold(self):
        # pops are one entry at a time, so mirrored entries lag by at most the
        # worklist threshold (1-c)*eps; exact symmetry only holds as eps -> 0
        eps, c = 0.05, 0.6
        g = random_graph(50, avg_degree=6, seed=9)
        est = simrank_localpush(g, c, eps).estimate_dense()
        assert np.abs(est - est.T).max() <= (1 - c) * eps + 1e-12

    def test_tie_break_orders_agree_on_the_bound(self):
        eps = 0.05
        g = random_graph(45, avg_degree=5, seed=4, min_degree=2)
        series = simrank_power_series(g, 0.6, 50).values
        a = simrank_localpush(g, 0.6, eps)
        b = simrank_localpush(g, 0.6, eps, tie_break="revlex")
        assert np.abs(0.4 * a.estimate_dense() - series).max() <= eps
        assert np.abs(0.4 * b.estimate_dense() - series).max() <= eps
        # committed mass is order-dependent only through sub-threshold residuals
        mass_gap = abs(sum(a.estimate.values()) - sum(b.estimate.values()))
        assert mass_gap <= len(a.residual | b.residual) * (1 - 0.6) * eps


class TestProduction:
    def test_exact_star_value(self, star2):
        s = simrank_production(star2, 0.6, 0.01, "exact")
        assert s.values[0, 2] == pytest.approx(0.6, abs=1e-12)

    def test_diagonal_pinned_in_both_modes(self):
        g = random_graph(30, avg_degree=5, seed=1)
        for mode in ("exact", "approx"):
            s = simrank_production(g, 0.6, 0.05, mode)
            assert np.all(np.diag(s.values) == 1.0)

    @pytest.mark.parametrize("seed", range(4))
    def test_exact_vs_approx_disagreement_bounded(self, seed):
        g = random_graph(60 + 10 * seed, avg_degree=10, seed=seed, min_degree=7)
        exact = simrank_production(g, 0.6, 0.01, "exact").values
        approx = simrank_production(g, 0.6, 0.01, "approx").values
        assert np.abs(exact - approx).max() <= 0.05

    def test_unknown_mode_rejected(self, star2):
        with pytest.raises(ParameterError):
            simrank_production(star2, 0.6, 0.1, "fast")

    def test_dense_guard_refuses_large_graphs(self):
        g = build_graph(20001, [(0, 1)])
        with pytest.raises(GuardError, match="top-k"):
            simrank_production(g, 0.6, 0.1, "exact")


class TestTopkPrune:
    def test_k_at_least_n_keeps_all_nonzeros(self):
        g = random_graph(20, avg_degree=4, seed=0)
        s = simrank_fixedpoint(g, 0.6, 10)
        pruned = topk_prune(s, g.n)
        assert np.array_equal(pruned.densify(), s.values * (s.values != 0))

    def test_k1_keeps_diagonal_of_unit_diag_matrix(self):
        g = random_graph(15, avg_degree=4, seed=2)
        s = simrank_fixedpoint(g, 0.6, 10)
        pruned = topk_prune(s, 1)
        for u in range(g.n):
            cols, scores = pruned.row(u)
            assert cols.tolist() == [u] and scores.tolist() == [1.0]

    def test_ties_go_to_smaller_column(self):
        values = np.array([[0.2, 0.5, 0.5], [0.5, 0.2, 0.5], [0.1, 0.1, 0.1]])
        s = SimMatrix(values=values, method="custom", c=0.6)
        pruned = topk_prune(s, 1)
        assert pruned.row(0)[0].tolist() == [1]
        assert pruned.row(1)[0].tolist() == [0]
        assert pruned.row(2)[0].tolist() == [0]

    def test_retained_mass_nondecreasing_in_k(self):
        g = random_graph(30, avg_degree=5, seed=7)
        s = simrank_fixedpoint(g, 0.6, 10)
        total = s.values.sum()
        prev = 0.0
        for k in (1, 2, 4, 8, 16, 30):
            frac = topk_prune(s, k).scores.sum() / total
            assert frac >= prev - 1e-15
            prev = frac
        assert prev == pytest.approx(1.0)

    def test_bad_k_rejected(self, star2):
        s = simrank_fixedpoint(star2, 0.6, 5)
        with pytest.raises(ParameterError):
            topk_prune(s, 0)

    def test_sparse_route_matches_dense_route(self):
        g = random_graph(40, avg_degree=6, seed=11)
        raw = simrank_localpush(g, 0.6, 0.02)
        dense = simrank_production(g, 0.6, 0.02, "approx")
        for k in (1, 3, 10, 40):
            a = topk_from_push(raw, k).densify()
            b = topk_prune(dense, k).densify()
            assert np.array_equal(a, b)


class TestSparseAggregate:
    def test_identity_aggregation(self):
        s = SimMatrix(values=np.eye(6), method="custom", c=0.6)
        pruned = topk_prune(s, 3)
        h = np.random.default_rng(0).normal(size=(6, 4))
        assert np.array_equal(sparse_aggregate(pruned, h), h)

    def test_zero_input(self):
        g = random_graph(10, avg_degree=3, seed=0)
        pruned = topk_prune(simrank_fixedpoint(g, 0.6, 5), 4)
        out = sparse_aggregate(pruned, np.zeros((10, 3)))
        assert np.all(out == 0.0)

    def test_matches_dense_product(self):
        rng = np.random.default_rng(42)
        g = random_graph(8, avg_degree=3, seed=1)
        s = simrank_fixedpoint(g, 0.6, 10)
        pruned = topk_prune(s, 8)
        h = rng.normal(size=(8, 5))
        want = pruned.densify() @ h
        assert np.abs(sparse_aggregate(pruned, h) - want).max() <= 1e-12

    def test_dimension_mismatch(self):
        g = random_graph(10, avg_degree=3, seed=0)
        pruned = topk_prune(simrank_fixedpoint(g, 0.6, 5), 4)
        with pytest.raises(ParameterError):
            sparse_aggregate(pruned, np.zeros((9, 3)))


class TestScoreHistogram:
    def test_uniform_labels_leave_inter_empty(self):
        g = random_graph(20, avg_degree=4, seed=3)
        s = simrank_fixedpoint(g, 0.6, 10)
        hist = class_score_histogram(s, np.zeros(20, int))
        assert hist.inter_counts.sum() == 0
        assert hist.intra_counts.sum() == hist.pairs_retained

    def test_two_cliques_all_mass_intra(self):
        g = two_cliques(4)
        labels = np.array([0] * 4 + [1] * 4)
        s = simrank_fixedpoint(g, 0.6, 20)
        hist = class_score_histogram(s, labels)
        assert hist.inter_counts.sum() == 0  # cross-component similarity is exactly 0
        assert hist.intra_counts.sum() > 0

    def test_counts_conserve_retained_pairs(self):
        g = random_graph(25, avg_degree=5, seed=6)
        s = simrank_fixedpoint(g, 0.6, 10)
        labels = np.random.default_rng(1).integers(0, 3, size=25)
        hist = class_score_histogram(s, labels)
        assert hist.intra_counts.sum() + hist.inter_counts.sum() == hist.pairs_retained


class TestDumpLoad:
    def test_round_trip(self):
        g = random_graph(15, avg_degree=4, seed=8)
        pruned = topk_prune(simrank_fixedpoint(g, 0.6, 10), 5)
        buf = io.StringIO()
        dump_sparse_sim(pruned, buf)
        buf.seek(0)
        loaded = load_sparse_sim(buf)
        assert loaded.n == pruned.n and loaded.k == pruned.k and loaded.c == pruned.c
        assert loaded.method == pruned.method
        assert np.array_equal(loaded.densify(), pruned.densify())

    def test_scores_survive_at_full_precision(self, star2):
        pruned = topk_prune(simrank_fixedpoint(star2, 0.6, 20), 8)
        buf = io.StringIO()
        dump_sparse_sim(pruned, buf)
        text = buf.getvalue()
        assert "0 2 0.59999999999999998" in text  # 17 significant digits of 0.6
        buf.seek(0)
        assert load_sparse_sim(buf).densify()[0, 2] == 0.6

    def test_bad_header_rejected(self):
        with pytest.raises(InputFormatError):
            load_sparse_sim(io.StringIO("5 3 x fixedpoint\n"))


class TestSimMatrixValidation:
    def test_asymmetric_fixedpoint_rejected(self):
        values = np.array([[1.0, 0.5], [0.2, 1.0]])
        with pytest.raises(NumericError):
            SimMatrix(values=values, method="fixedpoint", c=0.6)

    def test_non_finite_rejected(self):
        values = np.array([[1.0, np.nan], [np.nan, 1.0]])
        with pytest.raises(NumericError):
            SimMatrix(values=values, method="custom", c=0.6)
