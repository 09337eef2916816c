"""Enumeration models checked against independent brute force."""

import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gibbsratio.instance import CountInstance, log_partition, log_ratio_true
from gibbsratio.models import (
    BudgetExceededError,
    GraphSpec,
    RangeMap,
    beta_max_for_ground_state,
    enumerate_colorings,
    enumerate_ising,
    enumerate_matchings,
    load_graph,
    normalize_range,
)

FOUR_CYCLE = GraphSpec(4, ((0, 1), (1, 2), (2, 3), (3, 0)))
TRIANGLE = GraphSpec(3, ((0, 1), (1, 2), (0, 2)))


def counts_of(inst):
    return {h: math.exp(lc) for h, lc in inst.support()}


def brute_colorings(g, k):
    counts = {}
    for coloring in itertools.product(range(k), repeat=g.n_vertices):
        h = sum(1 for u, v in g.edges if coloring[u] == coloring[v])
        counts[h] = counts.get(h, 0) + 1
    return counts


def brute_matchings(g):
    counts = {}
    for subset in itertools.chain.from_iterable(
        itertools.combinations(g.edges, r) for r in range(g.n_edges + 1)
    ):
        used = [v for e in subset for v in e]
        if len(used) == len(set(used)):
            counts[len(subset)] = counts.get(len(subset), 0) + 1
    return counts


class TestGraphSpec:
    def test_canonical_edges(self):
        g = GraphSpec(3, ((2, 0), (0, 1)))
        assert g.edges == ((0, 2), (0, 1))

    def test_rejects_self_loop(self):
        with pytest.raises(ValueError):
            GraphSpec(2, ((0, 0),))

    def test_rejects_duplicate(self):
        with pytest.raises(ValueError):
            GraphSpec(3, ((0, 1), (1, 0)))

    def test_rejects_out_of_range(self):
        with pytest.raises(ValueError):
            GraphSpec(2, ((0, 2),))

    def test_load_graph(self, tmp_path):
        path = tmp_path / "g.txt"
        path.write_text("# square\n0 1\n1 2\n2 3\n3 0\n")
        g = load_graph(path)
        assert g.n_vertices == 4
        assert g.edges == FOUR_CYCLE.edges


class TestIsing:
    def test_four_cycle(self):
        inst = enumerate_ising(FOUR_CYCLE)
        assert counts_of(inst) == pytest.approx({0: 2, 2: 12, 4: 2})

    def test_single_edge(self):
        inst = enumerate_ising(GraphSpec(2, ((0, 1),)))
        assert counts_of(inst) == pytest.approx({0: 2, 1: 2})

    def test_empty_edges_three_vertices(self):
        inst = enumerate_ising(GraphSpec(3, ()))
        assert counts_of(inst) == pytest.approx({0: 8})

    def test_total_count_conservation(self):
        inst = enumerate_ising(TRIANGLE)
        assert sum(counts_of(inst).values()) == pytest.approx(2 ** 3)

    def test_ground_states_count_components(self):
        # two disjoint edges: 2 components -> c_0 = 4
        g = GraphSpec(4, ((0, 1), (2, 3)))
        inst = enumerate_ising(g)
        assert counts_of(inst)[0] == pytest.approx(4)

    def test_budget(self):
        with pytest.raises(BudgetExceededError):
            enumerate_ising(GraphSpec(25, ()))


class TestColorings:
    def test_triangle_three_colors_proper_count(self):
        inst = enumerate_colorings(TRIANGLE, 3)
        # chromatic polynomial k(k-1)(k-2) at k=3
        assert counts_of(inst)[0] == pytest.approx(6)
        assert counts_of(inst) == pytest.approx(brute_colorings(TRIANGLE, 3))

    def test_single_vertex(self):
        inst = enumerate_colorings(GraphSpec(1, ()), 2, beta_max=1.0)
        assert counts_of(inst) == pytest.approx({0: 2})

    def test_single_edge_two_colors(self):
        inst = enumerate_colorings(GraphSpec(2, ((0, 1),)), 2)
        assert counts_of(inst) == pytest.approx({0: 2, 1: 2})

    def test_total_count(self):
        inst = enumerate_colorings(FOUR_CYCLE, 3)
        assert sum(counts_of(inst).values()) == pytest.approx(3 ** 4)

    def test_default_beta_max_caps_ground_state_error(self):
        inst = enumerate_colorings(FOUR_CYCLE, 3)
        c0 = counts_of(inst)[0]
        z_end = math.exp(log_partition(inst, inst.beta_max))
        assert (z_end - c0) / c0 <= 1e-3 + 1e-12

    def test_rejects_uncolorable_without_beta_max(self):
        with pytest.raises(ValueError):
            enumerate_colorings(TRIANGLE, 2)

    def test_needs_two_colors(self):
        with pytest.raises(ValueError):
            enumerate_colorings(TRIANGLE, 1)


class TestMatchings:
    def test_two_edge_path(self):
        inst = enumerate_matchings(GraphSpec(3, ((0, 1), (1, 2))))
        assert counts_of(inst) == pytest.approx({0: 1, 1: 2})

    def test_four_cycle(self):
        inst = enumerate_matchings(FOUR_CYCLE)
        assert counts_of(inst) == pytest.approx({0: 1, 1: 4, 2: 2})

    def test_empty_graph(self):
        inst = enumerate_matchings(GraphSpec(2, ()))
        assert counts_of(inst) == pytest.approx({0: 1})

    def test_against_brute_force_petersen_fragment(self):
        g = GraphSpec(6, ((0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 0), (0, 3)))
        inst = enumerate_matchings(g)
        assert counts_of(inst) == pytest.approx(brute_matchings(g))

    def test_z_at_zero_counts_all_matchings(self):
        inst = enumerate_matchings(FOUR_CYCLE)
        assert math.exp(log_partition(inst, 0.0)) == pytest.approx(7.0)


class TestNormalizeRange:
    def setup_method(self):
        self.inst = CountInstance([(3.0, 0.0), (5.0, 0.0)], 0.25, 1.75)

    def test_shift(self):
        out, rmap = normalize_range(self.inst, "shift")
        assert out.energies.tolist() == [0.0, 2.0]
        assert (out.beta_min, out.beta_max) == (0.25, 1.75)
        assert rmap == RangeMap(scale=1, offset=1.5 * 3)

    def test_reflect(self):
        out, rmap = normalize_range(self.inst, "reflect")
        assert out.energies.tolist() == [0.0, 2.0]
        assert (out.beta_min, out.beta_max) == (-1.75, -0.25)
        assert rmap == RangeMap(scale=-1, offset=1.5 * 5)

    @pytest.mark.parametrize("mode", ["shift", "reflect"])
    def test_round_trip_recovers_ratio(self, mode):
        out, rmap = normalize_range(self.inst, mode)
        q = rmap.apply(log_ratio_true(out))
        assert q == pytest.approx(log_ratio_true(self.inst), abs=1e-12)

    def test_shift_preserves_weights(self):
        out, _ = normalize_range(self.inst, "shift")
        rng = np.random.default_rng(3)
        for beta in rng.uniform(-2, 2, size=5):
            orig = np.exp(self.inst.log_counts - beta * self.inst.energies)
            new = np.exp(out.log_counts - beta * out.energies)
            np.testing.assert_allclose(orig / orig.sum(), new / new.sum(), atol=1e-12)

    def test_reflect_matches_negated_temperature(self):
        out, _ = normalize_range(self.inst, "reflect")
        rng = np.random.default_rng(4)
        for beta in rng.uniform(-2, 2, size=5):
            orig = np.exp(self.inst.log_counts - (-beta) * self.inst.energies)
            new = np.exp(out.log_counts - beta * out.energies)
            # reflected support is reversed relative to the original order
            np.testing.assert_allclose(orig / orig.sum(), (new / new.sum())[::-1], atol=1e-12)

    def test_rejects_non_integer_support(self):
        inst = CountInstance([(0.5, 0.0), (1.5, 0.0)], 0.0, 1.0)
        with pytest.raises(ValueError):
            normalize_range(inst, "shift")

    def test_rejects_unknown_mode(self):
        with pytest.raises(ValueError):
            normalize_range(self.inst, "fold")

    @given(
        h_min=st.integers(-10, 10),
        spread=st.lists(st.integers(1, 12), min_size=1, max_size=4, unique=True),
        span=st.floats(0.5, 4.0),
        mode=st.sampled_from(["shift", "reflect"]),
    )
    @settings(max_examples=60)
    def test_round_trip_property(self, h_min, spread, span, mode):
        support = [(float(h_min), 0.2)] + [(float(h_min + s), -0.4) for s in spread]
        # negative energies are rejected at construction, so lift into range
        lift = max(0, -h_min)
        support = [(h + lift, lc) for h, lc in support]
        inst = CountInstance(support, 1.0, 1.0 + span)
        out, rmap = normalize_range(inst, mode)
        assert out.energies[0] == 0.0
        assert rmap.apply(log_ratio_true(out)) == pytest.approx(
            log_ratio_true(inst), rel=1e-10, abs=1e-10
        )


def test_beta_max_for_ground_state_formula():
    support = [(0, 6.0), (1, 10.0), (2, 4.0)]
    b = beta_max_for_ground_state(support, rel_err=1e-3)
    assert b == pytest.approx(math.log(14.0 / (1e-3 * 6.0)))
