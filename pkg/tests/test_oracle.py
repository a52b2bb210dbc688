"""Offline optima, brute-force cross checks, cycles, and the restriction property."""

import pytest
from hypothesis import given, settings, strategies as st

from mpmd.engine import HEMISPHERE, HEMISPHERE_BIPARTITE, Instance, Policy, Request, simulate
from mpmd.instances import LowerBoundParams, gen_lower_bound, gen_random
from mpmd.metric import MetricSpace, TimedPoint
from mpmd.oracle import (
    Matching,
    brute_force_opt,
    cycle_decompose,
    matching_from_records,
    opt_bipartite,
    opt_general,
    realize_online,
    restriction_check,
)

LINE = MetricSpace.line()


def req(rid, loc, t, color=None):
    return Request(id=rid, point=TimedPoint(loc, t), color=color)


class TestOptGeneral:
    def test_forced_pair(self):
        inst = Instance(LINE, (req(1, 0.0, 10.0), req(2, 4.0, 2.0)))
        matching = opt_general(inst)
        assert matching.pairs == ((1, 2),)
        assert matching.weight == 12.0

    def test_cascade_k2(self):
        inst = gen_lower_bound(LowerBoundParams(k=2, epsilon=1.0, eta=0.0))
        matching = opt_general(inst)
        assert matching.pairs == ((1, 2), (3, 4))
        assert matching.weight == 2.0

    def test_size_guard(self):
        inst = gen_random(22, seed=0, metric="line")
        with pytest.raises(ValueError, match="guard"):
            opt_general(inst)

    def test_lexicographic_tie_resolution(self):
        # Four identical requests: every matching weighs 0; the smallest
        # pair list is (1,2),(3,4).
        inst = Instance(LINE, tuple(req(i, 0.0, 0.0) for i in (1, 2, 3, 4)))
        assert opt_general(inst).pairs == ((1, 2), (3, 4))
        assert brute_force_opt(inst).pairs == ((1, 2), (3, 4))


class TestOptBipartite:
    def test_forced_pair_per_color(self):
        inst = Instance(
            LINE, (req(1, 0.0, 0.0, 0), req(2, 5.0, 0.0, 1)), bipartite=True
        )
        matching = opt_bipartite(inst)
        assert matching.pairs == ((1, 2),)
        assert matching.weight == 5.0

    def test_two_by_two_assignment(self):
        # Augmented costs [[1, 2], [3, 1]]: the diagonal assignment wins.
        space = MetricSpace.finite(
            ["u", "v", "x", "y"],
            [
                [0.0, 2.0, 1.0, 2.0],
                [2.0, 0.0, 3.0, 1.0],
                [1.0, 3.0, 0.0, 2.0],
                [2.0, 1.0, 2.0, 0.0],
            ],
        )
        inst = Instance(
            space,
            (
                req(1, "u", 0.0, 0),
                req(2, "v", 0.0, 0),
                req(3, "x", 0.0, 1),
                req(4, "y", 0.0, 1),
            ),
            bipartite=True,
        )
        matching = opt_bipartite(inst)
        assert matching.pairs == ((1, 3), (2, 4))
        assert matching.weight == 2.0

    def test_rejects_monochromatic(self):
        inst = Instance(LINE, (req(1, 0.0, 0.0), req(2, 1.0, 0.0)))
        with pytest.raises(ValueError, match="bipartite"):
            opt_bipartite(inst)

    def test_ignores_same_color_shortcuts(self):
        # Co-located same-color requests must not be paired.
        inst = Instance(
            LINE,
            (
                req(1, 0.0, 0.0, 0),
                req(2, 0.0, 0.0, 0),
                req(3, 9.0, 0.0, 1),
                req(4, 9.0, 0.0, 1),
            ),
            bipartite=True,
        )
        matching = opt_bipartite(inst)
        assert all(len({p, q} & {1, 2}) == 1 for p, q in matching.pairs)
        assert matching.weight == 18.0


class TestBruteForce:
    def test_guard(self):
        inst = gen_random(12, seed=0, metric="line")
        with pytest.raises(ValueError, match="guard"):
            brute_force_opt(inst)

    def test_m4_minimizes_over_three_pairings(self):
        inst = Instance(
            LINE,
            (req(1, 0.0, 0.0), req(2, 1.0, 0.0), req(3, 10.0, 0.0), req(4, 12.0, 0.0)),
        )
        matching = brute_force_opt(inst)
        assert matching.pairs == ((1, 2), (3, 4))
        assert matching.weight == 3.0


@given(
    seed=st.integers(min_value=0, max_value=10_000),
    m=st.integers(min_value=1, max_value=5).map(lambda h: 2 * h),
    metric=st.sampled_from(["line", "euclidean", "finite"]),
)
@settings(max_examples=200, deadline=None)
def test_oracle_agreement(seed, m, metric):
    inst = gen_random(m, seed, metric=metric)
    dp = opt_general(inst)
    brute = brute_force_opt(inst)
    assert dp.weight == brute.weight
    assert dp.pairs == brute.pairs


@given(
    seed=st.integers(min_value=0, max_value=10_000),
    m=st.integers(min_value=1, max_value=5).map(lambda h: 2 * h),
)
@settings(max_examples=100, deadline=None)
def test_bipartite_agreement(seed, m):
    inst = gen_random(m, seed, metric="euclidean", bipartite=True)
    assignment = opt_bipartite(inst)
    brute = brute_force_opt(inst)
    # Exact ties may be broken differently; weights agree to rounding.
    assert assignment.weight == pytest.approx(brute.weight, rel=1e-12)
    for p, q in assignment.pairs:
        assert inst.request(p).color != inst.request(q).color


class TestRealizeOnline:
    def test_hand_example(self):
        inst = Instance(LINE, (req(1, 0.0, 2.0), req(2, 1.0, 5.0)))
        matching = opt_general(inst)
        assert matching.weight == 4.0
        assert realize_online(matching, inst) == 4.0

    def test_simultaneous_colocated(self):
        inst = Instance(LINE, (req(1, 3.0, 1.0), req(2, 3.0, 1.0)))
        assert realize_online(opt_general(inst), inst) == 0.0

    def test_cascade_k2(self):
        inst = gen_lower_bound(LowerBoundParams(k=2, epsilon=1.0, eta=0.0))
        assert realize_online(opt_general(inst), inst) == 2.0

    def test_requires_perfect_matching(self):
        inst = Instance(LINE, tuple(req(i, 0.0, 0.0) for i in (1, 2, 3, 4)))
        bad = Matching(pairs=((1, 2),), weight=0.0)
        with pytest.raises(ValueError, match="perfect"):
            realize_online(bad, inst)


@given(
    seed=st.integers(min_value=0, max_value=10_000),
    m=st.integers(min_value=1, max_value=6).map(lambda h: 2 * h),
    metric=st.sampled_from(["line", "euclidean", "finite"]),
)
@settings(max_examples=200, deadline=None)
def test_realize_equals_weight_exactly(seed, m, metric):
    inst = gen_random(m, seed, metric=metric)
    matching = opt_general(inst)
    assert realize_online(matching, inst) == matching.weight


class TestCycleDecompose:
    def test_equal_matchings_give_two_cycles(self):
        inst = gen_random(8, seed=4, metric="line")
        matching = opt_general(inst)
        decomposition = cycle_decompose(matching, matching, inst)
        assert len(decomposition.cycles) == 4
        for cycle in decomposition.cycles:
            assert len(cycle.vertices) == 2
            assert cycle.a_length == cycle.b_length

    def test_cascade_k2_single_cycle(self):
        inst = gen_lower_bound(LowerBoundParams(k=2, epsilon=1.0, eta=0.0))
        alg = Matching.from_pairs([(2, 3), (1, 4)], inst)
        opt = opt_general(inst)
        decomposition = cycle_decompose(alg, opt, inst)
        assert len(decomposition.cycles) == 1
        cycle = decomposition.cycles[0]
        assert sorted(cycle.vertices) == [1, 2, 3, 4]
        assert cycle.a_length == 3.0
        assert cycle.b_length == 2.0

    def test_mismatched_id_sets_rejected(self):
        inst = gen_random(4, seed=1, metric="line")
        other = gen_random(6, seed=1, metric="line")
        with pytest.raises(ValueError, match="same id set"):
            cycle_decompose(opt_general(inst), opt_general(other), inst)


@given(
    seed=st.integers(min_value=0, max_value=10_000),
    m=st.integers(min_value=2, max_value=8).map(lambda h: 2 * h),
    metric=st.sampled_from(["line", "euclidean", "finite"]),
    eps=st.sampled_from([0.5, 1.0, 2.0]),
)
@settings(max_examples=150, deadline=None)
def test_cycle_structure_and_length_sums(seed, m, metric, eps):
    inst = gen_random(m, seed, metric=metric)
    report = simulate(inst, Policy(HEMISPHERE, eps))
    alg = matching_from_records(report.records, inst)
    opt = opt_general(inst)
    decomposition = cycle_decompose(alg, opt, inst)
    seen = []
    for cycle in decomposition.cycles:
        assert len(cycle.vertices) % 2 == 0
        seen.extend(cycle.vertices)
        for u, v in cycle.a_edges():
            assert (min(u, v), max(u, v)) in set(alg.pairs)
        for u, v in cycle.b_edges():
            assert (min(u, v), max(u, v)) in set(opt.pairs)
    assert sorted(seen) == sorted(r.id for r in inst.requests)
    assert sum(c.a_length for c in decomposition.cycles) == pytest.approx(
        report.offline_weight, rel=1e-9
    )
    assert sum(c.b_length for c in decomposition.cycles) == pytest.approx(
        opt.weight, rel=1e-9
    )
    # The weight ratio never beats the worst per-cycle ratio.
    if opt.weight > 0 and all(c.b_length > 0 for c in decomposition.cycles):
        worst = max(c.a_length / c.b_length for c in decomposition.cycles)
        assert alg.weight / opt.weight <= worst + 1e-9


class TestRestriction:
    def test_single_cycle_is_trivially_ok(self):
        inst = gen_lower_bound(LowerBoundParams(k=2, epsilon=1.0))
        report = simulate(inst, Policy(HEMISPHERE, 1.0))
        alg = matching_from_records(report.records, inst)
        decomposition = cycle_decompose(alg, opt_general(inst), inst)
        assert len(decomposition.cycles) == 1
        assert restriction_check(inst, report, decomposition) is None

    def test_two_cycles_re_simulate_to_their_own_pairs(self):
        inst = gen_random(8, seed=11, metric="line")
        report = simulate(inst, Policy(HEMISPHERE, 1.0))
        alg = matching_from_records(report.records, inst)
        decomposition = cycle_decompose(alg, alg, inst)
        assert restriction_check(inst, report, decomposition) is None


@given(
    seed=st.integers(min_value=0, max_value=10_000),
    m=st.integers(min_value=2, max_value=6).map(lambda h: 2 * h),
    metric=st.sampled_from(["line", "euclidean", "finite"]),
    eps=st.sampled_from([0.5, 1.0, 2.0]),
)
@settings(max_examples=150, deadline=None)
def test_restriction_property(seed, m, metric, eps):
    inst = gen_random(m, seed, metric=metric)
    report = simulate(inst, Policy(HEMISPHERE, eps))
    alg = matching_from_records(report.records, inst)
    decomposition = cycle_decompose(alg, opt_general(inst), inst)
    assert restriction_check(inst, report, decomposition) is None


@given(
    seed=st.integers(min_value=0, max_value=10_000),
    m=st.integers(min_value=2, max_value=6).map(lambda h: 2 * h),
    eps=st.sampled_from([0.5, 1.0, 2.0]),
)
@settings(max_examples=100, deadline=None)
def test_bipartite_restriction_and_colors(seed, m, eps):
    inst = gen_random(m, seed, metric="euclidean", bipartite=True)
    report = simulate(inst, Policy(HEMISPHERE_BIPARTITE, eps))
    alg = matching_from_records(report.records, inst)
    opt = opt_bipartite(inst)
    decomposition = cycle_decompose(alg, opt, inst)
    colors = {r.id: r.color for r in inst.requests}
    for cycle in decomposition.cycles:
        n = len(cycle.vertices)
        for i in range(n):
            assert colors[cycle.vertices[i]] != colors[cycle.vertices[(i + 1) % n]]
    assert restriction_check(inst, report, decomposition) is None


def test_optimality_lower_bound_on_policies():
    for seed in range(30):
        inst = gen_random(8 + 2 * (seed % 3), seed, metric="euclidean")
        opt = opt_general(inst)
        for kind in (HEMISPHERE,):
            report = simulate(inst, Policy(kind, 1.0))
            assert opt.weight <= report.offline_weight + 1e-9
