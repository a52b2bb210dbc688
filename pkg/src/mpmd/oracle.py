"""Exact offline optima, cycle decompositions, and the restriction check.

The offline optimum of a delay-tolerant matching instance equals the weight
of a minimum-cost perfect matching of the requests as points of the
time-augmented metric: realizing any matching online by pairing each couple
the moment both endpoints have arrived costs exactly its augmented weight.

The general solver is a subset dynamic program over request bitmasks (the
lowest-indexed unmatched request is paired against every candidate), guarded
at 20 requests.  The bipartite solver reduces to the assignment problem.  A
brute-force enumerator over all (m-1)!! matchings serves as an independent
cross-check for small m.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from mpmd.engine import Instance, RunReport, simulate
from mpmd.metric import augmented_distance, distance

GENERAL_OPT_MAX = 20
BRUTE_FORCE_MAX = 10


@dataclass(frozen=True)
class Matching:
    """A perfect matching as canonical id pairs plus its augmented weight.

    Pairs are stored as (low id, high id), sorted lexicographically; the
    weight is the sum of augmented distances in that canonical order.
    """

    pairs: tuple[tuple[int, int], ...]
    weight: float

    @classmethod
    def from_pairs(cls, pairs, instance: Instance) -> Matching:
        canonical = tuple(sorted((min(p, q), max(p, q)) for p, q in pairs))
        seen = [i for pair in canonical for i in pair]
        if sorted(seen) != sorted(r.id for r in instance.requests):
            raise ValueError("pairs do not partition the instance's request ids")
        by_id = {r.id: r for r in instance.requests}
        weight = 0.0
        for p, q in canonical:
            weight += augmented_distance(instance.space, by_id[p].point, by_id[q].point)
        return cls(pairs=canonical, weight=weight)


@dataclass(frozen=True)
class Cycle:
    """One alternating cycle of the union of two matchings.

    Consecutive vertices alternate edges of the two matchings, starting with
    an edge of the first matching from vertices[0]; the closing edge back to
    vertices[0] belongs to the second matching.  A pair shared by both
    matchings appears as a 2-cycle (two parallel edges).
    """

    vertices: tuple[int, ...]
    a_length: float
    b_length: float

    def a_edges(self) -> tuple[tuple[int, int], ...]:
        v = self.vertices
        return tuple((v[i], v[i + 1]) for i in range(0, len(v), 2))

    def b_edges(self) -> tuple[tuple[int, int], ...]:
        v = self.vertices
        return tuple(
            (v[i], v[(i + 1) % len(v)]) for i in range(1, len(v), 2)
        )


@dataclass(frozen=True)
class CycleDecomposition:
    cycles: tuple[Cycle, ...]


def _augmented_matrix(instance: Instance, requests) -> list[list[float]]:
    pts = [r.point for r in requests]
    n = len(pts)
    w = [[0.0] * n for _ in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            d = augmented_distance(instance.space, pts[i], pts[j])
            w[i][j] = d
            w[j][i] = d
    return w


def opt_general(instance: Instance) -> Matching:
    """Minimum-weight perfect matching over all pairings, by subset DP.

    Ties between optimal matchings resolve to the lexicographically smallest
    pair list.  Guarded at GENERAL_OPT_MAX requests.
    """
    requests = sorted(instance.requests, key=lambda r: r.id)
    m = len(requests)
    if m % 2 != 0:
        raise ValueError("request count must be even")
    if m > GENERAL_OPT_MAX:
        raise ValueError(
            f"general exact solver is guarded at {GENERAL_OPT_MAX} requests, got {m}"
        )
    if m == 0:
        return Matching(pairs=(), weight=0.0)
    w = _augmented_matrix(instance, requests)

    size = 1 << m
    inf = math.inf
    dp = [inf] * size
    dp[0] = 0.0
    choice = [-1] * size
    # dp[mask] = optimal weight matching exactly the requests in mask; the
    # lowest set bit is always paired, and scanning partners in ascending
    # order with a strict improvement keeps the lexicographically smallest
    # optimal pair list.
    for mask in range(3, size):
        if mask.bit_count() % 2 != 0:
            continue
        low = (mask & -mask).bit_length() - 1
        rest = mask ^ (1 << low)
        w_low = w[low]
        best = inf
        best_j = -1
        r = rest
        while r:
            jbit = r & -r
            j = jbit.bit_length() - 1
            cand = dp[rest ^ jbit] + w_low[j]
            if cand < best:
                best = cand
                best_j = j
            r ^= jbit
        dp[mask] = best
        choice[mask] = best_j

    pairs = []
    mask = size - 1
    while mask:
        low = (mask & -mask).bit_length() - 1
        j = choice[mask]
        pairs.append((requests[low].id, requests[j].id))
        mask ^= (1 << low) | (1 << j)
    return Matching.from_pairs(pairs, instance)


def opt_bipartite(instance: Instance) -> Matching:
    """Minimum-weight color-crossing perfect matching via the assignment problem."""
    if not instance.bipartite:
        raise ValueError("bipartite oracle requires a bipartite instance")
    zeros = sorted((r for r in instance.requests if r.color == 0), key=lambda r: r.id)
    ones = sorted((r for r in instance.requests if r.color == 1), key=lambda r: r.id)
    if len(zeros) != len(ones):
        raise ValueError("bipartite colors are imbalanced")
    if not zeros:
        return Matching(pairs=(), weight=0.0)
    cost = np.array(
        [
            [augmented_distance(instance.space, a.point, b.point) for b in ones]
            for a in zeros
        ]
    )
    rows, cols = linear_sum_assignment(cost)
    pairs = [(zeros[i].id, ones[j].id) for i, j in zip(rows, cols)]
    return Matching.from_pairs(pairs, instance)


def brute_force_opt(instance: Instance) -> Matching:
    """Exhaustive minimum over all perfect matchings; independent test oracle.

    Enumerates pair lists in lexicographic order (color-crossing only on
    bipartite instances), so strict improvement yields the lexicographically
    smallest optimum.  Guarded at BRUTE_FORCE_MAX requests.
    """
    requests = sorted(instance.requests, key=lambda r: r.id)
    m = len(requests)
    if m > BRUTE_FORCE_MAX:
        raise ValueError(
            f"brute-force oracle is guarded at {BRUTE_FORCE_MAX} requests, got {m}"
        )
    if m % 2 != 0:
        raise ValueError("request count must be even")
    if m == 0:
        return Matching(pairs=(), weight=0.0)
    w = _augmented_matrix(instance, requests)
    colors = [r.color for r in requests]
    check_colors = instance.bipartite

    best_weight = math.inf
    best_pairs: list[tuple[int, int]] | None = None

    def extend(remaining: list[int], acc: list[tuple[int, int]], acc_w: float) -> None:
        nonlocal best_weight, best_pairs
        if not remaining:
            if acc_w < best_weight:
                best_weight = acc_w
                best_pairs = list(acc)
            return
        i = remaining[0]
        for pos in range(1, len(remaining)):
            j = remaining[pos]
            if check_colors and colors[i] == colors[j]:
                continue
            acc.append((i, j))
            extend(remaining[1:pos] + remaining[pos + 1 :], acc, acc_w + w[i][j])
            acc.pop()

    extend(list(range(m)), [], 0.0)
    if best_pairs is None:
        raise ValueError("no perfect matching exists under the color constraint")
    return Matching.from_pairs(
        [(requests[i].id, requests[j].id) for i, j in best_pairs], instance
    )


def realize_online(matching: Matching, instance: Instance) -> float:
    """Online cost of dispatching each pair the moment both endpoints arrived.

    Equals the matching's augmented weight exactly: waiting until the later
    arrival costs the time gap, and the connection adds the spatial distance.
    """
    by_id = {r.id: r for r in instance.requests}
    covered = sorted(i for pair in matching.pairs for i in pair)
    if covered != sorted(by_id):
        raise ValueError("matching is not perfect on the instance")
    total = 0.0
    for p, q in matching.pairs:
        a, b = by_id[p], by_id[q]
        t = max(a.time, b.time)
        total += (t - a.time) + (t - b.time) + distance(
            instance.space, a.location, b.location
        )
    return total


def matching_from_records(records, instance: Instance) -> Matching:
    """Canonical matching described by a run's match records."""
    return Matching.from_pairs([(rec.p, rec.q) for rec in records], instance)


def cycle_decompose(a: Matching, b: Matching, instance: Instance) -> CycleDecomposition:
    """Decompose the union of two perfect matchings into alternating cycles.

    Cycles start at their smallest unvisited id with an a-edge and are
    reported in order of that starting id; per-cycle lengths are the sums of
    augmented distances over each matching's edges.
    """
    partner_a = {}
    partner_b = {}
    for p, q in a.pairs:
        partner_a[p] = q
        partner_a[q] = p
    for p, q in b.pairs:
        partner_b[p] = q
        partner_b[q] = p
    ids = sorted(r.id for r in instance.requests)
    if sorted(partner_a) != ids or sorted(partner_b) != ids:
        raise ValueError("matchings must cover the same id set as the instance")
    by_id = {r.id: r for r in instance.requests}

    def dist(u: int, v: int) -> float:
        return augmented_distance(instance.space, by_id[u].point, by_id[v].point)

    visited: set[int] = set()
    cycles: list[Cycle] = []
    for start in ids:
        if start in visited:
            continue
        # Alternate a-edge then b-edge until the b-edge closes the cycle.
        sequence = [start]
        a_len = 0.0
        b_len = 0.0
        current = start
        while True:
            nxt = partner_a[current]
            a_len += dist(current, nxt)
            sequence.append(nxt)
            current = partner_b[nxt]
            b_len += dist(nxt, current)
            if current == start:
                break
            sequence.append(current)
        visited.update(sequence)
        cycles.append(Cycle(vertices=tuple(sequence), a_length=a_len, b_length=b_len))
    return CycleDecomposition(cycles=tuple(cycles))


@dataclass(frozen=True)
class RestrictionCounterexample:
    """Cycle whose isolated re-simulation disagrees with the full run."""

    cycle_index: int
    expected: tuple[tuple[int, int], ...]
    actual: tuple[tuple[int, int], ...]


def restriction_check(
    instance: Instance, report: RunReport, decomposition: CycleDecomposition
) -> RestrictionCounterexample | None:
    """Re-simulate the policy on each cycle's requests and compare edge sets.

    The policy run on the sub-instance induced by a cycle should reproduce
    exactly the edges the full run placed inside that cycle.  Returns None
    when every cycle agrees, otherwise the first mismatch.
    """
    full_pairs = {(min(r.p, r.q), max(r.p, r.q)) for r in report.records}
    for index, cycle in enumerate(decomposition.cycles):
        members = set(cycle.vertices)
        sub_requests = tuple(r for r in instance.requests if r.id in members)
        sub_instance = Instance(
            space=instance.space, requests=sub_requests, bipartite=instance.bipartite
        )
        sub_report = simulate(sub_instance, report.policy)
        expected = tuple(sorted(p for p in full_pairs if p[0] in members))
        actual = tuple(
            sorted((min(r.p, r.q), max(r.p, r.q)) for r in sub_report.records)
        )
        if expected != actual:
            return RestrictionCounterexample(
                cycle_index=index, expected=expected, actual=actual
            )
    return None
