"""Discrete-event simulation of the online matching policies.

Each policy assigns every unordered pair of requests an anticipated match
time.  The hemisphere policies grow a ball around each request in the
time-augmented metric, backwards in time, at radius rate epsilon: a pair
fires at max(t(p), t(q)) + D(p, q) / epsilon.  The no-time variants grow
spheres in space only and differ in which arrival anchors the sphere; a
match can never precede the later arrival, so anchored-at-the-earlier
variants are clamped to it.

The simulation keeps one event per admissible pair in a priority queue,
skips events whose endpoints are already matched, and fires the rest in a
deterministic order: by event time, then smaller later-arrival id, then
smaller other id.  Event times within ``TIME_TIE_TOL`` of the queue head are
treated as tied and ordered by the id key.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass

from mpmd.metric import (
    MetricSpace,
    Point,
    TimedPoint,
    augmented_distance,
    distance,
    validate_point,
)

HEMISPHERE = "hemisphere"
HEMISPHERE_BIPARTITE = "hemisphere-b"
NOTIME_MIN = "notime-min"
NOTIME_LATE = "notime-late"
NOTIME_EARLY = "notime-early"

POLICY_KINDS = (HEMISPHERE, HEMISPHERE_BIPARTITE, NOTIME_MIN, NOTIME_LATE, NOTIME_EARLY)

# Absolute tolerance under which two event times are considered tied.
TIME_TIE_TOL = 1e-9


@dataclass(frozen=True)
class Request:
    """A single request: id, timed location, and an optional color label."""

    id: int
    point: TimedPoint
    color: int | None = None

    def __post_init__(self) -> None:
        if self.id < 0:
            raise ValueError(f"request id must be non-negative, got {self.id}")
        if self.color not in (None, 0, 1):
            raise ValueError(f"request color must be 0 or 1, got {self.color!r}")

    @property
    def time(self) -> float:
        return self.point.time

    @property
    def location(self) -> Point:
        return self.point.location


@dataclass(frozen=True)
class Instance:
    """A metric space plus an ordered list of requests.

    The request count must be even, ids unique, and every location valid for
    the space.  Bipartite instances carry a color on every request with both
    colors equally frequent; monochromatic instances carry no colors.
    """

    space: MetricSpace
    requests: tuple[Request, ...]
    bipartite: bool = False

    def __post_init__(self) -> None:
        object.__setattr__(self, "requests", tuple(self.requests))
        ids = [r.id for r in self.requests]
        if len(set(ids)) != len(ids):
            dup = next(i for i in ids if ids.count(i) > 1)
            raise ValueError(f"duplicate request id {dup}")
        if len(ids) % 2 != 0:
            raise ValueError("request count must be even")
        for r in self.requests:
            validate_point(self.space, r.location)
            if self.bipartite and r.color is None:
                raise ValueError(f"request {r.id} has no color on a bipartite instance")
            if not self.bipartite and r.color is not None:
                raise ValueError(f"request {r.id} carries a color on a monochromatic instance")
        if self.bipartite:
            zeros = sum(1 for r in self.requests if r.color == 0)
            if zeros * 2 != len(ids):
                raise ValueError(
                    f"bipartite colors are imbalanced: {zeros} vs {len(ids) - zeros}"
                )

    @property
    def size(self) -> int:
        return len(self.requests)

    def request(self, rid: int) -> Request:
        for r in self.requests:
            if r.id == rid:
                return r
        raise ValueError(f"unknown request id {rid}")


@dataclass(frozen=True)
class Policy:
    """A policy kind together with its radius growth rate epsilon."""

    kind: str
    epsilon: float

    def __post_init__(self) -> None:
        if self.kind not in POLICY_KINDS:
            raise ValueError(f"unknown policy kind {self.kind!r}")
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be strictly positive, got {self.epsilon}")


@dataclass(frozen=True)
class MatchRecord:
    """One matched pair: p arrived no later than q (ties broken by smaller id)."""

    p: int
    q: int
    match_time: float
    connection: float
    delay_p: float
    delay_q: float


@dataclass(frozen=True)
class RunReport:
    """The full outcome of one simulation run."""

    policy: Policy
    records: tuple[MatchRecord, ...]
    online_cost: float
    offline_weight: float


def _ordered(a: Request, b: Request) -> tuple[Request, Request]:
    """(earlier, later) by arrival time, ties by smaller id."""
    if (a.time, a.id) <= (b.time, b.id):
        return a, b
    return b, a


def _pair_schedule(
    policy: Policy, a: Request, b: Request, space: MetricSpace
) -> tuple[float, float, float] | None:
    """Anticipated (match_time, delay_earlier, delay_later) for the pair.

    Returns None when the policy never matches the pair (same color under the
    bipartite policy).  Delays are derived from the firing rule itself rather
    than by subtracting large times, keeping the per-pair cost identities
    exact at double precision.
    """
    if policy.kind == HEMISPHERE_BIPARTITE and a.color == b.color:
        return None
    early, late = _ordered(a, b)
    gap = late.time - early.time
    d = distance(space, a.location, b.location)
    if policy.kind in (HEMISPHERE, HEMISPHERE_BIPARTITE):
        wait = (d + gap) / policy.epsilon
    elif policy.kind == NOTIME_LATE:
        wait = d / policy.epsilon
    else:
        # Sphere anchored at the earlier arrival, clamped to the later one.
        wait = max(0.0, d / policy.epsilon - gap)
    return late.time + wait, gap + wait, wait


def event_time(policy: Policy, p: Request, q: Request, space: MetricSpace) -> float:
    """Earliest time the pair may be matched, or inf when the policy never will."""
    if p.id == q.id:
        raise ValueError("event_time requires two distinct requests")
    schedule = _pair_schedule(policy, p, q, space)
    if schedule is None:
        return float("inf")
    return schedule[0]


def online_cost(records) -> float:
    """Total connection plus delay cost actually paid."""
    return sum(r.connection + r.delay_p + r.delay_q for r in records)


def offline_weight(records, instance: Instance) -> float:
    """Total time-augmented weight of the matching the records describe."""
    by_id = {r.id: r for r in instance.requests}
    total = 0.0
    for rec in records:
        try:
            p, q = by_id[rec.p], by_id[rec.q]
        except KeyError as exc:
            raise ValueError(f"unknown request id {exc.args[0]}") from None
        total += augmented_distance(instance.space, p.point, q.point)
    return total


def _check_compatible(instance: Instance, policy: Policy) -> None:
    if policy.kind == HEMISPHERE_BIPARTITE and not instance.bipartite:
        raise ValueError("bipartite policy requires a bipartite instance")


def simulate(instance: Instance, policy: Policy) -> RunReport:
    """Run the policy over the instance and return the complete match report.

    A pure function of its arguments: repeated runs produce identical
    reports.  Records are emitted in firing order, which respects the
    deterministic event order described in the module docstring.
    """
    _check_compatible(instance, policy)
    requests = sorted(instance.requests, key=lambda r: (r.time, r.id))
    by_id = {r.id: r for r in requests}
    m = len(requests)

    # One event per admissible unordered pair: (time, later id, earlier id).
    events: list[tuple[float, int, int]] = []
    for i in range(m):
        for j in range(i + 1, m):
            schedule = _pair_schedule(policy, requests[i], requests[j], instance.space)
            if schedule is None:
                continue
            early, late = _ordered(requests[i], requests[j])
            events.append((schedule[0], late.id, early.id))
    heapq.heapify(events)

    matched: set[int] = set()
    records: list[MatchRecord] = []
    while len(records) * 2 < m:
        while events and (events[0][1] in matched or events[0][2] in matched):
            heapq.heappop(events)
        if not events:
            raise ValueError("no admissible pair left; perfect matching impossible")
        # Collect the head cluster of near-tied events and pick by the id key.
        head_time = events[0][0]
        cluster: list[tuple[float, int, int]] = []
        while events and events[0][0] <= head_time + TIME_TIE_TOL:
            ev = heapq.heappop(events)
            if ev[1] not in matched and ev[2] not in matched:
                cluster.append(ev)
        chosen = min(cluster, key=lambda ev: (ev[1], ev[2]))
        late, early = by_id[chosen[1]], by_id[chosen[2]]
        match_time, delay_early, delay_late = _pair_schedule(
            policy, early, late, instance.space
        )
        records.append(
            MatchRecord(
                p=early.id,
                q=late.id,
                match_time=match_time,
                connection=distance(instance.space, early.location, late.location),
                delay_p=delay_early,
                delay_q=delay_late,
            )
        )
        matched.add(early.id)
        matched.add(late.id)
        for ev in cluster:
            if ev is not chosen and ev[1] not in matched and ev[2] not in matched:
                heapq.heappush(events, ev)

    recs = tuple(records)
    return RunReport(
        policy=policy,
        records=recs,
        online_cost=online_cost(recs),
        offline_weight=offline_weight(recs, instance),
    )
