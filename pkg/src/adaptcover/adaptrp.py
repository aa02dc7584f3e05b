"""Adaptive traveling repairman: serve demand while isolating the scenario.

Each phase builds a full-coverage latency tour over per-scenario groups, walks
it until the observations rule out at least half of the candidates, and
recurses with visited vertices removed from the surviving scenarios.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .gso import GsoOracle
from .instances import CoverInstance, SubInstance
from .isolation import dedupe
from .lpgst import LatencyGstResult, latency_gst_solve
from .metric import Metric, Tour, latency_order
from .strategy import Leaf, Node, Observe, StrategyTree, Waypoint, waypoint_chain


@dataclass(frozen=True)
class TrpGroups:
    low: frozenset[int]  # vertices in at most half the scenarios
    high: frozenset[int]
    main: dict[int, frozenset[int]]
    main_weight: dict[int, float]
    extra: list[tuple[int, int, frozenset[int], float]]  # (scenario, v, vertices, weight)

    def lgst_groups(self):
        """Groups and weights handed to the latency solver; zero-weight main groups are left out."""
        groups, weights = [], []
        for i, X in self.main.items():
            if self.main_weight[i] > 0:
                groups.append(tuple(sorted(X)))
                weights.append(self.main_weight[i])
        for _, _, Y, w in self.extra:
            groups.append(tuple(sorted(Y)))
            weights.append(w)
        return groups, weights


def trp_groups(scen: dict[int, frozenset[int]], sub: SubInstance) -> TrpGroups:
    M = sub.members
    support = frozenset().union(*(scen[i] for i in M))
    freq = {u: sum(1 for i in M if u in scen[i]) for u in support}
    low = frozenset(u for u in support if 2 * freq[u] <= len(M))
    high = support - low
    q = sub.q
    main, mw, extra = {}, {}, []
    for i in M:
        X = (low & scen[i]) | (high - scen[i])
        main[i] = X
        mw[i] = len(scen[i] & low) * q[i]
        for v in sorted(scen[i] & high):
            extra.append((i, v, X | {v}, q[i]))
    return TrpGroups(low, high, main, mw, extra)


@dataclass
class LatPartition:
    tour: Tour  # truncated tour r, v_1..v_{t-1}, r
    full: LatencyGstResult
    sequence: tuple[int, ...]
    parts: list[frozenset[int]]  # parts[k] covered by sequence[k]; last entry = uncovered remainder
    groups: TrpGroups


def partn_lat(metric: Metric, root: int, scen: dict, sub: SubInstance, oracle: GsoOracle, beta: float = 1.25) -> LatPartition:
    """Latency tour over the scenario groups, cut once fewer than half the scenarios remain uncovered.

    Scenario ``i`` is covered by the first vertex of its main group on the tour.
    """
    M = sub.members
    if len(M) < 2:
        raise ValueError("partn_lat needs at least two scenarios")
    tg = trp_groups(scen, sub)
    groups, weights = tg.lgst_groups()
    full = latency_gst_solve(metric, root, groups, weights, oracle, beta)
    seq = dedupe((root, *full.tour.inner))
    left = set(M)
    parts = []
    cut = len(seq) - 1
    for k, v in enumerate(seq):
        part = frozenset(i for i in left if v in tg.main[i])
        parts.append(part)
        left -= part
        if 2 * len(left) < len(M):
            cut = k
            break
    seq = seq[: cut + 1]
    parts = parts[: cut + 1] + [frozenset(left)]
    if any(len(p) == len(M) for p in parts):
        raise RuntimeError(f"latency partition made no progress on scenarios {M}: tour {full.tour.vertices}")
    tour = Tour.closed(metric, root, seq[1:] if seq and seq[0] == root else seq)
    return LatPartition(tour, full, seq, parts, tg)


@dataclass
class TrpPhase:
    sub: SubInstance
    scenarios: dict[int, frozenset[int]]
    depth: int
    result: LatPartition | None
    extra: dict[int, float] = field(default_factory=dict)  # latency added during this phase, per scenario
    tail: dict[int, float] = field(default_factory=dict)  # base-case completion of scenarios isolated here

    def expected_extra(self) -> float:
        q = self.sub.q
        return sum(q[i] * self.extra[i] for i in self.sub.members)

    def expected_charge(self) -> float:
        """Phase latency plus the completions of the scenarios it isolates."""
        q = self.sub.q
        return self.expected_extra() + sum(q[i] * t for i, t in self.tail.items())


def _charge(metric: Metric, walk: list[int], demand) -> float:
    """Latency a phase adds: arrival times of demand met on ``walk``, the walk's length for the rest."""
    t, first = 0.0, {walk[0]: 0.0}
    for a, b in zip(walk, walk[1:]):
        t += metric.dist[a, b]
        first.setdefault(b, t)
    return float(sum(first.get(v, t) for v in demand))


def adaptrp_solve(
    inst: CoverInstance,
    oracle: GsoOracle,
    beta: float = 1.25,
    phases: list | None = None,
    exact_limit: int = 10,
) -> StrategyTree:
    """Strategy tree for expected latency.

    Walking a phase tour, stop at a low-frequency vertex that has demand or at a
    high-frequency vertex that has none; the realised scenario then lies in that
    vertex's part. A single remaining scenario is served in latency-optimal
    order (exact up to ``exact_limit`` vertices).
    """
    r = inst.root
    metric = inst.metric

    def single(demand: frozenset) -> tuple[int, ...]:
        return latency_order(metric, r, demand - {r}, exact_limit)

    def build(sub: SubInstance, scen: dict, depth: int) -> Node:
        if len(sub.members) == 1:
            i = sub.members[0]
            order = single(scen[i])
            if phases is not None:
                tail = {i: _charge(metric, [r, *order], scen[i] - {r})}
                phases.append(TrpPhase(sub, dict(scen), depth, None, {i: 0.0}, tail))
            return waypoint_chain(order, Leaf(i))
        res = partn_lat(metric, r, scen, sub, oracle, beta)
        tg = res.groups
        visited_at = [frozenset(res.sequence[: k + 1]) for k in range(len(res.sequence))]
        extras: dict[int, float] = {}
        tails: dict[int, float] = {}

        def hang(part, visited, walk):
            if not part:
                return Leaf(None)
            if len(part) == 1:
                # the isolated scenario is finished off from the root
                i = next(iter(part))
                left = scen[i] - visited
                if not left:
                    extras[i] = _charge(metric, walk, scen[i] - {r})
                    tails[i] = 0.0
                    return Leaf(i)
                order = single(left)
                extras[i] = _charge(metric, walk + [r], scen[i] - {r})
                tails[i] = _charge(metric, walk + [r, *order], scen[i] - {r}) - extras[i]
                return Waypoint(r, waypoint_chain(order, Leaf(i)))
            for i in part:
                extras[i] = _charge(metric, walk + [r], scen[i] - {r})
            reduced = {i: scen[i] - visited for i in part}
            return Waypoint(r, build(sub.restrict(part), reduced, depth + 1))

        walk = list(res.sequence)  # starts at the root
        node = hang(res.parts[-1], visited_at[-1], walk)
        for k in range(len(res.sequence) - 1, -1, -1):
            v, part = res.sequence[k], res.parts[k]
            prefix = walk[: k + 1]
            if not part:
                node = Waypoint(v, node) if v != r else node
                continue
            stop = hang(part, visited_at[k], prefix)
            node = Observe(v, stop, node) if v in tg.low else Observe(v, node, stop)
        if phases is not None:
            phases.append(TrpPhase(sub, dict(scen), depth, res, extras, tails))
        return node

    sub = SubInstance.full(inst)
    scen = {i: frozenset(s) for i, s in enumerate(inst.dist.scenarios)}
    return StrategyTree(r, build(sub, scen, 0))
