"""Isolating the realised scenario by repeated balanced partitioning, and adaptive TSP on top of it."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .gso import GsoOracle
from .instances import CoverInstance, SubInstance
from .lpgst import LpgstConfig, LpgstInstance, LpgstResult, lpgst_solve
from .metric import Tour, tsp_tour, walk_length
from .strategy import Leaf, Node, Observe, StrategyTree, Waypoint, waypoint_chain


@dataclass(frozen=True)
class FlipSets:
    F: dict[int, frozenset[int]]
    D: dict[int, frozenset[int]]
    X: dict[int, frozenset[int]]


def flip_sets(inst: CoverInstance, sub: SubInstance) -> FlipSets:
    """``F_v`` = members with demand at ``v``; ``D_v`` = the smaller side; ``X_i`` = vertices whose ``D_v`` holds ``i``."""
    M = frozenset(sub.members)
    g = len(M)
    scen = inst.dist.scenarios
    F, D = {}, {}
    for v in range(inst.n):
        F[v] = frozenset(i for i in M if v in scen[i])
        D[v] = F[v] if 2 * len(F[v]) <= g else M - F[v]
    X = {i: frozenset(v for v in range(inst.n) if i in D[v]) for i in sub.members}
    return FlipSets(F, D, X)


@dataclass
class PartitionResult:
    tour: Tour
    sequence: tuple[int, ...]  # root first, then distinct tour vertices
    parts: list[frozenset[int]]  # parts[k] stops at sequence[k]; the last entry is the remainder
    masses: list[float]
    flips: FlipSets
    lpgst: LpgstResult

    @property
    def nonempty_parts(self) -> list[frozenset[int]]:
        return [p for p in self.parts if p]


def dedupe(vertices) -> tuple[int, ...]:
    seen, out = set(), []
    for v in vertices:
        if v not in seen:
            seen.add(v)
            out.append(v)
    return tuple(out)


def partition(inst: CoverInstance, sub: SubInstance, oracle: GsoOracle, config: LpgstConfig = LpgstConfig()) -> PartitionResult:
    if len(sub.members) < 2:
        raise ValueError("partition needs at least two scenarios")
    flips = flip_sets(inst, sub)
    members = sub.members
    lp = LpgstInstance(
        inst.metric, inst.root, tuple(tuple(sorted(flips.X[i])) for i in members), sub.weights, len(members) - 1
    )
    res = lpgst_solve(lp, oracle, config)
    seq = dedupe((inst.root, *res.tour.inner))
    left = set(members)
    parts = []
    for v in seq:
        part = frozenset(flips.D[v] & left)
        parts.append(part)
        left -= part
    parts.append(frozenset(left))
    if any(len(p) == len(members) for p in parts):
        raise RuntimeError(f"partition made no progress on scenarios {members}: tour {res.tour.vertices}")
    q = sub.q
    return PartitionResult(res.tour, seq, parts, [sum(q[i] for i in p) for p in parts], flips, res)


@dataclass
class PhaseRecord:
    sub: SubInstance
    depth: int
    result: object
    travel: dict[int, float] = field(default_factory=dict)  # per scenario, back at the root


def _stop_on_yes(flips: FlipSets, v: int) -> bool:
    return flips.D[v] == flips.F[v]


def iso_solve(
    inst: CoverInstance,
    oracle: GsoOracle,
    config: LpgstConfig = LpgstConfig(),
    phases: list | None = None,
) -> StrategyTree:
    """Isolation strategy: traverse each partition tour, stop at the first vertex that pins the part, recurse.

    Vertices whose part is empty cannot stop anyone and are skipped.
    ``phases`` (optional) receives one :class:`PhaseRecord` per partition call.
    """
    r = inst.root

    def build(sub: SubInstance, depth: int) -> Node:
        if len(sub.members) == 1:
            return Leaf(sub.members[0])
        res = partition(inst, sub, oracle, config)
        informative = [(v, p) for v, p in zip(res.sequence, res.parts) if p]
        rest = res.parts[-1]
        node = hang(sub, rest, depth)
        for v, part in reversed(informative):
            stop = hang(sub, part, depth)
            node = Observe(v, stop, node) if _stop_on_yes(res.flips, v) else Observe(v, node, stop)
        if phases is not None:
            phases.append(PhaseRecord(sub, depth, res, _travel(inst, sub, res, informative)))
        return node

    def hang(sub: SubInstance, part, depth: int) -> Node:
        if not part:
            return Leaf(None)
        if len(part) == 1:
            return Leaf(next(iter(part)))
        return Waypoint(r, build(sub.restrict(part), depth + 1))

    return StrategyTree(r, build(SubInstance.full(inst), 0))


def _travel(inst, sub, res, informative) -> dict[int, float]:
    out = {}
    path = [inst.root]
    for v, part in informative:
        path.append(v)
        for i in part:
            out[i] = walk_length(inst.metric, path + [inst.root])
    for i in res.parts[-1]:
        out[i] = walk_length(inst.metric, path + [inst.root])
    return out


def phase_cost(rec: PhaseRecord) -> float:
    """Expected travel of one phase under the phase's own weights."""
    q = rec.sub.q
    return sum(q[i] * rec.travel[i] for i in rec.sub.members)


def adaptsp_solve(
    inst: CoverInstance,
    oracle: GsoOracle,
    config: LpgstConfig = LpgstConfig(),
    phases: list | None = None,
) -> StrategyTree:
    """Isolate first, then return to the root and tour whatever demand of the isolated scenario is still unvisited."""
    iso = iso_solve(inst, oracle, config, phases)
    r = inst.root
    scen = inst.dist.scenarios

    def extend(node: Node, visited: frozenset) -> Node:
        if isinstance(node, Leaf):
            if node.scenario is None:
                return node
            todo = set(scen[node.scenario]) - visited - {r}
            if not todo:
                return node
            t = tsp_tour(inst.metric, r, todo)
            return Waypoint(r, waypoint_chain(t.inner, node))
        if isinstance(node, Observe):
            seen = visited | {node.vertex}
            return Observe(node.vertex, extend(node.yes, seen), extend(node.no, seen))
        return Waypoint(node.vertex, extend(node.child, visited | {node.vertex}))

    return StrategyTree(r, extend(iso.node, frozenset({r})))


def depth_bound(m: int) -> int:
    """Phase count allowed on any root-leaf path when parts shrink by 7/8."""
    return math.ceil(math.log(m, 8 / 7)) + 1 if m > 1 else 0
