"""Exact optima on small instances: the ground truth for every ratio check.

The strategy searches are memoised over (position, consistent scenarios,
visited demand). They only move to vertices that can split the consistent set
or serve outstanding demand; the ``*_unrestricted`` variants drop that
restriction and are used to confirm it loses nothing.

Searches run in floating point; the value returned is recomputed exactly, in
rationals, along the chosen witness.
"""

from __future__ import annotations

import itertools
import os
import time
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .errors import LimitExceeded
from .gso import GsoInstance
from .instances import CoverInstance, GstInstance, restrict
from .lpgst import LpgstInstance
from .metric import RTOL, Tour
from .odt import DiseaseLeaf, OdtInstance, TestNode, TestStrategy, restrict_odt, validate_odt
from .strategy import Leaf, Observe, StrategyTree, Waypoint


@dataclass(frozen=True)
class OracleLimits:
    max_vertices: int
    max_scenarios: int
    time_budget: float = 60.0

    def __post_init__(self):
        if self.max_vertices <= 0 or self.max_scenarios <= 0 or self.time_budget <= 0:
            raise ValueError("oracle limits must be positive")

    def check(self, n: int, m: int, what: str):
        if n > self.max_vertices or m > self.max_scenarios:
            raise LimitExceeded(
                f"{what}: n={n}, m={m} exceeds limits (n<={self.max_vertices}, m<={self.max_scenarios})"
            )


DEFAULT_LIMITS = {
    "isolation": OracleLimits(10, 10),
    "adaptsp": OracleLimits(8, 6),
    "adaptrp": OracleLimits(7, 4),
    "gso": OracleLimits(7, 64),
    "odt": OracleLimits(10, 10),
}


def limits_from_env(kind: str) -> OracleLimits:
    """Default limits, optionally overridden by ``ADAPTCOVER_LIMITS=n,m[,seconds]``."""
    raw = os.environ.get("ADAPTCOVER_LIMITS")
    if not raw:
        return DEFAULT_LIMITS[kind]
    return parse_limits(raw)


def parse_limits(raw: str) -> OracleLimits:
    parts = [p.strip() for p in raw.split(",")]
    if len(parts) not in (2, 3):
        raise ValueError("limits look like 'n,m' or 'n,m,seconds'")
    return OracleLimits(int(parts[0]), int(parts[1]), float(parts[2]) if len(parts) == 3 else 60.0)


class _Clock:
    def __init__(self, budget: float):
        self.deadline = time.monotonic() + budget
        self.ticks = 0

    def tick(self):
        self.ticks += 1
        if self.ticks % 4096 == 0 and time.monotonic() > self.deadline:
            raise LimitExceeded("oracle time budget exhausted")


@dataclass
class OracleResult:
    value: float
    exact: Fraction
    witness: object

    @property
    def tree(self):
        return self.witness


def _prep(inst: CoverInstance):
    n, m = inst.n, inst.m
    d = inst.metric.dist
    p = [float(x) for x in inst.dist.probs]
    F = [0] * n  # scenarios with demand at v
    S = [0] * m  # vertex mask of scenario i
    for i, s in enumerate(inst.dist.scenarios):
        for v in s:
            F[v] |= 1 << i
            S[i] |= 1 << v
    mass = np.zeros(1 << m)
    for C in range(1, 1 << m):
        low = C & -C
        mass[C] = mass[C ^ low] + p[low.bit_length() - 1]
    return n, m, d, p, F, S, mass


def _members(C: int):
    i = 0
    while C:
        if C & 1:
            yield i
        C >>= 1
        i += 1


# --- isolation ---------------------------------------------------------------------


def opt_isolation_exact(inst: CoverInstance, limits: OracleLimits | None = None) -> OracleResult:
    limits = limits or limits_from_env("isolation")
    limits.check(inst.n, inst.m, "isolation oracle")
    n, m, d, p, F, S, mass = _prep(inst)
    r = inst.root
    clock = _Clock(limits.time_budget)
    memo: dict[tuple[int, int], tuple[float, int]] = {}

    def V(u: int, C: int) -> float:
        key = (u, C)
        hit = memo.get(key)
        if hit is not None:
            return hit[0]
        clock.tick()
        if C & (C - 1) == 0:
            best, choice = d[u, r] * mass[C], -1
        else:
            best, choice = np.inf, -1
            for v in range(n):
                a = C & F[v]
                if a == 0 or a == C:
                    continue
                val = d[u, v] * mass[C] + V(v, a) + V(v, C ^ a)
                if val < best - 1e-12 * max(1.0, abs(val)):
                    best, choice = val, v
        memo[key] = (best, choice)
        return best

    full = (1 << m) - 1
    V(r, full)
    probs = [Fraction(x) for x in inst.dist.probs]
    dq = _exact_dist(inst)

    def build(u: int, C: int):
        _, v = memo[(u, C)]
        if v < 0:
            i = C.bit_length() - 1
            return Leaf(i), dq[u][r] * probs[i]
        a = C & F[v]
        yes, ey = build(v, a)
        no, en = build(v, C ^ a)
        return Observe(v, yes, no), dq[u][v] * sum(probs[i] for i in _members(C)) + ey + en

    node, exact = build(r, full)
    return OracleResult(float(exact), exact, StrategyTree(r, node))


def _exact_dist(inst: CoverInstance):
    d = inst.metric.dist
    return [[Fraction(float(x)) for x in row] for row in d]


# --- adaptive TSP / TRP ----------------------------------------------------------------------


def _opt_cover(inst: CoverInstance, objective: str, limits: OracleLimits) -> OracleResult:
    n, m, d, p, F, S, mass = _prep(inst)
    r = inst.root
    clock = _Clock(limits.time_budget)
    U = [0] * (1 << m)
    for C in range(1, 1 << m):
        low = C & -C
        U[C] = U[C ^ low] | S[low.bit_length() - 1]
    latency = objective == "adaptrp"
    memo: dict[tuple[int, int, int], tuple[float, int]] = {}

    def rate(C: int, W: int) -> float:
        if not latency:
            return mass[C]
        return sum(p[i] * bin(S[i] & ~W).count("1") for i in _members(C))

    def done(C: int, W: int) -> bool:
        return all(S[i] & ~W == 0 for i in _members(C))

    def V(u: int, C: int, W: int) -> float:
        W &= U[C]
        key = (u, C, W)
        hit = memo.get(key)
        if hit is not None:
            return hit[0]
        clock.tick()
        if done(C, W):
            best, choice = (0.0 if latency else d[u, r] * mass[C]), -1
        else:
            best, choice = np.inf, -1
            rt = rate(C, W)
            for v in range(n):
                a = C & F[v]
                informative = a != 0 and a != C
                if not informative and not (U[C] >> v & 1 and not W >> v & 1):
                    continue
                W2 = W | (1 << v)
                val = d[u, v] * rt
                if informative:
                    val += V(v, a, W2) + V(v, C ^ a, W2)
                else:
                    val += V(v, C, W2)
                if val < best - 1e-12 * max(1.0, abs(val)):
                    best, choice = val, v
        memo[key] = (best, choice)
        return best

    full = (1 << m) - 1
    W0 = 1 << r
    V(r, full, W0)
    probs = [Fraction(x) for x in inst.dist.probs]
    dq = _exact_dist(inst)

    def exact_rate(C, W):
        if not latency:
            return sum(probs[i] for i in _members(C))
        return sum(probs[i] * bin(S[i] & ~W).count("1") for i in _members(C))

    def build(u: int, C: int, W: int):
        W &= U[C]
        _, v = memo[(u, C, W)]
        if v < 0:
            leaf = Leaf(C.bit_length() - 1) if C & (C - 1) == 0 else Leaf(None)
            return leaf, (Fraction(0) if latency else dq[u][r] * sum(probs[i] for i in _members(C)))
        a = C & F[v]
        W2 = W | (1 << v)
        cost = dq[u][v] * exact_rate(C, W)
        if a != 0 and a != C:
            yes, ey = build(v, a, W2)
            no, en = build(v, C ^ a, W2)
            return Observe(v, yes, no), cost + ey + en
        child, ec = build(v, C, W2)
        return Waypoint(v, child), cost + ec

    node, exact = build(r, full, W0)
    return OracleResult(float(exact), exact, StrategyTree(r, node))


def opt_adaptsp_exact(inst: CoverInstance, limits: OracleLimits | None = None) -> OracleResult:
    limits = limits or limits_from_env("adaptsp")
    limits.check(inst.n, inst.m, "adaptive TSP oracle")
    return _opt_cover(inst, "adaptsp", limits)


def opt_adaptrp_exact(inst: CoverInstance, limits: OracleLimits | None = None) -> OracleResult:
    limits = limits or limits_from_env("adaptrp")
    limits.check(inst.n, inst.m, "adaptive TRP oracle")
    return _opt_cover(inst, "adaptrp", limits)


# --- unrestricted searches ---------------------------------------------------------------------


def opt_unrestricted(inst: CoverInstance, objective: str, max_vertices: int = 6, max_scenarios: int = 4) -> float:
    """Optimum over strategies that may move anywhere, revisit, and observe at any time.

    Layers are (consistent set, visited set); inside a layer, moves between
    visited vertices are relaxed to a fixed point.
    """
    n, m = inst.n, inst.m
    if n > max_vertices or m > max_scenarios:
        raise LimitExceeded("unrestricted search is for tiny instances only")
    _, _, d, p, F, S, mass = _prep(inst)
    r = inst.root
    isolation = objective == "isolation"
    latency = objective == "adaptrp"
    table: dict[tuple[int, int], np.ndarray] = {}
    layers_W = [0] if isolation else sorted(range(1 << n), key=lambda W: -bin(W).count("1"))
    for C in sorted(range(1, 1 << m), key=lambda C: bin(C).count("1")):
        members = list(_members(C))
        for W in layers_W:
            if not isolation and not W >> r & 1:
                continue
            if latency:
                rt = sum(p[i] * bin(S[i] & ~W).count("1") for i in members)
            else:
                rt = mass[C]
            verts = range(n) if isolation else [u for u in range(n) if W >> u & 1]
            base = np.full(n, np.inf)
            finished = len(members) == 1 if isolation else all(S[i] & ~W == 0 for i in members)
            for u in verts:
                if finished:
                    base[u] = 0.0 if latency else d[u, r] * mass[C]
                a = C & F[u]
                if a and a != C:
                    base[u] = min(base[u], table[(a, W)][u] + table[(C ^ a, W)][u])
                if not isolation:
                    for w in range(n):
                        if not W >> w & 1:
                            base[u] = min(base[u], d[u, w] * rt + table[(C, W | (1 << w))][w])
            val = base.copy()
            idx = np.array(list(verts))
            for _ in range(n):
                sub = d[np.ix_(idx, idx)] * rt + val[idx][None, :]
                new = val.copy()
                new[idx] = np.minimum(val[idx], sub.min(axis=1))
                if np.array_equal(new, val):
                    break
                val = new
            table[(C, W)] = val
    W0 = 0 if isolation else 1 << r
    return float(table[((1 << m) - 1, W0)][r])


# --- orienteering / latency group Steiner / group Steiner ---------------------------------------


def _tour_orders(n: int, root: int, cands):
    for k in range(len(cands) + 1):
        yield from itertools.permutations(cands, k)


def opt_gso_lpgst_exact(inst, limits: OracleLimits | None = None) -> tuple[float, Tour]:
    """Exhaustive search over root tours without repeated vertices.

    A :class:`GsoInstance` returns the maximum profit within the budget; an
    :class:`LpgstInstance` returns the minimum weighted latency covering at
    least ``target`` groups.
    """
    limits = limits or DEFAULT_LIMITS["gso"]
    limits.check(inst.metric.n, len(inst.groups), "orienteering oracle")
    metric, r = inst.metric, inst.root
    d = metric.dist
    cands = sorted({v for g in inst.groups for v in g} - {r})
    groups = [set(g) for g in inst.groups]
    best_val, best_order = None, None
    if isinstance(inst, GsoInstance):
        slack = RTOL * max(1.0, inst.budget)
        for order in _tour_orders(metric.n, r, cands):
            walk = (r, *order, r)
            length = sum(d[a, b] for a, b in zip(walk, walk[1:]))
            if length > inst.budget + slack:
                continue
            seen = set(walk)
            val = sum(pr for g, pr in zip(groups, inst.profits) if g & seen)
            if best_val is None or val > best_val + 1e-12 * max(1.0, abs(val)):
                best_val, best_order = val, order
        return float(best_val), Tour.closed(metric, r, best_order)
    if isinstance(inst, LpgstInstance):
        for order in _tour_orders(metric.n, r, cands):
            walk = (r, *order, r)
            t, first = 0.0, {r: 0.0}
            for a, b in zip(walk, walk[1:]):
                t += d[a, b]
                first.setdefault(b, t)
            hit = [min((first[v] for v in g if v in first), default=None) for g in groups]
            if sum(h is not None for h in hit) < inst.target:
                continue
            val = sum(w * (t if h is None else h) for w, h in zip(inst.weights, hit))
            if best_val is None or val < best_val - 1e-12 * max(1.0, abs(val)):
                best_val, best_order = val, order
        if best_val is None:
            raise ValueError("no tour covers the target number of groups")
        return float(best_val), Tour.closed(metric, r, best_order)
    raise TypeError("expected a GsoInstance or an LpgstInstance")


def opt_gst_exact(gst: GstInstance, max_vertices: int = 8) -> tuple[float, Tour]:
    """Shortest root tour touching every group, by depth-first search with length pruning."""
    n = gst.metric.n
    if n > max_vertices:
        raise LimitExceeded("group Steiner oracle is for tiny instances only")
    d, r = gst.metric.dist, gst.root
    groups = [set(g) for g in gst.groups]
    if any(not g for g in groups):
        raise ValueError("empty group")
    best = [np.inf, ()]

    def dfs(u, path, length, seen):
        if length + d[u, r] >= best[0]:
            return
        if all(g & seen for g in groups):
            best[0], best[1] = length + d[u, r], tuple(path)
            return
        for v in range(n):
            if v not in seen:
                dfs(v, path + [v], length + d[u, v], seen | {v})

    dfs(r, [], 0.0, {r})
    return float(best[0]), Tour.closed(gst.metric, r, best[1])


# --- decision trees -------------------------------------------------------------------------------


def opt_odt_exact(odt: OdtInstance, limits: OracleLimits | None = None) -> OracleResult:
    """Minimum expected test cost, by recursion over the set of still-possible diseases."""
    validate_odt(odt)
    limits = limits or limits_from_env("odt")
    limits.check(len(odt.tests), odt.m, "decision-tree oracle")
    m = odt.m
    pr = [Fraction(x) for x in odt.priors]
    cost = [Fraction(float(t.cost)) for t in odt.tests]
    outcome = [[t.outcome(i) for i in range(m)] for t in odt.tests]

    @lru_cache(maxsize=None)
    def V(C: int) -> tuple[Fraction, int]:
        if C & (C - 1) == 0:
            return Fraction(0), -1
        mass = sum(pr[i] for i in _members(C))
        best, choice = None, -1
        for j, t in enumerate(odt.tests):
            parts = _split(C, outcome[j], t.outcomes)
            if sum(1 for P in parts.values() if P) < 2:
                continue
            val = cost[j] * mass + sum(V(P)[0] for P in parts.values() if P)
            if best is None or val < best:
                best, choice = val, j
        if best is None:
            raise ValueError("diseases cannot be separated")
        return best, choice

    def build(C: int):
        _, j = V(C)
        if j < 0:
            return DiseaseLeaf(C.bit_length() - 1)
        parts = _split(C, outcome[j], odt.tests[j].outcomes)
        return TestNode(j, tuple((o, build(P) if P else DiseaseLeaf(None)) for o, P in parts.items()))

    full = (1 << m) - 1
    value, _ = V(full)
    return OracleResult(float(value), value, TestStrategy(build(full)))


def opt_star_gso_enum(inst: GsoInstance, max_leaves: int = 16) -> tuple[float, frozenset[int]]:
    """Best profit over every leaf subset of a star whose round trips fit the budget.

    Needs pairwise-distinct leaves (``d(u, v) = d(r, u) + d(r, v)``) so a
    subset's tour length is twice its summed radii.
    """
    d = inst.metric.dist
    r = inst.root
    leaves = [v for v in range(inst.metric.n) if v != r]
    if len(leaves) > max_leaves:
        raise LimitExceeded(f"{len(leaves)} leaves exceeds the enumeration limit {max_leaves}")
    for a, b in itertools.combinations(leaves, 2):
        if abs(d[a, b] - d[r, a] - d[r, b]) > RTOL * max(1.0, d[a, b]):
            raise ValueError(f"leaves {a} and {b} are not separated by the center")
    groups = [frozenset(g) for g in inst.groups]
    best, best_set = -1.0, frozenset()
    for k in range(len(leaves) + 1):
        for S in itertools.combinations(leaves, k):
            if 2 * sum(d[r, v] for v in S) > inst.budget * (1 + RTOL):
                continue
            seen = frozenset(S) | {r}
            val = sum(p for g, p in zip(groups, inst.profits) if g & seen)
            if val > best:
                best, best_set = val, frozenset(S)
    return float(best), best_set


def _split(C: int, outcome_row, outcomes) -> dict:
    parts = {o: 0 for o in outcomes}
    for i in _members(C):
        parts[outcome_row[i]] |= 1 << i
    return parts


# --- measured phase constants -------------------------------------------------------------------


def _ratio(num: float, den: float) -> float:
    if den <= 0:
        return 0.0 if num <= 1e-12 else np.inf
    return num / den


def phase_ratio_isolation(inst: CoverInstance, phases, limits: OracleLimits | None = None) -> float:
    """Largest ratio, over partition phases, of the phase tour's group latency to the phase's isolation optimum."""
    worst = 0.0
    for rec in phases:
        opt = opt_isolation_exact(restrict(inst, rec.sub), limits).value
        worst = max(worst, _ratio(rec.result.lpgst.latency, opt))
    return worst


def phase_ratio_odt(odt: OdtInstance, phases, limits: OracleLimits | None = None) -> float:
    """As :func:`phase_ratio_isolation` for a solved decision-tree reduction.

    The phase optimum is the decision-tree optimum of the phase's diseases,
    which equals the isolation optimum on the reduced star.
    """
    worst = 0.0
    for rec in phases:
        opt = opt_odt_exact(restrict_odt(odt, rec.sub.members, rec.sub.weights), limits).value
        worst = max(worst, _ratio(rec.result.lpgst.latency, opt))
    return worst


def phase_constant_adaptrp(inst: CoverInstance, phases, limits: OracleLimits | None = None) -> float:
    """Largest ratio of a phase's expected charge to the latency optimum of its sub-instance (at least 1).

    The charge includes the completion of scenarios the phase isolates, so the
    levels of halving account for the whole expected latency.
    """
    worst = 1.0
    for rec in phases:
        sub_inst = restrict(inst.with_objective("adaptrp"), rec.sub, rec.scenarios)
        opt = opt_adaptrp_exact(sub_inst, limits).value
        worst = max(worst, _ratio(rec.expected_charge(), opt))
    return worst
