"""Latency group Steiner tours built from repeated orienteering calls.

``lpgst_solve`` minimises weighted group latency subject to covering at least
``h`` groups: geometric length budgets, residual profits, and a final
unit-profit tour appended to the concatenation. ``latency_gst_solve`` keeps
adding phases until every group is covered.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import InfeasibleError
from .gso import GsoInstance, GsoOracle, covered_groups
from .metric import RTOL, Metric, Tour, arrival_times


@dataclass(frozen=True)
class LpgstInstance:
    metric: Metric
    root: int
    groups: tuple[tuple[int, ...], ...]
    weights: tuple[float, ...]
    target: int

    def __post_init__(self):
        object.__setattr__(self, "groups", tuple(tuple(sorted(set(int(v) for v in g))) for g in self.groups))
        object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))
        if len(self.groups) != len(self.weights):
            raise ValueError("one weight per group")
        if any(w < 0 for w in self.weights):
            raise ValueError("weights must be non-negative")
        if not 0 <= self.target <= len(self.groups):
            raise ValueError("target must lie in [0, g]")


@dataclass(frozen=True)
class LpgstConfig:
    beta: float = 1.25
    rho: float | None = None  # defaults to the oracle's length factor
    max_l: int | None = None

    def __post_init__(self):
        if not self.beta > 1:
            raise ValueError("beta must exceed 1")
        if self.rho is not None and self.rho < 1:
            raise ValueError("rho must be at least 1")


@dataclass
class LpgstResult:
    tour: Tour
    latency: float
    covered: tuple[int, ...]
    l: int
    padded: float
    candidates: list = field(default_factory=list, repr=False)


def latency(metric: Metric, root: int, groups, weights, tour: Tour) -> float:
    """Weighted arrival times; groups the tour misses are charged its full length."""
    if tour.root != root:
        raise ValueError("tour does not start at the root")
    arr = arrival_times(tour, groups)
    return float(sum(w * a for w, a in zip(weights, arr)))


def instance_latency(inst: LpgstInstance, tour: Tour) -> float:
    return latency(inst.metric, inst.root, inst.groups, inst.weights, tour)


def length_unit(metric: Metric) -> float:
    """Smallest positive distance; budgets are powers of beta in this unit."""
    pos = metric.dist[metric.dist > 0]
    return float(pos.min()) if pos.size else 1.0


def budget_levels(metric: Metric, beta: float) -> int:
    """Smallest ``L`` with ``beta**L`` units at least twice the sum of all distances."""
    unit = length_unit(metric)
    total = 2.0 * float(np.triu(metric.dist, 1).sum()) / unit
    if total <= 1.0:
        return 1
    return max(1, math.ceil(math.log(total, beta) - 1e-12))


def _solve(oracle: GsoOracle, metric, root, groups, profits, budget) -> Tour:
    if not any(profits):
        return Tour.closed(metric, root)
    return oracle(GsoInstance(metric, root, groups, tuple(profits), budget))


def lpgst_candidates(inst: LpgstInstance, oracle: GsoOracle, config: LpgstConfig = LpgstConfig()) -> list[dict]:
    """Run the construction for every ``l`` in the sweep.

    Phase tours do not depend on ``l``, so one pass produces all of them.
    """
    metric, root, groups, w = inst.metric, inst.root, inst.groups, inst.weights
    beta = config.beta
    rho = config.rho if config.rho is not None else oracle.length_factor
    unit = length_unit(metric)
    top = config.max_l if config.max_l is not None else budget_levels(metric, beta) + 1
    g = len(groups)
    out = []
    tau = Tour.closed(metric, root)
    covered = set(covered_groups(groups, (root,)))
    for l in range(0, top + 1):
        if l >= 1:
            profits = [0.0 if i in covered else w[i] for i in range(g)]
            step = _solve(oracle, metric, root, groups, profits, beta ** (l + 1) * unit)
            tau = tau.then(step)
            covered.update(covered_groups(groups, step.vertices))
        sigma = _solve(oracle, metric, root, groups, [1.0] * g, beta**l * unit)
        pi = tau.then(sigma)
        arr = arrival_times(pi, groups)
        hit = tuple(covered_groups(groups, pi.vertices))
        lat = float(sum(wi * a for wi, a in zip(w, arr)))
        # padding tau to rho * beta^l delays everything first reached in sigma
        pad = max(0.0, rho * beta**l * unit - tau.length)
        in_tau = set(covered_groups(groups, tau.vertices))
        padded = float(sum(wi * (a if i in in_tau else a + pad) for i, (wi, a) in enumerate(zip(w, arr))))
        out.append({"l": l, "tour": pi, "covered": hit, "latency": lat, "padded": padded})
    return out


def required_coverage(target: int, profit_factor: float) -> int:
    return max(0, math.ceil(target / profit_factor - 1e-9))


def lpgst_solve(inst: LpgstInstance, oracle: GsoOracle, config: LpgstConfig = LpgstConfig()) -> LpgstResult:
    """Minimum-latency candidate over the ``l`` sweep that covers enough groups.

    Enough means ``ceil(h / a)`` for an oracle with profit factor ``a``.
    Ties go to the smaller ``l``.
    """
    if inst.target == 0:
        t = Tour.closed(inst.metric, inst.root)
        lat = instance_latency(inst, t)
        return LpgstResult(t, lat, tuple(covered_groups(inst.groups, t.vertices)), 0, lat)
    need = required_coverage(inst.target, oracle.profit_factor)
    cands = lpgst_candidates(inst, oracle, config)
    ok = [c for c in cands if len(c["covered"]) >= need]
    if not ok:
        best = max(len(c["covered"]) for c in cands)
        raise InfeasibleError(f"no budget level covers {need} groups (best {best} of {len(inst.groups)})")
    pick = ok[0]
    for c in ok[1:]:
        if c["latency"] < pick["latency"] - RTOL * max(1.0, pick["latency"]):
            pick = c
    return LpgstResult(pick["tour"], pick["latency"], pick["covered"], pick["l"], pick["padded"], cands)


@dataclass
class LatencyGstResult:
    tour: Tour
    latency: float
    start: int
    phases: int


def latency_gst_solve(
    metric: Metric,
    root: int,
    groups: Sequence[Sequence[int]],
    weights: Sequence[float],
    oracle: GsoOracle,
    beta: float = 1.25,
) -> LatencyGstResult:
    """Cover every group; phase ``i`` gets budget ``beta**i`` units and residual weights as profits.

    Every starting exponent up to the saturation level is tried and the
    lowest-latency tour kept. Once only zero-weight groups remain, they get
    unit profit so the tour still reaches them.
    """
    groups = tuple(tuple(sorted(set(g))) for g in groups)
    weights = tuple(float(x) for x in weights)
    empty = [i for i, g in enumerate(groups) if not g]
    if empty:
        raise InfeasibleError(f"group {empty[0]} is empty and can never be covered")
    unit = length_unit(metric)
    top = budget_levels(metric, beta) + 1
    g = len(groups)
    best: LatencyGstResult | None = None
    for start in range(0, top + 1):
        tour = Tour.closed(metric, root)
        covered = set(covered_groups(groups, (root,)))
        i, phases, abandoned = start, 0, False
        while len(covered) < g:
            if i > top + 64:
                raise InfeasibleError("phases stopped making progress")
            left = [j for j in range(g) if j not in covered]
            if any(weights[j] > 0 for j in left):
                profits = [0.0 if j in covered else weights[j] for j in range(g)]
            else:
                profits = [0.0 if j in covered else 1.0 for j in range(g)]
            step = _solve(oracle, metric, root, groups, profits, beta**i * unit)
            i += 1
            if len(step.vertices) <= 2:
                continue
            tour = tour.then(step)
            phases += 1
            covered.update(covered_groups(groups, step.vertices))
            if best is not None:
                arr = arrival_times(tour, groups)
                bound = sum(weights[j] * arr[j] for j in range(g))
                if bound >= best.latency - RTOL * max(1.0, best.latency):
                    abandoned = True
                    break
        if abandoned:
            continue
        lat = latency(metric, root, groups, weights, tour)
        if best is None or lat < best.latency - RTOL * max(1.0, best.latency):
            best = LatencyGstResult(tour, lat, start, phases)
    return best
