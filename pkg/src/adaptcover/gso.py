"""Group Steiner orienteering: best-profit root tour within a length budget.

Two oracles are provided. ``gso_exact`` is exact through a Held-Karp table over
every subset of group vertices. ``gso_star`` handles star metrics, where the
problem is monotone submodular maximisation under a knapsack constraint and
partial enumeration plus density greedy gives a ``1 - 1/e`` guarantee.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations
from typing import Callable, Sequence

import numpy as np

from .errors import LimitExceeded
from .metric import RTOL, Metric, SubsetDP, Tour, close_leq

EXACT_CANDIDATE_LIMIT = 16
STAR_FACTOR = math.e / (math.e - 1)


@dataclass(frozen=True)
class GsoInstance:
    metric: Metric
    root: int
    groups: tuple[tuple[int, ...], ...]
    profits: tuple[float, ...]
    budget: float

    def __post_init__(self):
        object.__setattr__(self, "groups", tuple(tuple(sorted(set(int(v) for v in g))) for g in self.groups))
        object.__setattr__(self, "profits", tuple(float(p) for p in self.profits))
        if len(self.groups) != len(self.profits):
            raise ValueError("one profit per group")
        if any(p < 0 for p in self.profits):
            raise ValueError("profits must be non-negative")
        if self.budget < 0:
            raise ValueError("budget must be non-negative")
        n = self.metric.n
        if any(not 0 <= v < n for g in self.groups for v in g):
            raise IndexError("group vertex out of range")


def covered_groups(groups: Sequence[Sequence[int]], vertices) -> list[int]:
    seen = set(vertices)
    return [i for i, g in enumerate(groups) if seen.intersection(g)]


def profit(inst: GsoInstance, tour: Tour) -> float:
    return float(sum(inst.profits[i] for i in covered_groups(inst.groups, tour.vertices)))


# --- exact -------------------------------------------------------------------------


@lru_cache(maxsize=64)
def _exact_tables(metric: Metric, root: int, groups: tuple):
    cands = tuple(sorted({v for g in groups for v in g} - {root}))
    if len(cands) > EXACT_CANDIDATE_LIMIT:
        raise LimitExceeded(f"exact GSO over {len(cands)} candidate vertices (limit {EXACT_CANDIDATE_LIMIT})")
    dp = SubsetDP(metric, root, cands)
    inc = np.zeros((len(cands), len(groups)), dtype=np.int64)
    pos = {v: j for j, v in enumerate(cands)}
    at_root = np.zeros(len(groups), dtype=bool)
    for gi, g in enumerate(groups):
        for v in g:
            if v == root:
                at_root[gi] = True
            else:
                inc[pos[v], gi] = 1
    cover = (dp.bits.astype(np.int64) @ inc > 0) | at_root[None, :]
    return dp, cover


def gso_exact(inst: GsoInstance) -> Tour:
    """Maximum-profit root tour of length at most the budget.

    Ties go to the shorter tour, then to the lexicographically smallest vertex set.
    """
    dp, cover = _exact_tables(inst.metric, inst.root, inst.groups)
    prof = cover @ np.asarray(inst.profits, dtype=np.float64) if inst.groups else np.zeros(len(dp.closed))
    length = dp.closed
    slack = RTOL * max(1.0, inst.budget)
    feasible = length <= inst.budget + slack
    best = prof[feasible].max()
    tol = RTOL * max(1.0, abs(best))
    pool = np.flatnonzero(feasible & (prof >= best - tol))
    shortest = length[pool].min()
    pool = pool[length[pool] <= shortest + RTOL * max(1.0, shortest)]
    mask = min(pool, key=lambda m: tuple(v for j, v in enumerate(dp.cands) if m >> j & 1))
    return Tour.closed(inst.metric, inst.root, dp.order(int(mask)))


# --- star metrics ------------------------------------------------------------------------


@dataclass(frozen=True)
class StarShape:
    """Zero-distance classes of a star around its center ``root``."""

    root_class: tuple[int, ...]
    classes: tuple[tuple[int, ...], ...]
    radius: tuple[float, ...]


@lru_cache(maxsize=64)
def star_shape(metric: Metric, root: int) -> StarShape | None:
    """Classes of a star metric centred at ``root``, or None when the metric is not one.

    Vertices at distance zero from each other form one class (multiway copies);
    distinct classes must satisfy ``d(i, j) = d(r, i) + d(r, j)``.
    """
    d = metric.dist
    n = metric.n
    tol = RTOL * max(1.0, float(d.max(initial=0.0)))
    zero = d <= tol
    through = d[root][:, None] + d[root][None, :]
    if not np.all(zero | (np.abs(d - through) <= tol)):
        return None
    label = [-1] * n
    reps = []
    for v in range(n):
        if label[v] < 0:
            members = np.flatnonzero(zero[v])
            for u in members:
                label[u] = len(reps)
            reps.append(tuple(int(u) for u in members))
    root_class = reps[label[root]]
    others = [c for c in reps if root not in c]
    return StarShape(root_class, tuple(others), tuple(float(d[root, c[0]]) for c in others))


def is_star(metric: Metric, root: int = 0) -> bool:
    return star_shape(metric, root) is not None


def gso_star(inst: GsoInstance, seed_size: int = 3) -> Tour:
    """Partial enumeration over seeds of at most ``seed_size`` leaves, then density greedy.

    Selecting a leaf costs its round trip ``2 d(r, j)``; the selection must fit in
    the budget, so the returned tour never exceeds it.
    """
    shape = star_shape(inst.metric, inst.root)
    if shape is None:
        raise ValueError("gso_star needs a star metric centred at the root")
    k, g = len(shape.classes), len(inst.groups)
    prof = np.asarray(inst.profits, dtype=np.float64)
    cov = np.zeros((k, g), dtype=bool)
    base = np.zeros(g, dtype=bool)
    where = {}
    for c, members in enumerate(shape.classes):
        for v in members:
            where[v] = c
    for gi, grp in enumerate(inst.groups):
        for v in grp:
            if v in where:
                cov[where[v], gi] = True
            else:
                base[gi] = True
    cost = 2.0 * np.asarray(shape.radius)
    budget = inst.budget + RTOL * max(1.0, inst.budget)
    ceiling = float(prof[base | cov.any(axis=0)].sum())

    def value(mask):
        return float(prof[mask].sum())

    best_sel, best_val, best_cost = (), value(base), 0.0
    # a leaf adding nothing beyond the root's groups never starts a useful seed
    useful = [j for j in range(k) if prof[cov[j] & ~base].sum() > 0]
    done = best_val >= ceiling - RTOL * max(1.0, ceiling)
    for size in range(1, min(seed_size, len(useful)) + 1):
        if done:
            break
        for seed in combinations(useful, size):
            spent = float(cost[list(seed)].sum())
            if spent > budget:
                continue
            sel, covered, spent = _greedy(list(seed), base | cov[list(seed)].any(axis=0), spent, cov, cost, prof, budget)
            val = value(covered)
            scale = RTOL * max(1.0, best_val)
            if val > best_val + scale or (val >= best_val - scale and spent < best_cost - RTOL * max(1.0, best_cost)):
                best_sel, best_val, best_cost = tuple(sorted(sel)), val, spent
            if best_val >= ceiling - RTOL * max(1.0, ceiling):
                done = True
                break
    # free vertices sitting on the center still have to be visited to count
    free = [v for v in shape.root_class if v != inst.root and any(prof[gi] > 0 and v in grp for gi, grp in enumerate(inst.groups))]
    inner = free + [v for c in sorted(best_sel, key=lambda c: shape.classes[c][0]) for v in shape.classes[c]]
    return Tour.closed(inst.metric, inst.root, inner)


def _greedy(sel, covered, spent, cov, cost, prof, budget):
    sel = list(sel)
    while True:
        gains = cov[:, ~covered] @ prof[~covered]
        fits = (spent + cost <= budget) & (gains > 0)
        fits[sel] = False
        if not fits.any():
            return sel, covered, spent
        density = np.where(fits, gains / np.maximum(cost, 1e-300), -np.inf)
        j = int(density.argmax())
        sel.append(j)
        covered = covered | cov[j]
        spent += float(cost[j])


# --- oracle handles -------------------------------------------------------------------------


@dataclass(frozen=True)
class GsoOracle:
    """A GSO solver with its declared bicriteria factors (profit ``a``, length ``b``)."""

    name: str
    profit_factor: float
    length_factor: float
    solve: Callable[[GsoInstance], Tour]

    def __call__(self, inst: GsoInstance) -> Tour:
        tour = self.solve(inst)
        if tour.root != inst.root or tour.vertices[-1] != inst.root:
            raise RuntimeError(f"oracle {self.name} returned a walk that is not a root tour")
        if not close_leq(tour.length, self.length_factor * inst.budget):
            raise RuntimeError(f"oracle {self.name} exceeded its length factor")
        return tour


EXACT = GsoOracle("exact", 1.0, 1.0, gso_exact)
STAR = GsoOracle("star", STAR_FACTOR, 1.0, gso_star)


def make_oracle(name: str, metric: Metric | None = None, root: int = 0, seed_size: int = 3) -> GsoOracle:
    """``exact``, ``star`` or ``auto`` (star whenever the metric is a star around the root)."""
    if name == "auto":
        if metric is None:
            raise ValueError("auto oracle selection needs the metric")
        name = "star" if is_star(metric, root) else "exact"
    if name == "exact":
        return EXACT
    if name == "star":
        if metric is not None and not is_star(metric, root):
            raise ValueError("star oracle requested on a metric that is not a star around the root")
        if seed_size == 3:
            return STAR
        # smaller seeds are faster but only carry the empirical bound
        return GsoOracle(f"star{seed_size}", STAR_FACTOR, 1.0, lambda inst: gso_star(inst, seed_size))
    raise ValueError(f"unknown oracle {name!r}")
