"""Finite metric spaces, r-tours, and the tour subroutines every solver shares."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property, lru_cache
from typing import Iterable, Sequence

import numpy as np
from scipy.sparse.csgraph import csgraph_from_dense, depth_first_order, minimum_spanning_tree, shortest_path

RTOL = 1e-9
HELD_KARP_LIMIT = 10


def close_leq(a: float, b: float, rtol: float = RTOL) -> bool:
    """``a <= b`` up to a relative tolerance (absolute below magnitude one)."""
    return a <= b + rtol * max(1.0, abs(a), abs(b))


@dataclass(frozen=True)
class Violation:
    kind: str
    indices: tuple
    detail: str = ""

    def __str__(self) -> str:
        return f"{self.kind} at {self.indices}" + (f": {self.detail}" if self.detail else "")


class MetricError(ValueError):
    def __init__(self, violations: Sequence[Violation]):
        self.violations = list(violations)
        shown = "; ".join(str(v) for v in self.violations[:5])
        more = f" (+{len(self.violations) - 5} more)" if len(self.violations) > 5 else ""
        super().__init__(f"invalid metric: {shown}{more}")


@dataclass(frozen=True, eq=False)
class Metric:
    """Distance matrix over vertices ``0..n-1``; immutable.

    Construct through :func:`validate` unless the matrix is known to be a metric.
    """

    dist: np.ndarray
    labels: tuple[str, ...] | None = None

    def __post_init__(self):
        d = np.array(self.dist, dtype=np.float64)
        if d.ndim != 2 or d.shape[0] != d.shape[1]:
            raise MetricError([Violation("shape", d.shape, "distance matrix must be square")])
        d.setflags(write=False)
        object.__setattr__(self, "dist", d)
        if self.labels is not None:
            labels = tuple(str(x) for x in self.labels)
            if len(labels) != d.shape[0]:
                raise MetricError([Violation("labels", (len(labels),), "one label per vertex")])
            object.__setattr__(self, "labels", labels)

    @property
    def n(self) -> int:
        return self.dist.shape[0]

    def d(self, u: int, v: int) -> float:
        return float(self.dist[u, v])

    @cached_property
    def key(self) -> tuple:
        return (self.n, self.dist.tobytes())

    def __eq__(self, other) -> bool:
        return isinstance(other, Metric) and self.key == other.key

    def __hash__(self) -> int:
        return hash(self.key)

    def __repr__(self) -> str:
        return f"Metric(n={self.n})"


def metric_violations(dist) -> list[Violation]:
    d = np.asarray(dist, dtype=np.float64)
    if d.ndim != 2 or d.shape[0] != d.shape[1]:
        return [Violation("shape", tuple(d.shape), "distance matrix must be square")]
    out: list[Violation] = []
    bad = np.argwhere(~np.isfinite(d))
    out += [Violation("non-finite", tuple(int(x) for x in ij)) for ij in bad]
    if out:
        return out
    out += [Violation("negative", (int(i), int(j)), f"{d[i, j]}") for i, j in np.argwhere(d < 0)]
    scale = max(1.0, float(np.abs(d).max(initial=0.0)))
    tol = RTOL * scale
    for i in np.flatnonzero(np.abs(np.diag(d)) > tol):
        out.append(Violation("nonzero diagonal", (int(i), int(i)), f"{d[i, i]}"))
    for i, j in np.argwhere(np.abs(d - d.T) > tol):
        if i < j:
            out.append(Violation("asymmetric", (int(i), int(j)), f"{d[i, j]} != {d[j, i]}"))
    n = d.shape[0]
    for v in range(n):
        # d[u, w] > d[u, v] + d[v, w]
        via = d[:, v][:, None] + d[v, :][None, :]
        for u, w in np.argwhere(d > via + tol):
            if u < w:
                out.append(
                    Violation("triangle", (int(u), int(w), v), f"{d[u, w]} > {d[u, v]} + {d[v, w]}")
                )
    return out


def validate(dist, labels: Sequence[str] | None = None) -> Metric:
    """Return a :class:`Metric` or raise :class:`MetricError` listing every violated axiom.

    Triangle violations are reported as ``(u, w, v)``: ``d[u][w] > d[u][v] + d[v][w]``.
    """
    violations = metric_violations(dist)
    if violations:
        raise MetricError(violations)
    return Metric(np.asarray(dist, dtype=np.float64), None if labels is None else tuple(labels))


def metric_closure(edges: Iterable[tuple[int, int, float]], n: int) -> Metric:
    """All-pairs shortest-path metric of an undirected weighted graph."""
    w = np.full((n, n), np.inf)
    np.fill_diagonal(w, 0.0)
    for u, v, length in edges:
        if length < 0:
            raise MetricError([Violation("negative", (u, v), f"edge weight {length}")])
        if u == v:
            continue
        w[u, v] = w[v, u] = min(w[u, v], float(length))
    graph = csgraph_from_dense(w, null_value=np.inf)
    d = shortest_path(graph, method="D", directed=False)
    unreachable = np.argwhere(~np.isfinite(d))
    if len(unreachable):
        u, v = (int(x) for x in unreachable[0])
        raise MetricError([Violation("disconnected", (u, v), f"vertex {v} unreachable from {u}")])
    return validate(d)


def star_metric(weights: Sequence[float]) -> Metric:
    """Metric of a weighted star; vertex 0 is the center, leaf ``j`` sits at ``weights[j-1]``."""
    w = np.asarray([0.0, *weights], dtype=np.float64)
    if (w < 0).any():
        j = int(np.flatnonzero(w < 0)[0])
        raise MetricError([Violation("negative", (0, j), f"leaf weight {w[j]}")])
    d = w[:, None] + w[None, :]
    np.fill_diagonal(d, 0.0)
    return Metric(d)


def add_zero_copies(metric: Metric, source: int, count: int) -> Metric:
    """Append ``count`` vertices at distance zero from ``source`` (and from each other)."""
    if not 0 <= source < metric.n:
        raise IndexError(f"source {source} out of range")
    if count == 0:
        return metric
    idx = list(range(metric.n)) + [source] * count
    d = metric.dist[np.ix_(idx, idx)]
    labels = None
    if metric.labels is not None:
        labels = metric.labels + tuple(f"{metric.labels[source]}'{k + 1}" for k in range(count))
    return Metric(d, labels)


@dataclass(frozen=True)
class Tour:
    """Closed walk ``root, ..., root`` on a metric."""

    vertices: tuple[int, ...]
    metric: Metric

    def __post_init__(self):
        verts = tuple(int(v) for v in self.vertices)
        if not verts:
            raise ValueError("a tour needs at least its root")
        if any(not 0 <= v < self.metric.n for v in verts):
            raise IndexError(f"tour vertex out of range in {verts}")
        object.__setattr__(self, "vertices", verts)

    @classmethod
    def closed(cls, metric: Metric, root: int, inner: Iterable[int] = ()) -> "Tour":
        return cls((root, *inner, root), metric)

    @property
    def root(self) -> int:
        return self.vertices[0]

    @property
    def inner(self) -> tuple[int, ...]:
        return self.vertices[1:-1]

    @cached_property
    def prefix_lengths(self) -> np.ndarray:
        v = np.asarray(self.vertices)
        legs = self.metric.dist[v[:-1], v[1:]]
        return np.concatenate([[0.0], np.cumsum(legs)])

    @property
    def length(self) -> float:
        return float(self.prefix_lengths[-1])

    def then(self, other: "Tour") -> "Tour":
        """Concatenation of two r-tours with a shared root."""
        if other.root != self.vertices[-1]:
            raise ValueError("tours must share the root to be concatenated")
        return Tour(self.vertices + other.vertices[1:], self.metric)

    def __repr__(self) -> str:
        return f"Tour({self.vertices}, length={self.length:g})"


def walk_length(metric: Metric, vertices: Sequence[int]) -> float:
    if len(vertices) < 2:
        return 0.0
    v = np.asarray(vertices)
    return float(metric.dist[v[:-1], v[1:]].sum())


def arrival_times(tour: Tour, targets: Sequence[Iterable[int]]) -> list[float]:
    """Prefix length at which each target set is first touched; the full length if never."""
    pref = tour.prefix_lengths
    first: dict[int, float] = {}
    for pos, v in enumerate(tour.vertices):
        first.setdefault(v, float(pref[pos]))
    total = tour.length
    out = []
    for target in targets:
        hits = [first[v] for v in target if v in first]
        out.append(min(hits) if hits else total)
    return out


# --- subset dynamic programs -------------------------------------------------


@lru_cache(maxsize=None)
def _bit_table(k: int) -> np.ndarray:
    return ((np.arange(1 << k)[:, None] >> np.arange(k)[None, :]) & 1).astype(bool)


class SubsetDP:
    """Held-Karp table over every subset of ``cands`` starting from ``root``.

    ``cost[mask, j]`` is the cheapest path from the root through exactly the
    vertices of ``mask`` ending at ``cands[j]``. With ``latency=True`` each leg is
    multiplied by the number of still-unvisited vertices of the full set, so
    ``cost[full, j]`` is the sum of arrival times.
    """

    def __init__(self, metric: Metric, root: int, cands: Sequence[int], latency: bool = False):
        self.metric = metric
        self.root = root
        self.cands = tuple(int(c) for c in cands)
        k = len(self.cands)
        self.k = k
        size = 1 << k
        c = np.asarray(self.cands, dtype=np.int64)
        dd = metric.dist[np.ix_(c, c)] if k else np.zeros((0, 0))
        bits = _bit_table(k)
        pop = bits.sum(axis=1)
        cost = np.full((size, k), np.inf)
        parent = np.full((size, k), -1, dtype=np.int64)
        for j in range(k):
            cost[1 << j, j] = metric.dist[root, c[j]] * (k if latency else 1)
        for mask in range(1, size):
            if pop[mask] < 2:
                continue
            members = np.flatnonzero(bits[mask])
            prev = mask ^ (1 << members)
            mult = (k - pop[mask] + 1) if latency else 1
            options = cost[prev] + dd[:, members].T * mult
            best = options.argmin(axis=1)
            cost[mask, members] = options[np.arange(len(members)), best]
            parent[mask, members] = best
        self.cost = cost
        self.parent = parent
        self.bits = bits
        back = metric.dist[c, root] if k else np.zeros(0)
        if k:
            closed = cost + back[None, :]
            self.closed = np.concatenate([[0.0], closed[1:].min(axis=1)])
            self.closed_end = np.concatenate([[-1], closed[1:].argmin(axis=1)])
        else:
            self.closed = np.zeros(1)
            self.closed_end = np.full(1, -1)

    def order(self, mask: int, end: int | None = None) -> tuple[int, ...]:
        """Vertex order realising the optimum for ``mask`` (closed tour if ``end`` is None)."""
        if mask == 0:
            return ()
        j = int(self.closed_end[mask]) if end is None else end
        seq = []
        while mask:
            seq.append(self.cands[j])
            prev_j = int(self.parent[mask, j])
            mask ^= 1 << j
            j = prev_j
        return tuple(reversed(seq))


@lru_cache(maxsize=256)
def subset_tours(metric: Metric, root: int, cands: tuple[int, ...]) -> SubsetDP:
    return SubsetDP(metric, root, cands)


def tsp_tour(metric: Metric, root: int, vertices: Iterable[int], exact_limit: int = HELD_KARP_LIMIT) -> Tour:
    """Root tour through ``vertices``: exact for up to ``exact_limit`` vertices, MST doubling beyond."""
    todo = sorted(set(int(v) for v in vertices) - {root})
    if not todo:
        return Tour.closed(metric, root)
    if len(todo) <= exact_limit:
        dp = SubsetDP(metric, root, todo)
        return Tour.closed(metric, root, dp.order((1 << len(todo)) - 1))
    return _mst_doubling(metric, root, todo)


def _mst_doubling(metric: Metric, root: int, todo: Sequence[int]) -> Tour:
    nodes = [root, *todo]
    sub = metric.dist[np.ix_(nodes, nodes)]
    # zero-length edges vanish in sparse form; nudge them so the tree stays connected
    tiny = np.where((sub == 0) & ~np.eye(len(nodes), dtype=bool), 1e-300, sub)
    mst = minimum_spanning_tree(tiny)
    sym = mst + mst.T
    order, _ = depth_first_order(sym, 0, directed=False, return_predecessors=True)
    return Tour.closed(metric, root, [nodes[i] for i in order[1:]])


def latency_order(metric: Metric, root: int, vertices: Iterable[int], exact_limit: int = HELD_KARP_LIMIT) -> tuple[int, ...]:
    """Visit order minimising the sum of arrival times from ``root``.

    Exact subset DP up to ``exact_limit`` vertices; nearest neighbour beyond.
    """
    todo = sorted(set(int(v) for v in vertices) - {root})
    if not todo:
        return ()
    if len(todo) <= exact_limit:
        dp = SubsetDP(metric, root, todo, latency=True)
        full = (1 << len(todo)) - 1
        end = int(dp.cost[full].argmin())
        return dp.order(full, end)
    out, here, left = [], root, list(todo)
    while left:
        nxt = min(left, key=lambda v: (metric.dist[here, v], v))
        out.append(nxt)
        left.remove(nxt)
        here = nxt
    return tuple(out)


def path_latency(metric: Metric, root: int, order: Sequence[int], demand: Iterable[int]) -> float:
    """Sum over ``demand`` of first-arrival times along ``root, *order``; the root arrives at 0."""
    t, here = 0.0, root
    first = {root: 0.0}
    for v in order:
        t += metric.dist[here, v]
        first.setdefault(v, t)
        here = v
    total = 0.0
    for v in demand:
        if v not in first:
            raise ValueError(f"demand vertex {v} is never visited")
        total += first[v]
    return total
