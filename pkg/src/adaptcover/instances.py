"""Scenario distributions, problem instances, generators and their JSON documents."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational
from typing import Iterable, Sequence

import numpy as np

from .metric import Metric, MetricError, Violation, add_zero_copies, metric_closure, star_metric, validate

OBJECTIVES = ("isolation", "adaptsp", "adaptrp")
SCHEMA_VERSION = 1


class InstanceError(ValueError):
    def __init__(self, issues: Sequence[Violation]):
        self.issues = list(issues)
        super().__init__("invalid instance: " + "; ".join(str(i) for i in self.issues[:5]))


def _as_prob(p):
    if isinstance(p, Fraction):
        return p
    if isinstance(p, bool):
        raise TypeError("probability cannot be bool")
    if isinstance(p, Rational):
        return Fraction(p)
    return float(p)


@dataclass(frozen=True)
class DemandDistribution:
    """Explicit distribution: scenario ``i`` (a vertex set) occurs with probability ``probs[i]``.

    Scenarios are stored as sorted tuples; probabilities keep exact rationals
    when given as such.
    """

    scenarios: tuple[tuple[int, ...], ...]
    probs: tuple

    def __post_init__(self):
        scen = tuple(tuple(sorted(set(int(v) for v in s))) for s in self.scenarios)
        object.__setattr__(self, "scenarios", scen)
        object.__setattr__(self, "probs", tuple(_as_prob(p) for p in self.probs))

    @property
    def m(self) -> int:
        return len(self.scenarios)

    @property
    def weights(self) -> np.ndarray:
        return np.array([float(p) for p in self.probs])

    def sets(self) -> list[frozenset[int]]:
        return [frozenset(s) for s in self.scenarios]


@dataclass(frozen=True)
class CoverInstance:
    metric: Metric
    root: int
    dist: DemandDistribution
    objective: str = "isolation"

    @property
    def n(self) -> int:
        return self.metric.n

    @property
    def m(self) -> int:
        return self.dist.m

    @property
    def scenarios(self) -> list[frozenset[int]]:
        return self.dist.sets()

    @property
    def weights(self) -> np.ndarray:
        return self.dist.weights

    def with_objective(self, objective: str) -> "CoverInstance":
        return CoverInstance(self.metric, self.root, self.dist, objective)


@dataclass(frozen=True)
class SubInstance:
    """Scenario subset ``members`` with renormalised weights (floats, summing to 1)."""

    members: tuple[int, ...]
    weights: tuple[float, ...]

    def __post_init__(self):
        if not self.members:
            raise ValueError("sub-instance needs at least one scenario")
        if len(self.members) != len(self.weights):
            raise ValueError("one weight per member")
        if any(w <= 0 for w in self.weights):
            raise ValueError("sub-instance weights must be positive")
        if abs(sum(self.weights) - 1.0) > 1e-9:
            raise ValueError(f"sub-instance weights sum to {sum(self.weights)}")

    @classmethod
    def full(cls, inst: CoverInstance) -> "SubInstance":
        w = inst.weights
        return cls(tuple(range(inst.m)), tuple(float(x) for x in w / w.sum()))

    @property
    def q(self) -> dict[int, float]:
        return dict(zip(self.members, self.weights))

    def restrict(self, part: Iterable[int]) -> "SubInstance":
        q = self.q
        part = sorted(part)
        mass = sum(q[i] for i in part)
        return SubInstance(tuple(part), tuple(q[i] / mass for i in part))

    def mass(self, part: Iterable[int]) -> float:
        q = self.q
        return sum(q[i] for i in part)


def restrict(inst: CoverInstance, sub: SubInstance, scenarios: dict[int, Iterable[int]] | None = None) -> CoverInstance:
    """Stand-alone instance of a sub-instance (optionally with replaced scenario sets)."""
    sets = inst.dist.scenarios
    scen = [tuple(scenarios[i]) if scenarios is not None else sets[i] for i in sub.members]
    return CoverInstance(inst.metric, inst.root, DemandDistribution(tuple(scen), sub.weights), inst.objective)


@dataclass(frozen=True)
class GstInstance:
    metric: Metric
    root: int
    groups: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        object.__setattr__(self, "groups", tuple(tuple(sorted(set(int(v) for v in g))) for g in self.groups))


# --- validation ---------------------------------------------------------------


def instance_issues(inst: CoverInstance) -> list[Violation]:
    out: list[Violation] = []
    n = inst.metric.n
    if not 0 <= inst.root < n:
        out.append(Violation("root out of range", (inst.root,)))
    if inst.objective not in OBJECTIVES:
        out.append(Violation("unknown objective", (inst.objective,)))
    d = inst.dist
    if d.m == 0:
        out.append(Violation("no scenarios", ()))
    if len(d.probs) != d.m:
        out.append(Violation("probability count", (len(d.probs), d.m)))
    seen: dict[tuple, int] = {}
    for i, s in enumerate(d.scenarios):
        if s in seen:
            out.append(Violation("duplicate scenario", (seen[s], i)))
        seen.setdefault(s, i)
        for v in s:
            if not 0 <= v < n:
                out.append(Violation("vertex out of range", (i, v)))
    for i, p in enumerate(d.probs):
        if not (p > 0) or (isinstance(p, float) and not math.isfinite(p)):
            out.append(Violation("non-positive probability", (i,), str(p)))
    total = sum(d.probs)
    if abs(float(total) - 1.0) > 1e-9:
        out.append(Violation("probabilities do not sum to 1", (), str(total)))
    return out


def validate_instance(inst: CoverInstance) -> CoverInstance:
    issues = instance_issues(inst)
    if issues:
        raise InstanceError(issues)
    return inst


def make_instance(dist, root: int, scenarios, probs, objective: str = "isolation") -> CoverInstance:
    metric = dist if isinstance(dist, Metric) else validate(dist)
    return validate_instance(CoverInstance(metric, root, DemandDistribution(tuple(scenarios), tuple(probs)), objective))


# --- generators ---------------------------------------------------------------


def gen_paper_star(n: int) -> CoverInstance:
    """Star with ``d(r, v_i) = 2**i``; scenarios ``{v_i}`` w.p. ``2**-i`` plus the empty one."""
    if n < 2:
        raise ValueError("n >= 2 required")
    metric = star_metric([2.0**i for i in range(1, n)])
    scenarios = [(i,) for i in range(1, n)] + [()]
    probs = [Fraction(1, 2**i) for i in range(1, n)] + [Fraction(1, 2 ** (n - 1))]
    return validate_instance(CoverInstance(metric, 0, DemandDistribution(tuple(scenarios), tuple(probs))))


def gen_trp_star(n: int) -> CoverInstance:
    """Star with hub ``v`` (vertex 1) at ``sqrt(n)`` and unit leaves ``u_1..u_n`` (vertices 2..n+1).

    ``{v}`` has probability ``1 - 1/n``; each ``{v, u_i}`` has ``1/n**2``.
    """
    if n < 1:
        raise ValueError("n >= 1 required")
    metric = star_metric([math.sqrt(n)] + [1.0] * n)
    scenarios = [(1,)] + [(1, 1 + i) for i in range(1, n + 1)]
    probs = [1 - Fraction(1, n)] + [Fraction(1, n * n)] * n
    return validate_instance(
        CoverInstance(metric, 0, DemandDistribution(tuple(scenarios), tuple(probs)), "adaptrp")
    )


def default_hardness_L(gst: GstInstance):
    dmax = float(gst.metric.dist.max())
    L = 10 * 2 * gst.metric.n * dmax
    return int(L) if float(L).is_integer() else L


def gst_to_adaptsp(gst: GstInstance, L=None) -> CoverInstance:
    """AdapTSP instance whose optimum is within one of the GST optimum.

    Adds ``s`` (vertex ``n``), a zero-distance copy of the root; scenario ``i`` is
    ``X_i + {s}`` with probability ``1/(gL)``, and ``{s}`` has ``1 - 1/L``.
    """
    n, g = gst.metric.n, len(gst.groups)
    if g == 0:
        raise ValueError("need at least one group")
    issues = []
    seen = {}
    for i, grp in enumerate(gst.groups):
        if not grp:
            issues.append(Violation("empty group", (i,)))
        if grp in seen:
            issues.append(Violation("duplicate group", (seen[grp], i)))
        seen.setdefault(grp, i)
    if issues:
        raise InstanceError(issues)
    if L is None:
        L = default_hardness_L(gst)
    floor = 2 * n * float(gst.metric.dist.max())
    if L < floor or L <= 1:
        raise ValueError(f"L={L} must be at least 2*n*max distance = {floor} (and > 1)")
    s = n
    metric = add_zero_copies(gst.metric, gst.root, 1)
    scenarios = [tuple(grp) + (s,) for grp in gst.groups] + [(s,)]
    if isinstance(L, int) or float(L).is_integer():
        Lq = Fraction(int(L))
        probs = [1 / (g * Lq)] * g + [1 - 1 / Lq]
    else:
        probs = [1.0 / (g * L)] * g + [1.0 - 1.0 / L]
    return validate_instance(
        CoverInstance(metric, gst.root, DemandDistribution(tuple(scenarios), tuple(probs)), "adaptsp")
    )


def gen_random(
    seed: int,
    n: int,
    m: int,
    *,
    kind: str = "graph",
    max_weight: int = 10,
    skew: str = "uniform",
    root_demand: bool = False,
    objective: str = "isolation",
) -> CoverInstance:
    """Seeded random instance with integer distances and rational probabilities.

    ``kind``: ``graph`` (shortest paths of a random complete graph) or ``star``.
    ``skew``: ``uniform`` (random integer weights) or ``exponential`` (``2**-i``
    in shuffled order).
    """
    if n < 1:
        raise ValueError("n >= 1 required")
    pool = list(range(n)) if root_demand else list(range(1, n))
    if m < 1 or m > 2 ** len(pool):
        raise ValueError(f"cannot draw {m} distinct scenarios over {len(pool)} vertices")
    if len(pool) > 30:
        raise ValueError("random scenarios support at most 30 candidate vertices")
    rng = np.random.default_rng(seed)
    if kind == "graph":
        w = rng.integers(1, max_weight + 1, size=(n, n))
        edges = [(u, v, int(w[u, v])) for u in range(n) for v in range(u + 1, n)]
        metric = metric_closure(edges, n)
    elif kind == "star":
        metric = star_metric([int(x) for x in rng.integers(1, max_weight + 1, size=n - 1)])
    else:
        raise ValueError(f"unknown kind {kind!r}")
    codes = rng.choice(2 ** len(pool), size=m, replace=False) if len(pool) <= 20 else _distinct_codes(rng, len(pool), m)
    scenarios = [tuple(pool[b] for b in range(len(pool)) if (int(c) >> b) & 1) for c in codes]
    if skew == "uniform":
        raw = [int(x) for x in rng.integers(1, 11, size=m)]
    elif skew == "exponential":
        raw = [2 ** (m - 1 - int(k)) for k in rng.permutation(m)]
    else:
        raise ValueError(f"unknown skew {skew!r}")
    total = sum(raw)
    probs = [Fraction(x, total) for x in raw]
    return validate_instance(CoverInstance(metric, 0, DemandDistribution(tuple(scenarios), tuple(probs)), objective))


def _distinct_codes(rng, k: int, m: int) -> list[int]:
    seen: set[int] = set()
    while len(seen) < m:
        seen.add(int(rng.integers(0, 2**k)))
    return sorted(seen)


def gen_random_gst(seed: int, n: int, g: int, max_weight: int = 5) -> GstInstance:
    """Tiny random group Steiner instance with distinct non-empty groups."""
    rng = np.random.default_rng(seed)
    w = rng.integers(1, max_weight + 1, size=(n, n))
    metric = metric_closure([(u, v, int(w[u, v])) for u in range(n) for v in range(u + 1, n)], n)
    if g > 2**n - 1:
        raise ValueError("too many groups for distinctness")
    codes = rng.choice(np.arange(1, 2**n), size=g, replace=False)
    groups = tuple(tuple(b for b in range(n) if (int(c) >> b) & 1) for c in codes)
    return GstInstance(metric, 0, groups)


# --- JSON documents -------------------------------------------------------------


def encode_number(x):
    if isinstance(x, Fraction):
        return x.numerator if x.denominator == 1 else f"{x.numerator}/{x.denominator}"
    if isinstance(x, (int, np.integer)):
        return int(x)
    x = float(x)
    if x.is_integer() and abs(x) < 2**53:
        return int(x)
    return x


def decode_number(x):
    if isinstance(x, str):
        return Fraction(x)
    if isinstance(x, bool):
        raise TypeError("boolean is not a number")
    if isinstance(x, int):
        return Fraction(x)
    return float(x)


def metric_to_doc(metric: Metric) -> dict:
    doc = {"n": metric.n, "dist": [[encode_number(x) for x in row] for row in metric.dist]}
    if metric.labels is not None:
        doc["labels"] = list(metric.labels)
    return doc


def metric_from_doc(doc: dict) -> Metric:
    if "dist" in doc:
        dist = np.array([[float(decode_number(x)) for x in row] for row in doc["dist"]], dtype=np.float64)
        if "n" in doc and dist.shape != (doc["n"], doc["n"]):
            raise MetricError([Violation("shape", dist.shape, f"expected n={doc['n']}")])
        return validate(dist, doc.get("labels"))
    if "edges" in doc:
        edges = [(int(u), int(v), float(decode_number(w))) for u, v, w in doc["edges"]]
        return metric_closure(edges, int(doc["n"]))
    raise InstanceError([Violation("missing field", ("dist|edges",))])


def instance_to_doc(inst: CoverInstance) -> dict:
    return {
        "schema": "adaptcover/instance",
        "version": SCHEMA_VERSION,
        **metric_to_doc(inst.metric),
        "root": inst.root,
        "scenarios": [list(s) for s in inst.dist.scenarios],
        "probs": [encode_number(p) for p in inst.dist.probs],
        "objective": inst.objective,
    }


def instance_from_doc(doc: dict) -> CoverInstance:
    try:
        metric = metric_from_doc(doc)
        inst = CoverInstance(
            metric,
            int(doc.get("root", 0)),
            DemandDistribution(
                tuple(tuple(s) for s in doc["scenarios"]),
                tuple(decode_number(p) for p in doc["probs"]),
            ),
            doc.get("objective", "isolation"),
        )
    except KeyError as exc:
        raise InstanceError([Violation("missing field", (exc.args[0],))]) from None
    return validate_instance(inst)


def gst_to_doc(gst: GstInstance) -> dict:
    return {
        "schema": "adaptcover/gst",
        "version": SCHEMA_VERSION,
        **metric_to_doc(gst.metric),
        "root": gst.root,
        "groups": [list(g) for g in gst.groups],
    }


def gst_from_doc(doc: dict) -> GstInstance:
    return GstInstance(metric_from_doc(doc), int(doc.get("root", 0)), tuple(tuple(g) for g in doc["groups"]))
