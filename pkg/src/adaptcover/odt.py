"""Optimal decision trees as isolation on a star.

Test ``j`` becomes a leaf at distance ``c_j / 2`` from the center, so a visit
there and back costs exactly ``c_j``. A disease's scenario is the set of
test vertices at which it shows demand. A test with ``l`` outcomes becomes
``l`` zero-distance copies; the disease has demand at the copy of its
outcome.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Union

import numpy as np

from .errors import InfeasibleStrategy
from .gso import make_oracle
from .instances import CoverInstance, DemandDistribution, _as_prob, decode_number, encode_number, validate_instance
from .isolation import iso_solve
from .lpgst import LpgstConfig
from .metric import Violation, add_zero_copies, star_metric
from .strategy import Leaf, Node, Observe, StrategyTree, Waypoint


class OdtError(ValueError):
    def __init__(self, issues):
        self.issues = list(issues)
        super().__init__("invalid decision-tree instance: " + "; ".join(str(i) for i in self.issues[:5]))


@dataclass(frozen=True)
class Test:
    """Binary test (``subset``: diseases giving a positive result) or multiway test (``parts``)."""

    __test__ = False  # keep pytest from collecting it

    cost: float
    subset: tuple[int, ...] | None = None
    parts: tuple[tuple[int, ...], ...] | None = None

    def __post_init__(self):
        if (self.subset is None) == (self.parts is None):
            raise ValueError("a test has either a subset or a partition")
        if self.subset is not None:
            object.__setattr__(self, "subset", tuple(sorted(set(self.subset))))
        else:
            object.__setattr__(self, "parts", tuple(tuple(sorted(p)) for p in self.parts))

    @property
    def multiway(self) -> bool:
        return self.parts is not None

    @property
    def outcomes(self) -> tuple:
        return tuple(range(len(self.parts))) if self.multiway else (True, False)

    def outcome(self, disease: int):
        if not self.multiway:
            return disease in self.subset
        for k, part in enumerate(self.parts):
            if disease in part:
                return k
        raise ValueError(f"disease {disease} missing from the test's partition")


@dataclass(frozen=True)
class OdtInstance:
    priors: tuple
    tests: tuple[Test, ...]

    def __post_init__(self):
        object.__setattr__(self, "priors", tuple(_as_prob(p) for p in self.priors))
        object.__setattr__(self, "tests", tuple(self.tests))

    @property
    def m(self) -> int:
        return len(self.priors)

    def signature(self, disease: int) -> tuple:
        return tuple(t.outcome(disease) for t in self.tests)


def odt_issues(odt: OdtInstance) -> list[Violation]:
    out = []
    m = odt.m
    if m == 0:
        out.append(Violation("no diseases", ()))
    for i, p in enumerate(odt.priors):
        if not p > 0:
            out.append(Violation("non-positive prior", (i,), str(p)))
    if abs(float(sum(odt.priors)) - 1.0) > 1e-9:
        out.append(Violation("priors do not sum to 1", (), str(sum(odt.priors))))
    for j, t in enumerate(odt.tests):
        if t.cost < 0:
            out.append(Violation("negative cost", (j,)))
        if t.multiway:
            flat = [i for p in t.parts for i in p]
            if sorted(flat) != list(range(m)):
                out.append(Violation("not a partition", (j,)))
        elif any(not 0 <= i < m for i in t.subset):
            out.append(Violation("disease out of range", (j,)))
    if out:
        return out
    seen: dict[tuple, int] = {}
    for i in range(m):
        sig = odt.signature(i)
        if sig in seen:
            out.append(Violation("unseparable pair", (seen[sig], i)))
        seen.setdefault(sig, i)
    return out


def validate_odt(odt: OdtInstance) -> OdtInstance:
    issues = odt_issues(odt)
    if issues:
        raise OdtError(issues)
    return odt


@dataclass(frozen=True)
class Reduction:
    instance: CoverInstance
    vertex_test: dict[int, tuple[int, object]]  # vertex -> (test, outcome it signals)


def odt_to_isolation(odt: OdtInstance) -> Reduction:
    validate_odt(odt)
    metric = star_metric([t.cost / 2 for t in odt.tests])
    vmap: dict[int, tuple[int, object]] = {}
    n = metric.n
    for j, t in enumerate(odt.tests):
        if not t.multiway:
            vmap[1 + j] = (j, True)
            continue
        vmap[1 + j] = (j, 0)
        extra = len(t.parts) - 1
        metric = add_zero_copies(metric, 1 + j, extra)
        for k in range(1, len(t.parts)):
            vmap[n] = (j, k)
            n += 1
    by_signal = {sig: v for v, sig in vmap.items()}
    scenarios = []
    for i in range(odt.m):
        s = []
        for j, t in enumerate(odt.tests):
            o = t.outcome(i)
            if t.multiway:
                s.append(by_signal[(j, o)])
            elif o:
                s.append(1 + j)
        scenarios.append(tuple(s))
    inst = CoverInstance(metric, 0, DemandDistribution(tuple(scenarios), odt.priors), "isolation")
    return Reduction(validate_instance(inst), vmap)


def restrict_odt(odt: OdtInstance, members, weights=None) -> OdtInstance:
    """Sub-problem on ``members`` (renumbered in order) with renormalised priors."""
    members = list(members)
    index = {d: k for k, d in enumerate(members)}
    if weights is None:
        mass = sum(odt.priors[d] for d in members)
        weights = [odt.priors[d] / mass for d in members]
    tests = []
    for t in odt.tests:
        if t.multiway:
            parts = [tuple(index[d] for d in p if d in index) for p in t.parts]
            tests.append(Test(t.cost, parts=tuple(p for p in parts if p)))
        else:
            tests.append(Test(t.cost, subset=tuple(index[d] for d in t.subset if d in index)))
    return OdtInstance(tuple(weights), tuple(tests))


def gen_random_odt(seed: int, m: int, n: int, max_cost: int = 9, multiway: bool = True) -> OdtInstance:
    """Seeded separable decision-tree instance; redraws until every disease pair is separated."""
    rng = np.random.default_rng(seed)
    for _ in range(1000):
        tests = []
        for _ in range(n):
            cost = int(rng.integers(1, max_cost + 1))
            if multiway and rng.random() < 0.3:
                k = int(rng.integers(2, 5))
                labels = rng.integers(0, k, size=m)
                parts = [tuple(int(i) for i in np.flatnonzero(labels == c)) for c in range(k)]
                parts = [p for p in parts if p]
                tests.append(Test(cost, parts=tuple(parts)))
            else:
                tests.append(Test(cost, subset=tuple(int(i) for i in np.flatnonzero(rng.random(m) < 0.5))))
        raw = [int(x) for x in rng.integers(1, 11, size=m)]
        priors = [Fraction(x, sum(raw)) for x in raw]
        odt = OdtInstance(tuple(priors), tuple(tests))
        if len({odt.signature(i) for i in range(m)}) == m:
            return odt
    raise ValueError("could not draw a separable instance")


# --- test strategies ----------------------------------------------------------------


@dataclass(frozen=True)
class DiseaseLeaf:
    disease: int | None = None


@dataclass(frozen=True)
class TestNode:
    __test__ = False

    test: int
    branches: tuple  # ((outcome, child), ...)

    def child(self, outcome):
        for o, c in self.branches:
            if o == outcome:
                return c
        raise KeyError(outcome)


TestTree = Union[DiseaseLeaf, TestNode]


@dataclass(frozen=True)
class TestStrategy:
    __test__ = False

    node: TestTree


def strategy_from_isolation(tree: StrategyTree, odt: OdtInstance, red: Reduction | None = None) -> TestStrategy:
    """Read an isolation tree on the reduced star back as a test strategy.

    Consecutive visits to copies of one test form a single test; travel through
    the center is dropped.
    """
    red = red or odt_to_isolation(odt)
    vmap = red.vertex_test
    root = red.instance.root

    def signals(v, test, outcome) -> bool:
        return vmap[v][1] == outcome

    def convert(node: Node) -> TestTree:
        while isinstance(node, (Observe, Waypoint)) and node.vertex not in vmap:
            if node.vertex != root:
                raise ValueError(f"vertex {node.vertex} is not part of the reduction")
            node = node.no if isinstance(node, Observe) else node.child
        if isinstance(node, Leaf):
            return DiseaseLeaf(node.scenario)
        j = vmap[node.vertex][0]
        branches = []
        for o in odt.tests[j].outcomes:
            cur = node
            while isinstance(cur, (Observe, Waypoint)) and cur.vertex in vmap and vmap[cur.vertex][0] == j:
                if isinstance(cur, Observe):
                    cur = cur.yes if signals(cur.vertex, j, o) else cur.no
                else:
                    cur = cur.child
            branches.append((o, convert(cur)))
        return TestNode(j, tuple(branches))

    return TestStrategy(convert(tree.node))


def disease_costs(odt: OdtInstance, strategy: TestStrategy) -> tuple[list[float], list[Violation]]:
    costs, issues = [], []
    for i in range(odt.m):
        node, c = strategy.node, 0.0
        while isinstance(node, TestNode):
            t = odt.tests[node.test]
            c += t.cost
            try:
                node = node.child(t.outcome(i))
            except KeyError:
                issues.append(Violation("missing branch", (i, node.test)))
                break
        if isinstance(node, DiseaseLeaf) and node.disease != i:
            issues.append(Violation("leaf label", (i, node.disease)))
        costs.append(c)
    return costs, issues


def eval_test_strategy(odt: OdtInstance, strategy: TestStrategy) -> float:
    costs, issues = disease_costs(odt, strategy)
    if issues:
        raise InfeasibleStrategy(issues)
    total = 0.0
    for p, c in zip(odt.priors, costs):
        total += float(p) * c
    return total


@dataclass
class OdtSolution:
    strategy: TestStrategy
    tree: StrategyTree
    reduction: Reduction
    phases: list


def odt_solve(odt: OdtInstance, oracle: str = "star", config: LpgstConfig = LpgstConfig()) -> OdtSolution:
    red = odt_to_isolation(odt)
    inst = red.instance
    phases: list = []
    tree = iso_solve(inst, make_oracle(oracle, inst.metric, inst.root), config, phases)
    return OdtSolution(strategy_from_isolation(tree, odt, red), tree, red, phases)


# --- documents ------------------------------------------------------------------------


def odt_to_doc(odt: OdtInstance) -> dict:
    tests = []
    for t in odt.tests:
        rec = {"cost": encode_number(t.cost)}
        if t.multiway:
            rec["partition"] = [list(p) for p in t.parts]
        else:
            rec["subset"] = list(t.subset)
        tests.append(rec)
    return {"schema": "adaptcover/odt", "version": 1, "diseases": [encode_number(p) for p in odt.priors], "tests": tests}


def odt_from_doc(doc: dict) -> OdtInstance:
    tests = []
    for rec in doc["tests"]:
        cost = float(decode_number(rec["cost"]))
        if "partition" in rec:
            tests.append(Test(cost, parts=tuple(tuple(p) for p in rec["partition"])))
        else:
            tests.append(Test(cost, subset=tuple(rec["subset"])))
    priors = tuple(decode_number(p) for p in doc["diseases"])
    return validate_odt(OdtInstance(priors, tuple(tests)))


def strategy_node_to_dict(node: TestTree) -> dict:
    if isinstance(node, DiseaseLeaf):
        return {"kind": "disease", "disease": node.disease}
    return {
        "kind": "test",
        "test": node.test,
        "branches": [{"outcome": o, "child": strategy_node_to_dict(c)} for o, c in node.branches],
    }


def strategy_node_from_dict(doc: dict) -> TestTree:
    if doc["kind"] == "disease":
        d = doc.get("disease")
        return DiseaseLeaf(None if d is None else int(d))
    return TestNode(int(doc["test"]), tuple((b["outcome"], strategy_node_from_dict(b["child"])) for b in doc["branches"]))


def export_test_dot(strategy: TestStrategy, name: str = "tests") -> str:
    lines = [f"digraph {name} {{", "  node [fontname=Helvetica];"]
    counter = 0

    def emit(node) -> int:
        nonlocal counter
        me = counter
        counter += 1
        if isinstance(node, DiseaseLeaf):
            text = "?" if node.disease is None else f"disease {node.disease}"
            lines.append(f'  n{me} [shape=box, label="{text}"];')
            return me
        lines.append(f'  n{me} [shape=ellipse, label="test {node.test}"];')
        for o, c in node.branches:
            child = emit(c)
            label = {True: "positive", False: "negative"}.get(o, str(o)) if isinstance(o, bool) else str(o)
            lines.append(f'  n{me} -> n{child} [label="{label}"];')
        return me

    emit(strategy.node)
    lines.append("}")
    return "\n".join(lines) + "\n"
