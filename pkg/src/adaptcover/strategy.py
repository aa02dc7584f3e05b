"""Adaptive strategy trees: tracing, exact evaluation, feasibility and export.

A strategy starts at the instance root. ``Observe`` nodes travel to a vertex and
branch on whether it carries demand; ``Waypoint`` nodes travel without
branching; ``Leaf`` nodes stop. Isolation and adaptive TSP paths return to the
root at the end; latency ignores the final leg.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Iterator, Union

from .errors import InfeasibleStrategy
from .instances import CoverInstance
from .metric import Metric, Violation, path_latency, walk_length


@dataclass(frozen=True)
class Leaf:
    scenario: int | None = None


@dataclass(frozen=True)
class Observe:
    vertex: int
    yes: "Node"
    no: "Node"


@dataclass(frozen=True)
class Waypoint:
    vertex: int
    child: "Node"


Node = Union[Leaf, Observe, Waypoint]


@dataclass(frozen=True)
class StrategyTree:
    root: int
    node: Node = field(default_factory=Leaf)

    def __iter__(self) -> Iterator[Node]:
        return iter_nodes(self.node)

    @property
    def size(self) -> int:
        return sum(1 for _ in iter_nodes(self.node))


def iter_nodes(node: Node) -> Iterator[Node]:
    """Preorder; yes before no."""
    stack = [node]
    while stack:
        cur = stack.pop()
        yield cur
        if isinstance(cur, Observe):
            stack.append(cur.no)
            stack.append(cur.yes)
        elif isinstance(cur, Waypoint):
            stack.append(cur.child)
        elif not isinstance(cur, Leaf):
            raise TypeError(f"malformed strategy node {cur!r}")


@dataclass(frozen=True)
class TracedPath:
    vertices: tuple[int, ...]
    leaf: Leaf
    outcomes: tuple[bool, ...]

    @property
    def leaf_key(self) -> tuple[bool, ...]:
        # leaves are values, so the branch outcomes identify which one was reached
        return self.outcomes


def trace(tree: StrategyTree, demand: Iterable[int]) -> TracedPath:
    demand = set(demand)
    node, verts, outs = tree.node, [], []
    while not isinstance(node, Leaf):
        if isinstance(node, Observe):
            verts.append(node.vertex)
            hit = node.vertex in demand
            outs.append(hit)
            node = node.yes if hit else node.no
        elif isinstance(node, Waypoint):
            verts.append(node.vertex)
            node = node.child
        else:
            raise TypeError(f"malformed strategy node {node!r}")
    return TracedPath(tuple(verts), node, tuple(outs))


def path_cost(metric: Metric, root: int, path: TracedPath, objective: str, demand=()) -> float:
    if objective == "adaptrp":
        return path_latency(metric, root, path.vertices, demand)
    return walk_length(metric, (root, *path.vertices, root))


@dataclass
class FeasibilityReport:
    violations: list[Violation]
    warnings: list[Violation]

    @property
    def ok(self) -> bool:
        return not self.violations


def check_feasible(inst: CoverInstance, tree: StrategyTree, objective: str | None = None) -> FeasibilityReport:
    objective = objective or inst.objective
    violations, warnings = [], []
    if tree.root != inst.root:
        violations.append(Violation("root mismatch", (tree.root, inst.root)))
    n = inst.metric.n
    for node in tree:
        if isinstance(node, (Observe, Waypoint)) and not 0 <= node.vertex < n:
            violations.append(Violation("vertex out of range", (node.vertex,)))
    if violations:
        return FeasibilityReport(violations, warnings)
    paths = [trace(tree, s) for s in inst.dist.scenarios]
    for i, p in enumerate(paths):
        seen = set()
        for v, kind in zip(p.vertices, _kinds(tree, inst.dist.scenarios[i])):
            if kind and v in seen:
                warnings.append(Violation("repeated observation", (i, v)))
            seen.add(v)
    if objective == "isolation":
        owner: dict[tuple, int] = {}
        for i, p in enumerate(paths):
            if p.leaf_key in owner:
                violations.append(Violation("shared leaf", (owner[p.leaf_key], i)))
            else:
                owner[p.leaf_key] = i
            if p.leaf.scenario is not None and p.leaf.scenario != i:
                violations.append(Violation("leaf label", (i, p.leaf.scenario)))
    else:
        for i, (p, s) in enumerate(zip(paths, inst.dist.scenarios)):
            visited = set(p.vertices) | {inst.root}
            for v in s:
                if v not in visited:
                    violations.append(Violation("unvisited demand", (i, v)))
    return FeasibilityReport(violations, warnings)


def _kinds(tree: StrategyTree, demand) -> list[bool]:
    """Per traced vertex: True for an observation, False for a waypoint."""
    demand, node, out = set(demand), tree.node, []
    while not isinstance(node, Leaf):
        if isinstance(node, Observe):
            out.append(True)
            node = node.yes if node.vertex in demand else node.no
        else:
            out.append(False)
            node = node.child
    return out


def scenario_costs(inst: CoverInstance, tree: StrategyTree, objective: str | None = None) -> list[float]:
    objective = objective or inst.objective
    return [
        path_cost(inst.metric, inst.root, trace(tree, s), objective, s) for s in inst.dist.scenarios
    ]


def evaluate(inst: CoverInstance, tree: StrategyTree, objective: str | None = None, check: bool = True) -> float:
    """Expected cost of ``tree`` under ``objective``; raises if the tree is infeasible."""
    objective = objective or inst.objective
    if check:
        report = check_feasible(inst, tree, objective)
        if not report.ok:
            raise InfeasibleStrategy(report.violations)
    total = 0.0
    for p, c in zip(inst.dist.probs, scenario_costs(inst, tree, objective)):
        total += float(p) * c
    return total


def evaluate_exact(inst: CoverInstance, tree: StrategyTree, objective: str | None = None) -> Fraction:
    """Expected cost in exact rationals (every float distance and probability is a rational)."""
    objective = objective or inst.objective
    report = check_feasible(inst, tree, objective)
    if not report.ok:
        raise InfeasibleStrategy(report.violations)
    d = inst.metric.dist
    r = inst.root
    total = Fraction(0)
    for p, s in zip(inst.dist.probs, inst.dist.scenarios):
        path = trace(tree, s)
        if objective == "adaptrp":
            t, here, first = Fraction(0), r, {r: Fraction(0)}
            for v in path.vertices:
                t += Fraction(float(d[here, v]))
                first.setdefault(v, t)
                here = v
            cost = sum((first[v] for v in s), Fraction(0))
        else:
            walk = (r, *path.vertices, r)
            cost = sum((Fraction(float(d[a, b])) for a, b in zip(walk, walk[1:])), Fraction(0))
        total += Fraction(p) * cost
    return total


def eval_isolation(inst: CoverInstance, tree: StrategyTree) -> float:
    return evaluate(inst, tree, "isolation")


def eval_adaptsp(inst: CoverInstance, tree: StrategyTree) -> float:
    return evaluate(inst, tree, "adaptsp")


def eval_adaptrp(inst: CoverInstance, tree: StrategyTree) -> float:
    return evaluate(inst, tree, "adaptrp")


# --- serialisation and export ------------------------------------------------------


def node_to_dict(node: Node) -> dict:
    if isinstance(node, Leaf):
        return {"kind": "leaf", "scenario": node.scenario}
    if isinstance(node, Observe):
        return {"kind": "observe", "vertex": node.vertex, "yes": node_to_dict(node.yes), "no": node_to_dict(node.no)}
    if isinstance(node, Waypoint):
        return {"kind": "waypoint", "vertex": node.vertex, "child": node_to_dict(node.child)}
    raise TypeError(f"malformed strategy node {node!r}")


def node_from_dict(doc: dict) -> Node:
    kind = doc.get("kind")
    if kind == "leaf":
        s = doc.get("scenario")
        return Leaf(None if s is None else int(s))
    if kind == "observe":
        return Observe(int(doc["vertex"]), node_from_dict(doc["yes"]), node_from_dict(doc["no"]))
    if kind == "waypoint":
        return Waypoint(int(doc["vertex"]), node_from_dict(doc["child"]))
    raise ValueError(f"unknown node kind {kind!r}")


def tree_to_doc(tree: StrategyTree) -> dict:
    return {"schema": "adaptcover/strategy", "version": 1, "root": tree.root, "tree": node_to_dict(tree.node)}


def tree_from_doc(doc: dict) -> StrategyTree:
    return StrategyTree(int(doc["root"]), node_from_dict(doc["tree"]))


def export_dot(tree: StrategyTree, labels=None, name: str = "strategy") -> str:
    """DOT text; nodes numbered in preorder."""

    def vname(v):
        return labels[v] if labels is not None else str(v)

    lines = [f"digraph {name} {{", "  node [fontname=Helvetica];"]
    counter = 0

    def emit(node) -> int:
        nonlocal counter
        me = counter
        counter += 1
        if isinstance(node, Leaf):
            text = "leaf" if node.scenario is None else f"scenario {node.scenario}"
            lines.append(f'  n{me} [shape=box, label="{text}"];')
        elif isinstance(node, Observe):
            lines.append(f'  n{me} [shape=ellipse, label="observe {vname(node.vertex)}"];')
            yes = emit(node.yes)
            lines.append(f'  n{me} -> n{yes} [label="yes"];')
            no = emit(node.no)
            lines.append(f'  n{me} -> n{no} [label="no"];')
        else:
            lines.append(f'  n{me} [shape=plaintext, label="go to {vname(node.vertex)}"];')
            child = emit(node.child)
            lines.append(f"  n{me} -> n{child};")
        return me

    emit(tree.node)
    lines.append("}")
    return "\n".join(lines) + "\n"


def waypoint_chain(vertices: Iterable[int], tail: Node) -> Node:
    node = tail
    for v in reversed(list(vertices)):
        node = Waypoint(v, node)
    return node
