import json
from fractions import Fraction

import numpy as np
import pytest

from adaptcover.errors import InfeasibleStrategy
from adaptcover.gso import EXACT
from adaptcover.instances import gen_paper_star, gen_random, gen_trp_star, make_instance
from adaptcover.isolation import iso_solve
from adaptcover.metric import metric_closure, star_metric
from adaptcover.strategy import (
    Leaf,
    Observe,
    StrategyTree,
    Waypoint,
    check_feasible,
    eval_adaptrp,
    eval_adaptsp,
    eval_isolation,
    evaluate_exact,
    export_dot,
    scenario_costs,
    trace,
    tree_from_doc,
    tree_to_doc,
    waypoint_chain,
)


def best_star_tree():
    # observe v1; stop on demand, otherwise observe v2
    return StrategyTree(0, Observe(1, Leaf(0), Observe(2, Leaf(1), Leaf(2))))


def test_trace_basics():
    assert trace(StrategyTree(0), {1}).vertices == ()
    t = StrategyTree(0, Observe(3, Leaf(7), Leaf(8)))
    p = trace(t, {3})
    assert p.vertices == (3,) and p.leaf == Leaf(7)


def test_trace_of_solved_star():
    tree = iso_solve(gen_paper_star(3), EXACT)
    p = trace(tree, {2})
    assert p.vertices == (1, 2) and p.outcomes == (False, True)


def test_eval_isolation_examples():
    inst = gen_paper_star(3)
    assert eval_isolation(inst, best_star_tree()) == 8
    reverse = StrategyTree(0, Observe(2, Leaf(1), Observe(1, Leaf(0), Leaf(2))))
    assert eval_isolation(inst, reverse) == 11
    single = make_instance(star_metric([1]), 0, [(1,)], [1])
    assert eval_isolation(single, StrategyTree(0, Leaf(0))) == 0


def test_eval_adaptsp_examples():
    single = make_instance(star_metric([1]), 0, [(1,)], [1], "adaptsp")
    assert eval_adaptsp(single, StrategyTree(0, Waypoint(1, Leaf()))) == 2
    empty = make_instance(star_metric([1]), 0, [()], [1], "adaptsp")
    assert eval_adaptsp(empty, StrategyTree(0)) == 0
    # isolation tree plus a tour of each leaf's scenario from the root
    inst = gen_paper_star(3)
    tree = StrategyTree(0, Observe(1, Waypoint(0, Waypoint(1, Leaf(0))), Observe(2, Waypoint(0, Waypoint(2, Leaf(1))), Leaf(2))))
    tsp = {0: 4, 1: 8, 2: 0}
    expect = eval_isolation(inst, best_star_tree()) + sum(float(p) * tsp[i] for i, p in enumerate(inst.dist.probs))
    assert eval_adaptsp(inst.with_objective("adaptsp"), tree) == expect


def test_eval_adaptrp_examples():
    single = make_instance(star_metric([1]), 0, [(1,)], [1], "adaptrp")
    assert eval_adaptrp(single, StrategyTree(0, Waypoint(1, Leaf()))) == 1
    path = metric_closure([(0, 1, 1), (1, 2, 1)], 3)
    inst = make_instance(path, 0, [(1, 2)], [1], "adaptrp")
    assert eval_adaptrp(inst, StrategyTree(0, waypoint_chain([1, 2], Leaf()))) == 3


def test_eval_adaptrp_trp_star_by_hand():
    inst = gen_trp_star(4)
    # v first, then every u_i in index order
    tree = StrategyTree(0, waypoint_chain([1, 2, 3, 4, 5], Leaf()))
    d = inst.metric.dist
    expect = 0.0
    for p, s in zip(inst.dist.probs, inst.dist.scenarios):
        t, here, cost = 0.0, 0, 0.0
        for v in (1, 2, 3, 4, 5):
            t += d[here, v]
            here = v
            if v in s:
                cost += t
        expect += float(p) * cost
    assert eval_adaptrp(inst, tree) == pytest.approx(expect, rel=1e-12)


def test_shared_leaf_violation():
    inst = make_instance(star_metric([1, 1]), 0, [(1,), (2,)], [0.5, 0.5])
    report = check_feasible(inst, StrategyTree(0))
    assert not report.ok and report.violations[0].kind == "shared leaf"
    with pytest.raises(InfeasibleStrategy):
        eval_isolation(inst, StrategyTree(0))


def test_repeated_observation_warns():
    inst = make_instance(star_metric([1, 1]), 0, [(1,), (2,)], [0.5, 0.5])
    tree = StrategyTree(0, Observe(1, Leaf(0), Observe(1, Leaf(None), Leaf(1))))
    report = check_feasible(inst, tree)
    assert report.ok and any(w.kind == "repeated observation" for w in report.warnings)


def test_unvisited_demand_violation():
    inst = make_instance(star_metric([1, 1]), 0, [(1,), (2,)], [0.5, 0.5], "adaptsp")
    tree = StrategyTree(0, Observe(1, Leaf(), Leaf()))
    kinds = [v.kind for v in check_feasible(inst, tree).violations]
    assert kinds == ["unvisited demand"]


def _random_observe_tree(rng, scenarios, n, C=None, seen=frozenset()):
    C = list(range(len(scenarios))) if C is None else C
    left = sorted(set().union(*(scenarios[i] for i in C)) - seen)
    # sometimes stop early; such trees are usually infeasible
    if not left or rng.random() < 0.1:
        return Leaf(C[0] if len(C) == 1 else None)
    v = int(rng.choice(left if rng.random() < 0.8 else range(1, n)))
    yes = [i for i in C if v in scenarios[i]]
    no = [i for i in C if v not in scenarios[i]]
    kid = lambda part: _random_observe_tree(rng, scenarios, n, part, seen | {v}) if part else Leaf(None)
    return Observe(v, kid(yes), kid(no))


def test_adaptsp_feasible_trees_isolate():
    rng = np.random.default_rng(0)
    feasible = 0
    for seed in range(100):
        inst = gen_random(seed, 3 + seed % 5, 2 + seed % 5 if seed % 5 < 3 else 2)
        sets = inst.scenarios
        tree = StrategyTree(0, _random_observe_tree(rng, sets, inst.n))
        if check_feasible(inst, tree, "adaptsp").ok:
            feasible += 1
            assert check_feasible(inst, tree, "isolation").ok
    assert feasible >= 50


def test_center_waypoints_free_on_star():
    inst = gen_paper_star(4)
    plain = StrategyTree(0, Observe(1, Leaf(0), Observe(2, Leaf(1), Observe(3, Leaf(2), Leaf(3)))))
    padded = StrategyTree(
        0, Observe(1, Leaf(0), Waypoint(0, Observe(2, Leaf(1), Waypoint(0, Observe(3, Leaf(2), Leaf(3))))))
    )
    assert scenario_costs(inst, plain) == scenario_costs(inst, padded)


def test_evaluation_is_weighted_sum():
    inst = gen_random(5, 6, 4)
    tree = iso_solve(inst, EXACT)
    costs = scenario_costs(inst, tree)
    total = sum((Fraction(p) * Fraction(c) for p, c in zip(inst.dist.probs, costs)), Fraction(0))
    assert evaluate_exact(inst, tree) == total
    assert eval_isolation(inst, tree) == pytest.approx(float(total), rel=1e-12)


def test_dot_node_counts():
    leaf_only = export_dot(StrategyTree(0))
    assert leaf_only.count("[shape=") == 1
    one = export_dot(StrategyTree(0, Observe(1, Leaf(0), Leaf(1))))
    assert one.count("[shape=") == 3 and one.count('label="yes"') == 1 and one.count('label="no"') == 1
    tree = iso_solve(gen_random(2, 7, 6), EXACT)
    assert export_dot(tree).count("[shape=") == tree.size


def test_tree_document_round_trip():
    tree = iso_solve(gen_random(3, 6, 5), EXACT)
    back = tree_from_doc(json.loads(json.dumps(tree_to_doc(tree))))
    assert back == tree


def test_trace_deterministic():
    tree = iso_solve(gen_random(4, 6, 5), EXACT)
    assert trace(tree, {1, 3}) == trace(tree, {1, 3})
