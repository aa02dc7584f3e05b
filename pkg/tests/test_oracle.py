import itertools
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from adaptcover.errors import LimitExceeded
from adaptcover.gso import GsoInstance
from adaptcover.instances import gen_paper_star, gen_random, gen_random_gst, gen_trp_star, gst_to_adaptsp, make_instance
from adaptcover.lpgst import LpgstInstance
from adaptcover.metric import Tour, metric_closure, star_metric, tsp_tour
from adaptcover.oracle import (
    OracleLimits,
    limits_from_env,
    opt_adaptrp_exact,
    opt_adaptsp_exact,
    opt_gso_lpgst_exact,
    opt_gst_exact,
    opt_isolation_exact,
    opt_odt_exact,
    opt_unrestricted,
    parse_limits,
)
from adaptcover.odt import OdtInstance, Test
from adaptcover.strategy import check_feasible, evaluate_exact

from suites import cover_suite

UNIT_PATH = metric_closure([(0, 1, 1), (1, 2, 1)], 3)


def test_isolation_examples():
    assert opt_isolation_exact(make_instance(star_metric([1]), 0, [(1,)], [1])).value == 0
    assert opt_isolation_exact(gen_paper_star(3)).exact == 8
    inst = make_instance(star_metric([3, 5]), 0, [(1, 2), (2,)], [0.5, 0.5])
    assert opt_isolation_exact(inst).value == 6


def test_halving_star_by_enumerating_orders():
    inst = gen_paper_star(3)
    d = inst.metric.dist
    p = [float(x) for x in inst.dist.probs]
    # observe a then b; scenario {a} stops after a, the others see both
    costs = []
    for a, b in itertools.permutations((1, 2)):
        ia = a - 1
        costs.append(p[ia] * 2 * d[0, a] + (1 - p[ia]) * (d[0, a] + d[a, b] + d[b, 0]))
    assert min(costs) == opt_isolation_exact(inst).value == 8


def test_cover_examples():
    one = make_instance(star_metric([3]), 0, [(1,)], [1], "adaptsp")
    assert opt_adaptsp_exact(one).value == 6
    assert opt_adaptrp_exact(one.with_objective("adaptrp")).value == 3
    path = make_instance(UNIT_PATH, 0, [(1, 2)], [1], "adaptrp")
    assert opt_adaptrp_exact(path).value == 3
    assert opt_adaptsp_exact(path.with_objective("adaptsp")).value == 4


def test_frozen_values():
    assert opt_adaptrp_exact(gen_trp_star(2)).value == pytest.approx(3.8284271247461903, rel=1e-12)
    inst = gen_paper_star(3)
    assert opt_adaptsp_exact(inst.with_objective("adaptsp")).exact == 8
    assert opt_adaptrp_exact(inst.with_objective("adaptrp")).exact == 3


def test_gso_lpgst_examples():
    m = star_metric([2, 3])
    value, tour = opt_gso_lpgst_exact(GsoInstance(m, 0, ((0,), (1,)), (4, 9), 0))
    assert value == 4 and tour.vertices == (0, 0)
    value, _ = opt_gso_lpgst_exact(LpgstInstance(m, 0, ((2,),), (1,), 1))
    assert value == 3


def test_lpgst_five_leaves():
    m = star_metric([1, 2, 3, 4, 5])
    inst = LpgstInstance(m, 0, tuple((v,) for v in range(1, 6)), (1,) * 5, 3)
    value, tour = opt_gso_lpgst_exact(inst)
    # visit the three nearest leaves first; the other two pay the full tour
    assert value == 1 + 4 + 9 + 2 * 12
    assert tour.inner == (1, 2, 3)


def test_odt_examples():
    assert opt_odt_exact(OdtInstance((Fraction(1, 2),) * 2, (Test(5, subset=(0,)),))).value == 5
    skew = OdtInstance((Fraction(8, 10), Fraction(1, 10), Fraction(1, 10)), (Test(1, subset=(0,)), Test(1, subset=(1,))))
    assert opt_odt_exact(skew).exact == Fraction(6, 5)


def test_gst_examples():
    gst = gen_random_gst(1, 4, 2)
    value, tour = opt_gst_exact(gst)
    assert value == 6 and tour.vertices == (0, 1, 0)


def test_hardness_example_sandwich():
    gst = gen_random_gst(1, 4, 2)
    opt, _ = opt_gst_exact(gst)
    res = opt_adaptsp_exact(gst_to_adaptsp(gst))
    assert res.exact == Fraction(4811, 800)
    assert opt <= res.value <= opt + 1


def test_hardness_bound_with_root_factor():
    # the strategy's tour under the dominant scenario is group Steiner feasible,
    # so Opt' >= (1 - 1/L) Opt; the strict Opt <= Opt' can fail by up to Opt / L
    for s in range(40):
        n = 2 + s % 5
        gst = gen_random_gst(s, n, min(1 + s % 3, 2**n - 1))
        opt, _ = opt_gst_exact(gst)
        red = gst_to_adaptsp(gst)
        L = 1 / (1 - red.dist.probs[-1])
        opt2 = opt_adaptsp_exact(red).exact
        assert (1 - 1 / L) * Fraction(opt) <= opt2 <= Fraction(opt) + 1


def test_lower_side_counterexample():
    gst = gen_random_gst(2, 4, 2)
    opt, _ = opt_gst_exact(gst)
    red = gst_to_adaptsp(gst)
    assert opt == 4
    assert opt_adaptsp_exact(red).exact == Fraction(959, 240)
    assert opt_unrestricted(red, "adaptsp", max_vertices=5) == pytest.approx(959 / 240)


def test_limits():
    big = gen_random(0, 9, 4)
    with pytest.raises(LimitExceeded):
        opt_adaptsp_exact(big.with_objective("adaptsp"))
    assert parse_limits("5,3") == OracleLimits(5, 3)
    assert parse_limits("5,3,2.5").time_budget == 2.5
    with pytest.raises(ValueError):
        parse_limits("5")
    with pytest.raises(ValueError):
        OracleLimits(0, 3)


def test_limits_from_env(monkeypatch):
    monkeypatch.setenv("ADAPTCOVER_LIMITS", "4,2")
    assert limits_from_env("isolation") == OracleLimits(4, 2)
    with pytest.raises(LimitExceeded):
        opt_isolation_exact(gen_paper_star(5))
    monkeypatch.delenv("ADAPTCOVER_LIMITS")
    assert limits_from_env("adaptrp") == OracleLimits(7, 4)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000))
def test_orderings_and_lower_bounds(seed):
    inst = cover_suite(1, max_n=7, max_m=5, base=seed)[0]
    iso = opt_isolation_exact(inst)
    sp = opt_adaptsp_exact(inst.with_objective("adaptsp"))
    assert iso.value <= sp.value + 1e-9
    tsp = sum(float(p) * tsp_tour(inst.metric, 0, s).length for p, s in zip(inst.dist.probs, inst.dist.scenarios))
    assert sp.value >= tsp - 1e-9


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.sampled_from(["isolation", "adaptsp", "adaptrp"]))
def test_witness_closed_loop(seed, objective):
    inst = cover_suite(1, max_n=7, max_m=4, objective=objective, base=seed)[0]
    solver = {"isolation": opt_isolation_exact, "adaptsp": opt_adaptsp_exact, "adaptrp": opt_adaptrp_exact}[objective]
    res = solver(inst)
    assert check_feasible(inst, res.tree).ok
    assert evaluate_exact(inst, res.tree) == res.exact


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.integers(2, 5), st.integers(1, 3), st.sampled_from(["isolation", "adaptsp", "adaptrp"]))
def test_restricted_equals_unrestricted(seed, n, m, objective):
    m = min(m, 2 ** (n - 1))
    inst = gen_random(seed, n, m, kind="graph" if seed % 2 else "star", objective=objective)
    solver = {"isolation": opt_isolation_exact, "adaptsp": opt_adaptsp_exact, "adaptrp": opt_adaptrp_exact}[objective]
    assert solver(inst).value == pytest.approx(opt_unrestricted(inst, objective), rel=1e-9, abs=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.integers(2, 6), st.integers(1, 3))
def test_gst_matches_enumeration(seed, n, g):
    gst = gen_random_gst(seed, n, min(g, 2**n - 1))
    value, tour = opt_gst_exact(gst)
    groups = [set(x) for x in gst.groups]
    assert all(x & set(tour.vertices) for x in groups)
    best = min(
        Tour.closed(gst.metric, 0, order).length
        for k in range(n)
        for order in itertools.permutations(range(1, n), k)
        if all(x & ({0} | set(order)) for x in groups)
    )
    assert value == pytest.approx(best)
