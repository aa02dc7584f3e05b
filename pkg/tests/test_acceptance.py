"""Acceptance suite: one test per criterion, each recording a single pass/fail line."""

import math
import statistics
import time
from fractions import Fraction

import pytest

from adaptcover.adaptrp import adaptrp_solve
from adaptcover.gso import EXACT, gso_star, make_oracle, profit
from adaptcover.instances import gen_random_gst, gen_trp_star, gst_to_adaptsp, restrict
from adaptcover.isolation import adaptsp_solve, iso_solve
from adaptcover.odt import disease_costs, eval_test_strategy, odt_solve, odt_to_isolation, strategy_from_isolation
from adaptcover.oracle import (
    OracleLimits,
    opt_adaptrp_exact,
    opt_adaptsp_exact,
    opt_gst_exact,
    opt_isolation_exact,
    opt_odt_exact,
    opt_star_gso_enum,
    opt_unrestricted,
    phase_constant_adaptrp,
    phase_ratio_odt,
    phase_ratio_isolation,
)
from adaptcover.strategy import (
    check_feasible,
    eval_adaptrp,
    eval_adaptsp,
    eval_isolation,
    evaluate_exact,
)

from suites import cover_suite, odt_suite, halving_star_odt, star_gso_suite

pytestmark = pytest.mark.acceptance

LOG87 = math.log(8 / 7)
BIG = OracleLimits(max_vertices=10, max_scenarios=10, time_budget=120)


def _log87(m):
    return math.log(m) / LOG87


def test_criterion_1_partition_size(verdict):
    start = time.perf_counter()
    checked, bad = 0, []
    for inst in cover_suite(200, max_n=10, max_m=8):
        phases = []
        iso_solve(inst, make_oracle("auto", inst.metric, inst.root), phases=phases)
        for rec in phases:
            size = len(rec.sub.members)
            cap = -(-7 * size // 8)
            for part in rec.result.parts:
                checked += 1
                if len(part) > cap:
                    bad.append((size, len(part)))
    elapsed = time.perf_counter() - start
    ok = not bad and elapsed < 10
    verdict(1, ok, f"{checked} parts checked, {len(bad)} oversized, {elapsed:.1f}s")
    assert not bad
    assert elapsed < 10


@pytest.fixture(scope="module")
def isolation_runs():
    """The n <= 8, m <= 6 suite solved with the exact GSO oracle, phases recorded."""
    runs = []
    for inst in cover_suite(100, max_n=8, max_m=6, base=1000):
        phases = []
        tree = iso_solve(inst, EXACT, phases=phases)
        runs.append((inst, tree, phases))
    return runs


def test_criterion_2_isolation_ratio(verdict, isolation_runs):
    start = time.perf_counter()
    ratios, bad = [], []
    for inst, tree, phases in isolation_runs:
        opt = opt_isolation_exact(inst, BIG).value
        value = eval_isolation(inst, tree)
        ratio = value / opt if opt > 0 else 1.0
        ratios.append(ratio)
        rho = phase_ratio_isolation(inst, phases, BIG)
        bound = 2 * rho * _log87(inst.m)
        if ratio > bound * (1 + 1e-9):
            bad.append((inst.m, ratio, bound))
    med = statistics.median(ratios)
    elapsed = time.perf_counter() - start
    ok = not bad and med <= 4 and elapsed < 120
    verdict(2, ok, f"median ratio {med:.3f}, max {max(ratios):.3f}, {len(bad)} over bound, {elapsed:.1f}s")
    assert not bad
    assert med <= 4
    assert elapsed < 120


def test_criterion_3_isolation_below_tour_optimum(verdict, isolation_runs):
    start = time.perf_counter()
    bad_order, bad_value, infeasible = 0, 0, 0
    for inst, _, _ in isolation_runs:
        sp = inst.with_objective("adaptsp")
        iso_opt = opt_isolation_exact(inst, BIG).value
        sp_opt = opt_adaptsp_exact(sp, BIG).value
        tree = adaptsp_solve(sp, EXACT)
        if not check_feasible(sp, tree).ok:
            infeasible += 1
            continue
        if iso_opt > sp_opt + 1e-9:
            bad_order += 1
        if eval_adaptsp(sp, tree) < sp_opt - 1e-9:
            bad_value += 1
    elapsed = time.perf_counter() - start
    ok = not (bad_order or bad_value or infeasible) and elapsed < 120
    verdict(3, ok, f"{len(isolation_runs)} instances, order {bad_order}, below-opt {bad_value}, infeasible {infeasible}, {elapsed:.1f}s")
    assert bad_order == bad_value == infeasible == 0
    assert elapsed < 120


def test_criterion_4_subadditivity(verdict, isolation_runs):
    start = time.perf_counter()
    checked, bad, worst = 0, [], 0.0
    for inst, _, phases in isolation_runs[:50]:
        for rec in phases:
            whole = opt_isolation_exact(restrict(inst, rec.sub), BIG).value
            total = 0.0
            for part in rec.result.parts:
                if len(part) < 2:
                    continue
                sub = rec.sub.restrict(part)
                total += rec.sub.mass(part) * opt_isolation_exact(restrict(inst, sub), BIG).value
            checked += 1
            worst = max(worst, total - whole)
            if total > whole + 1e-9:
                bad.append((total, whole))
    elapsed = time.perf_counter() - start
    ok = not bad and elapsed < 120
    verdict(4, ok, f"{checked} partitions, max excess {worst:.2e}, {elapsed:.1f}s")
    assert not bad
    assert elapsed < 120


def test_criterion_5_star_gso(verdict):
    start = time.perf_counter()
    factor = 1 - 1 / math.e
    worst, bad = 1.0, 0
    for inst in star_gso_suite(100):
        best, _ = opt_star_gso_enum(inst)
        tour = gso_star(inst)
        assert tour.length <= inst.budget * (1 + 1e-9)
        got = profit(inst, tour)
        if best > 0:
            worst = min(worst, got / best)
        if got < factor * best - 1e-9:
            bad += 1
    elapsed = time.perf_counter() - start
    ok = bad == 0 and elapsed < 30
    verdict(5, ok, f"worst profit fraction {worst:.3f} (need {factor:.3f}), {bad} below, {elapsed:.1f}s")
    assert bad == 0
    assert elapsed < 30


def test_criterion_6_odt_gap(verdict):
    start = time.perf_counter()
    ratios, bad = [], []
    for odt in odt_suite(100):
        sol = odt_solve(odt, "star")
        value = eval_test_strategy(odt, sol.strategy)
        opt = opt_odt_exact(odt).value
        ratio = value / opt if opt > 0 else 1.0
        ratios.append(ratio)
        rho = phase_ratio_odt(odt, sol.phases)
        bound = 2 * rho * _log87(odt.m)
        if ratio > bound * (1 + 1e-9):
            bad.append((odt.m, ratio, bound))
    anchor = halving_star_odt()
    anchor_value = eval_test_strategy(anchor, odt_solve(anchor, "star").strategy)
    anchor_opt = opt_odt_exact(anchor).value
    med = statistics.median(ratios)
    elapsed = time.perf_counter() - start
    ok = not bad and anchor_value == 8 and anchor_opt == 8 and elapsed < 120
    verdict(6, ok, f"median ratio {med:.3f}, max {max(ratios):.3f}, {len(bad)} over bound, anchor {anchor_value:g}/{anchor_opt:g}, {elapsed:.1f}s")
    assert not bad
    assert anchor_value == 8 and anchor_opt == 8
    assert elapsed < 120


def test_criterion_7_cost_identity(verdict):
    multiway, mismatches, trees = 0, 0, 0
    for odt in odt_suite(100, base=7000):
        multiway += any(t.multiway for t in odt.tests)
        red = odt_to_isolation(odt)
        candidates = [odt_solve(odt, "star").tree, odt_solve(odt, "exact").tree]
        if red.instance.metric.n <= 10 and odt.m <= 10:
            candidates.append(opt_isolation_exact(red.instance, BIG).tree)
        for tree in candidates:
            trees += 1
            strategy = strategy_from_isolation(tree, odt, red)
            if eval_isolation(red.instance, tree) != eval_test_strategy(odt, strategy):
                mismatches += 1
    ok = mismatches == 0 and multiway > 0
    verdict(7, ok, f"{trees} trees over 100 reductions ({multiway} with multiway tests), {mismatches} mismatches")
    assert mismatches == 0
    assert multiway > 0


def test_criterion_8_hardness_sandwich(verdict):
    start = time.perf_counter()
    worst_low, worst_high, bad = 0.0, 0.0, 0
    for s in range(25):
        n = 2 + s % 5
        g = 1 + s % 3
        g = min(g, 2**n - 1)
        gst = gen_random_gst(s, n, g)
        opt, _ = opt_gst_exact(gst)
        red = gst_to_adaptsp(gst)
        opt2 = opt_adaptsp_exact(red, BIG).value
        worst_low = max(worst_low, opt - opt2)
        worst_high = max(worst_high, opt2 - opt - 1)
        if not (opt <= opt2 + 1e-6 and opt2 <= opt + 1 + 1e-6):
            bad += 1
    elapsed = time.perf_counter() - start
    ok = bad == 0 and elapsed < 120
    verdict(8, ok, f"{bad}/25 outside, worst Opt-Opt' {worst_low:.2e}, worst Opt'-Opt-1 {worst_high:.2e}, {elapsed:.1f}s")
    assert bad == 0
    assert elapsed < 120


def test_criterion_9_adaptrp(verdict):
    start = time.perf_counter()
    star = gen_trp_star(16)
    star_value = eval_adaptrp(star, adaptrp_solve(star, make_oracle("auto", star.metric, star.root)))
    bad, infeasible, ratios = 0, 0, []
    for inst in cover_suite(40, max_n=7, max_m=4, objective="adaptrp", base=3000):
        phases = []
        tree = adaptrp_solve(inst, EXACT, phases=phases)
        if not check_feasible(inst, tree).ok:
            infeasible += 1
            continue
        opt = opt_adaptrp_exact(inst, BIG).value
        ratio = eval_adaptrp(inst, tree) / opt if opt > 0 else 1.0
        ratios.append(ratio)
        c = phase_constant_adaptrp(inst, phases, BIG)
        if ratio > c * math.ceil(math.log2(inst.m)) * (1 + 1e-9):
            bad += 1
    elapsed = time.perf_counter() - start
    ok = star_value <= 8 and bad == 0 and infeasible == 0 and elapsed < 120
    verdict(9, ok, f"star(16) {star_value:.3f} <= 8, max ratio {max(ratios):.3f}, {bad} over bound, {infeasible} infeasible, {elapsed:.1f}s")
    assert star_value <= 8
    assert bad == 0 and infeasible == 0
    assert elapsed < 120


def test_criterion_10_oracle_closed_loop(verdict):
    start = time.perf_counter()
    mismatch, diffs, compared = 0, [], 0
    for inst in cover_suite(30, max_n=7, max_m=4, base=5000):
        for objective, solver in (
            ("isolation", opt_isolation_exact),
            ("adaptsp", opt_adaptsp_exact),
            ("adaptrp", opt_adaptrp_exact),
        ):
            target = inst.with_objective(objective)
            res = solver(target, BIG)
            if evaluate_exact(target, res.tree, objective) != res.exact:
                mismatch += 1
            if inst.metric.n <= 5 and inst.m <= 3:
                compared += 1
                free = opt_unrestricted(target, objective)
                diffs.append(abs(free - res.value) / max(1.0, abs(free)))
    for odt in odt_suite(20, base=9000):
        res = opt_odt_exact(odt)
        costs, issues = disease_costs(odt, res.witness)
        exact = sum((Fraction(p) * Fraction(c) for p, c in zip(odt.priors, costs)), Fraction(0))
        if issues or exact != res.exact:
            mismatch += 1
    worst = max(diffs) if diffs else 0.0
    elapsed = time.perf_counter() - start
    ok = mismatch == 0 and worst <= 1e-9 and compared > 0 and elapsed < 120
    verdict(10, ok, f"{mismatch} witness mismatches, {compared} restricted/unrestricted pairs, max rel diff {worst:.1e}, {elapsed:.1f}s")
    assert mismatch == 0
    assert compared > 0 and worst <= 1e-9
    assert elapsed < 120
