import json
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from adaptcover.instances import (
    CoverInstance,
    DemandDistribution,
    InstanceError,
    SubInstance,
    default_hardness_L,
    gen_paper_star,
    gen_random,
    gen_random_gst,
    gen_trp_star,
    gst_from_doc,
    gst_to_adaptsp,
    gst_to_doc,
    instance_from_doc,
    instance_issues,
    instance_to_doc,
    make_instance,
    restrict,
    validate_instance,
)
from adaptcover.metric import star_metric


def _kinds(inst):
    return {v.kind for v in instance_issues(inst)}


def test_duplicate_scenarios_rejected():
    inst = CoverInstance(star_metric([1, 2]), 0, DemandDistribution(((1,), (1,)), (0.5, 0.5)))
    assert "duplicate scenario" in _kinds(inst)


def test_distinct_scenarios_ok():
    inst = make_instance(star_metric([1, 2]), 0, [(1,), (2,)], [0.5, 0.5])
    assert inst.m == 2


def test_zero_probability_rejected():
    with pytest.raises(InstanceError):
        make_instance(star_metric([1, 2]), 0, [(1,), (2,), ()], [0.5, 0.5, 0])


def test_probabilities_must_sum_to_one():
    assert "probabilities do not sum to 1" in _kinds(
        CoverInstance(star_metric([1]), 0, DemandDistribution(((1,), ()), (0.5, 0.4)))
    )


def test_halving_star_three():
    inst = gen_paper_star(3)
    assert inst.metric.d(0, 1) == 2 and inst.metric.d(0, 2) == 4
    assert inst.dist.scenarios == ((1,), (2,), ())
    assert inst.dist.probs == (Fraction(1, 2), Fraction(1, 4), Fraction(1, 4))


def test_halving_star_two():
    inst = gen_paper_star(2)
    assert inst.metric.n == 2 and inst.metric.d(0, 1) == 2
    assert inst.dist.probs == (Fraction(1, 2), Fraction(1, 2))


def test_trp_star_four():
    inst = gen_trp_star(4)
    assert inst.metric.d(0, 1) == 2
    assert inst.dist.probs[0] == Fraction(3, 4)
    assert set(inst.dist.probs[1:]) == {Fraction(1, 16)}
    validate_instance(gen_trp_star(16))


def test_trp_star_one_rejected():
    with pytest.raises(InstanceError):
        gen_trp_star(1)


def test_hardness_probabilities():
    gst = gen_random_gst(0, 4, 2)
    red = gst_to_adaptsp(gst, L=100)
    assert list(red.dist.probs) == [Fraction(1, 200), Fraction(1, 200), Fraction(99, 100)]
    assert red.metric.n == gst.metric.n + 1
    assert red.metric.d(gst.root, gst.metric.n) == 0


def test_hardness_rejects_small_L_and_duplicates():
    gst = gen_random_gst(0, 4, 2)
    with pytest.raises(ValueError):
        gst_to_adaptsp(gst, L=2)
    dup = type(gst)(gst.metric, 0, (gst.groups[0], gst.groups[0]))
    with pytest.raises(InstanceError):
        gst_to_adaptsp(dup)


def test_default_L():
    gst = gen_random_gst(1, 5, 3)
    assert default_hardness_L(gst) == 10 * 2 * 5 * gst.metric.dist.max()


def test_gen_random_deterministic():
    a = json.dumps(instance_to_doc(gen_random(1, 5, 3)), sort_keys=True)
    b = json.dumps(instance_to_doc(gen_random(1, 5, 3)), sort_keys=True)
    assert a == b


def test_gen_random_rejects_infeasible_m():
    with pytest.raises(ValueError):
        gen_random(0, 3, 2**2 + 1)
    with pytest.raises(ValueError):
        gen_random(0, 3, 2**3 + 1, root_demand=True)


def test_restrict_renormalises():
    inst = gen_paper_star(3)
    sub = SubInstance.full(inst).restrict([1, 2])
    part = restrict(inst, sub)
    assert part.dist.scenarios == ((2,), ())
    assert sum(part.dist.probs) == pytest.approx(1)


@settings(max_examples=40, deadline=None)
@given(
    st.integers(0, 10_000),
    st.integers(2, 7),
    st.integers(1, 8),
    st.sampled_from(["graph", "star"]),
    st.sampled_from(["uniform", "exponential"]),
)
def test_generated_instances_valid(seed, n, m, kind, skew):
    m = min(m, 2 ** (n - 1))
    inst = gen_random(seed, n, m, kind=kind, skew=skew)
    assert not instance_issues(inst)
    assert all(p > 0 for p in inst.dist.probs) and sum(inst.dist.probs) == 1


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.integers(2, 7), st.integers(1, 6))
def test_document_round_trip(seed, n, m):
    inst = gen_random(seed, n, min(m, 2 ** (n - 1)), kind="graph" if seed % 2 else "star")
    doc = json.loads(json.dumps(instance_to_doc(inst)))
    back = instance_from_doc(doc)
    assert back.metric == inst.metric
    assert back.dist == inst.dist
    assert back.objective == inst.objective


def test_gst_round_trip():
    gst = gen_random_gst(4, 5, 3)
    back = gst_from_doc(json.loads(json.dumps(gst_to_doc(gst))))
    assert back == gst


def test_edge_list_document():
    doc = {"n": 3, "edges": [[0, 1, 1], [1, 2, 1]], "scenarios": [[2], []], "probs": ["1/3", "2/3"]}
    inst = instance_from_doc(doc)
    assert inst.metric.d(0, 2) == 2
    assert inst.dist.probs == (Fraction(1, 3), Fraction(2, 3))


def test_missing_field_reported():
    with pytest.raises(InstanceError):
        instance_from_doc({"n": 1, "dist": [[0]], "probs": [1]})
