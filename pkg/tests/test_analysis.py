import random

import pytest

from dsaudit.analysis import (
    AuditConfig,
    BudgetTracker,
    FindingKind,
    OrderPolicy,
    Query,
    QueryEngine,
    Redundancy,
    audit,
    classify_literals,
    default_reachable,
    equivalent,
    literal_redundant,
    overlap_pairs,
    preprocess,
    remove_redundant_rules,
    rule_redundant,
    simplify,
)
from dsaudit.background import background_for
from dsaudit.model import DecisionSet, Feature, Rule, canonicalize
from dsaudit.oracle import Oracle
from dsaudit.sat import Status
from helpers import random_ds


def bk_of(rf, mode="complete-order"):
    return background_for(rf.ds, mode, rf.constraints)


def test_loan_overlap(loan):
    res = overlap_pairs(loan.ds, bk_of(loan))
    assert res.as_set() == {(1, 4), (2, 4)}
    assert res.total == 3
    assert res.percentage * 3 == 200
    for p in res.pairs:
        assert loan.ds.rule(p.i).fires(p.witness) and loan.ds.rule(p.j).fires(p.witness)


def test_positive_overlap_reported_separately(loan):
    res = overlap_pairs(loan.ds, bk_of(loan), positive=True)
    assert {(p.i, p.j) for p in res.positive} == {(1, 3), (2, 3)}
    assert res.count == 2


def test_loan_literals(loan):
    ds, bk = loan.ds, bk_of(loan)
    size, age = ds.literal("size", "!=", 140), ds.literal("age", ">", 10)
    assert literal_redundant(ds, bk, 1, size).kind is Redundancy.GLOBAL
    assert literal_redundant(ds, bk, 1, age).kind is Redundancy.LOCAL
    alg2 = bk_of(loan, "alg2")
    assert literal_redundant(ds, alg2, 1, size).kind is Redundancy.GLOBAL


def test_singleton_body_rejected(loan):
    ds = loan.ds.replace_rule(Rule((loan.ds.literal("size", "=", 140),), "1", 2))
    with pytest.raises(ValueError):
        literal_redundant(ds, bk_of(loan), 2, ds.rule(2).body[0])


def test_boolean_simplify(boolean):
    bk = bk_of(boolean)
    out = simplify(boolean.ds, bk)
    bodies = {r.index: {str(l) for l in r.body} for r in out.ds.rules}
    assert bodies == {1: {"a = 1"}, 3: {"c = 1", "d = 1"}}
    kinds = [(f.kind, f.rule) for f in out.findings]
    assert kinds == [(FindingKind.GLOBAL, 1), (FindingKind.RULE, 2), (FindingKind.LOCAL, 3)]
    assert equivalent(boolean.ds, out.ds, bk) is True
    assert Oracle(boolean.ds, boolean.constraints).equivalent(boolean.ds, out.ds)


def test_order_policy_changes_result(boolean):
    bk = bk_of(boolean)
    asc = simplify(boolean.ds, bk, OrderPolicy.ASCENDING)
    desc = simplify(boolean.ds, bk, OrderPolicy.DESCENDING)
    assert asc.ds != desc.ds
    assert equivalent(boolean.ds, desc.ds, bk) is True


def test_independent_classification(boolean):
    scan = classify_literals(boolean.ds, bk_of(boolean))
    assert {(v.index, str(v.literal)) for v in scan.of_kind(Redundancy.GLOBAL)} == {(1, "b = 1"), (2, "w = 1")}
    assert {(v.index, str(v.literal)) for v in scan.of_kind(Redundancy.LOCAL)} == {(3, "f = 1")}


def test_certificates_replay(loan):
    bk = bk_of(loan)
    eng = QueryEngine(bk)
    for f in classify_literals(loan.ds, bk, eng).findings:
        assert eng.replay(f.certificate).status is Status.UNSAT


def test_preprocess_drops_duplicates_and_dead_rules():
    x = Feature(1, "x")
    a, b = canonicalize(x, ">", 5), canonicalize(x, "<", 3)
    ds = DecisionSet((x,), (Rule((a,), "1"), Rule((a,), "1"), Rule((a, b), "0")), "0")
    pre = preprocess(ds, background_for(ds))
    assert pre.duplicates == [2] and pre.never_fire == [3]
    assert pre.ds.indices == (1,)


def test_rule_redundancy_and_removal():
    x = Feature(1, "x")
    a, b = canonicalize(x, ">", 5), canonicalize(x, ">", 3)
    ds = DecisionSet((x,), (Rule((a,), "1"), Rule((b,), "1")), "0")
    bk = background_for(ds)
    assert rule_redundant(ds, bk, 1).redundant
    assert not rule_redundant(ds, bk, 2).redundant
    assert remove_redundant_rules(ds, bk).ds.indices == (2,)


def test_default_reachability(loan):
    v = default_reachable(loan.ds, bk_of(loan))
    assert v.reachable and not any(r.fires(v.witness) for r in loan.ds.rules)


def test_equivalence_detects_difference(loan):
    bk = bk_of(loan)
    assert equivalent(loan.ds, loan.ds.without_rule(3), bk) is False
    assert equivalent(loan.ds, loan.ds, bk) is True


def test_incremental_and_fresh_engines_agree():
    rng = random.Random(17)
    for _ in range(40):
        ds, cons = random_ds(rng)
        bk = background_for(ds, "complete-order", cons)
        inc, fresh = QueryEngine(bk), QueryEngine(bk, incremental=False)
        assert overlap_pairs(ds, bk, inc).as_set() == overlap_pairs(ds, bk, fresh).as_set()
        a = [v.kind for v in classify_literals(ds, bk, inc).verdicts]
        b = [v.kind for v in classify_literals(ds, bk, fresh).verdicts]
        assert a == b


@pytest.mark.slow
def test_parallel_overlap_matches_serial(loan):
    bk = bk_of(loan)
    serial = overlap_pairs(loan.ds, bk)
    par = overlap_pairs(loan.ds, bk, QueryEngine(bk), jobs=2)
    assert serial.as_set() == par.as_set()


def test_budget_exhaustion_is_reported(loan):
    bk = bk_of(loan)
    eng = QueryEngine(bk, BudgetTracker(seconds=1e-9))
    import time

    time.sleep(0.001)
    assert eng.budget.expired
    res = audit(loan.ds, loan.constraints, AuditConfig(budget_seconds=1e-6))
    assert res.timed_out


def test_audit_phases(loan):
    res = audit(loan.ds, loan.constraints)
    assert not res.timed_out
    assert set(res.timings) == {"TB", "TO", "TC", "TR"}
    assert res.overlap.as_set() == {(1, 4), (2, 4)}
    assert res.rules.findings == []
    assert {str(f.literal) for f in res.literals.findings} == {"size != 140", "age > 10"}


def test_query_text():
    x = Feature(1, "x")
    q = Query((canonicalize(x, ">", 1),), ((canonicalize(x, ">", 2),),))
    assert str(q) == "B ∧ x > 1 ∧ not (x > 2)"


@pytest.mark.parametrize("seed", range(4))
def test_random_verdicts_match_oracle(seed):
    rng = random.Random(1000 + seed)
    for _ in range(25):
        ds, cons = random_ds(rng)
        bk = background_for(ds, "complete-order", cons)
        o = Oracle(ds, cons)
        assert overlap_pairs(ds, bk).as_set() == o.negative_overlaps()
        assert default_reachable(ds, bk).reachable == o.default_reachable()
        for i in ds.indices:
            assert rule_redundant(ds, bk, i).redundant == o.rule_redundant(i)
        for v in classify_literals(ds, bk).verdicts:
            want = o.literal_redundancy(v.index, v.literal)
            assert (v.kind.value if v.redundant else None) == want
