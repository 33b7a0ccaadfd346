import random
from fractions import Fraction

import pytest

from dsaudit.analysis import simplify
from dsaudit.background import background_for
from dsaudit.explain import (
    PRECONDITION,
    Explanation,
    Kind,
    Refusal,
    Verdict,
    axp_from_rule,
    explain,
    parse_point,
    recheck,
    replay,
    verify_explanation,
    waxp_from_rule,
)
from dsaudit.ingest import parse_rules_text
from dsaudit.model import ModelError
from dsaudit.oracle import GridTooLarge, Oracle
from helpers import random_ds

TWO_RULES = """rulefile v1
feature x1 categorical
feature x2 categorical
constraint x1 = a -> x2 != b
rule x1 = a => 1
rule x2 = b => 0
default none
"""


@pytest.fixture
def two():
    rf = parse_rules_text(TWO_RULES)
    return rf.ds, background_for(rf.ds, "complete-order", rf.constraints)


def test_waxp_and_axp(two):
    ds, bk = two
    p = parse_point(ds, {"x1": "a", "x2": "c"})
    w = waxp_from_rule(ds, bk, 1, p)
    assert isinstance(w, Explanation) and w.features == ("x1",) and w.kind is Kind.WAXP
    a = axp_from_rule(ds, bk, 1, p)
    assert a.kind is Kind.AXP and a.features == ("x1",)
    assert verify_explanation(ds, bk, a) is Verdict.VALID_AXP


def test_overlap_refusal_names_pair():
    rf = parse_rules_text(TWO_RULES.replace("constraint x1 = a -> x2 != b\n", ""))
    bk = background_for(rf.ds, "complete-order", rf.constraints)
    p = parse_point(rf.ds, {"x1": "a", "x2": "c"})
    r = waxp_from_rule(rf.ds, bk, 1, p)
    assert isinstance(r, Refusal) and r.certificate.pair == (1, 2)
    assert replay(bk, r.certificate)


def test_single_rule_waxp():
    rf = parse_rules_text("rulefile v1\nfeature c categorical\nrule c = x => 1\ndefault 0\n")
    bk = background_for(rf.ds)
    w = waxp_from_rule(rf.ds, bk, 1, {"c": "x"})
    assert w.features == ("c",)


def test_non_equality_refused(loan):
    bk = background_for(loan.ds, "complete-order", loan.constraints)
    p = parse_point(loan.ds, {"salary": 1, "size": 140, "age": 20, "color": "red", "weight": 70})
    r = explain(loan.ds, bk, p)
    assert isinstance(r, Refusal) and r.reason == PRECONDITION


def test_default_point_refused(two):
    ds, bk = two
    r = explain(ds, bk, parse_point(ds, {"x1": "z", "x2": "z"}))
    assert isinstance(r, Refusal) and r.rule is None


def test_invalid_point_refused(two):
    ds, bk = two
    r = waxp_from_rule(ds, bk, 1, parse_point(ds, {"x1": "a", "x2": "b"}))
    assert isinstance(r, Refusal) and r.reason == "invalid point"


def test_redundant_literal_refused_then_simplified():
    text = """rulefile v1
feature x1 categorical
feature x2 categorical
feature x3 categorical
constraint x1 = a -> x3 = k
rule x1 = a and x3 = k => 1
rule x2 = b => 0
default none
constraint x1 = a -> x2 != b
"""
    rf = parse_rules_text(text)
    bk = background_for(rf.ds, "complete-order", rf.constraints)
    p = parse_point(rf.ds, {"x1": "a", "x2": "c", "x3": "k"})
    r = axp_from_rule(rf.ds, bk, 1, p)
    assert isinstance(r, Refusal) and "redundant" in r.reason and replay(bk, r.certificate)
    small = simplify(rf.ds, bk).ds
    a = axp_from_rule(small, bk, 1, p)
    assert a.features == ("x1",)
    assert verify_explanation(small, bk, a) is Verdict.VALID_AXP


def test_default_sharing_outcome_refused():
    # rule 1 is irredundant and overlap-free, but dropping x1 lands on
    # default points that also predict 1
    rf = parse_rules_text("rulefile v1\nfeature x1 categorical\nrule x1 = a => 1\ndefault 1\n")
    bk = background_for(rf.ds)
    p = {"x1": "a"}
    assert not Oracle(rf.ds).subset_minimal(p, ["x1"], "1")
    r = axp_from_rule(rf.ds, bk, 1, p)
    assert isinstance(r, Refusal) and r.reason == "default rule shares the outcome"


def test_verify_trivial_cases(two):
    ds, bk = two
    p = parse_point(ds, {"x1": "a", "x2": "c"})
    full = Explanation(p, "1", ("x1", "x2"), Kind.WAXP, 1, ())
    assert verify_explanation(ds, bk, full) is Verdict.VALID_WAXP
    empty = Explanation(p, "1", (), Kind.WAXP, 1, ())
    assert verify_explanation(ds, bk, empty) is Verdict.INVALID


def test_verify_grid_bound(two):
    ds, bk = two
    p = parse_point(ds, {"x1": "a", "x2": "c"})
    with pytest.raises(GridTooLarge):
        verify_explanation(ds, bk, Explanation(p, "1", ("x1",), Kind.AXP, 1, ()), cell_bound=2)


def test_parse_point_errors(two):
    ds, _ = two
    with pytest.raises(ModelError):
        parse_point(ds, {"x1": "a"})
    with pytest.raises(ModelError):
        parse_point(ds, {"x1": "a", "x2": "b", "zz": 1})


def test_emitted_explanations_are_sound_and_monotone():
    rng = random.Random(8)
    emitted = 0
    for _ in range(60):
        ds, cons = random_ds(rng, n_features=4, n_rules=5, body_max=2, eq_only=True, outcomes=("0", "1"))
        bk = background_for(ds, "complete-order", cons)
        o = Oracle(ds, cons)
        for p in list(o.grid.points())[:40]:
            if not o.is_valid(p):
                continue
            r = explain(ds, bk, p, Kind.WAXP)
            if isinstance(r, Explanation):
                emitted += 1
                assert o.sufficient(p, r.features, r.outcome)
                bigger = set(r.features) | {ds.features[0].name}
                assert o.sufficient(p, bigger, r.outcome)
    assert emitted > 20


def test_recheck_confirms_each_certificate_kind(loan):
    ds, bk = loan.ds, background_for(loan.ds, "complete-order", loan.constraints)
    point = parse_point(ds, {"salary": 1, "size": 140, "age": 30, "color": "blue", "weight": 95})
    r = waxp_from_rule(ds, bk, 1, point)
    assert r.reason == PRECONDITION and recheck(ds, bk, point, r)

    rf = parse_rules_text("rulefile v1\nfeature x categorical\nfeature y categorical\nconstraint x != c\nrule x = a => 1\nrule y = b => 0\ndefault none\n")
    ds, bk = rf.ds, background_for(rf.ds, "complete-order", rf.constraints)
    point = parse_point(ds, {"x": "a", "y": "b"})
    r = waxp_from_rule(ds, bk, 1, point)
    assert r.reason == "negative overlap" and recheck(ds, bk, point, r)
    forged = Refusal(1, r.reason, "", r.certificate.__class__("unsat", r.certificate.query, pair=r.certificate.pair))
    assert not recheck(ds, bk, point, forged)
    bad = parse_point(ds, {"x": "c", "y": "b"})
    r = waxp_from_rule(ds, bk, 2, bad)
    assert r.reason == "invalid point" and recheck(ds, bk, bad, r)
    r = explain(ds, bk, parse_point(ds, {"x": "z", "y": "z"}))
    assert r.reason == "no rule fires" and recheck(ds, bk, {"x": "z", "y": "z"}, r)
