import pickle
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from dsaudit.model import (
    INVALID,
    NO_DEFAULT,
    Ambiguous,
    Atom,
    DecisionSet,
    Feature,
    FeatureKind,
    Literal,
    ModelError,
    Rule,
    TieBreak,
    canonicalize,
    format_number,
    parse_number,
    predict,
)

X = Feature(1, "x")
C = Feature(2, "c", FeatureKind.CATEGORICAL)


@pytest.mark.parametrize(
    "op,atom_op,positive",
    [("=", "=", True), ("!=", "=", False), (">", ">", True), ("<=", ">", False), (">=", ">=", True), ("<", ">=", False), ("≥", ">=", True)],
)
def test_canonical_forms(op, atom_op, positive):
    lit = canonicalize(X, op, "2.5")
    assert lit.atom == Atom("x", atom_op, Fraction(5, 2))
    assert lit.positive is positive


def test_display_operator_round_trips():
    for op in ("=", "!=", "<", "<=", ">", ">="):
        assert canonicalize(X, op, 1).op == op


def test_categorical_rejects_order():
    with pytest.raises(ModelError):
        canonicalize(C, "<", "red")
    assert str(canonicalize(C, "!=", "red")) == "c != red"


def test_unknown_operator():
    with pytest.raises(ModelError):
        canonicalize(X, "~", 1)


@pytest.mark.parametrize("text,value", [("3", 3), ("0.1", Fraction(1, 10)), ("1/3", Fraction(1, 3)), ("-2.50", Fraction(-5, 2)), (0.1, Fraction(1, 10))])
def test_parse_number_exact(text, value):
    assert parse_number(text) == value


@pytest.mark.parametrize("bad", ["abc", "1/0", True, ""])
def test_parse_number_rejects(bad):
    with pytest.raises(ModelError):
        parse_number(bad)


@given(st.fractions())
def test_format_number_round_trip(x):
    assert parse_number(format_number(x)) == x


def test_format_number_shapes():
    assert format_number(Fraction(7)) == "7"
    assert format_number(Fraction(-1, 8)) == "-0.125"
    assert format_number(Fraction(200, 3)) == "200/3"


def test_negation_is_involution():
    lit = canonicalize(X, ">", 0)
    assert -(-lit) == lit
    assert (-lit).op == "<="


def test_rule_rejects_contradiction_and_dedupes():
    lit = canonicalize(X, ">", 0)
    with pytest.raises(ModelError):
        Rule((lit, -lit), "1")
    assert len(Rule((lit, lit), "1")) == 1


def test_decision_set_validation():
    lit = canonicalize(X, ">", 0)
    with pytest.raises(ModelError):
        DecisionSet((Feature(2, "x"),), (), "0")
    with pytest.raises(ModelError):
        DecisionSet((X,), (Rule((), "1"),), "0")
    with pytest.raises(ModelError):
        DecisionSet((X,), (Rule((Literal(Atom("y", ">", Fraction(0))),), "1"),), "0")
    with pytest.raises(ModelError):
        DecisionSet((X, C), (Rule((Literal(Atom("c", ">", "a")),), "1"),), "0")
    ds = DecisionSet((X,), (Rule((lit,), "1"), Rule((-lit,), "0")), "0")
    assert ds.indices == (1, 2)
    assert ds.without_rule(1).indices == (2,)
    assert ds.size == 2


def _ds(tie):
    a = canonicalize(X, ">", 0)
    b = canonicalize(X, ">", 5)
    return DecisionSet((X,), (Rule((a,), "lo"), Rule((b,), "hi"), Rule((b,), "hi2")), "none", tie), a, b


def test_prediction_semantics():
    ds, a, b = _ds(TieBreak.REPORT_AMBIGUITY)
    assert predict(ds, {a.atom: False, b.atom: False}) == "none"
    assert predict(ds, {a.atom: True, b.atom: False}) == "lo"
    assert predict(ds, {a.atom: True, b.atom: True}) == Ambiguous(frozenset({"lo", "hi", "hi2"}))


def test_tie_breaks():
    ds, a, b = _ds(TieBreak.LOWEST_RULE_INDEX)
    both = {a.atom: True, b.atom: True}
    assert predict(ds, both) == "lo"
    rules = (Rule((a,), "lo"), Rule((b,), "hi"), Rule((a, b), "hi"))
    ds2 = DecisionSet((X,), rules, "none", TieBreak.MAJORITY)
    assert predict(ds2, both) == "hi"


def test_invalid_points():
    class Never:
        def holds(self, _):
            return False

    ds, a, b = _ds(TieBreak.REPORT_AMBIGUITY)
    assert predict(ds, {a.atom: True, b.atom: True}, Never()) is INVALID


def test_markers_pickle():
    assert pickle.loads(pickle.dumps(NO_DEFAULT)) is NO_DEFAULT
