"""Abductive explanations read off fired rules, plus a brute-force verifier.

A feature set X is a weak abductive explanation (WAXp) of a point v with
prediction c when every valid point agreeing with v on X is also predicted
c. An AXp is a subset-minimal WAXp.

For a rule R_k whose body is a conjunction of equalities and which fires
on v:

* the features of L_k are a WAXp if no negative overlap involves R_k;
* they are an AXp if, in addition, no pair of rules overlaps negatively
  and no literal of L_k is locally or globally redundant.

These conditions are checked with SAT queries. Whenever one fails, or
cannot be decided in budget, a :class:`Refusal` is returned whose
certificate can be replayed against the background theory.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Mapping

from dsaudit.analysis import Query, QueryEngine, Redundancy, _engine, _literal_verdict
from dsaudit.background import BackgroundKnowledge
from dsaudit.model import EQ, NO_DEFAULT, Atom, DecisionSet, FeatureKind, Literal, ModelError, Value, format_value, parse_number
from dsaudit.oracle import DEFAULT_CELL_BOUND, Oracle, eval_literal
from dsaudit.sat import Status

PRECONDITION = "precondition violated"


class Kind(str, enum.Enum):
    WAXP = "WAXp"
    AXP = "AXp"


class Verdict(str, enum.Enum):
    VALID_WAXP = "valid-WAXp"
    VALID_AXP = "valid-AXp"
    INVALID = "invalid"


@dataclass(frozen=True)
class Certificate:
    """Evidence for a refusal.

    ``query`` with ``expect`` ("sat"/"unsat") is re-checkable via
    :func:`replay`; ``literal``/``clause`` point at the offending syntax.
    """

    expect: str | None = None
    query: Query | None = None
    witness: dict[Atom, bool] | None = field(default=None, compare=False)
    pair: tuple[int, int] | None = None
    literal: Literal | None = None
    clause: tuple[Literal, ...] | None = None

    def to_json(self) -> dict:
        out: dict = {}
        if self.query is not None:
            out["expect"] = self.expect
            out["query"] = self.query.to_json()
        if self.pair is not None:
            out["pair"] = list(self.pair)
        if self.literal is not None:
            out["literal"] = str(self.literal)
        if self.clause is not None:
            out["clause"] = [str(l) for l in self.clause]
        if self.witness is not None:
            out["witness"] = sorted(str(a) if v else f"not ({a})" for a, v in self.witness.items())
        return out


@dataclass(frozen=True)
class Refusal:
    rule: int | None
    reason: str
    detail: str
    certificate: Certificate = Certificate()

    def __str__(self):
        head = f"refused (rule {self.rule})" if self.rule is not None else "refused"
        return f"{head}: {self.reason}: {self.detail}"

    def to_json(self) -> dict:
        return {
            "status": "refused",
            "rule": self.rule,
            "reason": self.reason,
            "detail": self.detail,
            "certificate": self.certificate.to_json(),
        }


@dataclass(frozen=True)
class Explanation:
    point: Mapping[str, Value] = field(compare=False, hash=False)
    outcome: object
    features: tuple[str, ...]
    kind: Kind
    rule: int
    justification: tuple[str, ...]

    def __str__(self):
        return f"{self.kind.value} {{{', '.join(self.features)}}} for outcome {format_value(self.outcome)} (rule {self.rule})"

    def to_json(self) -> dict:
        return {
            "status": "explained",
            "kind": self.kind.value,
            "features": list(self.features),
            "outcome": format_value(self.outcome),
            "rule": self.rule,
            "justification": list(self.justification),
        }


def parse_point(ds: DecisionSet, values: Mapping[str, object]) -> dict[str, Value]:
    """Typed point from raw values; every feature needs a value."""
    point: dict[str, Value] = {}
    for f in ds.features:
        if f.name not in values:
            raise ModelError(f"point has no value for feature {f.name!r}")
        raw = values[f.name]
        point[f.name] = str(raw) if f.kind is FeatureKind.CATEGORICAL else parse_number(raw)
    extra = set(values) - {f.name for f in ds.features}
    if extra:
        raise ModelError(f"point names unknown features {sorted(extra)}")
    return point


def replay(bk: BackgroundKnowledge, cert: Certificate, engine: QueryEngine | None = None) -> bool:
    """Re-run a certificate's query; True when the expected status comes back."""
    if cert.query is None:
        return True
    res = _engine(bk, engine).replay(cert.query)
    return (res.status is Status.SAT) if cert.expect == "sat" else (res.status is Status.UNSAT)


def recheck(ds: DecisionSet, bk: BackgroundKnowledge, point: Mapping[str, Value], refusal: Refusal) -> bool:
    """Independently confirm a refusal's certificate.

    Query certificates are replayed on a fresh solver; syntactic ones are
    re-evaluated at the point.
    """
    cert = refusal.certificate
    if cert.query is not None:
        ok = replay(bk, cert, QueryEngine(bk, incremental=False))
        if cert.pair is not None and ok:
            i, j = cert.pair
            ok = ds.rule(i).outcome != ds.rule(j).outcome and set(cert.query.cube) == set(ds.rule(i).body + ds.rule(j).body)
        return ok
    if refusal.reason == PRECONDITION:
        lit = cert.literal
        return lit is not None and not (lit.positive and lit.atom.op == EQ) and lit in ds.rule(refusal.rule).body
    if refusal.reason == "rule does not fire":
        return cert.literal in ds.rule(refusal.rule).body and not eval_literal(point, cert.literal)
    if refusal.reason == "invalid point":
        return cert.clause in bk.user_clauses and not any(eval_literal(point, l) for l in cert.clause)
    if refusal.reason == "no rule fires":
        return not any(all(eval_literal(point, l) for l in r.body) for r in ds.rules)
    return False


def _features_of(ds: DecisionSet, body) -> tuple[str, ...]:
    names = {l.feature for l in body}
    return tuple(f.name for f in ds.features if f.name in names)


def _gate(ds: DecisionSet, bk: BackgroundKnowledge, k: int, point: Mapping[str, Value]) -> Refusal | None:
    rule = ds.rule(k)
    for lit in rule.body:
        if not (lit.positive and lit.atom.op == EQ):
            return Refusal(k, PRECONDITION, f"literal {lit} is not an equality", Certificate(literal=lit))
    for clause in bk.user_clauses:
        if not any(eval_literal(point, l) for l in clause):
            return Refusal(k, "invalid point", "point violates a constraint", Certificate(clause=clause))
    for lit in rule.body:
        if not eval_literal(point, lit):
            return Refusal(k, "rule does not fire", f"{lit} is false at the point", Certificate(literal=lit))
    return None


def _overlap_refusal(ds, engine, k, others) -> Refusal | None:
    """First negative overlap among (R_k', R_j) pairs, or an undecided one."""
    for a, b in others:
        ra, rb = ds.rule(a), ds.rule(b)
        q = Query(ra.body + rb.body)
        res = engine.check(q.cube, q.negated)
        pair = (min(a, b), max(a, b))
        if res.sat:
            cert = Certificate("sat", q, res.assignment, pair)
            return Refusal(k, "negative overlap", f"rules {pair[0]} and {pair[1]} overlap with different outcomes", cert)
        if res.status is Status.TIMEOUT:
            return Refusal(k, "overlap undecided", f"budget spent on pair {pair}", Certificate(pair=pair))
    return None


def waxp_from_rule(
    ds: DecisionSet,
    bk: BackgroundKnowledge,
    k: int,
    point: Mapping[str, Value],
    engine: QueryEngine | None = None,
) -> Explanation | Refusal:
    """Features of L_k as a WAXp, if no negative overlap involves R_k."""
    engine = _engine(bk, engine)
    refusal = _gate(ds, bk, k, point)
    if refusal:
        return refusal
    rule = ds.rule(k)
    pairs = [(k, r.index) for r in ds.rules if r.outcome != rule.outcome]
    refusal = _overlap_refusal(ds, engine, k, pairs)
    if refusal:
        return refusal
    return Explanation(dict(point), rule.outcome, _features_of(ds, rule.body), Kind.WAXP, k, tuple(map(str, rule.body)))


def _redundancy_refusal(ds, bk, engine, k) -> Refusal | None:
    rule = ds.rule(k)
    siblings = tuple(r.body for r in ds.siblings(k))
    for lit in rule.body:
        if len(rule) >= 2:
            v = _literal_verdict(ds, bk, k, lit, engine)
            kind, query = v.kind, v.query
        else:
            # A lone literal: B alone may force it, or flipping it may stay
            # inside the siblings' cover.
            kind, query = Redundancy.NONE, None
            for q, tag in ((Query((-lit,)), Redundancy.LOCAL), (Query((-lit,), siblings), Redundancy.GLOBAL)):
                res = engine.check(q.cube, q.negated)
                if res.unsat:
                    kind, query = tag, q
                    break
                if res.status is Status.TIMEOUT:
                    kind = Redundancy.UNDECIDED
                    break
        if kind is Redundancy.UNDECIDED:
            return Refusal(k, "redundancy undecided", f"budget spent on {lit}", Certificate(literal=lit))
        if kind is not Redundancy.NONE:
            return Refusal(k, f"{kind.value} redundant literal", f"{lit} is redundant in rule {k}", Certificate("unsat", query, literal=lit))
    return None


def axp_from_rule(
    ds: DecisionSet,
    bk: BackgroundKnowledge,
    k: int,
    point: Mapping[str, Value],
    engine: QueryEngine | None = None,
) -> Explanation | Refusal:
    """Features of L_k as an AXp.

    Needs the WAXp conditions, no negative overlap anywhere, and no
    redundant literal in L_k. Also refused when the default rule is
    reachable and predicts the same outcome as R_k: dropping a feature can
    then land only on default points, keeping the prediction, so minimality
    is not guaranteed.
    """
    engine = _engine(bk, engine)
    w = waxp_from_rule(ds, bk, k, point, engine)
    if isinstance(w, Refusal):
        return w
    rules = ds.rules
    pairs = [
        (a.index, b.index)
        for x, a in enumerate(rules)
        for b in rules[x + 1:]
        if a.outcome != b.outcome
    ]
    refusal = _overlap_refusal(ds, engine, k, pairs)
    if refusal:
        return refusal
    refusal = _redundancy_refusal(ds, bk, engine, k)
    if refusal:
        return refusal
    rule = ds.rule(k)
    if ds.default_outcome is not NO_DEFAULT and ds.default_outcome == rule.outcome:
        q = Query((), tuple(r.body for r in rules))
        res = engine.check(q.cube, q.negated)
        if not res.unsat:
            reason = "default rule shares the outcome" if res.sat else "default reachability undecided"
            return Refusal(k, reason, "minimality not guaranteed", Certificate("sat", q, res.assignment) if res.sat else Certificate())
    return Explanation(w.point, w.outcome, w.features, Kind.AXP, k, w.justification)


def explain(
    ds: DecisionSet,
    bk: BackgroundKnowledge,
    point: Mapping[str, Value],
    kind: Kind | str = Kind.AXP,
    rule: int | None = None,
    engine: QueryEngine | None = None,
) -> Explanation | Refusal:
    """Explain the prediction at ``point`` through ``rule`` or the first rule that fires."""
    kind = Kind(kind)
    if rule is None:
        fired = [r.index for r in ds.rules if all(eval_literal(point, l) for l in r.body)]
        if not fired:
            return Refusal(None, "no rule fires", "the default outcome is outside the scope of rule-based explanations")
        rule = fired[0]
    fn = axp_from_rule if kind is Kind.AXP else waxp_from_rule
    return fn(ds, bk, rule, point, engine)


def verify_explanation(
    ds: DecisionSet,
    bk: BackgroundKnowledge,
    expl: Explanation,
    cell_bound: int = DEFAULT_CELL_BOUND,
    oracle: Oracle | None = None,
) -> Verdict:
    """Check sufficiency (and minimality) by exhausting the representative grid.

    Raises :class:`~dsaudit.oracle.GridTooLarge` when the grid exceeds
    ``cell_bound`` cells.
    """
    oracle = oracle or Oracle(ds, bk.user_clauses, cell_bound=cell_bound)
    if not oracle.sufficient(expl.point, expl.features, expl.outcome):
        return Verdict.INVALID
    if oracle.subset_minimal(expl.point, expl.features, expl.outcome):
        return Verdict.VALID_AXP
    return Verdict.VALID_WAXP
