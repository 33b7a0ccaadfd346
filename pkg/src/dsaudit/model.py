"""Features, literals, rules and decision sets, with the prediction map."""
from __future__ import annotations

import enum
from collections import Counter
from dataclasses import dataclass, field, replace
from decimal import Decimal, InvalidOperation
from fractions import Fraction
from typing import Iterable, Mapping, Sequence, Union

Value = Union[Fraction, str]
Outcome = Union[Fraction, str]

EQ, NE, LT, LE, GT, GE = "=", "!=", "<", "<=", ">", ">="
CANONICAL_OPS = (EQ, GT, GE)
ALL_OPS = (EQ, NE, LT, LE, GT, GE)
# op -> (canonical op, polarity)
_CANON = {EQ: (EQ, True), NE: (EQ, False), GT: (GT, True), LE: (GT, False), GE: (GE, True), LT: (GE, False)}
_SHOW = {(EQ, True): EQ, (EQ, False): NE, (GT, True): GT, (GT, False): LE, (GE, True): GE, (GE, False): LT}
_OP_ALIASES = {"==": EQ, "≠": NE, "<>": NE, "≤": LE, "≥": GE, "=<": LE, "=>": GE}


class ModelError(ValueError):
    """Ill-formed feature, literal, rule or decision set."""


class FeatureKind(str, enum.Enum):
    NUMERIC = "numeric"
    CATEGORICAL = "categorical"


class TieBreak(str, enum.Enum):
    REPORT_AMBIGUITY = "report-ambiguity"
    LOWEST_RULE_INDEX = "lowest-rule-index"
    MAJORITY = "majority-then-lowest-index"


class Task(str, enum.Enum):
    CLASSIFICATION = "classification"
    REGRESSION = "regression"


class _Marker:
    def __init__(self, name):
        self._name = name

    def __repr__(self):
        return self._name

    def __reduce__(self):
        return self._name


#: prediction on an input that violates the background knowledge
INVALID = _Marker("INVALID")
#: default outcome of models whose default rule is not meant to fire (trees)
NO_DEFAULT = _Marker("NO_DEFAULT")


@dataclass(frozen=True)
class Ambiguous:
    """Several rules with different outcomes fire and no tie-break applies."""

    outcomes: frozenset


@dataclass(frozen=True)
class Feature:
    id: int
    name: str
    kind: FeatureKind = FeatureKind.NUMERIC

    @property
    def ordered(self) -> bool:
        return self.kind is FeatureKind.NUMERIC


def parse_number(text) -> Fraction:
    """Exact rational from an int, decimal string or ``p/q`` string (no floats)."""
    if isinstance(text, Fraction):
        return text
    if isinstance(text, bool):
        raise ModelError(f"not a number: {text!r}")
    if isinstance(text, int):
        return Fraction(text)
    if isinstance(text, float):
        # repr gives the shortest round-tripping decimal, which is what was written
        return Fraction(Decimal(repr(text)))
    s = str(text).strip()
    try:
        if "/" in s:
            return Fraction(s)
        return Fraction(Decimal(s))
    except (InvalidOperation, ValueError, ZeroDivisionError):
        raise ModelError(f"not a number: {text!r}") from None


def format_number(x: Fraction) -> str:
    """Shortest exact text: an integer, a finite decimal, or ``p/q``."""
    if x.denominator == 1:
        return str(x.numerator)
    d = x.denominator
    twos = fives = 0
    while d % 2 == 0:
        d //= 2
        twos += 1
    while d % 5 == 0:
        d //= 5
        fives += 1
    if d != 1:
        return f"{x.numerator}/{x.denominator}"
    digits = max(twos, fives)
    scaled = x * 10**digits
    sign = "-" if scaled < 0 else ""
    n = str(abs(scaled.numerator))
    n = n.rjust(digits + 1, "0")
    return f"{sign}{n[:-digits]}.{n[-digits:]}"


def format_value(v: Value) -> str:
    return format_number(v) if isinstance(v, Fraction) else str(v)


@dataclass(frozen=True, order=True)
class Atom:
    """Canonical threshold atom ``feature op value`` with op in {=, >, >=}."""

    feature: str
    op: str
    value: Value

    def __str__(self):
        return f"{self.feature} {self.op} {format_value(self.value)}"


@dataclass(frozen=True)
class Literal:
    """An atom or its negation."""

    atom: Atom
    positive: bool = True

    @property
    def feature(self) -> str:
        return self.atom.feature

    @property
    def value(self) -> Value:
        return self.atom.value

    @property
    def op(self) -> str:
        """Display operator, e.g. ``!=`` for a negated equality."""
        return _SHOW[(self.atom.op, self.positive)]

    def __neg__(self) -> "Literal":
        return Literal(self.atom, not self.positive)

    def negate(self) -> "Literal":
        return -self

    def holds(self, atom_value: bool) -> bool:
        return atom_value if self.positive else not atom_value

    def __str__(self):
        return f"{self.atom.feature} {self.op} {format_value(self.atom.value)}"


def normalize_op(op: str) -> str:
    op = _OP_ALIASES.get(op, op)
    if op not in ALL_OPS:
        raise ModelError(f"unknown relational operator {op!r}")
    return op


def canonicalize(feature: Feature, op: str, value) -> Literal:
    """Map ``feature op value`` to its canonical (atom, polarity) form.

    ``!=``, ``<=`` and ``<`` become negations of ``=``, ``>`` and ``>=``.
    Categorical features only admit ``=`` and ``!=``.
    """
    op = normalize_op(op)
    if feature.kind is FeatureKind.CATEGORICAL:
        if op not in (EQ, NE):
            raise ModelError(f"operator {op!r} not admissible for categorical feature {feature.name!r}")
        val: Value = str(value)
    else:
        val = parse_number(value)
    cop, pol = _CANON[op]
    return Literal(Atom(feature.name, cop, val), pol)


@dataclass(frozen=True)
class Rule:
    """``body -> outcome``; ``index`` is the 1-based position in the source model."""

    body: tuple[Literal, ...]
    outcome: Outcome
    index: int | None = None

    def __post_init__(self):
        body = tuple(dict.fromkeys(self.body))
        object.__setattr__(self, "body", body)
        atoms = {}
        for lit in body:
            if atoms.setdefault(lit.atom, lit.positive) != lit.positive:
                raise ModelError(f"rule body contains both {lit} and its negation")

    def __len__(self):
        return len(self.body)

    @property
    def features(self) -> frozenset[str]:
        return frozenset(l.feature for l in self.body)

    def without(self, lit: Literal) -> "Rule":
        return Rule(tuple(l for l in self.body if l != lit), self.outcome, self.index)

    def flipped(self, lit: Literal) -> "Rule":
        """Body with ``lit`` replaced by its negation."""
        return Rule(tuple(-l if l == lit else l for l in self.body), self.outcome, self.index)

    def fires(self, assignment: Mapping[Atom, bool]) -> bool:
        return all(l.holds(assignment[l.atom]) for l in self.body)

    def __str__(self):
        return " and ".join(map(str, self.body)) + f" => {format_value(self.outcome)}"


@dataclass(frozen=True)
class DecisionSet:
    """Unordered rules plus a default outcome.

    Rule indices are fixed at construction (1-based positions unless given)
    and survive rule removal, so reports always refer to the source model.
    """

    features: tuple[Feature, ...]
    rules: tuple[Rule, ...]
    default_outcome: Outcome = NO_DEFAULT
    tie_break: TieBreak = TieBreak.REPORT_AMBIGUITY
    task: Task = Task.CLASSIFICATION
    _by_name: dict = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        feats = tuple(self.features)
        object.__setattr__(self, "features", feats)
        by_name = {}
        for pos, f in enumerate(feats, start=1):
            if f.id != pos:
                raise ModelError(f"feature ids must be contiguous from 1; {f.name!r} has id {f.id}")
            if f.name in by_name:
                raise ModelError(f"duplicate feature {f.name!r}")
            by_name[f.name] = f
        object.__setattr__(self, "_by_name", by_name)
        rules = []
        seen_idx = set()
        for pos, rule in enumerate(self.rules, start=1):
            if rule.index is None:
                rule = replace(rule, index=pos)
            if rule.index in seen_idx:
                raise ModelError(f"duplicate rule index {rule.index}")
            seen_idx.add(rule.index)
            if not rule.body:
                raise ModelError(f"rule {rule.index} has an empty body; only the default rule may")
            for lit in rule.body:
                self._check_literal(lit)
            rules.append(rule)
        object.__setattr__(self, "rules", tuple(rules))
        object.__setattr__(self, "tie_break", TieBreak(self.tie_break))
        object.__setattr__(self, "task", Task(self.task))

    def _check_literal(self, lit: Literal) -> None:
        f = self._by_name.get(lit.feature)
        if f is None:
            raise ModelError(f"literal {lit} uses undeclared feature {lit.feature!r}")
        if f.kind is FeatureKind.CATEGORICAL and (lit.atom.op != EQ or not isinstance(lit.value, str)):
            raise ModelError(f"literal {lit} not admissible for categorical feature {f.name!r}")
        if f.kind is FeatureKind.NUMERIC and not isinstance(lit.value, Fraction):
            raise ModelError(f"literal {lit} needs a numeric threshold")

    def feature(self, name: str) -> Feature:
        try:
            return self._by_name[name]
        except KeyError:
            raise ModelError(f"unknown feature {name!r}") from None

    def literal(self, feature: str, op: str, value) -> Literal:
        return canonicalize(self.feature(feature), op, value)

    def rule(self, index: int) -> Rule:
        for r in self.rules:
            if r.index == index:
                return r
        raise KeyError(f"no rule with index {index}")

    @property
    def indices(self) -> tuple[int, ...]:
        return tuple(r.index for r in self.rules)

    def rules_for(self, outcome: Outcome) -> tuple[Rule, ...]:
        return tuple(r for r in self.rules if r.outcome == outcome)

    def siblings(self, index: int) -> tuple[Rule, ...]:
        """Other rules with the same outcome as rule ``index``."""
        target = self.rule(index)
        return tuple(r for r in self.rules if r.outcome == target.outcome and r.index != index)

    def with_rules(self, rules: Iterable[Rule]) -> "DecisionSet":
        return DecisionSet(self.features, tuple(rules), self.default_outcome, self.tie_break, self.task)

    def without_rule(self, index: int) -> "DecisionSet":
        return self.with_rules(r for r in self.rules if r.index != index)

    def replace_rule(self, rule: Rule) -> "DecisionSet":
        return self.with_rules(rule if r.index == rule.index else r for r in self.rules)

    def literals(self) -> list[Literal]:
        return [l for r in self.rules for l in r.body]

    @property
    def size(self) -> int:
        return sum(len(r) for r in self.rules)

    def __len__(self):
        return len(self.rules)


def distinct_outcomes(ds: DecisionSet) -> list[Outcome]:
    """Outcomes of the non-default rules, in order of first appearance."""
    return list(dict.fromkeys(r.outcome for r in ds.rules))


def fired_rules(ds: DecisionSet, assignment: Mapping[Atom, bool]) -> list[Rule]:
    return [r for r in ds.rules if r.fires(assignment)]


def predict(ds: DecisionSet, assignment: Mapping[Atom, bool], bk=None):
    """Prediction on a point given as a truth assignment over atoms.

    Returns ``INVALID`` when the point violates ``bk``, the default outcome
    when nothing fires, the common outcome of the fired rules, or the
    result of the tie-break (an ``Ambiguous`` under report-ambiguity).
    """
    if bk is not None and not bk.holds(assignment):
        return INVALID
    fired = fired_rules(ds, assignment)
    if not fired:
        return ds.default_outcome
    outcomes = list(dict.fromkeys(r.outcome for r in fired))
    if len(outcomes) == 1:
        return outcomes[0]
    return break_tie(fired, ds.tie_break)


def break_tie(fired: Sequence[Rule], strategy: TieBreak):
    if strategy is TieBreak.REPORT_AMBIGUITY:
        return Ambiguous(frozenset(r.outcome for r in fired))
    ordered = sorted(fired, key=lambda r: r.index)
    if strategy is TieBreak.LOWEST_RULE_INDEX:
        return ordered[0].outcome
    counts = Counter(r.outcome for r in fired)
    top = max(counts.values())
    return next(r.outcome for r in ordered if counts[r.outcome] == top)
