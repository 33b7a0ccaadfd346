"""Reading and writing rule models.

Rule DSL (``rulefile v1``), one statement per line, ``#`` starts a comment::

    rulefile v1
    task classification
    tie-break report-ambiguity
    feature age numeric
    feature color categorical
    constraint salary > 0 <-> age >= 18
    constraint size = 140 -> size > 120
    constraint color = red or color = blue
    rule salary > 0 and color = blue => 1
    default 0

A literal is ``<feature> <op> <value>`` with op one of ``= != < <= > >=``.
A constraint is a disjunction of literals (``or``), an implication
``<conjunction> -> <disjunction>`` or a biconditional ``<lit> <-> <lit>``.
``default none`` declares a model whose default rule should never fire.
Names and values containing spaces or operator characters are quoted.

The same content is accepted as JSON (``{"format": "rulefile", ...}``).
Decision trees and anchor explanations are read from JSON documents; see
:func:`parse_tree` and :func:`parse_anchors`.
"""
from __future__ import annotations

import json
import logging
import os
import re
from dataclasses import dataclass, field
from typing import Any, Iterable, Sequence

from dsaudit.model import (
    ALL_OPS,
    EQ,
    NE,
    NO_DEFAULT,
    DecisionSet,
    Feature,
    FeatureKind,
    Literal,
    ModelError,
    Outcome,
    Rule,
    Task,
    TieBreak,
    canonicalize,
    format_number,
    format_value,
    normalize_op,
    parse_number,
)

log = logging.getLogger(__name__)

HEADER = "rulefile v1"


class RuleFileError(ValueError):
    """Syntax or semantic error in an input file; carries a 1-based position."""

    def __init__(self, message: str, line: int | None = None, col: int | None = None, source: str | None = None):
        where = ""
        if line is not None:
            where = f"line {line}" + (f", col {col}" if col is not None else "") + ": "
        if source:
            where = f"{source}: " + where
        super().__init__(where + message)
        self.message = message
        self.line = line
        self.col = col


@dataclass
class RuleFile:
    ds: DecisionSet
    constraints: list[tuple[Literal, ...]] = field(default_factory=list)


# -- tokenizer ---------------------------------------------------------------

_TOKEN = re.compile(
    r"""\s*(?:
        (?P<str>"(?:[^"\\]|\\.)*"|'(?:[^'\\]|\\.)*')
      | (?P<op><->|->|=>|!=|<=|>=|==|≠|≤|≥|<|>|=)
      | (?P<word>[^\s"'<>=!≠≤≥]+)
    )""",
    re.VERBOSE,
)


@dataclass
class _Tok:
    kind: str
    text: str
    col: int


def _unquote(raw: str, line: int, col: int) -> str:
    if raw[0] == "'":
        return re.sub(r"\\(.)", r"\1", raw[1:-1])
    try:
        return json.loads(raw)
    except json.JSONDecodeError:
        raise RuleFileError("malformed string literal", line, col) from None


def _tokenize(text: str, line: int) -> list[_Tok]:
    out = []
    pos = 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise RuleFileError(f"unexpected character {text[pos:].lstrip()[:1]!r}", line, pos + 1)
        kind = m.lastgroup
        raw = m.group(kind)
        col = m.start(kind) + 1
        if kind == "str":
            raw = _unquote(raw, line, col)
        out.append(_Tok(kind, raw, col))
        pos = m.end()
    return out


class _Cursor:
    def __init__(self, toks: list[_Tok], line: int, end_col: int):
        self.toks = toks
        self.i = 0
        self.line = line
        self.end_col = end_col

    def peek(self) -> _Tok | None:
        return self.toks[self.i] if self.i < len(self.toks) else None

    def next(self, what: str) -> _Tok:
        tok = self.peek()
        if tok is None:
            raise RuleFileError(f"expected {what}, found end of line", self.line, self.end_col)
        self.i += 1
        return tok

    def keyword(self, word: str) -> bool:
        tok = self.peek()
        if tok is not None and tok.kind == "word" and tok.text == word:
            self.i += 1
            return True
        return False

    def op(self, *ops: str) -> str | None:
        tok = self.peek()
        if tok is not None and tok.kind == "op" and tok.text in ops:
            self.i += 1
            return tok.text
        return None

    def done(self) -> bool:
        return self.i >= len(self.toks)


def _literal(cur: _Cursor, features: dict[str, Feature]) -> Literal:
    ftok = cur.next("feature name")
    if ftok.kind == "op":
        raise RuleFileError(f"expected feature name, found {ftok.text!r}", cur.line, ftok.col)
    feature = features.get(ftok.text)
    if feature is None:
        raise RuleFileError(f"undeclared feature {ftok.text!r}", cur.line, ftok.col)
    otok = cur.next("relational operator")
    if otok.kind != "op" or otok.text in ("->", "<->", "=>"):
        raise RuleFileError(f"expected relational operator, found {otok.text!r}", cur.line, otok.col)
    vtok = cur.next("value")
    if vtok.kind == "op":
        raise RuleFileError(f"expected value, found {vtok.text!r}", cur.line, vtok.col)
    try:
        return canonicalize(feature, otok.text, vtok.text)
    except ModelError as exc:
        raise RuleFileError(str(exc), cur.line, otok.col) from None


def _conjunction(cur: _Cursor, features) -> list[Literal]:
    lits = [_literal(cur, features)]
    while cur.keyword("and"):
        lits.append(_literal(cur, features))
    return lits


def _disjunction(cur: _Cursor, features) -> list[Literal]:
    lits = [_literal(cur, features)]
    while cur.keyword("or"):
        lits.append(_literal(cur, features))
    return lits


def _constraint(cur: _Cursor, features) -> list[tuple[Literal, ...]]:
    start = cur.i
    first = _literal(cur, features)
    if cur.op("<->"):
        second = _literal(cur, features)
        clauses = [(-first, second), (first, -second)]
    else:
        cur.i = start
        if any(t.kind == "op" and t.text == "->" for t in cur.toks[start:]):
            body = _conjunction(cur, features)
            tok = cur.next("'->'")
            if tok.text != "->":
                raise RuleFileError(f"expected '->', found {tok.text!r}", cur.line, tok.col)
            head = _disjunction(cur, features)
            clauses = [tuple([-l for l in body] + head)]
        else:
            clauses = [tuple(_disjunction(cur, features))]
    if not cur.done():
        tok = cur.peek()
        raise RuleFileError(f"unexpected {tok.text!r} after constraint", cur.line, tok.col)
    return clauses


def _outcome(text: str, task: Task, line: int | None = None, col: int | None = None) -> Outcome:
    if task is Task.REGRESSION:
        try:
            return parse_number(text)
        except ModelError:
            raise RuleFileError(f"regression outcome {text!r} is not a number", line, col) from None
    return str(text)


# -- DSL ---------------------------------------------------------------------


def parse_rules_text(text: str, source: str | None = None) -> RuleFile:
    features: dict[str, Feature] = {}
    rules: list[Rule] = []
    constraints: list[tuple[Literal, ...]] = []
    task = Task.CLASSIFICATION
    tie = TieBreak.REPORT_AMBIGUITY
    default: Any = None
    default_line = None
    header_seen = False
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = _strip_comment(raw)
        if not line.strip():
            continue
        if not header_seen:
            if line.strip() != HEADER:
                raise RuleFileError(f"expected header {HEADER!r}", lineno, 1, source)
            header_seen = True
            continue
        try:
            cur = _Cursor(_tokenize(line, lineno), lineno, len(line.rstrip()) + 1)
            key = cur.next("statement")
            if key.text == "task":
                tok = cur.next("task name")
                try:
                    task = Task(tok.text)
                except ValueError:
                    raise RuleFileError(f"unknown task {tok.text!r}", lineno, tok.col) from None
            elif key.text == "tie-break":
                tok = cur.next("tie-break strategy")
                try:
                    tie = TieBreak(tok.text)
                except ValueError:
                    raise RuleFileError(f"unknown tie-break {tok.text!r}", lineno, tok.col) from None
            elif key.text == "feature":
                name = cur.next("feature name")
                kind = cur.next("feature kind")
                try:
                    fk = FeatureKind(kind.text)
                except ValueError:
                    raise RuleFileError(f"unknown feature kind {kind.text!r}", lineno, kind.col) from None
                if name.text in features:
                    raise RuleFileError(f"feature {name.text!r} declared twice", lineno, name.col)
                features[name.text] = Feature(len(features) + 1, name.text, fk)
            elif key.text == "constraint":
                constraints += _constraint(cur, features)
            elif key.text == "rule":
                body = _conjunction(cur, features)
                tok = cur.next("'=>'")
                if tok.text != "=>":
                    raise RuleFileError(f"expected '=>', found {tok.text!r}", lineno, tok.col)
                out = cur.next("outcome")
                try:
                    rules.append(Rule(tuple(body), _outcome(out.text, task, lineno, out.col)))
                except ModelError as exc:
                    raise RuleFileError(str(exc), lineno, key.col) from None
            elif key.text == "default":
                tok = cur.next("default outcome")
                if default_line is not None:
                    raise RuleFileError(f"duplicate default (first on line {default_line})", lineno, key.col)
                default_line = lineno
                default = NO_DEFAULT if tok.kind == "word" and tok.text == "none" else _outcome(tok.text, task, lineno, tok.col)
            else:
                raise RuleFileError(f"unknown statement {key.text!r}", lineno, key.col)
            if not cur.done() and key.text not in ("constraint",):
                tok = cur.peek()
                raise RuleFileError(f"unexpected {tok.text!r}", lineno, tok.col)
        except RuleFileError as exc:
            if source:
                raise RuleFileError(exc.message, exc.line, exc.col, source) from None
            raise
    if not header_seen:
        raise RuleFileError(f"missing header {HEADER!r}", 1, 1, source)
    if default_line is None:
        raise RuleFileError("missing default statement", source=source)
    try:
        ds = DecisionSet(tuple(features.values()), tuple(rules), default, tie, task)
    except ModelError as exc:
        raise RuleFileError(str(exc), source=source) from None
    return RuleFile(ds, constraints)


def _strip_comment(line: str) -> str:
    out, quote = [], None
    for ch in line:
        if quote:
            if ch == quote:
                quote = None
        elif ch in "\"'":
            quote = ch
        elif ch == "#":
            break
        out.append(ch)
    return "".join(out)


_PLAIN = re.compile(r"^[^\s\"'<>=!≠≤≥#]+$")
_KEYWORDS = {"and", "or", "none"}


def _quote(text: str) -> str:
    if _PLAIN.match(text) and text not in _KEYWORDS:
        return text
    return json.dumps(text, ensure_ascii=False)


def format_literal(lit: Literal) -> str:
    return f"{_quote(lit.feature)} {lit.op} {_quote(format_value(lit.value))}"


def serialize_rules(rf: RuleFile | DecisionSet, constraints: Iterable[Sequence[Literal]] = ()) -> str:
    """DSL text for a model; ``parse_rules_text`` inverts it exactly."""
    if isinstance(rf, RuleFile):
        ds, constraints = rf.ds, rf.constraints
    else:
        ds = rf
    lines = [HEADER, f"task {ds.task.value}"]
    if ds.tie_break is not TieBreak.REPORT_AMBIGUITY:
        lines.append(f"tie-break {ds.tie_break.value}")
    for f in ds.features:
        lines.append(f"feature {_quote(f.name)} {f.kind.value}")
    for clause in constraints:
        lines.append("constraint " + " or ".join(format_literal(l) for l in clause))
    for r in ds.rules:
        lines.append("rule " + " and ".join(format_literal(l) for l in r.body) + f" => {_quote(format_value(r.outcome))}")
    if ds.default_outcome is NO_DEFAULT:
        lines.append("default none")
    else:
        lines.append(f"default {_quote(format_value(ds.default_outcome))}")
    return "\n".join(lines) + "\n"


# -- JSON rule files ---------------------------------------------------------


def _parse_literal_text(text: str, features: dict[str, Feature], where: str) -> Literal:
    cur = _Cursor(_tokenize(text, 1), 1, len(text) + 1)
    try:
        lit = _literal(cur, features)
        if not cur.done():
            raise RuleFileError(f"unexpected {cur.peek().text!r}", 1, cur.peek().col)
    except RuleFileError as exc:
        raise RuleFileError(f"{where}: {exc}") from None
    return lit


def _parse_constraint_text(text: str, features, where: str) -> list[tuple[Literal, ...]]:
    cur = _Cursor(_tokenize(text, 1), 1, len(text) + 1)
    try:
        return _constraint(cur, features)
    except RuleFileError as exc:
        raise RuleFileError(f"{where}: {exc}") from None


def parse_rules_json(doc: dict, source: str | None = None) -> RuleFile:
    if doc.get("format", "rulefile") != "rulefile":
        raise RuleFileError(f"not a rule file (format={doc.get('format')!r})", source=source)
    task = Task(doc.get("task", "classification"))
    tie = TieBreak(doc.get("tie_break", TieBreak.REPORT_AMBIGUITY.value))
    features: dict[str, Feature] = {}
    for k, fd in enumerate(doc.get("features", []), start=1):
        try:
            features[fd["name"]] = Feature(k, fd["name"], FeatureKind(fd.get("kind", "numeric")))
        except (KeyError, ValueError) as exc:
            raise RuleFileError(f"features[{k - 1}]: malformed feature ({exc})", source=source) from None
    constraints = []
    for k, c in enumerate(doc.get("constraints", [])):
        if isinstance(c, str):
            constraints += _parse_constraint_text(c, features, f"constraints[{k}]")
        else:
            constraints.append(tuple(_parse_literal_text(s, features, f"constraints[{k}]") for s in c))
    rules = []
    for k, rd in enumerate(doc.get("rules", [])):
        try:
            body = tuple(_parse_literal_text(s, features, f"rules[{k}]") for s in rd["if"])
            rules.append(Rule(body, _outcome(str(rd["then"]) if task is Task.CLASSIFICATION else rd["then"], task)))
        except KeyError as exc:
            raise RuleFileError(f"rules[{k}]: missing key {exc}", source=source) from None
        except ModelError as exc:
            raise RuleFileError(f"rules[{k}]: {exc}", source=source) from None
    if "default" not in doc:
        raise RuleFileError("missing default", source=source)
    d = doc["default"]
    default = NO_DEFAULT if d is None else _outcome(str(d) if task is Task.CLASSIFICATION else d, task)
    try:
        ds = DecisionSet(tuple(features.values()), tuple(rules), default, tie, task)
    except ModelError as exc:
        raise RuleFileError(str(exc), source=source) from None
    return RuleFile(ds, constraints)


def _json_value(v):
    if isinstance(v, str):
        return v
    return format_number(v)


def rules_to_json(rf: RuleFile) -> dict:
    ds = rf.ds
    return {
        "format": "rulefile",
        "version": 1,
        "task": ds.task.value,
        "tie_break": ds.tie_break.value,
        "features": [{"name": f.name, "kind": f.kind.value} for f in ds.features],
        "constraints": [[format_literal(l) for l in c] for c in rf.constraints],
        "rules": [{"if": [format_literal(l) for l in r.body], "then": _json_value(r.outcome)} for r in ds.rules],
        "default": None if ds.default_outcome is NO_DEFAULT else _json_value(ds.default_outcome),
    }


def parse_rules(path: str | os.PathLike) -> RuleFile:
    """Read a rule file in DSL or JSON form (chosen by content)."""
    source = os.fspath(path)
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    if text.lstrip().startswith("{"):
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise RuleFileError(f"invalid JSON: {exc.msg}", exc.lineno, exc.colno, source) from None
        return parse_rules_json(doc, source)
    return parse_rules_text(text, source)


# -- shared helpers for tree and anchor inputs -------------------------------


def _infer_features(declared: Sequence[dict] | None, uses: Iterable[tuple[str, str, Any]]) -> dict[str, Feature]:
    """Declared features, else kinds inferred from how each feature is used."""
    uses = list(uses)
    if declared:
        feats = {}
        for k, fd in enumerate(declared, start=1):
            feats[fd["name"]] = Feature(k, fd["name"], FeatureKind(fd.get("kind", "numeric")))
        return feats
    order: dict[str, bool] = {}
    for name, op, value in uses:
        numeric = order.get(name, True)
        if op not in (EQ, NE, "=="):
            numeric = True if name not in order else numeric
        else:
            try:
                parse_number(value)
            except ModelError:
                numeric = False
        order[name] = numeric and order.get(name, True)
    return {
        name: Feature(k, name, FeatureKind.NUMERIC if num else FeatureKind.CATEGORICAL)
        for k, (name, num) in enumerate(order.items(), start=1)
    }


# -- decision trees ----------------------------------------------------------


@dataclass(frozen=True)
class Leaf:
    outcome: Any


@dataclass(frozen=True)
class Split:
    feature: str
    op: str
    value: Any
    left: "Leaf | Split"
    right: "Leaf | Split"


@dataclass
class TreeExport:
    root: Leaf | Split
    task: Task = Task.CLASSIFICATION
    features: list[dict] | None = None


_LEAF_KEYS = ("leaf", "outcome", "class", "prediction")


def _node(d: Any, path: str) -> Leaf | Split:
    if not isinstance(d, dict):
        raise RuleFileError(f"{path}: node must be an object")
    for key in _LEAF_KEYS:
        if key in d:
            return Leaf(d[key])
    if "value" in d and "left" not in d:
        return Leaf(d["value"])
    split = d.get("split", d)
    try:
        feature = split["feature"]
        op = normalize_op(split.get("op", ">"))
        value = split["threshold"] if "threshold" in split else split["value"]
        left, right = d["left"], d["right"]
    except KeyError as exc:
        raise RuleFileError(f"{path}: malformed node, missing {exc}") from None
    except ModelError as exc:
        raise RuleFileError(f"{path}: {exc}") from None
    return Split(str(feature), op, value, _node(left, path + ".left"), _node(right, path + ".right"))


def _from_flat(doc: dict) -> Leaf | Split:
    """scikit-learn ``tree_`` arrays: left child is ``x <= t``, right is ``x > t``."""
    left, right = doc["children_left"], doc["children_right"]
    feat, thr, value = doc["feature"], doc["threshold"], doc["value"]
    names = doc.get("feature_names")
    classes = doc.get("classes")
    regression = doc.get("task") == Task.REGRESSION.value

    def leaf_outcome(k):
        v = value[k]
        while isinstance(v, list) and len(v) == 1 and isinstance(v[0], list):
            v = v[0]
        if regression:
            return v[0] if isinstance(v, list) else v
        if isinstance(v, list):
            best = max(range(len(v)), key=lambda c: (v[c], -c))
            return classes[best] if classes else best
        return v

    def build(k, depth=0):
        if depth > 10_000:
            raise RuleFileError("tree too deep or cyclic")
        if left[k] == -1:
            return Leaf(leaf_outcome(k))
        name = names[feat[k]] if names else f"x{feat[k]}"
        return Split(name, ">", thr[k], build(left[k], depth + 1), build(right[k], depth + 1))

    return build(0)


def tree_from_json(doc: dict) -> TreeExport:
    task = Task(doc.get("task", "classification"))
    if "children_left" in doc:
        root = _from_flat(doc)
    else:
        root = _node(doc.get("root", doc), "root")
    return TreeExport(root, task, doc.get("features"))


def tree_to_json(tree: TreeExport) -> dict:
    def enc(n):
        if isinstance(n, Leaf):
            return {"leaf": n.outcome}
        return {"feature": n.feature, "op": n.op, "threshold": n.value, "left": enc(n.left), "right": enc(n.right)}

    doc: dict = {"format": "tree", "task": tree.task.value}
    if tree.features:
        doc["features"] = tree.features
    doc["root"] = enc(tree.root)
    return doc


def parse_tree(path: str | os.PathLike) -> TreeExport:
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise RuleFileError(f"invalid JSON: {exc.msg}", exc.lineno, exc.colno, os.fspath(path)) from None
    return tree_from_json(doc)


def _tree_uses(node):
    if isinstance(node, Split):
        yield (node.feature, node.op, node.value)
        yield from _tree_uses(node.left)
        yield from _tree_uses(node.right)


def tree_to_rules(tree: TreeExport) -> DecisionSet:
    """One rule per root-to-leaf path; the right branch takes the split literal.

    Paths that test a literal and its negation are unreachable and dropped.
    A single-leaf tree becomes a default-only decision set.
    """
    features = _infer_features(tree.features, _tree_uses(tree.root))
    task = tree.task
    if isinstance(tree.root, Leaf):
        return DecisionSet(tuple(features.values()), (), _outcome_value(tree.root.outcome, task), task=task)
    rules: list[Rule] = []

    def walk(node, path: list[Literal]):
        if isinstance(node, Leaf):
            atoms = {}
            for l in path:
                if atoms.setdefault(l.atom, l.positive) != l.positive:
                    log.warning("dropping unreachable leaf (path contains %s and its negation)", l)
                    return
            rules.append(Rule(tuple(path), _outcome_value(node.outcome, task)))
            return
        feature = features.get(node.feature)
        if feature is None:
            raise RuleFileError(f"split on undeclared feature {node.feature!r}")
        try:
            lit = canonicalize(feature, node.op, node.value)
        except ModelError as exc:
            raise RuleFileError(str(exc)) from None
        walk(node.left, path + [-lit])
        walk(node.right, path + [lit])

    walk(tree.root, [])
    return DecisionSet(tuple(features.values()), tuple(rules), NO_DEFAULT, task=task)


def _outcome_value(v, task: Task) -> Outcome:
    if task is Task.REGRESSION:
        return parse_number(v)
    if isinstance(v, float) and v.is_integer():
        v = int(v)
    return str(v)


# -- anchors -----------------------------------------------------------------


@dataclass(frozen=True)
class Anchor:
    predicates: tuple[str, ...]
    prediction: Any


_RANGE = re.compile(r"^\s*(\S+)\s*(<=|<)\s*(.+?)\s*(<=|<)\s*(\S+)\s*$")
_SIMPLE = re.compile(r"^\s*(.+?)\s*(!=|<=|>=|==|=|<|>|≠|≤|≥)\s*(.+?)\s*$")


def _split_predicate(text: str) -> list[tuple[str, str, str]]:
    """``f op v`` or the two-sided ``a < f <= b`` form of Anchor output."""
    m = _RANGE.match(text)
    if m:
        lo, op1, name, op2, hi = m.groups()
        try:
            parse_number(lo)
            parse_number(hi)
        except ModelError:
            m = None
        else:
            flipped = {"<": ">", "<=": ">="}[op1]
            return [(name.strip("\"'"), flipped, lo), (name.strip("\"'"), op2, hi)]
    m = _SIMPLE.match(text)
    if not m:
        raise RuleFileError(f"malformed anchor predicate {text!r}")
    name, op, value = m.groups()
    return [(name.strip("\"'"), op, value.strip("\"'"))]


def _anchor_records(doc) -> tuple[list[Anchor], list[dict] | None, Task]:
    features = None
    task = Task.CLASSIFICATION
    if isinstance(doc, dict):
        features = doc.get("features")
        task = Task(doc.get("task", "classification"))
        doc = doc.get("anchors", [])
    records = []
    for k, rec in enumerate(doc):
        if not isinstance(rec, dict):
            raise RuleFileError(f"anchors[{k}]: record must be an object")
        preds = rec.get("anchor", rec.get("predicates", rec.get("rule")))
        pred = rec.get("prediction", rec.get("class", rec.get("label", rec.get("outcome"))))
        if not isinstance(preds, list) or not preds or pred is None:
            raise RuleFileError(f"anchors[{k}]: needs a non-empty predicate list and a prediction")
        records.append(Anchor(tuple(str(p) for p in preds), pred))
    return records, features, task


def anchors_to_rules(anchors: Sequence[Anchor], features: list[dict] | None = None, task: Task = Task.CLASSIFICATION) -> DecisionSet:
    """Each distinct anchor becomes a rule; repeated anchors are merged."""
    split = [[p for text in a.predicates for p in _split_predicate(text)] for a in anchors]
    feats = _infer_features(features, [p for s in split for p in s])
    rules: list[Rule] = []
    seen = set()
    for a, preds in zip(anchors, split):
        body = []
        for name, op, value in preds:
            f = feats.get(name)
            if f is None:
                raise RuleFileError(f"anchor uses undeclared feature {name!r}")
            try:
                body.append(canonicalize(f, op, value))
            except ModelError as exc:
                raise RuleFileError(str(exc)) from None
        outcome = _outcome_value(a.prediction, task)
        key = (frozenset(body), outcome)
        if key in seen:
            continue
        seen.add(key)
        try:
            rules.append(Rule(tuple(body), outcome))
        except ModelError as exc:
            raise RuleFileError(f"anchor {list(a.predicates)}: {exc}") from None
    return DecisionSet(tuple(feats.values()), tuple(rules), NO_DEFAULT, task=task)


def parse_anchors(path: str | os.PathLike) -> DecisionSet:
    """Anchors from a JSON array/object or JSON-lines file."""
    source = os.fspath(path)
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    stripped = text.lstrip()
    try:
        if stripped.startswith("[") or stripped.startswith("{") and "\n{" not in stripped.rstrip():
            doc = json.loads(text)
        else:
            doc = [json.loads(line) for line in text.splitlines() if line.strip()]
    except json.JSONDecodeError as exc:
        raise RuleFileError(f"invalid JSON: {exc.msg}", exc.lineno, exc.colno, source) from None
    records, features, task = _anchor_records(doc)
    return anchors_to_rules(records, features, task)


def serialize_anchors(anchors: Sequence[Anchor]) -> str:
    return "".join(json.dumps({"anchor": list(a.predicates), "prediction": a.prediction}) + "\n" for a in anchors)


def load_model(path: str | os.PathLike, kind: str = "rules") -> RuleFile:
    """Dispatch on input kind: ``rules``, ``tree`` or ``anchors``."""
    if kind == "rules":
        return parse_rules(path)
    if kind == "tree":
        return RuleFile(tree_to_rules(parse_tree(path)))
    if kind == "anchors":
        return RuleFile(parse_anchors(path))
    raise ValueError(f"unknown input kind {kind!r}")


__all__ = [
    "ALL_OPS",
    "Anchor",
    "Leaf",
    "RuleFile",
    "RuleFileError",
    "Split",
    "TreeExport",
    "anchors_to_rules",
    "format_literal",
    "load_model",
    "parse_anchors",
    "parse_rules",
    "parse_rules_json",
    "parse_rules_text",
    "parse_tree",
    "rules_to_json",
    "serialize_anchors",
    "serialize_rules",
    "tree_from_json",
    "tree_to_json",
    "tree_to_rules",
]
