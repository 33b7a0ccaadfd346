"""Brute-force ground truth over an interval-representative grid.

Every numeric feature is sampled at each mentioned threshold, at the exact
midpoint between consecutive thresholds, and once below and above the
extremes; categorical features at each mentioned value plus one fresh
value. Any two points in the same cell satisfy the same atoms, so exhaustive
enumeration of the grid decides every query over mentioned atoms exactly.

Nothing here touches the SAT encoding: literals are evaluated
arithmetically and user constraints clause by clause.
"""
from __future__ import annotations

import itertools
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

import numpy as np

from dsaudit.model import (
    EQ,
    GE,
    GT,
    INVALID,
    Ambiguous,
    Atom,
    DecisionSet,
    Feature,
    FeatureKind,
    Literal,
    Rule,
    TieBreak,
    Value,
)

DEFAULT_CELL_BOUND = 10**6

INVALID_CODE = -1
AMBIGUOUS_CODE = -2


class GridTooLarge(RuntimeError):
    def __init__(self, cells: int, bound: int):
        super().__init__(f"grid has {cells} cells, above the bound of {bound}")
        self.cells = cells
        self.bound = bound


def eval_atom(value: Value, atom: Atom) -> bool:
    if atom.op == EQ:
        return value == atom.value
    if isinstance(value, str) or isinstance(atom.value, str):
        raise TypeError(f"ordered comparison on categorical value in {atom}")
    if atom.op == GT:
        return value > atom.value
    if atom.op == GE:
        return value >= atom.value
    raise ValueError(f"unknown operator {atom.op!r}")


def eval_literal(point: Mapping[str, Value], literal: Literal) -> bool:
    """Arithmetic truth of ``literal`` at ``point`` (feature name -> value)."""
    return eval_atom(point[literal.feature], literal.atom) == literal.positive


def _fresh_token(values: Iterable[str]) -> str:
    token = "<other>"
    taken = set(values)
    while token in taken:
        token = "<" + token + ">"
    return token


def representatives(feature: Feature, values: Iterable[Value]) -> list[Value]:
    vals = sorted(set(values))
    if feature.kind is FeatureKind.CATEGORICAL:
        return vals + [_fresh_token(vals)]
    if not vals:
        return [Fraction(0)]
    reps = [vals[0] - 1]
    for a, b in zip(vals, vals[1:]):
        reps += [a, (a + b) / 2]
    reps += [vals[-1], vals[-1] + 1]
    return reps


class FiniteGrid:
    """Cartesian product of per-feature representatives, as numpy broadcasts."""

    def __init__(self, features: Sequence[Feature], literals: Iterable[Literal], cell_bound: int = DEFAULT_CELL_BOUND):
        self.features = tuple(features)
        mentioned: dict[str, set] = {f.name: set() for f in self.features}
        for lit in literals:
            mentioned[lit.feature].add(lit.value)
        self.reps = {f.name: representatives(f, mentioned[f.name]) for f in self.features}
        self.shape = tuple(len(self.reps[f.name]) for f in self.features)
        self.cells = int(np.prod(self.shape, dtype=object)) if self.shape else 1
        if self.cells > cell_bound:
            raise GridTooLarge(self.cells, cell_bound)
        self._axis = {f.name: k for k, f in enumerate(self.features)}
        self._cache: dict[Atom, np.ndarray] = {}

    def atom_array(self, atom: Atom) -> np.ndarray:
        arr = self._cache.get(atom)
        if arr is None:
            k = self._axis[atom.feature]
            truth = np.array([eval_atom(v, atom) for v in self.reps[atom.feature]], dtype=bool)
            view = [1] * len(self.shape)
            view[k] = len(truth)
            arr = np.broadcast_to(truth.reshape(view), self.shape)
            self._cache[atom] = arr
        return arr

    def literal_array(self, lit: Literal) -> np.ndarray:
        arr = self.atom_array(lit.atom)
        return arr if lit.positive else ~arr

    def cube_array(self, cube: Iterable[Literal]) -> np.ndarray:
        out = np.ones(self.shape, dtype=bool)
        for lit in cube:
            out &= self.literal_array(lit)
        return out

    def point(self, index: Sequence[int]) -> dict[str, Value]:
        return {f.name: self.reps[f.name][i] for f, i in zip(self.features, index)}

    def points(self, mask: np.ndarray | None = None):
        if mask is None:
            for idx in itertools.product(*(range(n) for n in self.shape)):
                yield self.point(idx)
        else:
            for idx in zip(*np.nonzero(mask)):
                yield self.point(idx)

    def cell_of(self, feature: str, value: Value) -> int:
        """Index of the representative sharing ``value``'s cell."""
        f = self.features[self._axis[feature]]
        reps = self.reps[feature]
        if f.kind is FeatureKind.CATEGORICAL:
            return reps.index(value) if value in reps[:-1] else len(reps) - 1
        thresholds = reps[1:-1:2]
        for i, t in enumerate(thresholds):
            if value == t:
                return 2 * i + 1
            if value < t:
                return 2 * i
        return len(reps) - 1

    def index_of(self, point: Mapping[str, Value]) -> tuple[int, ...]:
        return tuple(self.cell_of(f.name, point[f.name]) for f in self.features)


class Oracle:
    """Exhaustive semantics of one decision set under user constraints.

    ``user_clauses`` are clauses of literals; a grid point is valid iff it
    satisfies each of them arithmetically.
    """

    def __init__(
        self,
        ds: DecisionSet,
        user_clauses: Iterable[Sequence[Literal]] = (),
        extra_literals: Iterable[Literal] = (),
        cell_bound: int = DEFAULT_CELL_BOUND,
    ):
        self.ds = ds
        self.user_clauses = [tuple(c) for c in user_clauses]
        lits = ds.literals() + [l for c in self.user_clauses for l in c] + list(extra_literals)
        self.grid = FiniteGrid(ds.features, lits, cell_bound)
        self.valid = np.ones(self.grid.shape, dtype=bool)
        for clause in self.user_clauses:
            sat = np.zeros(self.grid.shape, dtype=bool)
            for lit in clause:
                sat |= self.grid.literal_array(lit)
            self.valid &= sat

    # -- covers -------------------------------------------------------------
    def cover(self, cube: Iterable[Literal]) -> np.ndarray:
        return self.valid & self.grid.cube_array(cube)

    def cover_points(self, cube: Iterable[Literal]) -> list[dict[str, Value]]:
        return list(self.grid.points(self.cover(cube)))

    def satisfiable(self, cube: Iterable[Literal], negated_cubes: Iterable[Iterable[Literal]] = ()) -> bool:
        mask = self.cover(cube)
        for c in negated_cubes:
            mask &= ~self.grid.cube_array(c)
        return bool(mask.any())

    def union(self, rules: Iterable[Rule]) -> np.ndarray:
        out = np.zeros(self.grid.shape, dtype=bool)
        for r in rules:
            out |= self.grid.cube_array(r.body)
        return out & self.valid

    def outcome_set(self, ds: DecisionSet, outcome) -> np.ndarray:
        """S_DS(o): valid points fired by some rule of ``ds`` with outcome ``o``."""
        return self.union(ds.rules_for(outcome))

    # -- queries ------------------------------------------------------------
    def fires(self, index: int) -> bool:
        return bool(self.cover(self.ds.rule(index).body).any())

    def overlap(self, i: int, j: int) -> bool:
        return bool((self.cover(self.ds.rule(i).body) & self.grid.cube_array(self.ds.rule(j).body)).any())

    def negative_overlaps(self) -> set[tuple[int, int]]:
        rules = self.ds.rules
        out = set()
        for a, ri in enumerate(rules):
            for rj in rules[a + 1:]:
                if ri.outcome != rj.outcome and self.overlap(ri.index, rj.index):
                    out.add((min(ri.index, rj.index), max(ri.index, rj.index)))
        return out

    def default_reachable(self) -> bool:
        return bool((self.valid & ~self.union(self.ds.rules)).any())

    def equivalent(self, ds1: DecisionSet, ds2: DecisionSet) -> bool:
        outcomes = dict.fromkeys([r.outcome for r in ds1.rules] + [r.outcome for r in ds2.rules])
        return all(np.array_equal(self.outcome_set(ds1, o), self.outcome_set(ds2, o)) for o in outcomes)

    def rule_redundant(self, index: int, ds: DecisionSet | None = None) -> bool:
        ds = ds or self.ds
        return self.equivalent(ds, ds.without_rule(index))

    def literal_redundancy(self, index: int, lit: Literal, ds: DecisionSet | None = None) -> str | None:
        """None, ``"local"`` or ``"global"``, from the equivalence definition."""
        ds = ds or self.ds
        rule = ds.rule(index)
        reduced = rule.without(lit)
        if not self.equivalent(ds, ds.replace_rule(reduced)):
            return None
        if not self.satisfiable(list(reduced.body) + [-lit]):
            return "local"
        return "global"

    # -- prediction and explanations ---------------------------------------
    def predictions(self, ds: DecisionSet | None = None) -> tuple[np.ndarray, list]:
        """Per-cell outcome codes and the code table.

        Codes index into the returned outcome list; ``INVALID_CODE`` marks
        invalid cells, ``AMBIGUOUS_CODE`` unresolved ties.
        """
        ds = ds or self.ds
        outcomes = list(dict.fromkeys([r.outcome for r in ds.rules] + [ds.default_outcome]))
        code = {o: k for k, o in enumerate(outcomes)}
        rules = sorted(ds.rules, key=lambda r: r.index)
        fire = [self.grid.cube_array(r.body) for r in rules]
        counts = {o: np.zeros(self.grid.shape, dtype=np.int32) for o in outcomes}
        for r, f in zip(rules, fire):
            counts[r.outcome] += f
        present = sum((c > 0).astype(np.int32) for c in counts.values())
        result = np.full(self.grid.shape, code[ds.default_outcome], dtype=np.int64)
        for o, c in counts.items():
            result[(present == 1) & (c > 0)] = code[o]
        multi = present > 1
        if multi.any():
            if ds.tie_break is TieBreak.REPORT_AMBIGUITY:
                result[multi] = AMBIGUOUS_CODE
            else:
                first = np.full(self.grid.shape, -1, dtype=np.int64)
                for r, f in zip(reversed(rules), reversed(fire)):
                    first[f] = code[r.outcome]
                if ds.tie_break is TieBreak.LOWEST_RULE_INDEX:
                    result[multi] = first[multi]
                else:
                    top = np.max(np.stack([c for c in counts.values()]), axis=0)
                    winner = np.full(self.grid.shape, -1, dtype=np.int64)
                    for r, f in zip(reversed(rules), reversed(fire)):
                        sel = f & (counts[r.outcome] == top)
                        winner[sel] = code[r.outcome]
                    result[multi] = winner[multi]
        result[~self.valid] = INVALID_CODE
        return result, outcomes

    def predict_point(self, point: Mapping[str, Value], ds: DecisionSet | None = None):
        ds = ds or self.ds
        codes, outcomes = self.predictions(ds)
        c = codes[self.grid.index_of(point)]
        if c == INVALID_CODE:
            return INVALID
        if c == AMBIGUOUS_CODE:
            return Ambiguous(frozenset(self._fired_outcomes(point, ds)))
        return outcomes[c]

    def _fired_outcomes(self, point, ds):
        return {r.outcome for r in ds.rules if all(eval_literal(point, l) for l in r.body)}

    def is_valid(self, point: Mapping[str, Value]) -> bool:
        return bool(self.valid[self.grid.index_of(point)])

    def sufficient(self, point: Mapping[str, Value], features: Iterable[str], outcome, ds: DecisionSet | None = None) -> bool:
        """Whether fixing ``features`` to ``point``'s values forces ``outcome`` on valid points."""
        codes, outcomes = self.predictions(ds)
        if outcome not in outcomes:
            return False
        target = outcomes.index(outcome)
        idx = self.grid.index_of(point)
        sel: list = [slice(None)] * len(self.grid.features)
        fixed = set(features)
        for k, f in enumerate(self.grid.features):
            if f.name in fixed:
                sel[k] = slice(idx[k], idx[k] + 1)
        sub_codes = codes[tuple(sel)]
        sub_valid = self.valid[tuple(sel)]
        return bool(np.all(sub_codes[sub_valid] == target))

    def subset_minimal(self, point, features: Iterable[str], outcome, ds: DecisionSet | None = None) -> bool:
        """Sufficient, and no proper subset is (checked over every proper subset)."""
        feats = sorted(set(features))
        if not self.sufficient(point, feats, outcome, ds):
            return False
        for k in range(len(feats)):
            for sub in itertools.combinations(feats, k):
                if self.sufficient(point, sub, outcome, ds):
                    return False
        return True

    def lift(self, assignment: Mapping[Atom, bool]) -> dict[str, Value] | None:
        """A representative point realizing an atom assignment, or None."""
        point = {}
        for f in self.grid.features:
            atoms = [(a, v) for a, v in assignment.items() if a.feature == f.name]
            for rep in self.grid.reps[f.name]:
                if all(eval_atom(rep, a) == v for a, v in atoms):
                    point[f.name] = rep
                    break
            else:
                return None
        return point
