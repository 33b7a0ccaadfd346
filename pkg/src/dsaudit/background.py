"""Background knowledge as CNF over threshold atoms.

Every canonical atom mentioned by a model (or by user constraints) gets a
Boolean variable. Two coherence theories are available:

``alg2``
    The domain-coherence clause families of the published construction.
    They range over every (relation, value) pair used for a feature, so
    atoms absent from the model may be added as auxiliaries.
``complete-order``
    Those families plus an order encoding over each feature's sorted
    thresholds. A set of atom literals is satisfiable under this theory iff
    some point of the (dense, ordered) feature domain satisfies it.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from dsaudit.model import (
    EQ,
    GE,
    GT,
    Atom,
    DecisionSet,
    Feature,
    FeatureKind,
    Literal,
    ModelError,
    format_value,
)
from dsaudit.sat.cnf import CnfFormula

Clause = tuple[Literal, ...]

_OP_RANK = {EQ: 0, GT: 1, GE: 2}


class BackgroundMode(str, enum.Enum):
    ALG2 = "alg2"
    COMPLETE_ORDER = "complete-order"


def _atom_key(atom: Atom):
    return (atom.value, _OP_RANK[atom.op])


class AtomTable:
    """Bijection between canonical atoms and SAT variables ``1..n``.

    Variables are numbered by feature declaration order, then threshold,
    then operator, so the same atoms always get the same numbering.
    """

    def __init__(self, features: Sequence[Feature], atoms: Iterable[Atom]):
        self.features = tuple(features)
        by_name = {f.name: f for f in self.features}
        grouped: dict[str, set[Atom]] = {f.name: set() for f in self.features}
        for atom in atoms:
            if atom.feature not in by_name:
                raise ModelError(f"atom {atom} uses undeclared feature {atom.feature!r}")
            grouped[atom.feature].add(atom)
        self.atoms: tuple[Atom, ...] = tuple(
            a for f in self.features for a in sorted(grouped[f.name], key=_atom_key)
        )
        self._var = {a: i for i, a in enumerate(self.atoms, start=1)}
        self.values: dict[str, list] = {}
        self.relations: dict[str, frozenset[str]] = {}
        for f in self.features:
            fa = grouped[f.name]
            self.values[f.name] = sorted({a.value for a in fa})
            self.relations[f.name] = frozenset(a.op for a in fa)

    def __len__(self):
        return len(self.atoms)

    def __contains__(self, atom: Atom):
        return atom in self._var

    def __eq__(self, other):
        return isinstance(other, AtomTable) and self.features == other.features and self.atoms == other.atoms

    def __hash__(self):
        return hash(self.atoms)

    def feature(self, name: str) -> Feature:
        for f in self.features:
            if f.name == name:
                return f
        raise ModelError(f"unknown feature {name!r}")

    def var(self, atom: Atom) -> int:
        try:
            return self._var[atom]
        except KeyError:
            raise ModelError(f"atom {atom} is not registered") from None

    def atom(self, var: int) -> Atom:
        return self.atoms[var - 1]

    def lit(self, literal: Literal) -> int:
        v = self.var(literal.atom)
        return v if literal.positive else -v

    def cube(self, literals: Iterable[Literal]) -> list[int]:
        return [self.lit(l) for l in literals]

    def decode(self, model: Sequence[bool]) -> dict[Atom, bool]:
        """Atom-level assignment from a SAT model (auxiliary variables ignored)."""
        return {a: bool(model[i]) for i, a in enumerate(self.atoms)}

    def extended(self, atoms: Iterable[Atom]) -> "AtomTable":
        return AtomTable(self.features, list(self.atoms) + list(atoms))

    def legend(self) -> list[str]:
        out = []
        for v, a in enumerate(self.atoms, start=1):
            name = a.feature if not any(c.isspace() for c in a.feature) else f'"{a.feature}"'
            out.append(f"atom {v} {name} {a.op} {format_value(a.value)}")
        return out


def collect_atoms(ds: DecisionSet, extra: Iterable[Iterable[Literal]] = ()) -> AtomTable:
    """Atom table over every literal of ``ds`` and of the ``extra`` cubes."""
    atoms = [l.atom for r in ds.rules for l in r.body]
    atoms += [l.atom for cube in extra for l in cube]
    return AtomTable(ds.features, atoms)


class _Emitter:
    def __init__(self, present: set[Atom]):
        self.present = present
        self.clauses: list[Clause] = []
        self._seen: set[frozenset] = set()

    def emit(self, *lits: Literal) -> None:
        if any(l.atom not in self.present for l in lits):
            return
        key = frozenset(lits)
        if key in self._seen:
            return
        self._seen.add(key)
        self.clauses.append(tuple(lits))


def _pos(atom: Atom) -> Literal:
    return Literal(atom, True)


def _neg(atom: Atom) -> Literal:
    return Literal(atom, False)


def _alg2_feature(out: _Emitter, f: Feature, vals: list, rel: frozenset) -> None:
    name = f.name
    eq = lambda v: Atom(name, EQ, v)  # noqa: E731
    gt = lambda v: Atom(name, GT, v)  # noqa: E731
    ge = lambda v: Atom(name, GE, v)  # noqa: E731
    n = len(vals)
    if EQ in rel:
        for i in range(n):
            for j in range(i + 1, n):
                out.emit(_neg(eq(vals[i])), _neg(eq(vals[j])))
    if GT in rel:
        for i in range(n - 1):
            out.emit(_neg(gt(vals[i + 1])), _pos(gt(vals[i])))
    if GE in rel:
        for i in range(n - 1):
            out.emit(_neg(ge(vals[i + 1])), _pos(ge(vals[i])))
    if {EQ, GE} <= rel:
        for i in range(n):
            out.emit(_neg(eq(vals[i])), _pos(ge(vals[i])))
        for i in range(n - 1):
            out.emit(_neg(eq(vals[i])), _neg(ge(vals[i + 1])))
    if {EQ, GT} <= rel:
        for i in range(n):
            out.emit(_neg(eq(vals[i])), _neg(gt(vals[i])))
        for i in range(n - 1):
            out.emit(_neg(eq(vals[i + 1])), _pos(gt(vals[i])))
    if {GE, GT} <= rel:
        for i in range(n):
            out.emit(_neg(gt(vals[i])), _pos(ge(vals[i])))
    if {EQ, GE, GT} <= rel:
        for i in range(n):
            out.emit(_neg(ge(vals[i])), _pos(eq(vals[i])), _pos(gt(vals[i])))


def _order_feature(out: _Emitter, f: Feature, vals: list) -> None:
    # Chain positions: (f >= v_i) at 2i, (f > v_i) at 2i+1; a true atom
    # implies every chain atom at a lower position.
    name = f.name
    chain = []
    for i, v in enumerate(vals):
        for pos, atom in ((2 * i, Atom(name, GE, v)), (2 * i + 1, Atom(name, GT, v))):
            if atom in out.present:
                chain.append((pos, atom))
    for (_, lo), (_, hi) in zip(chain, chain[1:]):
        out.emit(_neg(hi), _pos(lo))
    eqs = [(i, Atom(name, EQ, v)) for i, v in enumerate(vals) if Atom(name, EQ, v) in out.present]
    for a in range(len(eqs)):
        for b in range(a + 1, len(eqs)):
            out.emit(_neg(eqs[a][1]), _neg(eqs[b][1]))
    for i, e in eqs:
        below = [atom for pos, atom in chain if pos <= 2 * i]
        above = [atom for pos, atom in chain if pos >= 2 * i + 1]
        if below:
            out.emit(_neg(e), _pos(below[-1]))
        if above:
            out.emit(_neg(e), _neg(above[0]))
        ge, gt = Atom(name, GE, vals[i]), Atom(name, GT, vals[i])
        out.emit(_neg(ge), _pos(e), _pos(gt))


def saturate(table: AtomTable) -> AtomTable:
    """Table with an atom for every used relation at every used value of each feature."""
    missing = [
        Atom(f.name, op, v)
        for f in table.features
        for op in sorted(table.relations[f.name], key=_OP_RANK.get)
        for v in table.values[f.name]
        if Atom(f.name, op, v) not in table
    ]
    return table.extended(missing) if missing else table


def coherence_clauses(table: AtomTable, mode: BackgroundMode) -> list[Clause]:
    """Clauses over ``table``'s atoms; call on a :func:`saturate`-d table."""
    mode = BackgroundMode(mode)
    out = _Emitter(set(table.atoms))
    for f in table.features:
        _alg2_feature(out, f, table.values[f.name], table.relations[f.name])
    if mode is BackgroundMode.COMPLETE_ORDER:
        for f in table.features:
            if f.kind is FeatureKind.NUMERIC:
                _order_feature(out, f, table.values[f.name])
    return out.clauses


def _normalize_user_clause(clause: Iterable[Literal]) -> Clause | None:
    lits = tuple(dict.fromkeys(clause))
    if not lits:
        raise ModelError("empty constraint clause")
    atoms = {}
    for l in lits:
        if atoms.setdefault(l.atom, l.positive) != l.positive:
            return None
    return lits


@dataclass(frozen=True)
class BackgroundKnowledge:
    """Coherence clauses plus user constraints over one atom table."""

    table: AtomTable
    mode: BackgroundMode
    coherence: tuple[Clause, ...]
    user_clauses: tuple[Clause, ...] = ()
    _ints: tuple = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        for clause in self.coherence + self.user_clauses:
            for l in clause:
                self.table.var(l.atom)
        ints = tuple(tuple(self.table.lit(l) for l in c) for c in self.clauses)
        object.__setattr__(self, "_ints", ints)

    @property
    def clauses(self) -> tuple[Clause, ...]:
        return self.coherence + self.user_clauses

    @property
    def size(self) -> int:
        return len(self.coherence) + len(self.user_clauses)

    @property
    def int_clauses(self) -> tuple[tuple[int, ...], ...]:
        return self._ints

    def cnf(self) -> CnfFormula:
        comments = [f"dsaudit background mode={self.mode.value} atoms={len(self.table)} clauses={self.size}"]
        comments += self.table.legend()
        return CnfFormula(len(self.table), self._ints, tuple(comments))

    def holds(self, assignment: Mapping[Atom, bool]) -> bool:
        return all(any(l.holds(assignment[l.atom]) for l in c) for c in self.clauses)


def build_background(
    table: AtomTable,
    mode: BackgroundMode | str = BackgroundMode.COMPLETE_ORDER,
    user_clauses: Iterable[Iterable[Literal]] = (),
) -> BackgroundKnowledge:
    """Coherence theory for ``table`` plus user clauses (atoms auto-registered)."""
    mode = BackgroundMode(mode)
    user = [c for c in (_normalize_user_clause(c) for c in user_clauses) if c is not None]
    missing = [l.atom for c in user for l in c if l.atom not in table]
    if missing:
        table = table.extended(missing)
    table = saturate(table)
    coherence = tuple(coherence_clauses(table, mode))
    seen = {frozenset(c) for c in coherence}
    kept = []
    for c in user:
        key = frozenset(c)
        if key not in seen:
            seen.add(key)
            kept.append(c)
    return BackgroundKnowledge(table, mode, coherence, tuple(kept))


def build_alg2(table: AtomTable) -> BackgroundKnowledge:
    return build_background(table, BackgroundMode.ALG2)


def build_complete_order(table: AtomTable) -> BackgroundKnowledge:
    return build_background(table, BackgroundMode.COMPLETE_ORDER)


def merge_user_constraints(bk: BackgroundKnowledge, clauses: Iterable[Iterable[Literal]]) -> BackgroundKnowledge:
    """``bk`` conjoined with user clauses; new atoms trigger a coherence rebuild."""
    clauses = [tuple(c) for c in clauses]
    if not clauses:
        return bk
    return build_background(bk.table, bk.mode, list(bk.user_clauses) + clauses)


def background_for(
    ds: DecisionSet,
    mode: BackgroundMode | str = BackgroundMode.COMPLETE_ORDER,
    user_clauses: Iterable[Iterable[Literal]] = (),
    extra: Iterable[Iterable[Literal]] = (),
) -> BackgroundKnowledge:
    """Atom table of ``ds`` (plus ``extra`` cubes) and its background theory."""
    return build_background(collect_atoms(ds, extra), mode, user_clauses)
