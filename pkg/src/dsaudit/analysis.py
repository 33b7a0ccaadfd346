"""Overlap, default-rule, redundancy and equivalence checks on decision sets.

Every check is a satisfiability query of the form

    B ∧ cube ∧ ¬C_1 ∧ … ∧ ¬C_k

where B is the background theory, ``cube`` a conjunction of literals and
each ``C_j`` a rule body whose negation is one clause. ``QueryEngine``
answers these against one solver loaded with B; negated bodies are guarded
by activation variables so the solver is reused across queries.
"""
from __future__ import annotations

import enum
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from dsaudit.background import BackgroundKnowledge, BackgroundMode, build_background, collect_atoms
from dsaudit.model import Atom, DecisionSet, Literal, Rule, distinct_outcomes
from dsaudit.sat import Budget, CnfFormula, IncrementalSolver, Status

log = logging.getLogger(__name__)


class Redundancy(str, enum.Enum):
    NONE = "not-redundant"
    LOCAL = "local"
    GLOBAL = "global"
    UNDECIDED = "undecided"


class FindingKind(str, enum.Enum):
    RULE = "redundant-rule"
    LOCAL = "local-literal"
    GLOBAL = "global-literal"


class OrderPolicy(str, enum.Enum):
    """Order in which rules, then literal positions, are tried for removal."""

    ASCENDING = "ascending"
    DESCENDING = "descending"

    def arrange(self, items: Sequence) -> list:
        return list(items) if self is OrderPolicy.ASCENDING else list(reversed(items))


@dataclass(frozen=True)
class Query:
    """``B ∧ cube ∧ ¬negated[0] ∧ …``; doubles as an UNSAT certificate."""

    cube: tuple[Literal, ...]
    negated: tuple[tuple[Literal, ...], ...] = ()

    def __str__(self):
        parts = ["B"]
        parts += [str(l) for l in self.cube]
        parts += ["not (" + " and ".join(map(str, c)) + ")" for c in self.negated]
        return " ∧ ".join(parts)

    def to_json(self) -> dict:
        return {"cube": [str(l) for l in self.cube], "negated": [[str(l) for l in c] for c in self.negated]}


@dataclass
class QueryResult:
    status: Status
    assignment: dict[Atom, bool] | None = None
    conflicts: int = 0

    @property
    def sat(self) -> bool:
        return self.status is Status.SAT

    @property
    def unsat(self) -> bool:
        return self.status is Status.UNSAT


class BudgetTracker:
    """Per-decision-set budget split evenly over the queries still pending.

    ``conflicts`` <= 0 and ``seconds`` <= 0 mean unlimited.
    """

    def __init__(self, conflicts: int = 0, seconds: float = 0.0):
        self.conflicts_left = conflicts if conflicts > 0 else None
        self.deadline = time.monotonic() + seconds if seconds > 0 else None
        self.timed_out = False

    def slice(self, pending: int = 1) -> Budget:
        conflicts = -1
        if self.conflicts_left is not None:
            conflicts = max(1, self.conflicts_left // max(1, pending))
        seconds = 0.0
        if self.deadline is not None:
            seconds = max(1e-3, self.deadline - time.monotonic())
        return Budget(conflicts, seconds)

    def charge(self, result: QueryResult) -> None:
        if self.conflicts_left is not None:
            self.conflicts_left = max(0, self.conflicts_left - result.conflicts)
        if result.status is Status.TIMEOUT:
            self.timed_out = True

    @property
    def expired(self) -> bool:
        return self.deadline is not None and time.monotonic() > self.deadline


class QueryEngine:
    """SAT queries over one background theory.

    With ``incremental=False`` every query gets a fresh solver; results must
    not differ, which the test-suite checks.
    """

    def __init__(
        self,
        bk: BackgroundKnowledge,
        budget: BudgetTracker | None = None,
        incremental: bool = True,
        backend: str | None = None,
        seed: int = 0,
    ):
        self.bk = bk
        self.table = bk.table
        self.budget = budget or BudgetTracker()
        self.incremental = incremental
        self.backend = backend
        self.seed = seed
        self.calls = 0
        self.base = bk.cnf()
        self._solver = IncrementalSolver(self.base, backend, seed) if incremental else None
        self._guards: dict[frozenset, int] = {}

    def _guard(self, clause: tuple[int, ...]) -> int:
        key = frozenset(clause)
        act = self._guards.get(key)
        if act is None:
            act = self._solver.new_var()
            self._solver.add_clause((-act,) + clause)
            self._guards[key] = act
        return act

    def check(self, cube: Iterable[Literal], negated: Iterable[Iterable[Literal]] = (), pending: int = 1) -> QueryResult:
        cube_ints = self.table.cube(cube)
        neg_clauses = [tuple(-x for x in self.table.cube(c)) for c in negated]
        budget = self.budget.slice(pending)
        self.calls += 1
        if self.incremental:
            assumptions = cube_ints + [self._guard(c) for c in neg_clauses]
            res = self._solver.solve(assumptions, budget)
        else:
            solver = IncrementalSolver(self.base.extended(neg_clauses), self.backend, self.seed)
            res = solver.solve(cube_ints, budget)
        out = QueryResult(res.status, self.table.decode(res.model) if res.sat else None, res.conflicts)
        self.budget.charge(out)
        return out

    def replay(self, query: Query) -> QueryResult:
        return self.check(query.cube, query.negated)


def _engine(bk: BackgroundKnowledge, engine: QueryEngine | None) -> QueryEngine:
    if engine is None:
        return QueryEngine(bk)
    if engine.bk is not bk:
        raise ValueError("engine was built for a different background theory")
    return engine


# -- preprocessing -----------------------------------------------------------


@dataclass
class Preprocessed:
    ds: DecisionSet
    duplicates: list[int] = field(default_factory=list)
    never_fire: list[int] = field(default_factory=list)
    unverified: list[int] = field(default_factory=list)

    @property
    def removed(self) -> list[int]:
        return sorted(self.duplicates + self.never_fire)


def preprocess(ds: DecisionSet, bk: BackgroundKnowledge, engine: QueryEngine | None = None) -> Preprocessed:
    """Drop duplicate rules and rules whose body is inconsistent with B."""
    engine = _engine(bk, engine)
    out = Preprocessed(ds)
    seen = set()
    kept: list[Rule] = []
    for rule in ds.rules:
        key = (frozenset(rule.body), rule.outcome)
        if key in seen:
            out.duplicates.append(rule.index)
            continue
        seen.add(key)
        kept.append(rule)
    final = []
    for n, rule in enumerate(kept):
        res = engine.check(rule.body, pending=len(kept) - n)
        if res.unsat:
            out.never_fire.append(rule.index)
            continue
        if res.status is Status.TIMEOUT:
            out.unverified.append(rule.index)
        final.append(rule)
    out.ds = ds.with_rules(final)
    return out


# -- overlap -----------------------------------------------------------------


@dataclass(frozen=True)
class OverlapPair:
    i: int
    j: int
    kind: str
    witness: dict[Atom, bool] = field(hash=False, compare=False)


@dataclass
class OverlapResult:
    pairs: list[OverlapPair]
    total: int
    undecided: list[tuple[int, int]]
    calls: int
    positive: list[OverlapPair] = field(default_factory=list)

    @property
    def count(self) -> int:
        return len(self.pairs)

    @property
    def decided_total(self) -> int:
        return self.total - len(self.undecided)

    @property
    def percentage(self) -> Fraction:
        """100·NO/Total over decided pairs; 0 when there are none."""
        if self.decided_total == 0:
            return Fraction(0)
        return Fraction(100 * self.count, self.decided_total)

    def as_set(self) -> set[tuple[int, int]]:
        return {(p.i, p.j) for p in self.pairs}


def _pair(i: int, j: int) -> tuple[int, int]:
    return (i, j) if i < j else (j, i)


def _check_batch(clauses, num_vars, table_size, queries, budget, backend):
    """Worker: answer (cube,) queries on a private solver over ``clauses``."""
    solver = IncrementalSolver(CnfFormula(num_vars, clauses), backend)
    out = []
    for cube in queries:
        res = solver.solve(cube, budget)
        model = res.model[:table_size] if res.sat else None
        out.append((res.status.value, model, res.conflicts))
    return out


def overlap_pairs(
    ds: DecisionSet,
    bk: BackgroundKnowledge,
    engine: QueryEngine | None = None,
    positive: bool = False,
    jobs: int = 1,
) -> OverlapResult:
    """All negatively overlapping rule pairs: one SAT call per cross-outcome pair.

    Outcome groups are visited pairwise in order of first appearance. With
    ``positive=True`` same-outcome pairs are also checked and reported
    separately (they do not count towards NO or Total).
    """
    engine = _engine(bk, engine)
    groups = [ds.rules_for(o) for o in distinct_outcomes(ds)]
    work: list[tuple[Rule, Rule, str]] = []
    for a in range(len(groups)):
        for b in range(a + 1, len(groups)):
            for ri in groups[a]:
                for rj in groups[b]:
                    work.append((ri, rj, "negative"))
    total = len(work)
    if positive:
        for g in groups:
            for x in range(len(g)):
                for y in range(x + 1, len(g)):
                    work.append((g[x], g[y], "positive"))

    results: list[QueryResult]
    if jobs > 1 and len(work) > 1:
        results = _parallel_checks(engine, [ri.body + rj.body for ri, rj, _ in work], jobs)
    else:
        results = [
            engine.check(ri.body + rj.body, pending=len(work) - n) for n, (ri, rj, _) in enumerate(work)
        ]
    neg, pos, undecided = [], [], []
    for (ri, rj, kind), res in zip(work, results):
        i, j = _pair(ri.index, rj.index)
        if res.status is Status.TIMEOUT:
            if kind == "negative":
                undecided.append((i, j))
            continue
        if res.sat:
            (neg if kind == "negative" else pos).append(OverlapPair(i, j, kind, res.assignment))
    neg.sort(key=lambda p: (p.i, p.j))
    pos.sort(key=lambda p: (p.i, p.j))
    return OverlapResult(neg, total, sorted(undecided), total, pos)


def _parallel_checks(engine: QueryEngine, cubes: list[tuple[Literal, ...]], jobs: int) -> list[QueryResult]:
    table = engine.table
    int_cubes = [table.cube(c) for c in cubes]
    budget = engine.budget.slice(len(int_cubes))
    chunk = max(1, -(-len(int_cubes) // jobs))
    batches = [int_cubes[k : k + chunk] for k in range(0, len(int_cubes), chunk)]
    base = engine.base
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        futures = [
            pool.submit(_check_batch, base.clauses, base.num_vars, len(table), b, budget, engine.backend)
            for b in batches
        ]
        raw = [r for f in futures for r in f.result()]
    out = []
    for status, model, conflicts in raw:
        res = QueryResult(Status(status), table.decode(model) if model is not None else None, conflicts)
        engine.budget.charge(res)
        out.append(res)
    engine.calls += len(out)
    return out


# -- default rule ------------------------------------------------------------


@dataclass
class DefaultVerdict:
    reachable: bool | None
    witness: dict[Atom, bool] | None
    query: Query


def default_reachable(ds: DecisionSet, bk: BackgroundKnowledge, engine: QueryEngine | None = None) -> DefaultVerdict:
    """Whether some valid point fires no rule (one SAT call)."""
    engine = _engine(bk, engine)
    query = Query((), tuple(r.body for r in ds.rules))
    res = engine.check(query.cube, query.negated)
    if res.status is Status.TIMEOUT:
        return DefaultVerdict(None, None, query)
    return DefaultVerdict(res.sat, res.assignment, query)


# -- redundancy --------------------------------------------------------------


@dataclass
class RuleVerdict:
    index: int
    redundant: bool | None
    query: Query


def rule_redundant(ds: DecisionSet, bk: BackgroundKnowledge, index: int, engine: QueryEngine | None = None, pending: int = 1) -> RuleVerdict:
    """Rule ``index`` is redundant iff B ∧ L_i ∧ ¬L_i1 ∧ … ∧ ¬L_iz is UNSAT."""
    engine = _engine(bk, engine)
    rule = ds.rule(index)
    query = Query(rule.body, tuple(r.body for r in ds.siblings(index)))
    res = engine.check(query.cube, query.negated, pending)
    if res.status is Status.TIMEOUT:
        return RuleVerdict(index, None, query)
    return RuleVerdict(index, res.unsat, query)


@dataclass
class LiteralVerdict:
    index: int
    literal: Literal
    kind: Redundancy
    query: Query | None

    @property
    def redundant(self) -> bool:
        return self.kind in (Redundancy.LOCAL, Redundancy.GLOBAL)


def literal_redundant(
    ds: DecisionSet,
    bk: BackgroundKnowledge,
    index: int,
    literal: Literal,
    engine: QueryEngine | None = None,
    pending: int = 1,
) -> LiteralVerdict:
    """Classify ``literal`` of rule ``index`` as local, global or not redundant.

    Local: B ∧ (L_i \\ {l}) ∧ ¬l is UNSAT. Otherwise global:
    B ∧ (L_i \\ {l}) ∧ ¬l ∧ ¬L_i1 ∧ … ∧ ¬L_iz is UNSAT.
    """
    rule = ds.rule(index)
    if literal not in rule.body:
        raise ValueError(f"{literal} is not in the body of rule {index}")
    if len(rule) < 2:
        raise ValueError(f"rule {index} has a single literal; removal would empty its body")
    return _literal_verdict(ds, bk, index, literal, engine, pending)


def _literal_verdict(ds, bk, index, literal, engine, pending=1) -> LiteralVerdict:
    engine = _engine(bk, engine)
    rule = ds.rule(index)
    flipped = tuple(l for l in rule.body if l != literal) + (-literal,)
    local = Query(flipped)
    res = engine.check(local.cube, (), pending)
    if res.unsat:
        return LiteralVerdict(index, literal, Redundancy.LOCAL, local)
    if res.status is Status.TIMEOUT:
        return LiteralVerdict(index, literal, Redundancy.UNDECIDED, None)
    glob = Query(flipped, tuple(r.body for r in ds.siblings(index)))
    res = engine.check(glob.cube, glob.negated, pending)
    if res.unsat:
        return LiteralVerdict(index, literal, Redundancy.GLOBAL, glob)
    if res.status is Status.TIMEOUT:
        return LiteralVerdict(index, literal, Redundancy.UNDECIDED, None)
    return LiteralVerdict(index, literal, Redundancy.NONE, None)


@dataclass(frozen=True)
class RedundancyFinding:
    kind: FindingKind
    rule: int
    literal: Literal | None
    certificate: Query

    def to_json(self) -> dict:
        return {
            "kind": self.kind.value,
            "rule": self.rule,
            "literal": None if self.literal is None else str(self.literal),
            "certificate": self.certificate.to_json(),
        }


@dataclass
class RuleRemoval:
    ds: DecisionSet
    findings: list[RedundancyFinding]
    undecided: list[int]


def remove_redundant_rules(
    ds: DecisionSet,
    bk: BackgroundKnowledge,
    engine: QueryEngine | None = None,
    policy: OrderPolicy = OrderPolicy.ASCENDING,
) -> RuleRemoval:
    """Remove redundant rules one at a time, re-checking against the current set.

    A rule that is not redundant stays non-redundant when a redundant rule
    is removed, so a single pass reaches the fixed point.
    """
    engine = _engine(bk, engine)
    current = ds
    findings, undecided = [], []
    order = OrderPolicy(policy).arrange(ds.indices)
    for n, idx in enumerate(order):
        v = rule_redundant(current, bk, idx, engine, pending=len(order) - n)
        if v.redundant:
            current = current.without_rule(idx)
            findings.append(RedundancyFinding(FindingKind.RULE, idx, None, v.query))
        elif v.redundant is None:
            undecided.append(idx)
    return RuleRemoval(current, findings, undecided)


@dataclass
class LiteralScan:
    verdicts: list[LiteralVerdict]

    def of_kind(self, kind: Redundancy) -> list[LiteralVerdict]:
        return [v for v in self.verdicts if v.kind is kind]

    @property
    def findings(self) -> list[RedundancyFinding]:
        kinds = {Redundancy.LOCAL: FindingKind.LOCAL, Redundancy.GLOBAL: FindingKind.GLOBAL}
        return [RedundancyFinding(kinds[v.kind], v.index, v.literal, v.query) for v in self.verdicts if v.redundant]


def classify_literals(ds: DecisionSet, bk: BackgroundKnowledge, engine: QueryEngine | None = None) -> LiteralScan:
    """Check every literal of every rule with ≥ 2 literals, independently."""
    engine = _engine(bk, engine)
    todo = [(r.index, l) for r in ds.rules if len(r) >= 2 for l in r.body]
    return LiteralScan(
        [_literal_verdict(ds, bk, i, l, engine, pending=len(todo) - n) for n, (i, l) in enumerate(todo)]
    )


@dataclass
class Simplified:
    ds: DecisionSet
    findings: list[RedundancyFinding]
    partial: bool
    policy: OrderPolicy


def simplify(
    ds: DecisionSet,
    bk: BackgroundKnowledge,
    policy: OrderPolicy = OrderPolicy.ASCENDING,
    engine: QueryEngine | None = None,
) -> Simplified:
    """Remove redundant rules and literals until none is left.

    Rules are pruned first; then the first redundant literal found (in
    policy order) is dropped and the rules are re-checked, since an enlarged
    body can make a sibling redundant. Removal order changes the result.
    """
    engine = _engine(bk, engine)
    policy = OrderPolicy(policy)
    current = ds
    findings: list[RedundancyFinding] = []
    partial = False
    while True:
        removal = remove_redundant_rules(current, bk, engine, policy)
        current = removal.ds
        findings += removal.findings
        partial = partial or bool(removal.undecided)
        removed = False
        for idx in policy.arrange(current.indices):
            rule = current.rule(idx)
            if len(rule) < 2:
                continue
            for lit in policy.arrange(rule.body):
                v = _literal_verdict(current, bk, idx, lit, engine)
                if v.kind is Redundancy.UNDECIDED:
                    partial = True
                    continue
                if v.redundant:
                    kind = FindingKind.LOCAL if v.kind is Redundancy.LOCAL else FindingKind.GLOBAL
                    findings.append(RedundancyFinding(kind, idx, lit, v.query))
                    current = current.replace_rule(rule.without(lit))
                    removed = True
                    break
            if removed:
                break
        if not removed:
            return Simplified(current, findings, partial, policy)


# -- equivalence -------------------------------------------------------------


def _covers_outside(bk: BackgroundKnowledge, inside: Sequence[Rule], outside: Sequence[Rule], budget: Budget, backend=None) -> Status:
    """SAT iff some valid point fires a rule of ``inside`` and none of ``outside``."""
    if not inside:
        return Status.UNSAT
    table = bk.table
    base = bk.cnf()
    solver = IncrementalSolver(base, backend)
    selectors = []
    for rule in inside:
        s = solver.new_var()
        selectors.append(s)
        for lit in table.cube(rule.body):
            solver.add_clause((-s, lit))
    solver.add_clause(tuple(selectors))
    for rule in outside:
        solver.add_clause(tuple(-x for x in table.cube(rule.body)))
    return solver.solve((), budget).status


def equivalent(
    ds1: DecisionSet,
    ds2: DecisionSet,
    bk: BackgroundKnowledge,
    budget: Budget = Budget(),
    backend: str | None = None,
) -> bool | None:
    """Whether S_DS1(o) = S_DS2(o) under B for every outcome o; None on timeout."""
    if ds1.default_outcome != ds2.default_outcome:
        raise ValueError("equivalence is defined for decision sets with the same default rule")
    outcomes = dict.fromkeys(distinct_outcomes(ds1) + distinct_outcomes(ds2))
    undecided = False
    for o in outcomes:
        a, b = ds1.rules_for(o), ds2.rules_for(o)
        for inside, outside in ((a, b), (b, a)):
            status = _covers_outside(bk, inside, outside, budget, backend)
            if status is Status.SAT:
                return False
            if status is Status.TIMEOUT:
                undecided = True
    return None if undecided else True


# -- pipeline ----------------------------------------------------------------


@dataclass
class AuditConfig:
    bk_mode: BackgroundMode = BackgroundMode.COMPLETE_ORDER
    budget_seconds: float = 3600.0
    budget_conflicts: int = 0
    order_policy: OrderPolicy = OrderPolicy.ASCENDING
    jobs: int = 1
    seed: int = 0
    positive_overlap: bool = False
    incremental: bool = True
    backend: str | None = None


@dataclass
class AuditResult:
    source: DecisionSet
    bk: BackgroundKnowledge
    config: AuditConfig
    pre: Preprocessed
    overlap: OverlapResult | None = None
    default: DefaultVerdict | None = None
    rules: RuleRemoval | None = None
    literals: LiteralScan | None = None
    timings: dict[str, float] = field(default_factory=dict)
    timed_out: bool = False

    @property
    def analyzed(self) -> DecisionSet:
        """The decision set after preprocessing (what overlap was run on)."""
        return self.pre.ds


def audit(ds: DecisionSet, user_clauses: Iterable[Iterable[Literal]] = (), config: AuditConfig | None = None) -> AuditResult:
    """Preprocess, find negative overlap, remove redundant rules, classify literals.

    Stops early (``timed_out``) once the per-decision-set budget is spent;
    the phases completed so far stay in the result.
    """
    config = config or AuditConfig()
    timings: dict[str, float] = {}
    t0 = time.perf_counter()
    bk = build_background(collect_atoms(ds), config.bk_mode, user_clauses)
    timings["TB"] = time.perf_counter() - t0
    tracker = BudgetTracker(config.budget_conflicts, config.budget_seconds)
    engine = QueryEngine(bk, tracker, config.incremental, config.backend, config.seed)
    pre = preprocess(ds, bk, engine)
    result = AuditResult(ds, bk, config, pre, timings=timings)
    work = pre.ds

    def out_of_budget():
        return tracker.timed_out or tracker.expired

    t0 = time.perf_counter()
    result.overlap = overlap_pairs(work, bk, engine, config.positive_overlap, config.jobs)
    result.default = default_reachable(work, bk, engine)
    timings["TO"] = time.perf_counter() - t0
    if out_of_budget():
        result.timed_out = True
        return result
    t0 = time.perf_counter()
    result.rules = remove_redundant_rules(work, bk, engine, config.order_policy)
    timings["TC"] = time.perf_counter() - t0
    if out_of_budget():
        result.timed_out = True
        return result
    t0 = time.perf_counter()
    result.literals = classify_literals(result.rules.ds, bk, engine)
    timings["TR"] = time.perf_counter() - t0
    result.timed_out = out_of_budget()
    return result
