import itertools
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dsaudit.sat import (
    BACKENDS,
    Budget,
    CnfFormula,
    DimacsError,
    IncrementalSolver,
    Status,
    entails,
    format_dimacs,
    parse_dimacs,
    read_dimacs,
    solve,
    write_dimacs,
)
from dsaudit.sat._pysolver import luby

backends = pytest.mark.parametrize("backend", sorted(BACKENDS))


def brute(num_vars, clauses, assumptions=()):
    for bits in itertools.product((False, True), repeat=num_vars):
        if all(bits[abs(a) - 1] == (a > 0) for a in assumptions) and all(
            any(bits[abs(l) - 1] == (l > 0) for l in c) for c in clauses
        ):
            return True
    return False


def random_cnf(rng, n, m, k=3):
    return [tuple(rng.choice((-1, 1)) * rng.randint(1, n) for _ in range(rng.randint(1, k))) for _ in range(m)]


clause_lists = st.integers(1, 8).flatmap(
    lambda n: st.tuples(
        st.just(n),
        st.lists(st.lists(st.integers(1, n).flatmap(lambda v: st.sampled_from((v, -v))), min_size=1, max_size=4), max_size=30),
    )
)


@backends
@settings(max_examples=300, deadline=None)
@given(clause_lists)
def test_agrees_with_truth_table(backend, data):
    n, clauses = data
    f = CnfFormula(n, tuple(map(tuple, clauses)))
    res = solve(f, backend=backend)
    assert res.sat == brute(n, f.clauses)
    if res.sat:
        assert f.evaluate(res.model)


def test_empty_formula_and_empty_clause():
    assert solve(CnfFormula(0, ())).sat
    assert solve(CnfFormula(2, ((),))).unsat


@backends
def test_backends_identical_search(backend):
    rng = random.Random(11)
    for _ in range(200):
        n = rng.randint(3, 20)
        f = CnfFormula(n, tuple(random_cnf(rng, n, rng.randint(1, 5 * n))))
        a = solve(f, backend="python")
        b = solve(f, backend=backend)
        assert (a.status, a.model, a.conflicts, a.decisions) == (b.status, b.model, b.conflicts, b.decisions)


@backends
def test_incremental_assumptions_match_brute(backend):
    rng = random.Random(5)
    for _ in range(60):
        n = rng.randint(2, 9)
        clauses = random_cnf(rng, n, rng.randint(1, 3 * n))
        s = IncrementalSolver(CnfFormula(n, tuple(clauses)), backend)
        for _ in range(8):
            assumptions = list({abs(x): x for x in (rng.choice((-1, 1)) * rng.randint(1, n) for _ in range(rng.randint(0, 3)))}.values())
            assert s.solve(assumptions).sat == brute(n, clauses, assumptions)
        extra = random_cnf(rng, n, 2)
        for c in extra:
            s.add_clause(c)
        assert s.solve().sat == brute(n, clauses + extra)


def test_activation_literals_retract_clauses():
    s = IncrementalSolver(CnfFormula(1, ((1,),)))
    act = s.new_var()
    s.add_clause((-act, -1))
    assert s.solve([act]).unsat
    assert s.solve().sat


def test_conflict_budget_times_out():
    # pigeonhole 8 into 7: needs many conflicts
    n, h = 8, 7
    var = lambda p, q: p * h + q + 1  # noqa: E731
    clauses = [tuple(var(p, q) for q in range(h)) for p in range(n)]
    clauses += [(-var(p1, q), -var(p2, q)) for q in range(h) for p1 in range(n) for p2 in range(p1 + 1, n)]
    f = CnfFormula(n * h, tuple(clauses))
    assert solve(f, budget=Budget(conflicts=5)).status is Status.TIMEOUT


def test_seed_changes_nothing_semantically():
    rng = random.Random(2)
    for _ in range(50):
        n = rng.randint(3, 12)
        f = CnfFormula(n, tuple(random_cnf(rng, n, 3 * n)))
        assert solve(f, seed=0).status == solve(f, seed=99).status


def test_entails():
    f = CnfFormula(2, ((-1, 2),))
    assert entails(f, [1], [[2]]) is True
    assert entails(f, [], [[2]]) is False


def test_luby_prefix():
    assert [luby(2, i) for i in range(15)] == [1, 1, 2, 1, 1, 2, 4, 1, 1, 2, 1, 1, 2, 4, 8]


def test_dimacs_round_trip(tmp_path):
    f = CnfFormula(3, ((1, -2), (3,), (-1, -3)), ("hello", "atom 1 x > 0"))
    text = format_dimacs(f)
    assert text.startswith("c hello\n")
    assert parse_dimacs(text) == f
    write_dimacs(f, tmp_path / "f.cnf")
    assert read_dimacs(tmp_path / "f.cnf") == f


def test_dimacs_multiline_clause_and_trailer():
    f = parse_dimacs("p cnf 3 2\n1 2\n-3 0 3\n0\n%\n0\n")
    assert f.clauses == ((1, 2, -3), (3,))


@pytest.mark.parametrize(
    "text,line",
    [
        ("1 2 0\n", 1),
        ("p cnf 2 1\n1 x 0\n", 2),
        ("p cnf 2 1\n1 3 0\n", 2),
        ("p cnf 2 2\n1 0\n", 2),
        ("p dnf 2 1\n", 1),
        ("c only\n", 1),
    ],
)
def test_dimacs_errors_carry_line(text, line):
    with pytest.raises(DimacsError) as exc:
        parse_dimacs(text)
    assert exc.value.line == line


def test_tautologies_dropped():
    assert CnfFormula(2, ((1, -1), (2, 2))).clauses == ((2,),)
