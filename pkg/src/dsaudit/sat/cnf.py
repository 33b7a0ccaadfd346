"""CNF formulas and DIMACS reading/writing."""
from __future__ import annotations

import io
import os
from dataclasses import dataclass, field
from typing import Iterable, Sequence


class DimacsError(ValueError):
    """Malformed DIMACS input; ``line`` is 1-based."""

    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


def normalize_clause(lits: Iterable[int]) -> tuple[int, ...] | None:
    """Sort and dedupe a clause; None when it is a tautology."""
    seen = set(lits)
    if 0 in seen:
        raise ValueError("0 is not a valid literal")
    for lit in seen:
        if -lit in seen:
            return None
    return tuple(sorted(seen, key=lambda x: (abs(x), x < 0)))


@dataclass(frozen=True)
class CnfFormula:
    """Immutable clause database over variables ``1..num_vars``.

    Tautological clauses are dropped and literals sorted on construction, so
    two formulas compare equal iff their normalized clause lists do.
    """

    num_vars: int
    clauses: tuple[tuple[int, ...], ...] = ()
    comments: tuple[str, ...] = field(default=(), compare=False)

    def __post_init__(self):
        out = []
        for clause in self.clauses:
            norm = normalize_clause(clause)
            if norm is None:
                continue
            for lit in norm:
                if abs(lit) > self.num_vars:
                    raise ValueError(f"literal {lit} exceeds num_vars={self.num_vars}")
            out.append(norm)
        object.__setattr__(self, "clauses", tuple(out))
        object.__setattr__(self, "comments", tuple(self.comments))

    def __len__(self):
        return len(self.clauses)

    def extended(self, clauses: Iterable[Sequence[int]], num_vars: int | None = None) -> "CnfFormula":
        return CnfFormula(
            max(self.num_vars, num_vars or 0),
            self.clauses + tuple(tuple(c) for c in clauses),
            self.comments,
        )

    def evaluate(self, model: Sequence[bool]) -> bool:
        """Check a 0-indexed total assignment (``model[v-1]`` for variable v)."""
        return all(
            any(model[abs(lit) - 1] == (lit > 0) for lit in clause) for clause in self.clauses
        )


def parse_dimacs(text: str) -> CnfFormula:
    """Parse DIMACS ``p cnf`` text. Comment lines are kept verbatim."""
    num_vars = None
    declared = 0
    clauses: list[tuple[int, ...]] = []
    comments: list[str] = []
    current: list[int] = []
    last_line = 0
    for lineno, raw in enumerate(text.splitlines(), start=1):
        last_line = lineno
        line = raw.strip()
        if not line:
            continue
        if line.startswith("c"):
            comments.append(line[1:].strip() if line == "c" or line[1] == " " else line[1:])
            continue
        if line.startswith("%"):
            break
        if line.startswith("p"):
            if num_vars is not None:
                raise DimacsError("duplicate problem line", lineno)
            parts = line.split()
            if len(parts) != 4 or parts[1] != "cnf":
                raise DimacsError(f"malformed problem line {line!r}", lineno)
            try:
                num_vars, declared = int(parts[2]), int(parts[3])
            except ValueError:
                raise DimacsError(f"malformed problem line {line!r}", lineno) from None
            if num_vars < 0 or declared < 0:
                raise DimacsError("negative counts in problem line", lineno)
            continue
        if num_vars is None:
            raise DimacsError("clause before problem line", lineno)
        for tok in line.split():
            try:
                lit = int(tok)
            except ValueError:
                raise DimacsError(f"bad literal {tok!r}", lineno) from None
            if lit == 0:
                clauses.append(tuple(current))
                current = []
            else:
                if abs(lit) > num_vars:
                    raise DimacsError(f"literal {lit} exceeds {num_vars} variables", lineno)
                current.append(lit)
    if num_vars is None:
        raise DimacsError("missing problem line", max(last_line, 1))
    if current:
        clauses.append(tuple(current))
    if len(clauses) != declared:
        raise DimacsError(f"header declares {declared} clauses, found {len(clauses)}", last_line)
    return CnfFormula(num_vars, tuple(clauses), tuple(comments))


def read_dimacs(path: str | os.PathLike) -> CnfFormula:
    with open(path, encoding="utf-8") as fh:
        return parse_dimacs(fh.read())


def format_dimacs(formula: CnfFormula) -> str:
    buf = io.StringIO()
    for comment in formula.comments:
        buf.write(f"c {comment}\n" if comment else "c\n")
    buf.write(f"p cnf {formula.num_vars} {len(formula.clauses)}\n")
    for clause in formula.clauses:
        buf.write(" ".join(map(str, clause)))
        buf.write(" 0\n" if clause else "0\n")
    return buf.getvalue()


def write_dimacs(formula: CnfFormula, path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(format_dimacs(formula))
