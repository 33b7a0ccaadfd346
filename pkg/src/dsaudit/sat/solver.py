"""High-level solving API over the CDCL core."""
from __future__ import annotations

import enum
import os
import random
import shutil
import subprocess
import tempfile
import time
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from dsaudit.sat import _pysolver
from dsaudit.sat.cnf import CnfFormula, format_dimacs

try:
    if os.environ.get("DSAUDIT_PURE_PYTHON"):
        raise ImportError("pure Python backend forced")
    from dsaudit.sat._cdcl import Solver as _NativeSolver
except ImportError:
    _NativeSolver = None

BACKENDS = {"python": _pysolver.Solver}
if _NativeSolver is not None:
    BACKENDS["cython"] = _NativeSolver
DEFAULT_BACKEND = "cython" if _NativeSolver is not None else "python"


class Status(str, enum.Enum):
    SAT = "SAT"
    UNSAT = "UNSAT"
    TIMEOUT = "TIMEOUT"


_STATUS = {_pysolver.SAT: Status.SAT, _pysolver.UNSAT: Status.UNSAT, _pysolver.UNKNOWN: Status.TIMEOUT}


class ModelCheckError(RuntimeError):
    """The core returned a model that falsifies a clause. Never expected."""


@dataclass(frozen=True)
class Budget:
    """Per-call search limit: ``conflicts`` < 0 is unlimited; ``seconds`` <= 0 too."""

    conflicts: int = -1
    seconds: float = 0.0

    def deadline(self) -> float:
        return time.monotonic() + self.seconds if self.seconds > 0 else 0.0


UNLIMITED = Budget()


@dataclass
class SatResult:
    status: Status
    model: tuple[bool, ...] | None = None
    decisions: int = 0
    propagations: int = 0
    conflicts: int = 0
    seconds: float = 0.0

    @property
    def sat(self) -> bool:
        return self.status is Status.SAT

    @property
    def unsat(self) -> bool:
        return self.status is Status.UNSAT

    def value(self, lit: int) -> bool:
        assert self.model is not None
        v = self.model[abs(lit) - 1]
        return v if lit > 0 else not v


def make_core(num_vars: int = 0, backend: str | None = None, seed: int = 0):
    """Instantiate a CDCL core; ``seed`` != 0 perturbs initial activities."""
    cls = BACKENDS[backend or DEFAULT_BACKEND]
    core = cls(num_vars)
    if seed:
        rng = random.Random(seed)
        for v in range(1, num_vars + 1):
            core.set_activity(v, rng.random() * 1e-6)
    return core


class IncrementalSolver:
    """A CNF loaded once into a core, queried many times under assumptions.

    Extra clauses can be added between calls. ``self.formula`` holds every
    clause added so far so models can be re-verified against it.
    """

    def __init__(self, formula: CnfFormula, backend: str | None = None, seed: int = 0):
        self.backend = backend or DEFAULT_BACKEND
        self.num_vars = formula.num_vars
        self.core = make_core(formula.num_vars, self.backend, seed)
        self.clauses: list[tuple[int, ...]] = []
        self.calls = 0
        for clause in formula.clauses:
            self.add_clause(clause)

    def new_var(self) -> int:
        self.num_vars = self.core.new_var()
        return self.num_vars

    def add_clause(self, clause: Sequence[int]) -> None:
        self.clauses.append(tuple(clause))
        self.core.add_clause(clause)

    def solve(self, assumptions: Iterable[int] = (), budget: Budget = UNLIMITED) -> SatResult:
        assumptions = list(assumptions)
        core = self.core
        d0, p0, c0 = core.decisions, core.propagations, core.conflicts
        start = time.perf_counter()
        code = core.solve(assumptions, budget.conflicts, budget.deadline())
        elapsed = time.perf_counter() - start
        self.calls += 1
        model = None
        if code == _pysolver.SAT:
            model = tuple(core.model)
            self._verify(model, assumptions)
        return SatResult(
            _STATUS[code],
            model,
            core.decisions - d0,
            core.propagations - p0,
            core.conflicts - c0,
            elapsed,
        )

    def _verify(self, model: tuple[bool, ...], assumptions: list[int]) -> None:
        for clause in self.clauses:
            if clause and not any(model[abs(l) - 1] == (l > 0) for l in clause):
                raise ModelCheckError(f"model falsifies clause {clause}")
        for lit in assumptions:
            if model[abs(lit) - 1] != (lit > 0):
                raise ModelCheckError(f"model violates assumption {lit}")


def solve(
    formula: CnfFormula,
    assumptions: Iterable[int] = (),
    budget: Budget = UNLIMITED,
    backend: str | None = None,
    seed: int = 0,
) -> SatResult:
    """One-shot satisfiability check of ``formula`` under ``assumptions``."""
    return IncrementalSolver(formula, backend, seed).solve(assumptions, budget)


def entails(
    formula: CnfFormula,
    cube: Iterable[int],
    negated_cubes: Iterable[Sequence[int]] = (),
    budget: Budget = UNLIMITED,
    backend: str | None = None,
) -> bool | None:
    """Decide ``formula ∧ cube ⊨ c_1 ∨ … ∨ c_k`` for the given cubes.

    Each cube contributes the clause of its negated literals; the entailment
    holds iff that query is UNSAT. Returns None on timeout.
    """
    extra = [tuple(-lit for lit in c) for c in negated_cubes]
    result = solve(formula.extended(extra), cube, budget, backend)
    if result.status is Status.TIMEOUT:
        return None
    return result.unsat


def external_solve(formula: CnfFormula, executable: str, timeout: float = 60.0) -> Status:
    """Run a DIMACS solver binary and map its exit code (10/20) to a status."""
    exe = shutil.which(executable) or executable
    with tempfile.NamedTemporaryFile("w", suffix=".cnf", delete=False) as fh:
        fh.write(format_dimacs(formula))
        path = fh.name
    try:
        proc = subprocess.run([exe, path], capture_output=True, text=True, timeout=timeout)
    except subprocess.TimeoutExpired:
        return Status.TIMEOUT
    finally:
        os.unlink(path)
    if proc.returncode == 10:
        return Status.SAT
    if proc.returncode == 20:
        return Status.UNSAT
    for line in proc.stdout.splitlines():
        if line.startswith("s "):
            if "UNSATISFIABLE" in line:
                return Status.UNSAT
            if "SATISFIABLE" in line:
                return Status.SAT
    raise RuntimeError(f"{executable}: unrecognized output (exit {proc.returncode})")


def find_external_solver() -> str | None:
    """Locate a DIMACS solver via $DSAUDIT_EXTERNAL_SOLVER or common names."""
    env = os.environ.get("DSAUDIT_EXTERNAL_SOLVER")
    if env:
        return env
    for name in ("kissat", "cadical", "minisat", "glucose", "picosat", "cryptominisat5"):
        if shutil.which(name):
            return name
    return None
