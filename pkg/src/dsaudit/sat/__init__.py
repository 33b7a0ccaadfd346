"""Boolean satisfiability: CNF containers, DIMACS I/O and a CDCL engine.

The compiled core (``_cdcl``) is used when it was built; otherwise the pure
Python core with identical search behaviour is selected. Set
``DSAUDIT_PURE_PYTHON=1`` to force the fallback.
"""
from dsaudit.sat.cnf import (
    CnfFormula,
    DimacsError,
    format_dimacs,
    parse_dimacs,
    read_dimacs,
    write_dimacs,
)
from dsaudit.sat.solver import (
    BACKENDS,
    DEFAULT_BACKEND,
    UNLIMITED,
    Budget,
    IncrementalSolver,
    SatResult,
    Status,
    entails,
    external_solve,
    find_external_solver,
    make_core,
    solve,
)

__all__ = [
    "BACKENDS",
    "DEFAULT_BACKEND",
    "UNLIMITED",
    "Budget",
    "CnfFormula",
    "DimacsError",
    "IncrementalSolver",
    "SatResult",
    "Status",
    "entails",
    "external_solve",
    "find_external_solver",
    "format_dimacs",
    "make_core",
    "parse_dimacs",
    "read_dimacs",
    "solve",
    "write_dimacs",
]
