"""Compare the compiled and pure-Python CDCL cores on random 3-SAT and audit workloads.

    python benchmarks/bench_solver.py [--instances N] [--vars V] [--seed S]
"""
from __future__ import annotations

import argparse
import random
import sys
import time
from pathlib import Path

from dsaudit.analysis import AuditConfig, audit
from dsaudit.ingest import parse_rules
from dsaudit.sat import BACKENDS, CnfFormula, solve

FIXTURES = Path(__file__).resolve().parent.parent / "tests" / "fixtures"


def random_3sat(rng: random.Random, n: int, ratio: float = 4.26) -> CnfFormula:
    m = int(ratio * n)
    clauses = [tuple(rng.choice((-1, 1)) * v for v in rng.sample(range(1, n + 1), 3)) for _ in range(m)]
    return CnfFormula(n, tuple(clauses))


def bench_random(backend: str, formulas) -> tuple[float, int]:
    start = time.perf_counter()
    sat = sum(solve(f, backend=backend).sat for f in formulas)
    return time.perf_counter() - start, sat


def bench_audit(backend: str, repeat: int) -> float:
    models = [parse_rules(p) for p in sorted(FIXTURES.glob("*.rules"))]
    start = time.perf_counter()
    for _ in range(repeat):
        for rf in models:
            audit(rf.ds, rf.constraints, AuditConfig(backend=backend))
    return time.perf_counter() - start


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--instances", type=int, default=40)
    ap.add_argument("--vars", type=int, default=60)
    ap.add_argument("--audit-repeat", type=int, default=20)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    rng = random.Random(args.seed)
    formulas = [random_3sat(rng, args.vars) for _ in range(args.instances)]
    rows = []
    for backend in sorted(BACKENDS):
        t_sat, n_sat = bench_random(backend, formulas)
        t_audit = bench_audit(backend, args.audit_repeat)
        rows.append((backend, t_sat, n_sat, t_audit))
    print(f"{'backend':<8} {'3-SAT s':>9} {'#SAT':>5} {'audit s':>9}")
    for backend, t_sat, n_sat, t_audit in rows:
        print(f"{backend:<8} {t_sat:9.3f} {n_sat:5d} {t_audit:9.3f}")
    if len(rows) == 2:
        (_, c_sat, _, c_aud), (_, p_sat, _, p_aud) = rows
        print(f"speedup  {p_sat / c_sat:8.1f}x       {p_aud / c_aud:8.1f}x")
    elif "cython" not in BACKENDS:
        print("compiled core not built; only the pure-Python backend was timed", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
