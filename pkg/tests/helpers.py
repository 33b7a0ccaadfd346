"""Random model generators and an arithmetic satisfiability check for tests."""
from __future__ import annotations

import itertools
import random
from fractions import Fraction
from pathlib import Path

from dsaudit.model import (
    EQ,
    GE,
    GT,
    NO_DEFAULT,
    DecisionSet,
    Feature,
    FeatureKind,
    Literal,
    ModelError,
    Rule,
    canonicalize,
)

FIXTURES = Path(__file__).parent / "fixtures"
NUM_OPS = ("=", "!=", "<", "<=", ">", ">=")
CAT_VALUES = ("red", "green", "blue", "teal")


def random_features(rng: random.Random, n_max: int = 4, cat_share: float = 0.3) -> list[Feature]:
    n = rng.randint(1, n_max)
    return [
        Feature(i, f"x{i}", FeatureKind.CATEGORICAL if rng.random() < cat_share else FeatureKind.NUMERIC)
        for i in range(1, n + 1)
    ]


def random_thresholds(rng: random.Random, features, k_max: int = 4) -> dict[str, list]:
    out = {}
    for f in features:
        k = rng.randint(1, k_max)
        if f.kind is FeatureKind.CATEGORICAL:
            out[f.name] = rng.sample(CAT_VALUES, min(k, len(CAT_VALUES)))
        else:
            out[f.name] = sorted(rng.sample([Fraction(v, 2) for v in range(-6, 14)], k))
    return out


def random_literal(rng: random.Random, f: Feature, values, eq_only: bool = False) -> Literal:
    v = rng.choice(values)
    if f.kind is FeatureKind.CATEGORICAL or eq_only:
        op = "=" if eq_only else rng.choice(("=", "!="))
    else:
        op = rng.choice(NUM_OPS)
    return canonicalize(f, op, v)


def random_cube(rng: random.Random, features, values, size: int, eq_only: bool = False) -> list[Literal]:
    out = []
    for _ in range(size):
        f = rng.choice(features)
        out.append(random_literal(rng, f, values[f.name], eq_only))
    return out


def random_ds(
    rng: random.Random,
    n_features: int = 4,
    n_rules: int = 8,
    body_max: int = 3,
    outcomes=("0", "1", "2"),
    eq_only: bool = False,
    cat_share: float = 0.3,
) -> tuple[DecisionSet, list[tuple[Literal, ...]]]:
    """A random decision set and a few random constraint clauses."""
    features = random_features(rng, n_features, cat_share)
    values = random_thresholds(rng, features)
    rules = []
    for _ in range(rng.randint(1, n_rules)):
        body = list(dict.fromkeys(random_cube(rng, features, values, rng.randint(1, body_max), eq_only)))
        try:
            rules.append(Rule(tuple(body), rng.choice(outcomes)))
        except ModelError:
            continue
    if not rules:
        f = features[0]
        rules.append(Rule((random_literal(rng, f, values[f.name], eq_only),), outcomes[0]))
    default = rng.choice(list(outcomes) + [NO_DEFAULT])
    ds = DecisionSet(tuple(features), tuple(rules), default)
    constraints = []
    for _ in range(rng.choice((0, 0, 1, 2))):
        constraints.append(tuple(dict.fromkeys(random_cube(rng, features, values, rng.randint(1, 2)))))
    return ds, constraints


# -- arithmetic satisfiability over the rationals ------------------------------


def _numeric_sat(lits: list[Literal]) -> bool:
    lo, lo_strict = None, False
    hi, hi_strict = None, False
    eqs, nes = set(), set()

    def raise_lo(v, strict):
        nonlocal lo, lo_strict
        if lo is None or v > lo or (v == lo and strict and not lo_strict):
            lo, lo_strict = v, strict

    def lower_hi(v, strict):
        nonlocal hi, hi_strict
        if hi is None or v < hi or (v == hi and strict and not hi_strict):
            hi, hi_strict = v, strict

    for l in lits:
        a = l.atom
        if a.op == EQ:
            (eqs if l.positive else nes).add(a.value)
        elif a.op == GT:
            raise_lo(a.value, True) if l.positive else lower_hi(a.value, False)
        elif a.op == GE:
            raise_lo(a.value, False) if l.positive else lower_hi(a.value, True)
    if len(eqs) > 1:
        return False
    if eqs:
        (v,) = eqs
        if v in nes:
            return False
        if lo is not None and (v < lo or (v == lo and lo_strict)):
            return False
        if hi is not None and (v > hi or (v == hi and hi_strict)):
            return False
        return True
    if lo is not None and hi is not None:
        if lo > hi:
            return False
        if lo == hi:
            return not (lo_strict or hi_strict) and lo not in nes
    return True  # a nonempty open interval has infinitely many points


def arithmetic_sat(literals, kinds: dict[str, FeatureKind]) -> bool:
    """Whether some point of ℚ (numeric) / strings (categorical) satisfies the cube."""
    by_feature: dict[str, list[Literal]] = {}
    for l in literals:
        by_feature.setdefault(l.feature, []).append(l)
    for name, lits in by_feature.items():
        if kinds[name] is FeatureKind.CATEGORICAL:
            eqs = {l.value for l in lits if l.positive}
            nes = {l.value for l in lits if not l.positive}
            if len(eqs) > 1 or eqs & nes:
                return False
        elif not _numeric_sat(lits):
            return False
    return True


def arithmetic_sat_cnf(cube, clauses, kinds) -> bool:
    """Cube plus CNF over literals, by case split on each clause."""
    for choice in itertools.product(*clauses) if clauses else [()]:
        if arithmetic_sat(list(cube) + list(choice), kinds):
            return True
    return False
