"""Seeded random generators for property-style tests.

Everything takes an explicit ``random.Random`` so test runs are reproducible
and the acceptance suite can demand exact case counts.
"""

from __future__ import annotations

import random
import string
from datetime import date, time, timedelta
from decimal import Decimal

from intentguard.dsl import (
    ConstKind,
    Constant,
    Constraint,
    ObjectiveRef,
    Operator,
    Rule,
    Specification,
    StatePredicate,
)

_RESERVED = {"in", "not", "true", "false", "today", "done"}
_TEXT_POOL = string.ascii_letters + string.digits + " '!?.,:-_()\"\\éüñ汉"


def identifier(rng: random.Random) -> str:
    while True:
        first = rng.choice(string.ascii_letters + "_")
        rest = "".join(rng.choice(string.ascii_letters + string.digits + "_") for _ in range(rng.randint(2, 9)))
        name = first + rest
        if name.lower() not in _RESERVED:
            return name


def text_value(rng: random.Random) -> str:
    return "".join(rng.choice(_TEXT_POOL) for _ in range(rng.randint(0, 12)))


def number_constant(rng: random.Random) -> Constant:
    whole = rng.randint(-10_000, 10_000)
    if rng.random() < 0.5:
        return Constant.number(Decimal(whole))
    frac = rng.randint(0, 999_999)
    return Constant.number(Decimal(f"{whole}.{frac:06d}"[: rng.randint(len(str(whole)) + 2, len(str(whole)) + 8)]))


def date_constant(rng: random.Random) -> Constant:
    if rng.random() < 0.25:
        return Constant.today()
    base = date(2020, 1, 1) + timedelta(days=rng.randint(0, 3_000))
    return Constant.calendar(base)


def time_constant(rng: random.Random) -> Constant:
    return Constant.clock(time(rng.randint(0, 23), rng.randint(0, 59)))


def constant(rng: random.Random, kind: ConstKind | None = None) -> Constant:
    kind = kind or rng.choice(list(ConstKind))
    if kind is ConstKind.TEXT:
        return Constant.text(text_value(rng))
    if kind is ConstKind.NUMBER:
        return number_constant(rng)
    if kind is ConstKind.BOOLEAN:
        return Constant.boolean(rng.random() < 0.5)
    if kind is ConstKind.DATE:
        return date_constant(rng)
    if kind is ConstKind.TIME:
        return time_constant(rng)
    if kind is ConstKind.ENUM:
        return Constant.enum(identifier(rng))
    return Constant.text_list(tuple(text_value(rng) for _ in range(rng.randint(1, 3))))


def constraint(rng: random.Random) -> Constraint:
    operator = rng.choice(list(Operator))
    if operator in (Operator.IN, Operator.NOT_IN):
        const = constant(rng, ConstKind.TEXT_LIST)
    elif operator is Operator.APPROX:
        const = constant(rng, ConstKind.TEXT)
    elif operator in (Operator.GT, Operator.GE, Operator.LT, Operator.LE):
        const = constant(rng, rng.choice([ConstKind.NUMBER, ConstKind.DATE, ConstKind.TIME]))
    else:
        const = constant(rng, rng.choice([k for k in ConstKind if k is not ConstKind.TEXT_LIST]))
    return Constraint(identifier(rng), operator, const)


def state_predicate(rng: random.Random) -> StatePredicate:
    return StatePredicate(identifier(rng), tuple(constraint(rng) for _ in range(rng.randint(1, 3))))


def specification(rng: random.Random) -> Specification:
    """A structurally valid spec: acyclic objective references, one Done rule."""
    n_rules = rng.randint(1, 4)
    rules: list[Rule] = []
    objectives: list[str] = []
    for i in range(n_rules):
        predicates: list = []
        for _ in range(rng.randint(1, 3)):
            if objectives and rng.random() < 0.3:
                predicates.append(ObjectiveRef(rng.choice(objectives)))
            else:
                predicates.append(state_predicate(rng))
        last = i == n_rules - 1
        if last or rng.random() < 0.3:
            conclusion = "Done"
        else:
            conclusion = identifier(rng)
            objectives.append(conclusion)
        rules.append(Rule(tuple(predicates), conclusion))
    return Specification(tuple(rules))
