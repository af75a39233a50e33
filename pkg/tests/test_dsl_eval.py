from __future__ import annotations

import random
from datetime import date, time
from decimal import Decimal

import pytest

from intentguard.dsl import (
    Constant,
    ConstKind,
    Constraint,
    EvalContext,
    EvalTypeError,
    Operator,
    evaluate_constraint,
)

import generators
from conftest import TODAY


def c(variable, operator, constant):
    return Constraint(variable, operator, constant)


class TestOperatorSemantics:
    def test_time_before_nineteen(self, ctx):
        constraint = c("time", Operator.LT, Constant.clock(time(19, 0)))
        assert evaluate_constraint(constraint, Constant.clock(time(18, 0)), ctx) is True
        assert evaluate_constraint(constraint, Constant.clock(time(19, 0)), ctx) is False
        assert evaluate_constraint(constraint, Constant.clock(time(20, 0)), ctx) is False

    def test_undefined_is_always_false(self, ctx):
        constraint = c("name", Operator.EQ, Constant.text("R"))
        assert evaluate_constraint(constraint, None, ctx) is False

    def test_undefined_even_for_negative_operators(self, ctx):
        neq = c("available", Operator.NEQ, Constant.boolean(True))
        not_in = c("tag", Operator.NOT_IN, Constant.text_list(("a",)))
        assert evaluate_constraint(neq, None, ctx) is False
        assert evaluate_constraint(not_in, None, ctx) is False

    def test_approx_uses_injected_similarity_and_threshold(self):
        constraint = c("name", Operator.APPROX, Constant.text("Joe's Pizza"))
        value = Constant.text("Joes Pizza NYC")
        high = EvalContext(today=TODAY, similarity=lambda a, b: 0.82)
        low = EvalContext(today=TODAY, similarity=lambda a, b: 0.5)
        assert evaluate_constraint(constraint, value, high) is True
        assert evaluate_constraint(constraint, value, low) is False

    def test_approx_threshold_is_the_only_contract(self):
        # two scorers that agree on the >= 0.7 test give identical verdicts
        constraint = c("name", Operator.APPROX, Constant.text("Settings"))
        value = Constant.text("Setting")
        scorer_a = EvalContext(today=TODAY, similarity=lambda a, b: 5 / 6)
        scorer_b = EvalContext(today=TODAY, similarity=lambda a, b: 0.99)
        assert (
            evaluate_constraint(constraint, value, scorer_a)
            == evaluate_constraint(constraint, value, scorer_b)
            is True
        )

    def test_text_equality_normalizes_nfc_and_trims(self, ctx):
        constraint = c("name", Operator.EQ, Constant.text("café"))
        decomposed = Constant.text("café  ")
        assert evaluate_constraint(constraint, decomposed, ctx) is True

    def test_text_equality_is_case_sensitive(self, ctx):
        constraint = c("name", Operator.EQ, Constant.text("R"))
        assert evaluate_constraint(constraint, Constant.text("r"), ctx) is False

    def test_today_resolves_against_clock(self, ctx):
        constraint = c("date", Operator.EQ, Constant.today())
        assert evaluate_constraint(constraint, Constant.calendar(TODAY), ctx) is True
        assert evaluate_constraint(constraint, Constant.calendar(date(2025, 3, 15)), ctx) is False
        # symbolic value on the observation side resolves too
        assert evaluate_constraint(constraint, Constant.today(), ctx) is True
        concrete = c("date", Operator.EQ, Constant.calendar(TODAY))
        assert evaluate_constraint(concrete, Constant.today(), ctx) is True

    def test_date_ordering(self, ctx):
        constraint = c("due", Operator.LE, Constant.today())
        assert evaluate_constraint(constraint, Constant.calendar(date(2025, 3, 13)), ctx) is True
        assert evaluate_constraint(constraint, Constant.calendar(date(2025, 3, 15)), ctx) is False

    def test_number_ordering_is_exact_decimal(self, ctx):
        constraint = c("price", Operator.GE, Constant.number(Decimal("10.10")))
        assert evaluate_constraint(constraint, Constant.number(Decimal("10.1")), ctx) is True
        assert evaluate_constraint(constraint, Constant.number(Decimal("10.09")), ctx) is False

    def test_membership_is_case_insensitive_for_text(self, ctx):
        constraint = c("game", Operator.IN, Constant.text_list(("chess", "GO")))
        assert evaluate_constraint(constraint, Constant.text("CHess"), ctx) is True
        assert evaluate_constraint(constraint, Constant.text("go "), ctx) is True
        assert evaluate_constraint(constraint, Constant.text("poker"), ctx) is False

    def test_not_in_negates_on_defined_values(self, ctx):
        membership = c("game", Operator.IN, Constant.text_list(("chess",)))
        exclusion = c("game", Operator.NOT_IN, Constant.text_list(("chess",)))
        for value in (Constant.text("chess"), Constant.text("go")):
            assert evaluate_constraint(membership, value, ctx) != evaluate_constraint(exclusion, value, ctx)

    def test_enum_membership_is_exact(self, ctx):
        constraint = c("method", Operator.IN, Constant.text_list(("Card", "Cash")))
        assert evaluate_constraint(constraint, Constant.enum("Card"), ctx) is True
        assert evaluate_constraint(constraint, Constant.enum("card"), ctx) is False

    def test_enum_equality(self, ctx):
        constraint = c("method", Operator.EQ, Constant.enum("Card"))
        assert evaluate_constraint(constraint, Constant.enum("Card"), ctx) is True
        assert evaluate_constraint(constraint, Constant.enum("Cash"), ctx) is False


class TestTypeConflicts:
    def test_kind_conflict_raises(self, ctx):
        constraint = c("name", Operator.EQ, Constant.text("R"))
        with pytest.raises(EvalTypeError):
            evaluate_constraint(constraint, Constant.number(3), ctx)

    def test_approx_on_non_text_raises(self, ctx):
        constraint = c("amount", Operator.APPROX, Constant.number(3))
        with pytest.raises(EvalTypeError):
            evaluate_constraint(constraint, Constant.number(3), ctx)

    def test_membership_value_must_be_text_or_enum(self, ctx):
        constraint = c("x", Operator.IN, Constant.text_list(("a",)))
        with pytest.raises(EvalTypeError):
            evaluate_constraint(constraint, Constant.number(1), ctx)

    def test_membership_constant_must_be_list(self, ctx):
        constraint = c("x", Operator.IN, Constant.text("a"))
        with pytest.raises(EvalTypeError):
            evaluate_constraint(constraint, Constant.text("a"), ctx)


class TestProperties:
    def test_undefined_absorbing_sample(self, ctx):
        rng = random.Random(7)
        for _ in range(300):
            constraint = generators.constraint(rng)
            assert evaluate_constraint(constraint, None, ctx) is False

    def test_negation_pairing_on_defined_values(self, ctx):
        rng = random.Random(8)
        kinds = [ConstKind.TEXT, ConstKind.NUMBER, ConstKind.BOOLEAN, ConstKind.ENUM]
        for _ in range(500):
            kind = rng.choice(kinds)
            constant = generators.constant(rng, kind)
            value = generators.constant(rng, kind)
            eq = evaluate_constraint(c("x", Operator.EQ, constant), value, ctx)
            neq = evaluate_constraint(c("x", Operator.NEQ, constant), value, ctx)
            assert eq != neq

    def test_ordering_trichotomy_on_defined_values(self, ctx):
        rng = random.Random(9)
        kinds = [ConstKind.NUMBER, ConstKind.DATE, ConstKind.TIME]
        for _ in range(500):
            kind = rng.choice(kinds)
            constant = generators.constant(rng, kind)
            value = generators.constant(rng, kind)
            results = [
                evaluate_constraint(c("x", op, constant), value, ctx)
                for op in (Operator.LT, Operator.EQ, Operator.GT)
            ]
            assert sum(results) == 1
