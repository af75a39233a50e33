from __future__ import annotations

from datetime import date, datetime
from pathlib import Path

import pytest

from intentguard import (
    EvalContext,
    Session,
    lexical_similarity,
    load_schema,
    load_trace,
    parse_specification,
)

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"

CLOCK = datetime(2025, 3, 14, 12, 0, 0)
TODAY = date(2025, 3, 14)


@pytest.fixture
def restaurant_schema():
    return load_schema(FIXTURES / "restaurant" / "schema.json")


@pytest.fixture
def reservation_spec():
    return parse_specification((FIXTURES / "restaurant" / "reservation.vsa").read_text(encoding="utf-8"))


@pytest.fixture
def groceries_schema():
    return load_schema(FIXTURES / "groceries" / "schema.json")


@pytest.fixture
def apples_spec():
    return parse_specification((FIXTURES / "groceries" / "apples.vsa").read_text(encoding="utf-8"))


@pytest.fixture
def ctx():
    return EvalContext(today=TODAY, similarity=lexical_similarity)


@pytest.fixture
def make_session(restaurant_schema, reservation_spec):
    def factory(spec=None, schema=None, **kwargs):
        return Session(spec or reservation_spec, schema or restaurant_schema, CLOCK, **kwargs)

    return factory


def trace_fixture(*parts, schema):
    return load_trace(FIXTURES.joinpath(*parts), schema)
