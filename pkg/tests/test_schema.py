from __future__ import annotations

import json

import pytest

from intentguard.schema import (
    SchemaError,
    TypeKind,
    describe_states,
    load_schema,
    save_schema,
    schema_from_dict,
)


def issue_codes(exc_info):
    return [issue.code for issue in exc_info.value.issues]


class TestLoad:
    def test_single_text_variable_listing(self, tmp_path):
        path = tmp_path / "schema.json"
        path.write_text(
            json.dumps(
                {
                    "app_id": "demo",
                    "states": [
                        {
                            "name": "RestaurantInfo",
                            "description": "Information about the restaurant you want to reserve.",
                            "variables": [{"name": "String"}],
                        }
                    ],
                }
            )
        )
        schema = load_schema(path)
        assert len(schema.states) == 1
        assert schema.states[0].variables == {"name": schema.states[0].variables["name"]}
        assert schema.states[0].variables["name"].kind is TypeKind.TEXT

    def test_running_example_has_three_states_five_variables(self, restaurant_schema):
        assert len(restaurant_schema.states) == 3
        assert sum(len(s.variables) for s in restaurant_schema.states) == 5
        reserve_info = restaurant_schema.state("ReserveInfo")
        assert reserve_info.variables["date"].kind is TypeKind.DATE
        assert reserve_info.variables["time"].kind is TypeKind.TIME
        assert reserve_info.variables["available"].kind is TypeKind.BOOLEAN

    def test_duplicate_state_names(self):
        with pytest.raises(SchemaError) as exc_info:
            schema_from_dict(
                {
                    "app_id": "demo",
                    "states": [
                        {"name": "S", "description": "", "variables": [{"x": "Text"}]},
                        {"name": "S", "description": "", "variables": [{"y": "Text"}]},
                    ],
                }
            )
        assert "DUPLICATE_STATE" in issue_codes(exc_info)

    def test_duplicate_variable_names(self):
        with pytest.raises(SchemaError) as exc_info:
            schema_from_dict(
                {
                    "app_id": "demo",
                    "states": [{"name": "S", "description": "", "variables": [{"x": "Text"}, {"x": "Number"}]}],
                }
            )
        assert "DUPLICATE_VARIABLE" in issue_codes(exc_info)

    def test_unknown_type_reports_field_path(self):
        with pytest.raises(SchemaError) as exc_info:
            schema_from_dict(
                {"app_id": "demo", "states": [{"name": "S", "description": "", "variables": [{"x": "Float"}]}]}
            )
        issue = exc_info.value.issues[0]
        assert issue.code == "UNKNOWN_TYPE"
        assert issue.path == "states[0].variables.x"

    def test_enum_type_with_variants(self):
        schema = schema_from_dict(
            {"app_id": "demo", "states": [{"name": "S", "description": "", "variables": [{"pay": "Enum[Card, Cash]"}]}]}
        )
        var = schema.states[0].variables["pay"]
        assert var.kind is TypeKind.ENUM
        assert var.variants == ("Card", "Cash")
        assert var.describe() == "Enum[Card, Cash]"

    def test_empty_enum_rejected(self):
        with pytest.raises(SchemaError) as exc_info:
            schema_from_dict(
                {"app_id": "demo", "states": [{"name": "S", "description": "", "variables": [{"pay": "Enum[]"}]}]}
            )
        assert "EMPTY_ENUM" in issue_codes(exc_info)

    def test_flat_variable_map_accepted(self):
        schema = schema_from_dict(
            {"app_id": "demo", "states": [{"name": "S", "description": "", "variables": {"x": "Number", "y": "Time"}}]}
        )
        assert set(schema.states[0].variables) == {"x", "y"}

    def test_missing_app_id_and_states(self):
        with pytest.raises(SchemaError) as exc_info:
            schema_from_dict({"states": []})
        assert {"BAD_APP_ID", "NO_STATES"} <= set(issue_codes(exc_info))

    def test_bad_json_file(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{not json")
        with pytest.raises(SchemaError) as exc_info:
            load_schema(path)
        assert issue_codes(exc_info) == ["BAD_JSON"]

    def test_save_load_identity(self, restaurant_schema, tmp_path):
        path = tmp_path / "roundtrip.json"
        save_schema(restaurant_schema, path)
        assert load_schema(path) == restaurant_schema


class TestDescribe:
    def test_mentions_every_state_and_variable(self, restaurant_schema):
        text = describe_states(restaurant_schema)
        for state in ("RestaurantInfo", "ReserveInfo", "ReserveResult"):
            assert state in text
        for variable in ("name", "date", "time", "available", "success"):
            assert variable in text

    def test_order_invariant_under_permutation(self, restaurant_schema):
        from intentguard.schema import StateSchema

        permuted = StateSchema(restaurant_schema.app_id, tuple(reversed(restaurant_schema.states)))
        assert describe_states(permuted) == describe_states(restaurant_schema)

    def test_empty_description_placeholder(self):
        schema = schema_from_dict(
            {"app_id": "demo", "states": [{"name": "S", "variables": [{"x": "Text"}]}]}
        )
        assert "(no description)" in describe_states(schema)
