from __future__ import annotations

import copy
import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from scenesmith.catalog import (
    MATERIAL_CLASSES,
    PLACEMENT_TAGS,
    SUBTYPES,
    asset_matches,
    catalog_from_document,
    check_asset,
    lint_catalog,
    load_catalog,
    load_catalog_bytes,
    query_assets,
)
from scenesmith.errors import InvariantViolation, ParseError

SOFA = {
    "asset_id": "sofa_x",
    "display_name": "Sofa",
    "category": "basic",
    "subtype": "furniture",
    "room_affinity": ["living_room"],
    "bounds": {"x": 2.0, "y": 0.9, "z": 0.8},
    "material_class": "fabric",
    "placement_tags": ["on_floor"],
    "mesh_ref": "sofa.usd",
}


def _doc(*assets, materials=(), rules=()):
    return {
        "schema_version": "agentworld-catalog/1",
        "assets": list(assets),
        "materials": list(materials),
        "co_occurrence": list(rules),
    }


def _load(doc):
    return load_catalog_bytes(json.dumps(doc).encode())


def test_single_sofa_is_indexed_under_living_room():
    cat = _load(_doc(SOFA))
    assert len(cat.assets) == 1
    assert cat.index("room", "living_room") == ("sofa_x",)
    assert cat.index("category", "basic") == ("sofa_x",)


def test_zero_bound_names_bounds():
    bad = copy.deepcopy(SOFA)
    bad["bounds"]["x"] = 0
    with pytest.raises(InvariantViolation) as exc:
        _load(_doc(bad))
    assert exc.value.field.startswith("bounds")


def test_duplicate_asset_id():
    with pytest.raises(InvariantViolation) as exc:
        _load(_doc(SOFA, dict(SOFA)))
    assert exc.value.field == "asset_id"


def test_basic_asset_needs_floor_or_wall_tag():
    bad = dict(SOFA, placement_tags=["on_surface"])
    with pytest.raises(InvariantViolation):
        _load(_doc(bad))


def test_articulation_only_on_interactables():
    bad = dict(SOFA, articulation={"parts": [{"part_id": "d", "joint": "door_like", "travel_hint": 90}]})
    with pytest.raises(InvariantViolation) as exc:
        _load(_doc(bad))
    assert "articulation" in exc.value.field


def test_unknown_material_class_rejected():
    with pytest.raises(InvariantViolation) as exc:
        _load(_doc(dict(SOFA, material_class="unobtainium")))
    assert exc.value.field == "material_class"


def test_malformed_file_reports_location(tmp_path):
    p = tmp_path / "broken.json"
    p.write_text('{"schema_version": "agentworld-catalog/1",\n "assets": [\n')
    with pytest.raises(ParseError) as exc:
        load_catalog(p)
    assert "broken.json:" in str(exc.value)


def test_wrong_schema_version():
    with pytest.raises(ParseError):
        _load(dict(_doc(SOFA), schema_version="other/2"))


def test_excludes_rule_needs_distinct_ends():
    with pytest.raises(InvariantViolation):
        _load(_doc(SOFA, rules=[{"subject": "sofa_x", "relation": "excludes", "object": "sofa_x"}]))


def test_weight_present_iff_prefers_near():
    with pytest.raises(InvariantViolation):
        _load(_doc(SOFA, rules=[{"subject": "sofa_x", "relation": "prefers_near", "object": "furniture"}]))
    with pytest.raises(InvariantViolation):
        _load(_doc(SOFA, rules=[{"subject": "sofa_x", "relation": "requires", "object": "furniture", "weight": 1.0}]))


def test_load_is_pure_function_of_bytes(catalog):
    data = json.dumps(catalog.to_document(), sort_keys=True).encode()
    assert load_catalog_bytes(data) == load_catalog_bytes(data)
    assert load_catalog_bytes(data).to_document() == catalog.to_document()


def test_every_loaded_record_rechecks(catalog):
    for rec in catalog.assets:
        check_asset(rec)


def test_sample_catalog_covers_all_rooms_and_lints_clean(catalog):
    assert len(catalog.assets) >= 60
    for room in ("living_room", "kitchen", "bedroom"):
        assert query_assets(catalog, room=room, category="basic")
    assert lint_catalog(catalog).warnings == []


def test_lint_flags_missing_bed():
    cat = _load(_doc(dict(SOFA, asset_id="chair_b", room_affinity=["bedroom"])))
    messages = [w.message for w in lint_catalog(cat).warnings]
    assert "bedroom lacks bed-class basic asset" in messages


def test_lint_flags_dangling_rule():
    cat = _load(_doc(SOFA, rules=[{"subject": "sofa_x", "relation": "requires", "object": "ghost_01"}]))
    assert any(m.startswith("dangling rule") for m in lint_catalog(cat).messages())


def test_lint_flags_untagged_interactable():
    cup = dict(SOFA, asset_id="cup_x", category="interactable", subtype="container", placement_tags=[])
    assert any(w.code == "placement_tags" for w in lint_catalog(_load(_doc(SOFA, cup))).warnings)


def test_kitchen_basic_query_returns_tables(catalog):
    hits = query_assets(catalog, {"room": "kitchen", "category": "basic"})
    assert {"table_01", "table_02", "table_03"} <= {a.asset_id for a in hits}
    assert all(a.category == "basic" for a in hits)


def test_empty_filter_is_identity(catalog):
    assert query_assets(catalog, {}) == list(catalog.assets)


def _scan(catalog, flt):
    """Unindexed linear scan written independently of the catalog's index."""
    out = []
    for a in sorted(catalog.assets, key=lambda r: r.asset_id):
        if "category" in flt and a.category != flt["category"]:
            continue
        if "subtype" in flt and a.subtype != flt["subtype"]:
            continue
        if "room" in flt and flt["room"] not in a.room_affinity and "any" not in a.room_affinity:
            continue
        if "tag" in flt and flt["tag"] not in a.placement_tags:
            continue
        out.append(a.asset_id)
    return out


def test_food_on_surface_matches_scan(catalog):
    flt = {"subtype": "food", "tag": "on_surface"}
    assert [a.asset_id for a in query_assets(catalog, flt)] == _scan(catalog, flt)


filters = st.fixed_dictionaries(
    {},
    optional={
        "category": st.sampled_from(["basic", "interactable"]),
        "subtype": st.sampled_from(sorted(SUBTYPES)),
        "room": st.sampled_from(["living_room", "kitchen", "bedroom", "any"]),
        "tag": st.sampled_from(sorted(PLACEMENT_TAGS)),
    },
)


@settings(max_examples=300, deadline=None)
@given(filters)
def test_query_equals_linear_scan(catalog, flt):
    assert [a.asset_id for a in query_assets(catalog, flt)] == _scan(catalog, flt)


def test_unknown_filter_key_rejected(catalog):
    with pytest.raises(KeyError):
        asset_matches(catalog.assets[0], {"colour": "red"})


def test_material_classes_cover_sample(catalog):
    assert {a.material_class for a in catalog.assets} <= set(MATERIAL_CLASSES)


def test_catalog_document_round_trip(catalog):
    assert catalog_from_document(catalog.to_document()) == catalog
