from __future__ import annotations

import json
from dataclasses import replace

import pytest

from scenesmith.catalog import asset_matches
from scenesmith.errors import InsufficientAssets, ParseError, RoomMismatch, UnsatisfiableRole
from scenesmith.furnish import place_basic_assets
from scenesmith.layout import LayoutSpec, generate_floorplan
from scenesmith.taskgen import (
    EMBODIMENTS,
    batch_manifest,
    instantiate_task,
    load_templates,
    manifest_document,
    template_from_dict,
)

# expected (n_assets, n_sequences) for each bundled template, typed in by hand
TABLE_ROWS = [
    ("pp_bowl_place", 10, 10),
    ("pp_appliance_place", 30, 10),
    ("pp_bowl_remove", 10, 10),
    ("pp_appliance_remove", 30, 10),
    ("oc_room_door", 10, 20),
    ("oc_furniture_door", 30, 20),
    ("pp_drawer", 10, 20),
    ("push_button", 10, 20),
    ("push_away", 10, 10),
    ("living_books", 10, 50),
    ("living_pour", 5, 30),
    ("living_trash", 10, 50),
    ("bedroom_pillow", 10, 50),
    ("bedroom_hang", 10, 50),
    ("bedroom_alarm", 5, 30),
    ("kitchen_store", 5, 30),
    ("kitchen_microwave", 5, 50),
    ("kitchen_clean", 5, 50),
]
# the grand total, summed by hand row by row before any code existed
TABLE_GRAND_TOTAL = 5050


@pytest.fixture(scope="module")
def templates():
    return {t.template_id: t for t in load_templates()}


@pytest.fixture(scope="module")
def rooms(catalog):
    out = {}
    for rt in ("living_room", "kitchen", "bedroom"):
        plan = generate_floorplan(LayoutSpec((rt,), footprint=(5.0, 4.5)), None, 1)
        out[rt] = place_basic_assets(plan, catalog, 1)
    return out


def _check_instance(inst, scene_after, template, catalog):
    placed = {p.instance_id: p for p in scene_after}
    openings = set()
    for spec in template.required_roles:
        iid = inst.bindings[spec.role]
        if spec.kind == "opening":
            openings.add(iid)
            continue
        assert iid in placed, (spec.role, iid)
        assert asset_matches(catalog.asset(placed[iid].asset_id), spec.filter)
        assert placed[iid].room_id == inst.room_id
    bound = set(inst.bindings.values())
    for g in inst.goal:
        assert g.args[0] in bound
        if g.predicate in ("in", "on"):
            assert g.args[1] in bound


def test_shipped_templates_match_table(templates):
    assert [(t, templates[t].n_assets, templates[t].n_sequences) for t, _, _ in TABLE_ROWS] == TABLE_ROWS
    assert sum(a * s for _, a, s in TABLE_ROWS) == TABLE_GRAND_TOTAL
    tiers = {t.tier for t in templates.values()}
    assert tiers == {"basic", "multistage"}
    for t in templates.values():
        assert t.required_roles
        assert len(t.goal) <= 2 if t.tier == "basic" else len(t.goal) >= 2


def test_bowl_template_binds_apple_into_bowl(rooms, templates, catalog):
    t = templates["pp_bowl_place"]
    inst = instantiate_task(rooms["kitchen"], t, 3, catalog, primary="apple_01")
    added = {p.instance_id: p for p in inst.added_assets}
    assert added[inst.bindings["object"]].asset_id == "apple_01"
    bowl_iid = inst.bindings["container"]
    bowl = added.get(bowl_iid) or next(p for p in rooms["kitchen"].placed if p.instance_id == bowl_iid)
    assert catalog.asset(bowl.asset_id).semantic_class == "bowl"
    assert [(g.predicate, g.args) for g in inst.goal] == [("in", (inst.bindings["object"], bowl_iid))]


def test_open_close_without_articulated_assets(rooms, templates, catalog):
    rigid_only = catalog.without(lambda a: a.articulated)
    assert not any(catalog.asset(p.asset_id).articulated for p in rooms["kitchen"].placed)
    with pytest.raises(UnsatisfiableRole) as exc:
        instantiate_task(rooms["kitchen"], templates["oc_furniture_door"], 0, rigid_only)
    assert exc.value.role == "target"


def test_store_food_goal_sequence(rooms, templates, catalog):
    inst = instantiate_task(rooms["kitchen"], templates["kitchen_store"], 4, catalog)
    fridge, dish = inst.bindings["fridge"], inst.bindings["dish"]
    steps = [(g.predicate, g.args) for g in inst.goal]
    assert steps == [("joint_at", (fridge, "door")), ("in", (dish, fridge)), ("joint_at", (fridge, "door"))]
    assert inst.goal[0].value > 0 and inst.goal[2].value == 0.0
    assert all(g.tolerance for g in inst.goal if g.predicate == "joint_at")


def test_appliance_starts_open(rooms, templates, catalog):
    inst = instantiate_task(rooms["kitchen"], templates["pp_appliance_place"], 2, catalog)
    appliance = inst.bindings["appliance"]
    doors = {k: v for k, v in inst.initial_joint_state.items() if k.startswith(appliance + "/")}
    assert any(v > 0 for v in doors.values())


def test_room_mismatch(rooms, templates, catalog):
    with pytest.raises(RoomMismatch):
        instantiate_task(rooms["bedroom"], templates["kitchen_clean"], 0, catalog)


@pytest.mark.parametrize("template_id", [t for t, _, _ in TABLE_ROWS])
def test_every_template_instantiates_and_rechecks(template_id, rooms, templates, catalog):
    t = templates[template_id]
    scene = rooms[t.room_requirement if t.room_requirement != "any" else "kitchen"]
    inst = instantiate_task(scene, t, 7, catalog)
    _check_instance(inst, scene.placed + inst.added_assets, t, catalog)
    assert inst.language_instruction and "{" not in inst.language_instruction
    again = instantiate_task(scene, t, 7, catalog)
    assert again == inst


def test_small_manifest_counts(rooms, templates, catalog):
    scenes = [(rt, sc) for rt, sc in rooms.items()]
    m = batch_manifest(list(templates.values()), scenes, {t: (1, 1) for t in templates}, 0, catalog)
    assert m.total == 18
    seeds = [i.seed for b in m.batches for i in b.instances]
    assert len(set(seeds)) == len(seeds)


def test_manifest_distinct_primaries_and_determinism(rooms, templates, catalog):
    scenes = [(rt, sc) for rt, sc in rooms.items()]
    pick = [templates["pp_bowl_place"], templates["kitchen_store"]]
    m = batch_manifest(pick, scenes, {"pp_bowl_place": (4, 3), "kitchen_store": (2, 2)}, 9, catalog)
    for b in m.batches:
        assert len(set(b.primary_assets)) == b.n_assets
        assert len(b.instances) == b.n_assets * b.n_sequences
    again = batch_manifest(pick, scenes, {"pp_bowl_place": (4, 3), "kitchen_store": (2, 2)}, 9, catalog)
    assert json.dumps(manifest_document(m), sort_keys=True) == json.dumps(manifest_document(again), sort_keys=True)


def test_insufficient_assets(rooms, templates, catalog):
    racks = [a for a in catalog.assets if a.semantic_class == "dish_rack"]
    assert len(racks) == 2
    base = templates["push_away"]
    role = replace(base.role("object"), filter={"semantic_class": "dish_rack"})
    t = replace(base, template_id="push_racks", required_roles=(role,), n_assets=3, n_sequences=1)
    with pytest.raises(InsufficientAssets) as exc:
        batch_manifest([t], list(rooms.items()), None, 0, catalog)
    assert exc.value.template_id == "push_racks"


def test_unknown_embodiment(rooms, templates, catalog):
    with pytest.raises(ValueError):
        batch_manifest([templates["push_away"]], list(rooms.items()), {"push_away": (1, 1)}, 0, catalog, embodiment="r2d2")
    assert len(EMBODIMENTS) == 4


def test_template_validation():
    good = {
        "template_id": "x", "tier": "basic", "category": "pick_place", "room_requirement": "any",
        "required_roles": [{"role": "a", "filter": {"subtype": "food"}}],
        "goal": [{"predicate": "displaced", "args": ["a"], "value": 0.1}],
        "primary_role": "a", "counts": {"n_assets": 1, "n_sequences": 1},
    }
    template_from_dict(good)
    with pytest.raises(ParseError):
        template_from_dict({**good, "goal": good["goal"] * 3})
    with pytest.raises(ParseError):
        template_from_dict({**good, "tier": "multistage"})
    with pytest.raises(ParseError):
        template_from_dict({**good, "required_roles": []})
    with pytest.raises(ParseError):
        template_from_dict({**good, "goal": [{"predicate": "teleport", "args": ["a"]}]})
