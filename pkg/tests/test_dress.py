from __future__ import annotations

import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from scenesmith.dress import (
    COLOR_TEMPERATURE_RANGE,
    assign_materials,
    place_lights,
)
from scenesmith.errors import IncompatibleOverride, NoCompatibleMaterial
from scenesmith.furnish import place_basic_assets
from scenesmith.layout import LayoutSpec, generate_floorplan
from scenesmith.rng import PRNGStream

THREE = ("living_room", "kitchen", "bedroom")


@pytest.fixture(scope="module")
def scene(catalog):
    plan = generate_floorplan(LayoutSpec(THREE, footprint=(12.0, 10.0)), None, 42)
    return place_basic_assets(plan, catalog, 42)


def _expected_targets(scene):
    walls = [w.wall_id for w in scene.floorplan.walls()]
    rooms = [r.room_id for r in scene.floorplan.rooms()]
    return set(walls) | {f"floor:{r}" for r in rooms} | {f"ceiling:{r}" for r in rooms} | {p.instance_id for p in scene.placed}


def test_assignment_is_total_and_compatible(scene, catalog):
    out = assign_materials(scene, catalog, 1)
    assert len(out) == len(_expected_targets(scene))
    assert {a.target for a in out} == _expected_targets(scene)
    by_id = {p.instance_id: p for p in scene.placed}
    for a in out:
        mat = catalog.material(a.material_id)
        if a.target in by_id:
            cls = "asset:" + catalog.asset(by_id[a.target].asset_id).material_class
        else:
            cls = a.target.split(":")[0] if ":" in a.target else "wall"
        assert cls in mat.applicable_to


def test_walls_use_architectural_families(scene, catalog):
    for a in assign_materials(scene, catalog, 3):
        if a.target_class == "wall":
            assert catalog.material(a.material_id).family in {"marble", "brick", "paint", "tile"}


def test_wooden_furniture_gets_wood_grain(scene, catalog):
    wooden = {p.instance_id for p in scene.placed if catalog.asset(p.asset_id).material_class == "wood"}
    assert wooden
    for a in assign_materials(scene, catalog, 5):
        if a.target in wooden:
            assert catalog.material(a.material_id).family == "wood_grain"


def test_walls_of_a_room_share_material(scene, catalog):
    mats = {a.target: a.material_id for a in assign_materials(scene, catalog, 8)}
    for room in scene.floorplan.rooms():
        own = [w for w in scene.floorplan.walls() if w.rooms[0] == room.room_id and w.rooms[1] == "EXTERIOR"]
        assert len({mats[w.wall_id] for w in own}) <= 1


def test_fabric_override_on_wall_rejected(scene, catalog):
    wall = next(scene.floorplan.walls()).wall_id
    fabric = next(m for m in catalog.materials if m.family == "fabric_texture")
    with pytest.raises(IncompatibleOverride):
        assign_materials(scene, catalog, 0, overrides={wall: fabric.material_id})


def test_compatible_override_honoured(scene, catalog):
    wall = next(scene.floorplan.walls()).wall_id
    brick = next(m for m in catalog.materials if m.family == "brick")
    out = {a.target: a.material_id for a in assign_materials(scene, catalog, 0, overrides={wall: brick.material_id})}
    assert out[wall] == brick.material_id


def test_no_ceiling_material_raises(scene, catalog):
    stripped = catalog.__class__(
        catalog.assets,
        tuple(m for m in catalog.materials if "ceiling" not in m.applicable_to),
        catalog.co_occurrence,
    )
    with pytest.raises(NoCompatibleMaterial) as exc:
        assign_materials(scene, stripped, 0)
    assert exc.value.target_class == "ceiling"


def test_assignment_deterministic(scene, catalog):
    assert assign_materials(scene, catalog, 11) == assign_materials(scene, catalog, 11)


def test_seed_sensitivity_over_200_pairs(scene, catalog):
    differ = sum(assign_materials(scene, catalog, 2 * k) != assign_materials(scene, catalog, 2 * k + 1) for k in range(200))
    assert differ / 200 > 0.99


def test_three_room_scene_lights(scene):
    lights = place_lights(scene, 0)
    ceiling = [lt for lt in lights if lt.kind == "ceiling"]
    assert len(ceiling) >= 3
    assert {lt.room_id for lt in ceiling} == {r.room_id for r in scene.floorplan.rooms()}
    for lt in lights:
        assert 50 <= lt.intensity <= 20000


def test_ceiling_lights_sit_inside_their_room(scene):
    import shapely

    for lt in place_lights(scene, 4):
        if lt.kind == "ceiling":
            room = scene.floorplan.room(lt.room_id)
            assert shapely.Polygon(room.polygon).contains(shapely.Point(lt.position[:2]))


def test_default_exposure_is_zero(scene):
    assert all(lt.exposure == 0.0 for lt in place_lights(scene, 9))


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**64 - 1), st.booleans())
def test_light_fields_in_range(seed, dr):
    from scenesmith.furnish import SceneGraph

    plan = generate_floorplan(LayoutSpec(("kitchen",), footprint=(5.0, 5.0)), None, 0)
    for lt in place_lights(SceneGraph(plan), seed, dr=dr):
        assert 50 <= lt.intensity <= 20000
        assert 2700 <= lt.color_temperature <= 6500
        assert -5.0 <= lt.exposure <= 5.0


def test_color_temperature_over_10k_draws():
    # the same draw path place_lights uses for one light
    lo, hi = COLOR_TEMPERATURE_RANGE
    temps = [PRNGStream(k, ("dress", "lights")).child("light:x").uniform(lo, hi) for k in range(10000)]
    assert min(temps) >= 2700 and max(temps) <= 6500
    assert abs(sum(temps) / len(temps) - 4600) < 40


def test_dr_exposure_spreads_around_zero(scene):
    exps = [lt.exposure for s in range(300) for lt in place_lights(scene, s, dr=True)]
    assert any(e != 0.0 for e in exps)
    assert abs(sum(exps) / len(exps)) < 0.3
    assert not math.isnan(sum(exps))
