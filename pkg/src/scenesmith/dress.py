"""Material assignment and light placement."""

from __future__ import annotations

from collections.abc import Mapping
from dataclasses import dataclass

import shapely

from scenesmith.catalog import Catalog, MaterialRecord
from scenesmith.errors import IncompatibleOverride, NoCompatibleMaterial
from scenesmith.furnish import SceneGraph
from scenesmith.geometry import q
from scenesmith.rng import PRNGStream

INTENSITY_RANGE = (50.0, 20000.0)
COLOR_TEMPERATURE_RANGE = (2700.0, 6500.0)
EXPOSURE_RANGE = (-5.0, 5.0)
CEILING_LIGHT_DROP = 0.05
LIGHT_KINDS = ("ceiling", "lamp", "window")

# preferred material families per target class; the randomization profile ignores these
DEFAULT_FAMILIES = {
    "wall": ("paint", "brick", "marble", "tile"),
    "floor": ("wood_grain", "tile", "marble"),
    "ceiling": ("paint",),
    "asset:wood": ("wood_grain",),
    "asset:metal": ("metallic_coating",),
    "asset:ceramic": ("ceramic_finish",),
    "asset:fabric": ("fabric_texture",),
    "asset:plastic": ("paint",),
    "asset:glass": ("ceramic_finish",),
    "asset:stone": ("marble", "tile"),
    "asset:organic": ("paint",),
}


@dataclass(frozen=True)
class MaterialAssignment:
    target: str
    material_id: str
    target_class: str


@dataclass(frozen=True)
class LightSpec:
    light_id: str
    kind: str
    room_id: str
    position: tuple[float, float, float]
    intensity: float
    color_temperature: float
    exposure: float


def target_classes(scene: SceneGraph, catalog: Catalog) -> dict[str, str]:
    """Every dressable target id mapped to its material target class."""
    out: dict[str, str] = {}
    for w in scene.floorplan.walls():
        out[w.wall_id] = "wall"
    for room in scene.floorplan.rooms():
        out[f"floor:{room.room_id}"] = "floor"
        out[f"ceiling:{room.room_id}"] = "ceiling"
    for p in scene.placed:
        out[p.instance_id] = f"asset:{catalog.asset(p.asset_id).material_class}"
    return out


def compatible_materials(catalog: Catalog, target_class: str, dr: bool = False) -> list[MaterialRecord]:
    pool = [m for m in catalog.materials if target_class in m.applicable_to]
    if dr:
        return pool
    preferred = [m for m in pool if m.family in DEFAULT_FAMILIES.get(target_class, ())]
    return preferred or pool


def assign_materials(scene: SceneGraph, catalog: Catalog, seed: int,
                     overrides: Mapping[str, str] | None = None, dr: bool = False) -> list[MaterialAssignment]:
    """One material per wall, floor, ceiling and placed asset.

    All walls of a room share one material; a wall between two rooms takes the
    material of the room with the lower id. Overrides are keyed by target id.
    """
    overrides = dict(overrides or {})
    classes = target_classes(scene, catalog)
    for target, mat_id in sorted(overrides.items()):
        if target not in classes:
            raise IncompatibleOverride(f"override target {target!r} is not in the scene")
        if not catalog.has_material(mat_id):
            raise IncompatibleOverride(f"override material {mat_id!r} is not in the catalog")
        if classes[target] not in catalog.material(mat_id).applicable_to:
            raise IncompatibleOverride(f"{mat_id} is not applicable to {target} ({classes[target]})")

    root = PRNGStream(seed, ("dress", "materials"))

    def pick(target: str, cls: str, stream_key: str) -> str:
        pool = compatible_materials(catalog, cls, dr)
        if not pool:
            raise NoCompatibleMaterial(target, cls)
        return root.child(stream_key).choice(pool).material_id

    room_wall = {r.room_id: pick(f"walls:{r.room_id}", "wall", f"walls:{r.room_id}") for r in scene.floorplan.rooms()}
    out = []
    for target in sorted(classes):
        cls = classes[target]
        if target in overrides:
            mat = overrides[target]
        elif cls == "wall":
            wall = next(w for w in scene.floorplan.walls() if w.wall_id == target)
            owners = sorted(r for r in wall.rooms if r in room_wall)
            mat = room_wall[owners[0]]
        else:
            mat = pick(target, cls, target)
        out.append(MaterialAssignment(target, mat, cls))
    return out


def _room_anchor(polygon) -> tuple[float, float]:
    poly = shapely.Polygon(polygon)
    c = poly.centroid
    if not poly.contains(c):
        c = poly.representative_point()
    return q(c.x), q(c.y)


def place_lights(scene: SceneGraph, seed: int, dr: bool = False, catalog: Catalog | None = None) -> list[LightSpec]:
    """A ceiling light at every room centroid plus one light per placed lamp."""
    plan = scene.floorplan
    root = PRNGStream(seed, ("dress", "lights"))
    ceiling_z = q(plan.spec.floor_height - CEILING_LIGHT_DROP)
    sources = []
    for room in sorted(plan.rooms(), key=lambda r: r.room_id):
        x, y = _room_anchor(room.polygon)
        z = q(room.floor_index * plan.spec.floor_height + ceiling_z)
        sources.append(("ceiling", room.room_id, (x, y, z), f"light:{room.room_id}"))
    for p in sorted(scene.placed, key=lambda a: a.instance_id):
        is_lamp = catalog.asset(p.asset_id).semantic_class == "lamp" if catalog is not None else "lamp" in p.asset_id
        if not is_lamp:
            continue
        floor = next(r.floor_index for r in plan.rooms() if r.room_id == p.room_id)
        z = q(floor * plan.spec.floor_height + p.pose.z + p.size[2])
        sources.append(("lamp", p.room_id, (p.pose.x, p.pose.y, z), f"light:{p.instance_id}"))
    out = []
    for k, (kind, room_id, pos, key) in enumerate(sources):
        rng = root.child(key)
        intensity = q(rng.log_uniform(*INTENSITY_RANGE), 1e-6)
        temp = q(rng.uniform(*COLOR_TEMPERATURE_RANGE), 1e-6)
        exposure = q(rng.triangular(EXPOSURE_RANGE[0], 0.0, EXPOSURE_RANGE[1]), 1e-9) if dr else 0.0
        out.append(LightSpec(f"light_{k:03d}", kind, room_id, pos, _clamp(intensity, INTENSITY_RANGE),
                             _clamp(temp, COLOR_TEMPERATURE_RANGE), _clamp(exposure, EXPOSURE_RANGE)))
    return out


def _clamp(v: float, bounds: tuple[float, float]) -> float:
    # quantization can nudge a draw at the very edge of its range
    return min(max(v, bounds[0]), bounds[1])
