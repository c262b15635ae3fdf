"""Collider, contact-material and joint annotations derived from catalog semantics."""

from __future__ import annotations

import math
from dataclasses import dataclass

from scenesmith.catalog import MATERIAL_CLASSES, AssetRecord, Catalog
from scenesmith.errors import MissingTemplate, UnknownMaterialClass
from scenesmith.furnish import SceneGraph
from scenesmith.geometry import q
from scenesmith.rng import PRNGStream

# static friction ranges, sampled uniformly
FRICTION_RANGES = {
    "wood": (0.3, 0.5),
    "metal": (0.15, 0.25),
    "ceramic": (0.25, 0.45),
    "fabric": (0.5, 0.7),
    "plastic": (0.25, 0.35),
    "glass": (0.15, 0.25),
    "stone": (0.4, 0.6),
    "organic": (0.4, 0.6),
}
DYNAMIC_RATIO = 0.8
RESTITUTION = {c: 0.1 for c in MATERIAL_CLASSES} | {"plastic": 0.3, "organic": 0.3}
DENSITY = {
    "wood": 600.0,
    "metal": 2500.0,
    "ceramic": 2000.0,
    "fabric": 200.0,
    "plastic": 400.0,
    "glass": 2200.0,
    "stone": 2600.0,
    "organic": 800.0,
}
HOLLOW_FACTOR = 0.4
BUTTON_MAX_TRAVEL = 0.005
DRIVE_STIFFNESS = 0.0
DRIVE_DAMPING = 0.5

COLLIDER_KINDS = ("convex_hull", "convex_decomposition", "sdf_mesh", "box")
CONCAVE_CLASSES = frozenset(
    {"bowl", "cup", "pitcher", "pot", "dish_rack", "trash_bin", "shelf", "closet", "fridge", "microwave",
     "table", "coffee_table", "desk", "chair", "armchair", "sofa"}
)
# classes that only make sense with moving parts
ARTICULATED_CLASSES = frozenset({"fridge", "microwave", "stove", "closet", "dresser", "nightstand", "kitchen_cabinet"})
JOINT_AXES = {
    "door_like": (0.0, 0.0, 1.0),
    "drawer_like": (0.0, 1.0, 0.0),
    "button_like": (0.0, -1.0, 0.0),
}


@dataclass(frozen=True)
class ColliderSpec:
    kind: str
    source: str


@dataclass(frozen=True)
class PhysicsAnnotation:
    instance_id: str
    collider: ColliderSpec
    static_friction: float
    dynamic_friction: float
    restitution: float
    mass: float
    dynamic: bool


@dataclass(frozen=True)
class Drive:
    stiffness: float
    damping: float


@dataclass(frozen=True)
class JointSpec:
    instance_id: str
    part_id: str
    joint_type: str
    axis: tuple[float, float, float]
    limits: tuple[float, float]
    joint_friction: float
    drive: Drive


def select_collider(asset: AssetRecord | None) -> ColliderSpec:
    """Rule-based collider choice; ``None`` stands for architecture (walls, floors)."""
    if asset is None:
        return ColliderSpec("box", "bounds")
    if asset.articulated:
        return ColliderSpec("convex_decomposition", asset.mesh_ref)
    if asset.high_fidelity:
        return ColliderSpec("sdf_mesh", asset.mesh_ref)
    if asset.semantic_class in CONCAVE_CLASSES:
        return ColliderSpec("convex_decomposition", asset.mesh_ref)
    return ColliderSpec("convex_hull", asset.mesh_ref)


def sample_friction(material_class: str, rng: PRNGStream) -> tuple[float, float]:
    if material_class not in FRICTION_RANGES:
        raise UnknownMaterialClass(f"unknown material class {material_class!r}")
    lo, hi = FRICTION_RANGES[material_class]
    static = min(max(q(rng.uniform(lo, hi), 1e-9), lo), hi)
    return static, q(DYNAMIC_RATIO * static, 1e-9)


def estimate_mass(asset: AssetRecord) -> float:
    if asset.mass_hint is not None:
        return asset.mass_hint
    x, y, z = asset.bounds
    return q(DENSITY[asset.material_class] * HOLLOW_FACTOR * x * y * z, 1e-9)


def annotate_physics(scene: SceneGraph, catalog: Catalog, seed: int) -> list[PhysicsAnnotation]:
    """One annotation per placed asset; interactables are dynamic, furniture is static."""
    root = PRNGStream(seed, ("physics", "contact"))
    out = []
    for p in sorted(scene.placed, key=lambda a: a.instance_id):
        rec = catalog.asset(p.asset_id)
        if rec.material_class not in DENSITY:
            raise UnknownMaterialClass(f"{p.instance_id}: unknown material class {rec.material_class!r}")
        static, dynamic = sample_friction(rec.material_class, root.child(p.instance_id))
        out.append(
            PhysicsAnnotation(
                p.instance_id,
                select_collider(rec),
                static,
                dynamic,
                RESTITUTION[rec.material_class],
                estimate_mass(rec),
                rec.category == "interactable",
            )
        )
    return out


def annotate_architecture(scene: SceneGraph) -> list[PhysicsAnnotation]:
    """Static box colliders for walls and floor slabs."""
    targets = [w.wall_id for w in scene.floorplan.walls()] + [f"floor:{r.room_id}" for r in scene.floorplan.rooms()]
    box = select_collider(None)
    return [PhysicsAnnotation(t, box, 0.5, 0.4, 0.1, 1.0, False) for t in sorted(targets)]


def joint_limits(asset: AssetRecord, part) -> tuple[str, float]:
    """Joint type and upper limit (radians or meters) for one articulation part."""
    if part.joint == "door_like":
        return "revolute", q(math.radians(part.travel_hint), 1e-9)
    if part.joint == "drawer_like":
        return "prismatic", q(min(part.travel_hint, asset.bounds[1]), 1e-9)
    return "prismatic", q(min(part.travel_hint, BUTTON_MAX_TRAVEL), 1e-9)


def configure_joints(scene: SceneGraph, catalog: Catalog, seed: int) -> list[JointSpec]:
    """One joint per articulated part of every placed asset."""
    root = PRNGStream(seed, ("physics", "joints"))
    out = []
    for p in sorted(scene.placed, key=lambda a: a.instance_id):
        rec = catalog.asset(p.asset_id)
        template = rec.articulation
        if template is None or not template.parts:
            if rec.category == "interactable" and (rec.semantic_class in ARTICULATED_CLASSES or template is not None):
                raise MissingTemplate(f"{p.instance_id} ({rec.asset_id}) is articulated but has no articulation template")
            continue
        for part in template.parts:
            friction, _ = sample_friction(rec.material_class, root.child(p.instance_id, part.part_id))
            joint_type, upper = joint_limits(rec, part)
            out.append(
                JointSpec(
                    p.instance_id,
                    part.part_id,
                    joint_type,
                    JOINT_AXES[part.joint],
                    (0.0, upper),
                    friction,
                    Drive(DRIVE_STIFFNESS, DRIVE_DAMPING),
                )
            )
    return out
