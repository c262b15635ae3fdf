"""Canonical scene documents: serialization, validation, SVG preview and summary stats."""

from __future__ import annotations

import hashlib
import json
import math
from collections import deque
from collections.abc import Mapping
from dataclasses import dataclass, field, replace
from typing import Any
from xml.sax.saxutils import escape, quoteattr

import numpy as np
import shapely
from shapely.geometry import Polygon

from scenesmith import __version__
from scenesmith._kernels import penetration_depths
from scenesmith.catalog import (
    AssetRecord,
    Catalog,
    MaterialRecord,
    asset_from_dict,
    asset_to_dict,
    material_from_dict,
    material_to_dict,
)
from scenesmith.dress import COLOR_TEMPERATURE_RANGE, EXPOSURE_RANGE, INTENSITY_RANGE, LightSpec, MaterialAssignment
from scenesmith.errors import FloorOutOfRange, ParseError, SceneSmithError
from scenesmith.furnish import (
    TOLERANCE,
    ClearanceZone,
    PlacedAsset,
    SceneGraph,
    SupportSurface,
    accepts,
    find_support_surfaces,
)
from scenesmith.geometry import is_rectilinear
from scenesmith.layout import FloorPlan, LayoutSpec, passes_thresholds, score_room
from scenesmith.physicalize import (
    FRICTION_RANGES,
    JOINT_AXES,
    JointSpec,
    PhysicsAnnotation,
    joint_limits,
)
from scenesmith.report import ValidationReport
from scenesmith.rng import ALGORITHM
from scenesmith.serde import from_jsonable, to_jsonable

SCHEMA_VERSION = "agentworld-scene/1"
PX_PER_METER = 20.0
SVG_MARGIN = 20.0

# record identity keys, in priority order, used to sort lists canonically
_ID_KEYS = (
    "instance_id", "room_id", "wall_id", "opening_id", "staircase_id", "light_id",
    "target", "owner", "asset_id", "material_id", "floor_index",
)


@dataclass(frozen=True)
class GenerationHeader:
    scene_key: str
    seed: int
    layout_seed: int
    variant: int
    spec: LayoutSpec
    engine_version: str = __version__
    prng: str = ALGORITHM
    dr: bool = False


@dataclass(frozen=True)
class SceneSection:
    placed: tuple[PlacedAsset, ...] = ()
    surfaces: tuple[SupportSurface, ...] = ()
    clearance_map: tuple[ClearanceZone, ...] = ()


@dataclass(frozen=True)
class PhysicsSection:
    assets: tuple[PhysicsAnnotation, ...] = ()
    architecture: tuple[PhysicsAnnotation, ...] = ()


@dataclass(frozen=True)
class SceneDocument:
    generation: GenerationHeader
    floorplan: FloorPlan
    scene: SceneSection
    materials: tuple[MaterialAssignment, ...]
    lights: tuple[LightSpec, ...]
    physics: PhysicsSection
    joints: tuple[JointSpec, ...]
    asset_records: tuple[AssetRecord, ...] = ()
    material_records: tuple[MaterialRecord, ...] = ()
    content_hash: str = ""
    schema_version: str = SCHEMA_VERSION

    def graph(self) -> SceneGraph:
        return SceneGraph(self.floorplan, self.scene.placed, self.scene.surfaces, self.scene.clearance_map)

    def catalog(self) -> Catalog:
        return Catalog(self.asset_records, self.material_records)

    def with_hash(self) -> SceneDocument:
        return replace(self, content_hash=compute_hash(self))


def build_document(generation: GenerationHeader, scene: SceneGraph, catalog: Catalog, materials, lights,
                   physics: PhysicsSection, joints) -> SceneDocument:
    """Assemble a self-contained document embedding every referenced catalog record."""
    asset_ids = sorted({p.asset_id for p in scene.placed})
    material_ids = sorted({m.material_id for m in materials})
    doc = SceneDocument(
        generation=generation,
        floorplan=scene.floorplan,
        scene=SceneSection(scene.placed, scene.surfaces, scene.clearance_map),
        materials=tuple(materials),
        lights=tuple(lights),
        physics=physics,
        joints=tuple(joints),
        asset_records=tuple(catalog.asset(a) for a in asset_ids),
        material_records=tuple(catalog.material(m) for m in material_ids),
    )
    return doc.with_hash()


# ---------------------------------------------------------------- canonical form


def _canon(value: Any) -> Any:
    if isinstance(value, dict):
        return {k: _canon(v) for k, v in value.items()}
    if isinstance(value, list):
        items = [_canon(v) for v in value]
        if items and all(isinstance(v, dict) for v in items):
            items.sort(key=_record_key)
        return items
    return value


def _record_key(d: dict) -> tuple:
    ident = tuple(str(d[k]) for k in _ID_KEYS if k in d)
    part = str(d.get("part_id", ""))
    return ident, part, json.dumps(d, sort_keys=True)


def document_to_dict(doc: SceneDocument, include_hash: bool = True) -> dict[str, Any]:
    out = {
        "schema_version": doc.schema_version,
        "generation": to_jsonable(doc.generation),
        "floorplan": to_jsonable(doc.floorplan),
        "scene": to_jsonable(doc.scene),
        "materials": to_jsonable(doc.materials),
        "lights": to_jsonable(doc.lights),
        "physics": to_jsonable(doc.physics),
        "joints": to_jsonable(doc.joints),
        "catalog": {
            "assets": [asset_to_dict(a) for a in doc.asset_records],
            "materials": [material_to_dict(m) for m in doc.material_records],
        },
    }
    if include_hash:
        out["content_hash"] = doc.content_hash
    return _canon(out)


def _dumps(obj: Any) -> bytes:
    return (json.dumps(obj, sort_keys=True, indent=1, ensure_ascii=False, allow_nan=False) + "\n").encode("utf-8")


def compute_hash(doc: SceneDocument) -> str:
    return hashlib.sha256(_dumps(document_to_dict(doc, include_hash=False))).hexdigest()


def serialize_scene(doc: SceneDocument) -> bytes:
    """Canonical bytes: sorted keys and record lists, shortest round-trip floats, LF newlines."""
    return _dumps(document_to_dict(doc))


def document_from_dict(data: Any) -> SceneDocument:
    if not isinstance(data, dict):
        raise ParseError("top level must be an object", "$")
    if data.get("schema_version") != SCHEMA_VERSION:
        raise ParseError(f"schema_version must be {SCHEMA_VERSION!r}", "$.schema_version")
    for key in ("generation", "floorplan", "scene", "materials", "lights", "physics", "joints", "catalog", "content_hash"):
        if key not in data:
            raise ParseError(f"missing field {key!r}", "$")
    cat = data["catalog"]
    if not isinstance(cat, dict) or not isinstance(cat.get("assets"), list) or not isinstance(cat.get("materials"), list):
        raise ParseError("catalog must hold assets and materials arrays", "$.catalog")
    if not isinstance(data["content_hash"], str):
        raise ParseError("content_hash must be a string", "$.content_hash")
    try:
        assets = tuple(asset_from_dict(a, f"$.catalog.assets[{i}]") for i, a in enumerate(cat["assets"]))
        materials = tuple(material_from_dict(m, f"$.catalog.materials[{i}]") for i, m in enumerate(cat["materials"]))
    except (TypeError, AttributeError) as exc:
        raise ParseError(str(exc), "$.catalog") from exc
    return SceneDocument(
        generation=from_jsonable(GenerationHeader, data["generation"], "$.generation"),
        floorplan=from_jsonable(FloorPlan, data["floorplan"], "$.floorplan"),
        scene=from_jsonable(SceneSection, data["scene"], "$.scene"),
        materials=from_jsonable(tuple[MaterialAssignment, ...], data["materials"], "$.materials"),
        lights=from_jsonable(tuple[LightSpec, ...], data["lights"], "$.lights"),
        physics=from_jsonable(PhysicsSection, data["physics"], "$.physics"),
        joints=from_jsonable(tuple[JointSpec, ...], data["joints"], "$.joints"),
        asset_records=assets,
        material_records=materials,
        content_hash=data["content_hash"],
    )


def parse_scene(data: bytes | str) -> SceneDocument:
    if isinstance(data, bytes):
        try:
            data = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ParseError(f"not UTF-8: {exc}", "$") from exc
    try:
        raw = json.loads(data)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, f"line {exc.lineno}:{exc.colno}") from exc
    return document_from_dict(raw)


# ---------------------------------------------------------------- validation


def validate_scene(data: bytes | str | SceneDocument) -> ValidationReport:
    """Parse and re-check every cross-module invariant; failures become report entries."""
    report = ValidationReport()
    if isinstance(data, SceneDocument):
        doc = data
    else:
        try:
            doc = parse_scene(data)
        except ParseError as exc:
            report.error("PARSE", exc.location or "$", str(exc))
            return report
        except (SceneSmithError, TypeError, ValueError, KeyError) as exc:
            report.error("PARSE", "$", f"{type(exc).__name__}: {exc}")
            return report
    expected = compute_hash(doc)
    if doc.content_hash != expected:
        report.error("HASH", "content_hash", f"content_hash {doc.content_hash[:12]} does not match {expected[:12]}")
    assets = {a.asset_id: a for a in doc.asset_records}
    materials = {m.material_id: m for m in doc.material_records}
    _check_layout(doc, report)
    _check_placement(doc, assets, report)
    _check_materials(doc, assets, materials, report)
    _check_lights(doc, report)
    _check_physics(doc, assets, report)
    _check_joints(doc, assets, report)
    return report


def _check_layout(doc: SceneDocument, report: ValidationReport) -> None:
    plan = doc.floorplan
    if doc.generation.spec != plan.spec:
        report.error("SPEC", "generation.spec", "generation header spec differs from floorplan spec")
    th = plan.spec.thresholds
    fw, fd = plan.spec.footprint
    footprint = shapely.box(0, 0, fw, fd).buffer(1e-9)
    room_ids = set()
    for fl in plan.floors:
        shapes = []
        for room in fl.rooms:
            room_ids.add(room.room_id)
            path = f"floorplan.rooms.{room.room_id}"
            if not is_rectilinear(room.polygon) or not is_rectilinear(room.cell_polygon):
                report.error("ROOM_GEOMETRY", path, f"{room.room_id} is not rectilinear")
            poly = Polygon(room.polygon)
            if not poly.is_valid or poly.area <= 0:
                report.error("ROOM_GEOMETRY", path, f"{room.room_id} polygon is degenerate")
                continue
            if not footprint.contains(poly):
                report.error("ROOM_GEOMETRY", path, f"{room.room_id} leaves the building footprint")
            try:
                failed = passes_thresholds(room.room_type, score_room(room), th)
            except SceneSmithError as exc:
                failed = str(exc)
            if failed:
                report.error("ROOM_THRESHOLD", path, f"{room.room_id} fails {failed}")
            shapes.append((room.room_id, poly))
        for i in range(len(shapes)):
            for j in range(i + 1, len(shapes)):
                if shapes[i][1].intersection(shapes[j][1]).area > 1e-9:
                    report.error("ROOM_OVERLAP", f"floorplan.rooms.{shapes[i][0]}",
                                 f"{shapes[i][0]} overlaps {shapes[j][0]}")
    walls = {w.wall_id for w in plan.walls()}
    graph: dict[str, set[str]] = {r: set() for r in room_ids}
    exterior = 0
    for o in plan.openings():
        if o.wall_ref not in walls:
            report.error("DANGLING_REF", f"floorplan.openings.{o.opening_id}", f"unknown wall {o.wall_ref}")
        a, b = o.connects
        if o.kind == "exterior_door" and o.floor_index == 0:
            exterior += 1
        for r in (a, b):
            if r not in room_ids and r != "EXTERIOR":
                report.error("DANGLING_REF", f"floorplan.openings.{o.opening_id}", f"unknown room {r}")
        if a in graph and b in graph:
            graph[a].add(b)
            graph[b].add(a)
    for s in plan.staircases:
        if s.lower_room in graph and s.upper_room in graph:
            graph[s.lower_room].add(s.upper_room)
            graph[s.upper_room].add(s.lower_room)
        else:
            report.error("DANGLING_REF", f"floorplan.staircases.{s.staircase_id}", "staircase references unknown room")
    if exterior != 1:
        report.error("CONNECTIVITY", "floorplan.openings", f"expected exactly one exterior door on floor 0, found {exterior}")
    if graph:
        start = min(graph)
        seen = {start}
        todo = deque([start])
        while todo:
            for nxt in graph[todo.popleft()]:
                if nxt not in seen:
                    seen.add(nxt)
                    todo.append(nxt)
        if len(seen) != len(graph):
            report.error("CONNECTIVITY", "floorplan", f"rooms unreachable: {sorted(set(graph) - seen)}")


def _check_placement(doc: SceneDocument, assets: Mapping[str, AssetRecord], report: ValidationReport) -> None:
    placed = doc.scene.placed
    rooms = {r.room_id: r for r in doc.floorplan.rooms()}
    by_id: dict[str, PlacedAsset] = {}
    for p in placed:
        path = f"scene.placed.{p.instance_id}"
        if p.instance_id in by_id:
            report.error("DANGLING_REF", path, f"duplicate instance id {p.instance_id}")
        by_id[p.instance_id] = p
        if p.asset_id not in assets:
            report.error("DANGLING_REF", path, f"unknown asset {p.asset_id}")
        elif tuple(p.size) != tuple(assets[p.asset_id].bounds):
            report.error("DANGLING_REF", path, f"size of {p.instance_id} differs from its catalog bounds")
        if p.room_id not in rooms:
            report.error("DANGLING_REF", path, f"unknown room {p.room_id}")
        if not (0.0 <= p.pose.yaw < 2 * math.pi):
            report.error("SUPPORT", path, f"yaw {p.pose.yaw} outside [0, 2pi)")
    valid = [p for p in placed if p.asset_id in assets and p.room_id in rooms]

    # support relations: parent exists, was placed earlier, heights agree, kinds compatible
    surfaces = {s.owner: s for s in doc.scene.surfaces}
    recomputed = {s.owner: s for s in find_support_surfaces(doc.graph(), Catalog(tuple(assets.values())))} if all(
        p.asset_id in assets for p in placed) else surfaces
    if surfaces != recomputed:
        report.error("SUPPORT", "scene.surfaces", "support surfaces differ from those derived from the catalog")
    for p in valid:
        path = f"scene.placed.{p.instance_id}"
        if p.parent in rooms:
            if p.parent != p.room_id:
                report.error("SUPPORT", path, f"{p.instance_id} rests on another room")
            if p.support_kind not in ("floor", "wall"):
                report.error("SUPPORT", path, f"{p.instance_id} has support_kind {p.support_kind} on a room")
            if p.support_kind == "floor" and abs(p.pose.z) > 1e-6:
                report.error("SUPPORT", path, f"{p.instance_id} floats above the floor")
            continue
        parent = by_id.get(p.parent)
        if parent is None:
            report.error("SUPPORT", path, f"{p.instance_id} rests on unknown {p.parent}")
            continue
        if parent.instance_id >= p.instance_id:
            report.error("SUPPORT", path, f"{p.instance_id} placed before its support {p.parent}")
        surf = surfaces.get(parent.instance_id)
        if surf is None:
            report.error("SUPPORT", path, f"{p.parent} offers no support surface")
            continue
        if abs(parent.pose.z + surf.height - p.pose.z) > 1e-6:
            report.error("SUPPORT", path, f"{p.instance_id} is not at its support height")
        if parent.room_id != p.room_id:
            report.error("SUPPORT", path, f"{p.instance_id} and its support are in different rooms")
        if parent.asset_id in assets and p.asset_id in assets and not accepts(assets[parent.asset_id], surf.kind, assets[p.asset_id]):
            report.error("SUPPORT", path, f"{p.asset_id} may not rest on a {surf.kind}")
    # cycle check on the support graph
    for p in valid:
        seen = set()
        cur = p
        while cur.parent in by_id:
            if cur.instance_id in seen:
                report.error("SUPPORT", f"scene.placed.{p.instance_id}", "support cycle")
                break
            seen.add(cur.instance_id)
            cur = by_id[cur.parent]

    # containment and pairwise overlap
    ancestors: dict[str, set[str]] = {}
    for p in valid:
        chain, cur = set(), p
        while cur.parent in by_id and cur.parent not in chain:
            chain.add(cur.parent)
            cur = by_id[cur.parent]
        ancestors[p.instance_id] = chain
    for p in valid:
        fp = p.footprint()
        region = rooms[p.room_id].shape.buffer(TOLERANCE, join_style="mitre")
        if not region.contains(fp):
            report.error("CONTAINMENT", f"scene.placed.{p.instance_id}", f"{p.instance_id} protrudes outside {p.room_id}")
    floors: dict[int, list[PlacedAsset]] = {}
    for p in valid:
        floors.setdefault(rooms[p.room_id].floor_index, []).append(p)
    for group in floors.values():
        boxes = np.vstack([p.box() for p in group]) if group else np.zeros((0, 8))
        for i, a in enumerate(group):
            if i + 1 >= len(group):
                break
            rest = boxes[i + 1:]
            pen = penetration_depths(boxes[i], rest)
            vert = np.minimum(rest[:, 7], boxes[i][7]) - np.maximum(rest[:, 6], boxes[i][6])
            for j in np.flatnonzero((pen > TOLERANCE) & (vert > TOLERANCE)):
                b = group[i + 1 + int(j)]
                if a.instance_id in ancestors[b.instance_id] or b.instance_id in ancestors[a.instance_id]:
                    continue
                report.error("COLLISION", f"scene.placed.{a.instance_id}", f"{a.instance_id} overlaps {b.instance_id}")


def _check_materials(doc, assets, materials, report) -> None:
    expected: dict[str, str] = {w.wall_id: "wall" for w in doc.floorplan.walls()}
    for r in doc.floorplan.rooms():
        expected[f"floor:{r.room_id}"] = "floor"
        expected[f"ceiling:{r.room_id}"] = "ceiling"
    unresolved = set()
    for p in doc.scene.placed:
        if p.asset_id in assets:
            expected[p.instance_id] = f"asset:{assets[p.asset_id].material_class}"
        else:
            unresolved.add(p.instance_id)  # already reported as a dangling asset
    seen: dict[str, int] = {}
    for i, m in enumerate(doc.materials):
        path = f"materials[{i}]"
        seen[m.target] = seen.get(m.target, 0) + 1
        if m.target in unresolved:
            continue
        if m.target not in expected:
            report.error("DANGLING_REF", path, f"assignment to unknown target {m.target}")
            continue
        if m.material_id not in materials:
            report.error("DANGLING_REF", path, f"unknown material {m.material_id}")
            continue
        cls = expected[m.target]
        if m.target_class != cls or cls not in materials[m.material_id].applicable_to:
            report.error("MATERIAL", path, f"{m.material_id} is not applicable to {m.target} ({cls})")
    for target in sorted(expected):
        if seen.get(target, 0) != 1:
            report.error("MATERIAL", "materials", f"{target} has {seen.get(target, 0)} assignments, expected 1")


def _check_lights(doc, report) -> None:
    rooms = {r.room_id: r for r in doc.floorplan.rooms()}
    lit = set()
    for i, light in enumerate(doc.lights):
        path = f"lights[{i}]"
        lo, hi = INTENSITY_RANGE
        if not (lo <= light.intensity <= hi):
            report.error("LIGHT", f"{path}.intensity", f"{path}.intensity out of [{lo:g},{hi:g}]")
        lo, hi = COLOR_TEMPERATURE_RANGE
        if not (lo <= light.color_temperature <= hi):
            report.error("LIGHT", f"{path}.color_temperature", f"{path}.color_temperature out of [{lo:g},{hi:g}]")
        lo, hi = EXPOSURE_RANGE
        if not (lo <= light.exposure <= hi):
            report.error("LIGHT", f"{path}.exposure", f"{path}.exposure out of [{lo:g},{hi:g}]")
        if light.kind not in ("ceiling", "lamp", "window"):
            report.error("LIGHT", f"{path}.kind", f"unknown light kind {light.kind!r}")
        room = rooms.get(light.room_id)
        if room is None:
            report.error("DANGLING_REF", f"{path}.room_id", f"unknown room {light.room_id}")
            continue
        if not room.shape.buffer(TOLERANCE).contains(shapely.Point(light.position[:2])):
            report.error("LIGHT", f"{path}.position", f"{light.light_id} lies outside {light.room_id}")
        if light.kind == "ceiling":
            lit.add(light.room_id)
    for rid in sorted(set(rooms) - lit):
        report.error("LIGHT", "lights", f"room {rid} has no ceiling light")


def _check_physics(doc, assets, report) -> None:
    placed = {p.instance_id: p for p in doc.scene.placed}
    seen = set()
    for i, a in enumerate(doc.physics.assets):
        path = f"physics.assets[{i}]"
        seen.add(a.instance_id)
        p = placed.get(a.instance_id)
        if p is None:
            report.error("DANGLING_REF", path, f"annotation for unknown instance {a.instance_id}")
            continue
        if p.asset_id not in assets:
            continue
        rec = assets[p.asset_id]
        lo, hi = FRICTION_RANGES.get(rec.material_class, (0.0, math.inf))
        if not (lo <= a.static_friction <= hi):
            report.error("FRICTION", f"{path}.static_friction",
                         f"{a.instance_id} static friction {a.static_friction} outside [{lo},{hi}] for {rec.material_class}")
        if not (0 <= a.dynamic_friction <= a.static_friction):
            report.error("FRICTION", f"{path}.dynamic_friction", f"{a.instance_id} dynamic friction exceeds static")
        if not (0 <= a.restitution <= 1):
            report.error("FRICTION", f"{path}.restitution", f"{a.instance_id} restitution outside [0,1]")
        if not a.mass > 0:
            report.error("FRICTION", f"{path}.mass", f"{a.instance_id} mass must be positive")
        if rec.articulated and a.collider.kind == "convex_hull":
            report.error("FRICTION", f"{path}.collider", f"articulated {a.instance_id} uses a single convex hull")
        if a.dynamic != (rec.category == "interactable"):
            report.error("FRICTION", f"{path}.dynamic", f"{a.instance_id} dynamic flag disagrees with its category")
    for iid in sorted(set(placed) - seen):
        report.error("FRICTION", "physics.assets", f"{iid} has no physics annotation")
    for i, a in enumerate(doc.physics.architecture):
        if a.dynamic or a.collider.kind != "box":
            report.error("FRICTION", f"physics.architecture[{i}]", f"architecture {a.instance_id} must be a static box")


def _check_joints(doc, assets, report) -> None:
    placed = {p.instance_id: p for p in doc.scene.placed}
    by_owner: dict[str, dict[str, JointSpec]] = {}
    for i, j in enumerate(doc.joints):
        path = f"joints[{i}]"
        p = placed.get(j.instance_id)
        if p is None:
            report.error("DANGLING_REF", path, f"joint on unknown instance {j.instance_id}")
            continue
        if p.asset_id not in assets:
            continue
        by_owner.setdefault(j.instance_id, {})[j.part_id] = j
        rec = assets[p.asset_id]
        part = next((x for x in (rec.articulation.parts if rec.articulation else ()) if x.part_id == j.part_id), None)
        if part is None:
            report.error("JOINT", path, f"{j.instance_id} has no part {j.part_id}")
            continue
        jtype, upper = joint_limits(rec, part)
        if j.joint_type != jtype:
            report.error("JOINT", f"{path}.joint_type", f"{j.instance_id}/{j.part_id} is {part.joint} but typed {j.joint_type}")
        lo, hi = j.limits
        if not lo < hi:
            report.error("JOINT", f"{path}.limits", f"{j.instance_id}/{j.part_id} limits not increasing")
        if j.joint_type == "revolute" and hi > math.pi + 1e-12:
            report.error("JOINT", f"{path}.limits", f"{j.instance_id}/{j.part_id} revolute limit beyond pi")
        if j.joint_type == "prismatic" and hi > rec.bounds[1] + 1e-12:
            report.error("JOINT", f"{path}.limits", f"{j.instance_id}/{j.part_id} prismatic travel beyond depth")
        if abs(math.sqrt(sum(c * c for c in j.axis)) - 1.0) > 1e-9 or tuple(j.axis) != JOINT_AXES[part.joint]:
            report.error("JOINT", f"{path}.axis", f"{j.instance_id}/{j.part_id} axis inconsistent with its hint")
        if j.drive.stiffness < 0 or j.drive.damping < 0:
            report.error("JOINT", f"{path}.drive", "drive gains must be non-negative")
        rng = FRICTION_RANGES.get(rec.material_class)
        if rng and not (rng[0] <= j.joint_friction <= rng[1]):
            report.error("JOINT", f"{path}.joint_friction", f"{j.instance_id}/{j.part_id} friction out of range")
    for iid, p in sorted(placed.items()):
        rec = assets.get(p.asset_id)
        if rec is None:
            continue
        want = {x.part_id for x in rec.articulation.parts} if rec.articulation else set()
        have = set(by_owner.get(iid, {}))
        if want != have:
            report.error("JOINT", "joints", f"{iid} has joints {sorted(have)}, expected {sorted(want)}")


# ---------------------------------------------------------------- preview


def render_floorplan_svg(doc: SceneDocument, floor_index: int) -> bytes:
    """Top-down SVG of one floor at a fixed 20 px per meter."""
    floors = {fl.floor_index: fl for fl in doc.floorplan.floors}
    if floor_index not in floors:
        raise FloorOutOfRange(f"floor {floor_index} not in 0..{len(floors) - 1}")
    fl = floors[floor_index]
    fw, fd = doc.floorplan.spec.footprint
    width = fw * PX_PER_METER + 2 * SVG_MARGIN
    height = fd * PX_PER_METER + 2 * SVG_MARGIN

    def pt(x: float, y: float) -> str:
        return f"{SVG_MARGIN + x * PX_PER_METER:.2f},{SVG_MARGIN + (fd - y) * PX_PER_METER:.2f}"

    def points(vertices) -> str:
        return " ".join(pt(x, y) for x, y in vertices)

    rooms = {r.room_id for r in fl.rooms}
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width:.0f}" height="{height:.0f}" '
        f'viewBox="0 0 {width:.0f} {height:.0f}">',
        f"<title>{escape(doc.generation.scene_key)} floor {floor_index}</title>",
        '<g id="rooms">',
    ]
    for r in fl.rooms:
        c = Polygon(r.polygon).representative_point()
        out.append(f'<polygon class="room" data-room-id={quoteattr(r.room_id)} data-room-type={quoteattr(r.room_type)} '
                   f'points="{points(r.polygon)}" fill="#f4f1ea" stroke="none"/>')
        lx, ly = pt(c.x, c.y).split(",")
        out.append(f'<text class="room-label" x="{lx}" y="{ly}" font-size="10" text-anchor="middle">'
                   f"{escape(r.room_type)} ({escape(r.room_id)})</text>")
    out.append("</g>")
    out.append('<g id="walls">')
    for w in fl.walls:
        x0, y0, x1, y1 = w.body
        out.append(f'<polygon class="wall" data-wall-id={quoteattr(w.wall_id)} '
                   f'points="{points([(x0, y0), (x1, y0), (x1, y1), (x0, y1)])}" fill="#444"/>')
    out.append("</g>")
    out.append('<g id="openings">')
    for o in fl.openings:
        cx, cy = o.center
        wall = next((w for w in fl.walls if w.wall_id == o.wall_ref), None)
        horizontal = wall.horizontal if wall is not None else True
        h = o.width / 2
        a, b = ((cx - h, cy), (cx + h, cy)) if horizontal else ((cx, cy - h), (cx, cy + h))
        (ax, ay), (bx, by) = (pt(*a).split(","), pt(*b).split(","))
        out.append(f'<line class="opening" data-opening-id={quoteattr(o.opening_id)} x1="{ax}" y1="{ay}" x2="{bx}" y2="{by}" '
                   f'stroke="#c33" stroke-width="4"/>')
    out.append("</g>")
    out.append('<g id="staircases">')
    for s in doc.floorplan.staircases:
        if floor_index in (s.lower_floor, s.upper_floor):
            out.append(f'<polygon class="staircase" data-staircase-id={quoteattr(s.staircase_id)} '
                       f'points="{points(s.footprint)}" fill="none" stroke="#36c" stroke-dasharray="4 2"/>')
    out.append("</g>")
    out.append('<g id="assets">')
    for p in sorted(doc.scene.placed, key=lambda a: a.instance_id):
        if p.room_id not in rooms:
            continue
        corners = list(p.footprint().exterior.coords)[:-1]
        out.append(f'<polygon class="asset" data-instance-id={quoteattr(p.instance_id)} points="{points(corners)}" '
                   f'fill="#9bc" fill-opacity="0.6" stroke="#246"><title>{escape(p.instance_id)}</title></polygon>')
    out.append("</g>")
    out.append("</svg>")
    return ("\n".join(out) + "\n").encode("utf-8")


# ---------------------------------------------------------------- stats


@dataclass(frozen=True)
class SceneStats:
    room_count: int
    asset_count: int
    joint_count: int
    light_count: int
    room_areas: dict[str, float]
    friction_means: dict[str, float]
    friction_counts: dict[str, int] = field(default_factory=dict)


def scene_stats(doc: SceneDocument) -> SceneStats:
    assets = {a.asset_id: a for a in doc.asset_records}
    placed = {p.instance_id: p for p in doc.scene.placed}
    sums: dict[str, float] = {}
    counts: dict[str, int] = {}
    for a in doc.physics.assets:
        p = placed.get(a.instance_id)
        if p is None or p.asset_id not in assets:
            continue
        cls = assets[p.asset_id].material_class
        sums[cls] = sums.get(cls, 0.0) + a.static_friction
        counts[cls] = counts.get(cls, 0) + 1
    rooms = list(doc.floorplan.rooms())
    return SceneStats(
        room_count=len(rooms),
        asset_count=len(doc.scene.placed),
        joint_count=len(doc.joints),
        light_count=len(doc.lights),
        room_areas={r.room_id: Polygon(r.polygon).area for r in rooms},
        friction_means={c: sums[c] / counts[c] for c in sorted(sums)},
        friction_counts=dict(sorted(counts.items())),
    )
