"""Annotated asset and material libraries: loading, invariant checks, indexing, lint."""

from __future__ import annotations

import json
import math
import re
from collections import defaultdict
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any

from scenesmith.errors import InvariantViolation, ParseError

SCHEMA_VERSION = "agentworld-catalog/1"

CATEGORIES = ("basic", "interactable")
SUBTYPES = ("furniture", "appliance", "tool", "food", "container", "decor", "clothing", "other")
ROOM_TYPES = ("living_room", "kitchen", "bedroom")
AFFINITIES = ROOM_TYPES + ("any",)
MATERIAL_CLASSES = ("wood", "metal", "ceramic", "fabric", "plastic", "glass", "stone", "organic")
PLACEMENT_TAGS = ("on_floor", "on_surface", "on_bed", "hangable", "wall_mounted", "in_container")
JOINT_HINTS = ("door_like", "drawer_like", "button_like")
SURFACE_KINDS = ("tabletop", "shelf", "bed_top", "counter", "rack", "interior")
MATERIAL_FAMILIES = (
    "marble", "brick", "wood_grain", "ceramic_finish", "fabric_texture", "metallic_coating", "paint", "tile",
)
ARCHITECTURE_CLASSES = ("wall", "floor", "ceiling")
RELATIONS = ("requires", "excludes", "prefers_near")

# Semantic classes each room must receive during basic placement.
MANDATORY_SLOTS: dict[str, tuple[str, ...]] = {
    "living_room": ("sofa", "tv"),
    "bedroom": ("bed", "chair"),
    "kitchen": ("table",),
}


@dataclass(frozen=True)
class ArticulationPart:
    part_id: str
    joint: str
    travel_hint: float


@dataclass(frozen=True)
class ArticulationTemplate:
    parts: tuple[ArticulationPart, ...]


@dataclass(frozen=True)
class AssetRecord:
    asset_id: str
    display_name: str
    category: str
    subtype: str
    room_affinity: frozenset[str]
    bounds: tuple[float, float, float]
    material_class: str
    placement_tags: frozenset[str]
    mesh_ref: str
    semantic_class: str
    mass_hint: float | None = None
    articulation: ArticulationTemplate | None = None
    surface_kind: str | None = None
    high_fidelity: bool = False

    @property
    def articulated(self) -> bool:
        return self.articulation is not None

    def joint_kinds(self) -> frozenset[str]:
        if self.articulation is None:
            return frozenset()
        return frozenset(p.joint for p in self.articulation.parts)


@dataclass(frozen=True)
class PBRParams:
    base_color: tuple[float, float, float]
    roughness: float
    metallic: float


@dataclass(frozen=True)
class MaterialRecord:
    material_id: str
    family: str
    applicable_to: frozenset[str]
    pbr_params: PBRParams


@dataclass(frozen=True)
class CoOccurrenceRule:
    subject: str
    relation: str
    object: str
    weight: float | None = None


def default_semantic_class(asset_id: str) -> str:
    return re.sub(r"_\d+$", "", asset_id)


# ---------------------------------------------------------------- invariants


def check_asset(rec: AssetRecord) -> None:
    """Raise InvariantViolation naming the first offending field."""
    rid = rec.asset_id or "<unnamed>"
    if not isinstance(rec.asset_id, str) or not rec.asset_id:
        raise InvariantViolation("asset_id", "must be a non-empty string", rid)
    if rec.category not in CATEGORIES:
        raise InvariantViolation("category", f"unknown value {rec.category!r}", rid)
    if rec.subtype not in SUBTYPES:
        raise InvariantViolation("subtype", f"unknown value {rec.subtype!r}", rid)
    if not rec.room_affinity or not rec.room_affinity <= set(AFFINITIES):
        raise InvariantViolation("room_affinity", f"values must be non-empty subset of {AFFINITIES}", rid)
    if len(rec.bounds) != 3 or not all(math.isfinite(b) and b > 0 for b in rec.bounds):
        raise InvariantViolation("bounds", f"all extents must be > 0, got {rec.bounds}", rid)
    if rec.material_class not in MATERIAL_CLASSES:
        raise InvariantViolation("material_class", f"unknown value {rec.material_class!r}", rid)
    if not rec.placement_tags <= set(PLACEMENT_TAGS):
        raise InvariantViolation("placement_tags", f"unknown tags {sorted(rec.placement_tags - set(PLACEMENT_TAGS))}", rid)
    if rec.category == "basic" and not rec.placement_tags & {"on_floor", "wall_mounted"}:
        raise InvariantViolation("placement_tags", "basic assets need on_floor or wall_mounted", rid)
    if rec.mass_hint is not None and not (math.isfinite(rec.mass_hint) and rec.mass_hint > 0):
        raise InvariantViolation("mass_hint", "must be > 0 when present", rid)
    if rec.surface_kind is not None and rec.surface_kind not in SURFACE_KINDS:
        raise InvariantViolation("surface_kind", f"unknown value {rec.surface_kind!r}", rid)
    if not rec.semantic_class:
        raise InvariantViolation("semantic_class", "must be non-empty", rid)
    if rec.articulation is not None:
        if rec.category != "interactable":
            raise InvariantViolation("articulation", "only interactable assets may be articulated", rid)
        parts = rec.articulation.parts
        if not parts:
            raise InvariantViolation("articulation", "parts must be non-empty", rid)
        seen: set[str] = set()
        for p in parts:
            if p.part_id in seen:
                raise InvariantViolation("articulation", f"duplicate part_id {p.part_id!r}", rid)
            seen.add(p.part_id)
            if p.joint not in JOINT_HINTS:
                raise InvariantViolation("articulation", f"unknown joint hint {p.joint!r}", rid)
            if not (math.isfinite(p.travel_hint) and p.travel_hint > 0):
                raise InvariantViolation("articulation", f"travel_hint of {p.part_id} must be > 0", rid)
            if p.joint == "door_like" and p.travel_hint > 180.0:
                raise InvariantViolation("articulation", f"door travel of {p.part_id} exceeds 180 degrees", rid)
            if p.joint == "drawer_like" and p.travel_hint > rec.bounds[1]:
                raise InvariantViolation("articulation", f"drawer travel of {p.part_id} exceeds depth", rid)


def check_material(mat: MaterialRecord) -> None:
    mid = mat.material_id or "<unnamed>"
    if not mat.material_id:
        raise InvariantViolation("material_id", "must be non-empty", mid)
    if mat.family not in MATERIAL_FAMILIES:
        raise InvariantViolation("family", f"unknown value {mat.family!r}", mid)
    if not mat.applicable_to:
        raise InvariantViolation("applicable_to", "must be non-empty", mid)
    valid = set(ARCHITECTURE_CLASSES) | {f"asset:{c}" for c in MATERIAL_CLASSES}
    if not mat.applicable_to <= valid:
        raise InvariantViolation("applicable_to", f"unknown targets {sorted(mat.applicable_to - valid)}", mid)
    pbr = mat.pbr_params
    scalars = (*pbr.base_color, pbr.roughness, pbr.metallic)
    if len(pbr.base_color) != 3 or not all(0.0 <= v <= 1.0 for v in scalars):
        raise InvariantViolation("pbr_params", "base_color, roughness and metallic must lie in [0, 1]", mid)


def check_rule(rule: CoOccurrenceRule, index: int) -> None:
    where = f"co_occurrence[{index}]"
    if rule.relation not in RELATIONS:
        raise InvariantViolation("relation", f"unknown value {rule.relation!r}", where)
    if rule.relation == "excludes" and rule.subject == rule.object:
        raise InvariantViolation("object", "excludes rule cannot name the subject itself", where)
    if (rule.weight is not None) != (rule.relation == "prefers_near"):
        raise InvariantViolation("weight", "weight present iff relation is prefers_near", where)
    if rule.weight is not None and not (math.isfinite(rule.weight) and rule.weight >= 0):
        raise InvariantViolation("weight", "must be >= 0", where)


# ---------------------------------------------------------------- catalog


@dataclass(frozen=True)
class Catalog:
    assets: tuple[AssetRecord, ...]
    materials: tuple[MaterialRecord, ...] = ()
    co_occurrence: tuple[CoOccurrenceRule, ...] = ()
    schema_version: str = SCHEMA_VERSION
    _by_id: dict[str, AssetRecord] = field(default_factory=dict, compare=False, repr=False)
    _index: dict[tuple[str, str], tuple[str, ...]] = field(default_factory=dict, compare=False, repr=False)
    _materials_by_id: dict[str, MaterialRecord] = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        assets = tuple(sorted(self.assets, key=lambda a: a.asset_id))
        object.__setattr__(self, "assets", assets)
        object.__setattr__(self, "materials", tuple(sorted(self.materials, key=lambda m: m.material_id)))
        by_id: dict[str, AssetRecord] = {}
        for rec in assets:
            check_asset(rec)
            if rec.asset_id in by_id:
                raise InvariantViolation("asset_id", f"duplicate asset_id {rec.asset_id!r}", rec.asset_id)
            by_id[rec.asset_id] = rec
        mats: dict[str, MaterialRecord] = {}
        for mat in self.materials:
            check_material(mat)
            if mat.material_id in mats:
                raise InvariantViolation("material_id", f"duplicate material_id {mat.material_id!r}", mat.material_id)
            mats[mat.material_id] = mat
        for i, rule in enumerate(self.co_occurrence):
            check_rule(rule, i)
        index: dict[tuple[str, str], list[str]] = defaultdict(list)
        for rec in assets:
            index[("category", rec.category)].append(rec.asset_id)
            index[("subtype", rec.subtype)].append(rec.asset_id)
            for room in rec.room_affinity:
                index[("room", room)].append(rec.asset_id)
            for tag in rec.placement_tags:
                index[("tag", tag)].append(rec.asset_id)
        object.__setattr__(self, "_by_id", by_id)
        object.__setattr__(self, "_materials_by_id", mats)
        object.__setattr__(self, "_index", {k: tuple(v) for k, v in index.items()})

    def __len__(self) -> int:
        return len(self.assets)

    def __contains__(self, asset_id: str) -> bool:
        return asset_id in self._by_id

    def asset(self, asset_id: str) -> AssetRecord:
        return self._by_id[asset_id]

    def material(self, material_id: str) -> MaterialRecord:
        return self._materials_by_id[material_id]

    def has_material(self, material_id: str) -> bool:
        return material_id in self._materials_by_id

    def index(self, key: str, value: str) -> tuple[str, ...]:
        """Asset ids under one index (category, subtype, room or tag), sorted."""
        return self._index.get((key, value), ())

    def with_assets(self, assets: Iterable[AssetRecord]) -> Catalog:
        return replace(self, assets=tuple(assets))

    def without(self, predicate) -> Catalog:
        return self.with_assets(a for a in self.assets if not predicate(a))

    def to_document(self) -> dict[str, Any]:
        return {
            "schema_version": self.schema_version,
            "assets": [asset_to_dict(a) for a in self.assets],
            "materials": [material_to_dict(m) for m in self.materials],
            "co_occurrence": [rule_to_dict(r) for r in self.co_occurrence],
        }


# ---------------------------------------------------------------- (de)serialization


def asset_to_dict(a: AssetRecord) -> dict[str, Any]:
    out: dict[str, Any] = {
        "asset_id": a.asset_id,
        "display_name": a.display_name,
        "category": a.category,
        "subtype": a.subtype,
        "semantic_class": a.semantic_class,
        "room_affinity": sorted(a.room_affinity),
        "bounds": {"x": a.bounds[0], "y": a.bounds[1], "z": a.bounds[2]},
        "material_class": a.material_class,
        "placement_tags": sorted(a.placement_tags),
        "mesh_ref": a.mesh_ref,
        "mass_hint": a.mass_hint,
        "articulation": None,
        "surface_kind": a.surface_kind,
        "high_fidelity": a.high_fidelity,
    }
    if a.articulation is not None:
        out["articulation"] = {
            "parts": [
                {"part_id": p.part_id, "joint": p.joint, "travel_hint": p.travel_hint} for p in a.articulation.parts
            ]
        }
    return out


def material_to_dict(m: MaterialRecord) -> dict[str, Any]:
    return {
        "material_id": m.material_id,
        "family": m.family,
        "applicable_to": sorted(m.applicable_to),
        "pbr_params": {
            "base_color": list(m.pbr_params.base_color),
            "roughness": m.pbr_params.roughness,
            "metallic": m.pbr_params.metallic,
        },
    }


def rule_to_dict(r: CoOccurrenceRule) -> dict[str, Any]:
    out: dict[str, Any] = {"subject": r.subject, "relation": r.relation, "object": r.object}
    if r.weight is not None:
        out["weight"] = r.weight
    return out


def _req(obj: Mapping, key: str, where: str, kind=None):
    if not isinstance(obj, Mapping):
        raise ParseError("expected an object", where)
    if key not in obj:
        raise ParseError(f"missing field {key!r}", where)
    value = obj[key]
    if kind is not None and not isinstance(value, kind):
        raise ParseError(f"field {key!r} has wrong type {type(value).__name__}", where)
    return value


def _num(value, key: str, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ParseError(f"field {key!r} must be a number", where)
    return float(value)


def _str_set(value, key: str, where: str) -> frozenset[str]:
    if not isinstance(value, list) or not all(isinstance(v, str) for v in value):
        raise ParseError(f"field {key!r} must be a list of strings", where)
    return frozenset(value)


def asset_from_dict(d: Mapping, where: str = "asset") -> AssetRecord:
    asset_id = _req(d, "asset_id", where, str)
    where = f"{where} ({asset_id})"
    b = _req(d, "bounds", where, dict)
    bounds = tuple(_num(_req(b, k, where + ".bounds"), f"bounds.{k}", where) for k in ("x", "y", "z"))
    art = d.get("articulation")
    template = None
    if art is not None:
        parts_raw = _req(art, "parts", where + ".articulation", list)
        parts = []
        for j, p in enumerate(parts_raw):
            pw = f"{where}.articulation.parts[{j}]"
            parts.append(
                ArticulationPart(
                    part_id=_req(p, "part_id", pw, str),
                    joint=_req(p, "joint", pw, str),
                    travel_hint=_num(_req(p, "travel_hint", pw), "travel_hint", pw),
                )
            )
        template = ArticulationTemplate(tuple(parts))
    mass = d.get("mass_hint")
    surface_kind = d.get("surface_kind")
    if surface_kind is not None and not isinstance(surface_kind, str):
        raise ParseError("field 'surface_kind' must be a string or null", where)
    return AssetRecord(
        asset_id=asset_id,
        display_name=_req(d, "display_name", where, str),
        category=_req(d, "category", where, str),
        subtype=_req(d, "subtype", where, str),
        room_affinity=_str_set(_req(d, "room_affinity", where), "room_affinity", where),
        bounds=bounds,  # type: ignore[arg-type]
        material_class=_req(d, "material_class", where, str),
        placement_tags=_str_set(_req(d, "placement_tags", where), "placement_tags", where),
        mesh_ref=_req(d, "mesh_ref", where, str),
        semantic_class=d.get("semantic_class") or default_semantic_class(asset_id),
        mass_hint=None if mass is None else _num(mass, "mass_hint", where),
        articulation=template,
        surface_kind=surface_kind,
        high_fidelity=bool(d.get("high_fidelity", False)),
    )


def material_from_dict(d: Mapping, where: str = "material") -> MaterialRecord:
    mid = _req(d, "material_id", where, str)
    where = f"{where} ({mid})"
    pbr = _req(d, "pbr_params", where, dict)
    color = _req(pbr, "base_color", where + ".pbr_params", list)
    return MaterialRecord(
        material_id=mid,
        family=_req(d, "family", where, str),
        applicable_to=_str_set(_req(d, "applicable_to", where), "applicable_to", where),
        pbr_params=PBRParams(
            base_color=tuple(_num(c, "base_color", where) for c in color),  # type: ignore[arg-type]
            roughness=_num(_req(pbr, "roughness", where), "roughness", where),
            metallic=_num(_req(pbr, "metallic", where), "metallic", where),
        ),
    )


def rule_from_dict(d: Mapping, where: str = "rule") -> CoOccurrenceRule:
    weight = d.get("weight") if isinstance(d, Mapping) else None
    return CoOccurrenceRule(
        subject=_req(d, "subject", where, str),
        relation=_req(d, "relation", where, str),
        object=_req(d, "object", where, str),
        weight=None if weight is None else _num(weight, "weight", where),
    )


def catalog_from_document(doc: Any) -> Catalog:
    if not isinstance(doc, dict):
        raise ParseError("top level must be an object", "catalog")
    version = doc.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ParseError(f"unsupported schema_version {version!r}, expected {SCHEMA_VERSION!r}", "catalog")
    assets_raw = _req(doc, "assets", "catalog", list)
    assets = [asset_from_dict(a, f"assets[{i}]") for i, a in enumerate(assets_raw)]
    materials = [material_from_dict(m, f"materials[{i}]") for i, m in enumerate(doc.get("materials", []))]
    rules = [rule_from_dict(r, f"co_occurrence[{i}]") for i, r in enumerate(doc.get("co_occurrence", []))]
    return Catalog(assets=tuple(assets), materials=tuple(materials), co_occurrence=tuple(rules))


def load_catalog_bytes(data: bytes, source: str = "<bytes>") -> Catalog:
    try:
        doc = json.loads(data.decode("utf-8"))
    except UnicodeDecodeError as exc:
        raise ParseError(f"not UTF-8: {exc}", source) from exc
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, f"{source}:{exc.lineno}:{exc.colno}") from exc
    return catalog_from_document(doc)


def load_catalog(path: str | Path) -> Catalog:
    """Load and index a catalog document.

    Raises ParseError for malformed files (with line/record context) and
    InvariantViolation for records breaking their type invariants.
    """
    path = Path(path)
    return load_catalog_bytes(path.read_bytes(), str(path))


def sample_catalog_path() -> Path:
    return Path(__file__).parent / "data" / "sample_catalog.json"


def load_sample_catalog() -> Catalog:
    return load_catalog(sample_catalog_path())


# ---------------------------------------------------------------- query


QUERY_KEYS = ("category", "subtype", "room", "tag", "semantic_class", "articulated", "joint", "asset_id")


def _as_set(value) -> frozenset[str]:
    if isinstance(value, str):
        return frozenset((value,))
    return frozenset(value)


def asset_matches(rec: AssetRecord, flt: Mapping[str, Any]) -> bool:
    """Predicate form of a query filter. String values match exactly, lists match any member."""
    for key, value in flt.items():
        if value is None:
            continue
        if key == "category" and rec.category not in _as_set(value):
            return False
        if key == "subtype" and rec.subtype not in _as_set(value):
            return False
        if key == "room" and not (rec.room_affinity & (_as_set(value) | {"any"})):
            return False
        if key == "tag" and not (rec.placement_tags & _as_set(value)):
            return False
        if key == "semantic_class" and rec.semantic_class not in _as_set(value):
            return False
        if key == "asset_id" and rec.asset_id not in _as_set(value):
            return False
        if key == "articulated" and rec.articulated != bool(value):
            return False
        if key == "joint" and not (rec.joint_kinds() & _as_set(value)):
            return False
        if key not in QUERY_KEYS:
            raise KeyError(f"unknown filter key {key!r}")
    return True


def query_assets(catalog: Catalog, flt: Mapping[str, Any] | None = None, **kwargs) -> list[AssetRecord]:
    """Records matching every provided filter field, ordered by asset_id."""
    flt = {**(flt or {}), **kwargs}
    flt = {k: v for k, v in flt.items() if v is not None}
    candidates: set[str] | None = None
    for key in ("category", "subtype", "room", "tag"):
        if key not in flt:
            continue
        values = _as_set(flt[key]) | ({"any"} if key == "room" else set())
        hit: set[str] = set()
        for v in values:
            hit.update(catalog.index(key, v))
        candidates = hit if candidates is None else candidates & hit
    pool = catalog.assets if candidates is None else [catalog.asset(i) for i in sorted(candidates)]
    return [rec for rec in pool if asset_matches(rec, flt)]


# ---------------------------------------------------------------- lint


@dataclass(frozen=True)
class LintWarning:
    code: str
    subject: str
    message: str


@dataclass
class LintReport:
    warnings: list[LintWarning] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.warnings

    def messages(self) -> list[str]:
        return [w.message for w in self.warnings]


def lint_catalog(catalog: Catalog) -> LintReport:
    """Coverage and reference checks that help the one-time tagging step. Never raises."""
    report = LintReport()
    rooms_seen = sorted({r for a in catalog.assets for r in a.room_affinity if r != "any"})
    for room in rooms_seen:
        for slot in MANDATORY_SLOTS.get(room, ()):
            found = any(
                a.category == "basic" and a.semantic_class == slot and (room in a.room_affinity or "any" in a.room_affinity)
                for a in catalog.assets
            )
            if not found:
                report.warnings.append(
                    LintWarning("coverage", room, f"{room} lacks {slot}-class basic asset")
                )
    for a in catalog.assets:
        if a.category == "interactable" and not a.placement_tags:
            report.warnings.append(
                LintWarning("placement_tags", a.asset_id, f"interactable {a.asset_id} has no placement_tags")
            )
    known = {a.asset_id for a in catalog.assets} | {a.subtype for a in catalog.assets}
    known |= {a.semantic_class for a in catalog.assets}
    for i, rule in enumerate(catalog.co_occurrence):
        for end in (rule.subject, rule.object):
            if end not in known:
                report.warnings.append(
                    LintWarning("dangling_rule", f"co_occurrence[{i}]", f"dangling rule co_occurrence[{i}]: unknown reference {end!r}")
                )
    targets = set(ARCHITECTURE_CLASSES) | {f"asset:{a.material_class}" for a in catalog.assets}
    covered = {t for m in catalog.materials for t in m.applicable_to}
    for t in sorted(targets - covered):
        report.warnings.append(LintWarning("material_coverage", t, f"no material applicable to {t}"))
    return report
