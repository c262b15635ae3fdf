"""Task templates, scene-bound task instances and batch episode manifests."""

from __future__ import annotations

import json
import math
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any

from scenesmith.catalog import QUERY_KEYS, AssetRecord, Catalog, asset_matches, query_assets
from scenesmith.errors import (
    InsufficientAssets,
    ParseError,
    PlacementExhausted,
    RoomMismatch,
    RuleConflict,
    SemanticMismatch,
    UnsatisfiableRole,
)
from scenesmith.furnish import PlacedAsset, PlacementState, SceneGraph, place_into
from scenesmith.physicalize import joint_limits
from scenesmith.rng import PRNGStream
from scenesmith.serde import to_jsonable

MANIFEST_SCHEMA = "agentworld-manifest/1"
TEMPLATE_SCHEMA = "agentworld-templates/1"
TIERS = ("basic", "multistage")
TASK_CATEGORIES = ("pick_place", "open_close", "push_pull", "living_room", "bedroom", "kitchen")
PREDICATES = ("in", "on", "joint_at", "displaced", "pressed")
EMBODIMENTS = ("unitree_g1", "unitree_h1", "franka_panda_wheeled", "dobot_x_trainer")
ROOM_DOOR_OPEN = math.pi / 2
JOINT_TOLERANCE = {"revolute": 0.05, "prismatic": 0.005}
_SEED_MASK = (1 << 63) - 1


@dataclass(frozen=True)
class RoleSpec:
    role: str
    filter: dict[str, Any]
    kind: str = "asset"  # asset | opening
    support: dict[str, Any] | None = None  # {"on"|"in": role name or list of surface kinds}
    initial_joints: dict[str, str] | None = None  # joint hint -> open | closed


@dataclass(frozen=True)
class GoalTerm:
    predicate: str
    args: tuple[str, ...]
    value: Any = None


@dataclass(frozen=True)
class TaskTemplate:
    template_id: str
    tier: str
    category: str
    description: str
    room_requirement: str
    required_roles: tuple[RoleSpec, ...]
    goal: tuple[GoalTerm, ...]
    primary_role: str
    n_assets: int
    n_sequences: int
    instruction: str

    def role(self, name: str) -> RoleSpec:
        for r in self.required_roles:
            if r.role == name:
                return r
        raise KeyError(name)


@dataclass(frozen=True)
class BoundPredicate:
    predicate: str
    args: tuple[str, ...]
    value: float | None = None
    tolerance: float | None = None


@dataclass(frozen=True)
class TaskInstance:
    task_id: str
    scene_ref: str
    template_id: str
    seed: int
    room_id: str
    bindings: dict[str, str]
    initial_joint_state: dict[str, float]
    goal: tuple[BoundPredicate, ...]
    language_instruction: str
    added_assets: tuple[PlacedAsset, ...] = ()


@dataclass(frozen=True)
class TemplateBatch:
    template_id: str
    n_assets: int
    n_sequences: int
    primary_assets: tuple[str, ...]
    instances: tuple[TaskInstance, ...]


@dataclass(frozen=True)
class EpisodeManifest:
    seed: int
    embodiment: str
    batches: tuple[TemplateBatch, ...]
    scene_refs: tuple[str, ...] = field(default=())

    @property
    def total(self) -> int:
        return sum(len(b.instances) for b in self.batches)


# ---------------------------------------------------------------- templates


def _check_template(t: TaskTemplate) -> None:
    where = f"template {t.template_id}"
    if t.tier not in TIERS:
        raise ParseError(f"unknown tier {t.tier!r}", where)
    if t.category not in TASK_CATEGORIES:
        raise ParseError(f"unknown category {t.category!r}", where)
    if not t.required_roles:
        raise ParseError("required_roles must be non-empty", where)
    names = [r.role for r in t.required_roles]
    if len(set(names)) != len(names):
        raise ParseError("duplicate role names", where)
    if t.primary_role not in names:
        raise ParseError(f"primary role {t.primary_role!r} is not declared", where)
    if t.tier == "basic" and len(t.goal) > 2:
        raise ParseError("basic goals have at most 2 predicates", where)
    if t.tier == "multistage" and len(t.goal) < 2:
        raise ParseError("multistage goals need at least 2 predicates", where)
    if t.n_assets < 1 or t.n_sequences < 1:
        raise ParseError("counts must be positive", where)
    seen: set[str] = set()
    for r in t.required_roles:
        if r.kind not in ("asset", "opening"):
            raise ParseError(f"role {r.role}: unknown kind {r.kind!r}", where)
        unknown = set(r.filter) - set(QUERY_KEYS)
        if unknown:
            raise ParseError(f"role {r.role}: unknown filter keys {sorted(unknown)}", where)
        if r.support:
            ref = next(iter(r.support.values()))
            if isinstance(ref, str) and ref not in seen:
                raise ParseError(f"role {r.role} rests on {ref!r}, which must be declared earlier", where)
        seen.add(r.role)
    for g in t.goal:
        if g.predicate not in PREDICATES:
            raise ParseError(f"unknown predicate {g.predicate!r}", where)
        if g.args[0] not in names:
            raise ParseError(f"goal references unbound role {g.args[0]!r}", where)
        if g.predicate in ("in", "on") and g.args[1] not in names:
            raise ParseError(f"goal references unbound role {g.args[1]!r}", where)


def template_from_dict(d: Mapping[str, Any]) -> TaskTemplate:
    try:
        roles = tuple(
            RoleSpec(r["role"], dict(r.get("filter", {})), r.get("kind", "asset"), r.get("support"), r.get("initial_joints"))
            for r in d["required_roles"]
        )
        goal = tuple(GoalTerm(g["predicate"], tuple(g["args"]), g.get("value")) for g in d["goal"])
        t = TaskTemplate(
            d["template_id"], d["tier"], d["category"], d.get("description", ""), d.get("room_requirement", "any"),
            roles, goal, d["primary_role"], int(d["counts"]["n_assets"]), int(d["counts"]["n_sequences"]),
            d.get("instruction", d.get("description", "")),
        )
    except (KeyError, TypeError) as exc:
        raise ParseError(f"malformed template: {exc}", str(d.get("template_id", "?")) if isinstance(d, Mapping) else "?") from exc
    _check_template(t)
    return t


def load_templates(path: str | Path | None = None) -> list[TaskTemplate]:
    if path is None:
        text = resources.files("scenesmith").joinpath("data/task_templates.json").read_text(encoding="utf-8")
    else:
        text = Path(path).read_text(encoding="utf-8")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, f"line {exc.lineno}:{exc.colno}") from exc
    if doc.get("schema_version") != TEMPLATE_SCHEMA:
        raise ParseError(f"expected schema_version {TEMPLATE_SCHEMA!r}", "templates")
    return [template_from_dict(d) for d in doc["templates"]]


# ---------------------------------------------------------------- instantiation


def _rooms_for(scene: SceneGraph, requirement: str) -> list[str]:
    return sorted(r.room_id for r in scene.floorplan.rooms() if requirement == "any" or r.room_type == requirement)


def _supported_by(ws: PlacementState, inst: PlacedAsset, support: Mapping[str, Any] | None, bound: Mapping[str, str]) -> bool:
    if not support:
        return True
    rel, ref = next(iter(support.items()))
    if isinstance(ref, str):
        return inst.parent == bound.get(ref)
    owner = ws.by_id.get(inst.parent)
    surface = ws.surfaces.get(inst.parent)
    if owner is None or surface is None:
        return "floor" in ref and inst.support_kind == "floor"
    return surface.kind in ref


def _owners(ws: PlacementState, support: Mapping[str, Any] | None, bound: Mapping[str, str], room_id: str) -> set[str] | None:
    if not support:
        return None
    ref = next(iter(support.values()))
    if isinstance(ref, str):
        return {bound[ref]}
    return {oid for oid, s in ws.surfaces.items() if s.kind in ref and ws.by_id[oid].room_id == room_id}


def _bind_room(ws: PlacementState, template: TaskTemplate, room_id: str, rng: PRNGStream,
               primary: str | None, catalog: Catalog) -> dict[str, str]:
    bound: dict[str, str] = {}
    for spec in template.required_roles:
        rrng = rng.child("role", spec.role)
        if spec.kind == "opening":
            doors = sorted(
                o.opening_id for o in _openings(ws) if room_id in o.connects
                and (primary is None or spec.role != template.primary_role or o.opening_id == primary)
            )
            if not doors:
                raise UnsatisfiableRole(spec.role, spec.filter, f"no door in {room_id}")
            bound[spec.role] = rrng.choice(doors)
            continue
        flt = dict(spec.filter)
        is_primary = spec.role == template.primary_role
        if is_primary and primary is not None:
            flt["asset_id"] = primary
        if not is_primary:
            existing = [
                p for p in ws.placed
                if p.room_id == room_id and p.instance_id not in bound.values()
                and asset_matches(catalog.asset(p.asset_id), flt)
                and _supported_by(ws, p, spec.support, bound)
            ]
            if existing:
                bound[spec.role] = rrng.choice(sorted(existing, key=lambda p: p.instance_id)).instance_id
                continue
        room_type = ws.rooms[room_id].room_type
        cands = [a for a in query_assets(catalog, flt, room=room_type)]
        if not cands:
            raise UnsatisfiableRole(spec.role, spec.filter, f"no catalog asset fits a {room_type}")
        owners = _owners(ws, spec.support, bound, room_id)
        if owners is not None and not owners:
            raise UnsatisfiableRole(spec.role, spec.filter, "no supporting surface in room")
        last: Exception | None = None
        for rec in rrng.shuffled(cands):
            try:
                placed = place_into(ws, rec, rrng.child(rec.asset_id), rooms=[room_id], owners=owners)
            except (PlacementExhausted, SemanticMismatch, RuleConflict) as exc:
                last = exc
                continue
            bound[spec.role] = placed.instance_id
            break
        else:
            raise UnsatisfiableRole(spec.role, spec.filter, str(last))
    return bound


def _openings(ws: PlacementState):
    return [o for fl in ws.plan.floors for o in fl.openings]


def _part(rec: AssetRecord, hint: str):
    for part in rec.articulation.parts if rec.articulation else ():
        if part.joint == hint or part.part_id == hint:
            return part
    return None


def instantiate_task(scene: SceneGraph, template: TaskTemplate, seed: int, catalog: Catalog, *,
                     scene_ref: str = "", primary: str | None = None) -> TaskInstance:
    """Bind every role of ``template`` to assets of one room, placing missing ones.

    ``primary`` pins the primary role to a catalog asset id (or an opening id for
    door roles). Deterministic in (scene, template, seed, primary).
    """
    rooms = _rooms_for(scene, template.room_requirement)
    if not rooms:
        raise RoomMismatch(f"{template.template_id} needs a {template.room_requirement}; scene has none")
    rng = PRNGStream(seed, ("task", template.template_id))
    n_before = len(scene.placed)
    last: UnsatisfiableRole | None = None
    for room_id in rng.shuffled(rooms):
        ws = PlacementState(scene, catalog)
        try:
            bound = _bind_room(ws, template, room_id, rng.child("room", room_id), primary, catalog)
        except UnsatisfiableRole as exc:
            last = exc
            continue
        final = ws.to_scene()
        break
    else:
        assert last is not None
        raise last

    by_id = {p.instance_id: p for p in final.placed}
    joints: dict[str, float] = {}
    for spec in template.required_roles:
        if spec.kind != "asset":
            continue
        rec = catalog.asset(by_id[bound[spec.role]].asset_id)
        for part in rec.articulation.parts if rec.articulation else ():
            _, upper = joint_limits(rec, part)
            state = (spec.initial_joints or {}).get(part.joint, "closed")
            joints[f"{bound[spec.role]}/{part.part_id}"] = upper if state == "open" else 0.0

    goal = []
    for term in template.goal:
        subject = bound[term.args[0]]
        if term.predicate in ("in", "on"):
            goal.append(BoundPredicate(term.predicate, (subject, bound[term.args[1]])))
        elif term.predicate == "displaced":
            goal.append(BoundPredicate("displaced", (subject,), float(term.value)))
        elif template.role(term.args[0]).kind == "opening":
            value = ROOM_DOOR_OPEN if term.value == "open" else 0.0
            goal.append(BoundPredicate(term.predicate, (subject, term.args[1]), value if term.predicate == "joint_at" else None,
                                       JOINT_TOLERANCE["revolute"] if term.predicate == "joint_at" else None))
        else:
            rec = catalog.asset(by_id[subject].asset_id)
            part = _part(rec, term.args[1])
            if part is None:
                raise UnsatisfiableRole(term.args[0], template.role(term.args[0]).filter, f"no {term.args[1]} part")
            jtype, upper = joint_limits(rec, part)
            if term.predicate == "pressed":
                goal.append(BoundPredicate("pressed", (subject, part.part_id)))
            else:
                value = upper if term.value == "open" else 0.0
                goal.append(BoundPredicate("joint_at", (subject, part.part_id), value, JOINT_TOLERANCE[jtype]))

    names = {}
    for spec in template.required_roles:
        if spec.kind == "opening":
            names[spec.role] = "door"
        else:
            names[spec.role] = catalog.asset(by_id[bound[spec.role]].asset_id).display_name.lower()
    added = tuple(p for p in final.placed if int(p.instance_id[1:5]) >= n_before)
    return TaskInstance(
        task_id=f"{template.template_id}/{seed:016x}",
        scene_ref=scene_ref,
        template_id=template.template_id,
        seed=seed,
        room_id=room_id,
        bindings=dict(sorted(bound.items())),
        initial_joint_state=dict(sorted(joints.items())),
        goal=tuple(goal),
        language_instruction=template.instruction.format(**names),
        added_assets=added,
    )


# ---------------------------------------------------------------- manifests


def primary_candidates(template: TaskTemplate, catalog: Catalog, scenes: Sequence[tuple[str, SceneGraph]]) -> list[str]:
    """Distinct values the primary role can take: catalog asset ids, or scene-qualified door ids."""
    spec = template.role(template.primary_role)
    if spec.kind == "opening":
        out = []
        for ref, sc in scenes:
            rooms = set(_rooms_for(sc, template.room_requirement))
            for fl in sc.floorplan.floors:
                out += [f"{ref}#{o.opening_id}" for o in fl.openings if rooms & set(o.connects)]
        return sorted(set(out))
    flt = dict(spec.filter)
    if template.room_requirement != "any":
        flt["room"] = template.room_requirement
    return [a.asset_id for a in query_assets(catalog, flt)]


def _episode_seed(seed: int, *path) -> int:
    return PRNGStream(seed, ("manifest",) + tuple(path)).next_u64() & _SEED_MASK


def batch_manifest(templates: Sequence[TaskTemplate], scenes: Sequence[tuple[str, SceneGraph]],
                   counts: Mapping[str, tuple[int, int]] | None, seed: int, catalog: Catalog, *,
                   embodiment: str = EMBODIMENTS[0], vary_scenes: bool = False) -> EpisodeManifest:
    """Exactly n_assets distinct primary assets per template, each with n_sequences instances.

    Instances of one asset share a scene and differ in seed, hence in the poses
    of the added assets, unless ``vary_scenes`` is set.
    """
    if embodiment not in EMBODIMENTS:
        raise ValueError(f"unknown embodiment {embodiment!r}")
    counts = dict(counts or {})
    scenes = sorted(scenes, key=lambda s: s[0])
    batches = []
    used_seeds: set[int] = set()
    for template in sorted(templates, key=lambda t: t.template_id):
        n_assets, n_seq = counts.get(template.template_id, (template.n_assets, template.n_sequences))
        if n_assets < 1 or n_seq < 1:
            raise ValueError(f"{template.template_id}: counts must be positive")
        cands = primary_candidates(template, catalog, scenes)
        if len(cands) < n_assets:
            raise InsufficientAssets(template.template_id, n_assets, len(cands))
        rng = PRNGStream(seed, ("manifest", template.template_id))
        eligible = [(ref, sc) for ref, sc in scenes if _rooms_for(sc, template.room_requirement)]
        chosen: list[str] = []
        instances: list[TaskInstance] = []
        for cand in rng.shuffled(cands):
            if len(chosen) == n_assets:
                break
            got = _instances_for(template, cand, eligible, n_seq, seed, catalog, vary_scenes)
            if got is None:
                continue
            for inst in got:
                if inst.seed in used_seeds:
                    raise RuntimeError(f"episode seed collision at {inst.task_id}")
                used_seeds.add(inst.seed)
            chosen.append(cand)
            instances.extend(got)
        if len(chosen) < n_assets:
            raise InsufficientAssets(template.template_id, n_assets, len(chosen))
        batches.append(TemplateBatch(template.template_id, n_assets, n_seq, tuple(chosen), tuple(instances)))
    return EpisodeManifest(seed, embodiment, tuple(batches), tuple(ref for ref, _ in scenes))


def _instances_for(template, cand, eligible, n_seq, seed, catalog, vary_scenes):
    spec = template.role(template.primary_role)
    if spec.kind == "opening":
        ref, opening = cand.split("#", 1)
        pool = [(r, sc) for r, sc in eligible if r == ref]
        primary = opening
    else:
        pool = list(eligible)
        primary = cand
    if not pool:
        return None
    order = PRNGStream(seed, ("manifest", template.template_id, cand)).shuffled(pool)
    for k, (ref, sc) in enumerate(order):
        out = []
        try:
            for j in range(n_seq):
                r, s = (order[(k + j) % len(order)] if vary_scenes else (ref, sc))
                ep = _episode_seed(seed, template.template_id, cand, j)
                out.append(instantiate_task(s, template, ep, catalog, scene_ref=r, primary=primary))
        except (UnsatisfiableRole, RoomMismatch):
            continue
        return out
    return None


def manifest_document(manifest: EpisodeManifest) -> dict[str, Any]:
    return {
        "schema_version": MANIFEST_SCHEMA,
        "seed": manifest.seed,
        "embodiment": manifest.embodiment,
        "scenes": list(manifest.scene_refs),
        "templates": [
            {
                "template_id": b.template_id,
                "n_assets": b.n_assets,
                "n_sequences": b.n_sequences,
                "total": len(b.instances),
                "primary_assets": list(b.primary_assets),
                "instances": [to_jsonable(i) for i in b.instances],
            }
            for b in manifest.batches
        ],
        "total": manifest.total,
    }
