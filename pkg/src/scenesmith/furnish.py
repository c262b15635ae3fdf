"""Two-phase semantic placement by rejection sampling.

Basic furniture is placed first (mandatory slots per room type, then optional
extras); interactable assets are added afterwards onto compatible floor areas
or support surfaces. Collision geometry is the yaw-oriented footprint rectangle
plus the vertical extent of the asset.
"""

from __future__ import annotations

import math
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, replace

import numpy as np
import shapely
import shapely.prepared
from shapely.geometry import LineString, Polygon

from scenesmith import _kernels
from scenesmith.catalog import MANDATORY_SLOTS, AssetRecord, Catalog, query_assets
from scenesmith.errors import (
    CatalogGap,
    InvalidAdjustment,
    PlacementExhausted,
    RuleConflict,
    SemanticMismatch,
)
from scenesmith.geometry import (
    TWO_PI,
    box_row,
    contains_with_tolerance,
    footprint_polygon,
    local_to_world,
    normalize_yaw,
    polygon_vertices,
    q,
    yaw_cos_sin,
)
from scenesmith.layout import FloorPlan, Room, door_zones
from scenesmith.report import ValidationReport
from scenesmith.rng import PRNGStream

ATTEMPTS = 200
TOLERANCE = 1e-3
EDGE_MARGIN = 0.05
WALL_GAP = 0.02
CORRIDOR_WIDTH = 0.8
WALL_MOUNT_HEIGHT = 1.4
NEAR_RADIUS = 2.5

# furniture whose back face snaps to a wall
WALL_CLASSES = frozenset(
    {"sofa", "tv", "bed", "closet", "shelf", "fridge", "counter", "dresser", "stove", "desk", "kitchen_cabinet", "nightstand"}
)
HANGING_OWNERS = frozenset({"closet"})

SUPPORT_KIND = {
    "tabletop": "surface",
    "counter": "surface",
    "shelf": "surface",
    "rack": "surface",
    "bed_top": "bed",
    "interior": "inside",
}
TAG_SURFACES = {
    "on_surface": frozenset({"tabletop", "counter", "shelf", "rack"}),
    "on_bed": frozenset({"bed_top"}),
    "in_container": frozenset({"interior"}),
    "hangable": frozenset({"interior"}),
    "on_floor": frozenset({"floor"}),
    "wall_mounted": frozenset({"wall"}),
}
SUBTYPE_SURFACES = {
    "food": frozenset({"tabletop", "counter", "interior"}),
    "tool": frozenset({"counter", "floor"}),
}
EXTRA_COUNTS = {"living_room": (2, 4), "bedroom": (2, 4), "kitchen": (1, 3)}


@dataclass(frozen=True)
class Pose:
    x: float
    y: float
    z: float
    yaw: float


@dataclass(frozen=True)
class PlacedAsset:
    instance_id: str
    asset_id: str
    pose: Pose
    parent: str
    support_kind: str
    room_id: str
    size: tuple[float, float, float]

    def box(self) -> np.ndarray:
        p = self.pose
        return box_row(p.x, p.y, self.size[0], self.size[1], p.yaw, p.z, p.z + self.size[2])

    def footprint(self) -> Polygon:
        p = self.pose
        return footprint_polygon(p.x, p.y, self.size[0], self.size[1], p.yaw)


@dataclass(frozen=True)
class SupportSurface:
    owner: str
    polygon: tuple[tuple[float, float], ...]
    height: float
    kind: str
    clearance: float | None = None


@dataclass(frozen=True)
class ClearanceZone:
    room_id: str
    polygon: tuple[tuple[float, float], ...]
    reason: str


@dataclass(frozen=True)
class SceneGraph:
    floorplan: FloorPlan
    placed: tuple[PlacedAsset, ...] = ()
    surfaces: tuple[SupportSurface, ...] = ()
    clearance_map: tuple[ClearanceZone, ...] = ()

    def asset(self, instance_id: str) -> PlacedAsset:
        for p in self.placed:
            if p.instance_id == instance_id:
                return p
        raise KeyError(instance_id)

    def in_room(self, room_id: str) -> list[PlacedAsset]:
        return [p for p in self.placed if p.room_id == room_id]


# ---------------------------------------------------------------- rule helpers


def compatible_kinds(rec: AssetRecord) -> frozenset[str]:
    kinds: set[str] = set()
    for tag in rec.placement_tags:
        kinds |= TAG_SURFACES[tag]
    if rec.subtype in SUBTYPE_SURFACES:
        kinds &= SUBTYPE_SURFACES[rec.subtype]
    return frozenset(kinds)


def accepts(owner: AssetRecord, kind: str, rec: AssetRecord) -> bool:
    """Whether ``rec`` may rest on the ``kind`` surface of ``owner``."""
    if kind not in compatible_kinds(rec):
        return False
    if kind == "interior":
        if owner.semantic_class in HANGING_OWNERS:
            return "hangable" in rec.placement_tags
        return "in_container" in rec.placement_tags
    if kind == "rack":
        return rec.subtype == "container"
    return True


def matches_term(term: str, rec: AssetRecord) -> bool:
    return term in (rec.asset_id, rec.semantic_class, rec.subtype)


def room_allows(rec: AssetRecord, room_type: str) -> bool:
    return "any" in rec.room_affinity or room_type in rec.room_affinity


def surface_clearance(kind: str, owner: AssetRecord, height: float) -> float | None:
    if kind == "shelf" or (kind == "interior" and owner.articulated):
        return q(owner.bounds[2] - height - EDGE_MARGIN)
    return None


def find_support_surfaces(scene: SceneGraph, catalog: Catalog) -> list[SupportSurface]:
    """One surface per surface-bearing placed asset, inset from its bounds by the edge margin."""
    out = []
    for p in sorted(scene.placed, key=lambda a: a.instance_id):
        rec = catalog.asset(p.asset_id)
        if rec.surface_kind is None:
            continue
        sx, sy, sz = rec.bounds
        hx, hy = q(sx / 2 - EDGE_MARGIN), q(sy / 2 - EDGE_MARGIN)
        if hx <= 0 or hy <= 0:
            continue
        kind = rec.surface_kind
        if kind in ("tabletop", "counter", "bed_top"):
            h = sz
        elif kind == "shelf":
            h = q(sz / 2)
        elif kind == "rack":
            h = q(min(0.02, sz / 2))
        else:
            h = q(min(0.05, sz / 4))
        out.append(
            SupportSurface(p.instance_id, ((-hx, -hy), (hx, -hy), (hx, hy), (-hx, hy)), h, kind, surface_clearance(kind, rec, h))
        )
    return out


def surface_world_polygon(surface: SupportSurface, owner: PlacedAsset) -> Polygon:
    p = owner.pose
    return Polygon([local_to_world(p.x, p.y, p.yaw, lx, ly) for lx, ly in surface.polygon])


# ---------------------------------------------------------------- clearance


def compute_clearance(plan: FloorPlan) -> list[ClearanceZone]:
    """Door swing squares, 0.8 m corridors between every pair of doors of a room, staircase footprints."""
    zones: list[ClearanceZone] = []
    for fl in plan.floors:
        walls = {w.wall_id: w for w in fl.walls}
        swing = door_zones(fl)
        for room in fl.rooms:
            shape = room.shape
            for z in swing[room.room_id]:
                zones.append(ClearanceZone(room.room_id, polygon_vertices(z), "door_swing"))
            approaches = []
            for o in fl.openings:
                if room.room_id not in o.connects:
                    continue
                w = walls[o.wall_ref]
                cx, cy = o.center
                reach = w.thickness + CORRIDOR_WIDTH / 2
                cands = [(cx, cy + reach), (cx, cy - reach)] if w.horizontal else [(cx + reach, cy), (cx - reach, cy)]
                inside = [c for c in cands if shape.contains(shapely.Point(c))]
                if inside:
                    approaches.append(inside[0])
            for i in range(len(approaches)):
                for j in range(i + 1, len(approaches)):
                    corridor = _corridor(approaches[i], approaches[j], shape)
                    if corridor is not None:
                        zones.append(ClearanceZone(room.room_id, polygon_vertices(corridor), "corridor"))
    for s in plan.staircases:
        zones.append(ClearanceZone(s.lower_room, s.footprint, "staircase"))
        zones.append(ClearanceZone(s.upper_room, s.footprint, "staircase"))
    return zones


def _corridor(a, b, room: Polygon) -> Polygon | None:
    best = None
    best_out = math.inf
    for elbow in ((b[0], a[1]), (a[0], b[1])):
        pts = [a, elbow, b]
        pts = [p for k, p in enumerate(pts) if k == 0 or p != pts[k - 1]]
        if len(pts) < 2:
            continue
        shape = LineString(pts).buffer(CORRIDOR_WIDTH / 2, cap_style="square", join_style="mitre")
        shape = shape.intersection(room)
        if shape.geom_type != "Polygon" or shape.is_empty:
            continue
        outside = LineString(pts).length - shape.area / CORRIDOR_WIDTH
        if outside < best_out:
            best, best_out = shape, outside
    return best


# ---------------------------------------------------------------- workspace


class PlacementState:
    """Mutable placement state over an immutable SceneGraph."""

    def __init__(self, scene: SceneGraph, catalog: Catalog):
        self.plan = scene.floorplan
        self.catalog = catalog
        self.placed: list[PlacedAsset] = list(scene.placed)
        self.by_id = {p.instance_id: p for p in self.placed}
        self.rooms: dict[str, Room] = {r.room_id: r for r in self.plan.rooms()}
        self.room_shapes = {rid: r.shape for rid, r in self.rooms.items()}
        self.room_tol = {rid: shapely.prepared.prep(s.buffer(TOLERANCE, join_style="mitre")) for rid, s in self.room_shapes.items()}
        self.zones = list(scene.clearance_map) if scene.clearance_map else compute_clearance(self.plan)
        self.zone_shapes: dict[str, list[Polygon]] = {rid: [] for rid in self.rooms}
        for z in self.zones:
            self.zone_shapes[z.room_id].append(Polygon(z.polygon))
        self.surfaces: dict[str, SupportSurface] = {}
        self.refresh_surfaces()

    def refresh_surfaces(self) -> None:
        scene = SceneGraph(self.plan, tuple(self.placed))
        self.surfaces = {s.owner: s for s in find_support_surfaces(scene, self.catalog)}

    def to_scene(self) -> SceneGraph:
        return SceneGraph(
            self.plan,
            tuple(sorted(self.placed, key=lambda p: p.instance_id)),
            tuple(self.surfaces[k] for k in sorted(self.surfaces)),
            tuple(self.zones),
        )

    def floor_of(self, room_id: str) -> int:
        return self.rooms[room_id].floor_index

    def ancestors(self, instance_id: str) -> set[str]:
        out = set()
        cur = self.by_id.get(instance_id)
        while cur is not None and cur.parent in self.by_id:
            out.add(cur.parent)
            cur = self.by_id[cur.parent]
        return out

    def next_id(self, asset_id: str) -> str:
        return f"i{len(self.placed):04d}_{asset_id}"

    def add(self, p: PlacedAsset) -> None:
        self.placed.append(p)
        self.by_id[p.instance_id] = p
        if self.catalog.asset(p.asset_id).surface_kind is not None:
            self.refresh_surfaces()

    # -------------------------------------------------------- checks

    def collides(self, cand: np.ndarray, room_id: str, exempt: set[str]) -> bool:
        floor = self.floor_of(room_id)
        rows = [p.box() for p in self.placed if p.instance_id not in exempt and self.floor_of(p.room_id) == floor]
        if not rows:
            return False
        return _kernels.first_overlap(cand, np.vstack(rows), TOLERANCE) >= 0

    def blocks_clearance(self, fp: Polygon, room_id: str) -> bool:
        for z in self.zone_shapes[room_id]:
            if z.intersects(fp) and z.intersection(fp).area > TOLERANCE * TOLERANCE:
                return True
        return False

    def contained(self, fp: Polygon, room_id: str) -> bool:
        return self.room_tol[room_id].contains(fp)

    # -------------------------------------------------------- targets

    def floor_targets(self, rec: AssetRecord, rooms: Iterable[str]) -> list[tuple[str, str]]:
        kinds = compatible_kinds(rec)
        out = []
        for rid in rooms:
            if "floor" in kinds:
                out.append(("floor", rid))
            if "wall" in kinds:
                out.append(("wall", rid))
        return out

    def surface_targets(self, rec: AssetRecord, rooms: Iterable[str], owners: set[str] | None = None) -> list[tuple[str, str]]:
        rooms = set(rooms)
        out = []
        for owner_id in sorted(self.surfaces):
            s = self.surfaces[owner_id]
            owner = self.by_id[owner_id]
            if owner.room_id not in rooms or (owners is not None and owner_id not in owners):
                continue
            if accepts(self.catalog.asset(owner.asset_id), s.kind, rec):
                out.append(("surface", owner_id))
        return out

    # -------------------------------------------------------- sampling

    def sample(self, rec: AssetRecord, target: tuple[str, str], rng: PRNGStream) -> PlacedAsset | None:
        kind, ref = target
        sx, sy, sz = rec.bounds
        iid = self.next_id(rec.asset_id)
        if kind in ("floor", "wall"):
            room = self.rooms[ref]
            snap = kind == "wall" or rec.semantic_class in WALL_CLASSES
            if snap:
                pose = self._sample_wall(room, sx, sy, rng, gap=0.0 if kind == "wall" else WALL_GAP)
            else:
                small = rec.category == "interactable"
                pose = self._sample_free(room, sx, sy, rng, any_yaw=small)
            if pose is None:
                return None
            x, y, yaw = pose
            z = 0.0
            if kind == "wall":
                z = q(max(0.0, min(WALL_MOUNT_HEIGHT, self.plan.spec.floor_height - sz - 0.1)))
            return PlacedAsset(iid, rec.asset_id, Pose(x, y, z, yaw), ref, kind, ref, rec.bounds)
        surface = self.surfaces[ref]
        owner = self.by_id[ref]
        if surface.clearance is not None and sz > surface.clearance:
            return None
        local_yaw = rng.uniform(0.0, TWO_PI) if rec.category == "interactable" else rng.integers(0, 4) * math.pi / 2
        local_yaw = normalize_yaw(local_yaw)
        xs = [p[0] for p in surface.polygon]
        ys = [p[1] for p in surface.polygon]

        def free_range(yaw):
            c, s = yaw_cos_sin(yaw)
            ex = abs(c) * sx / 2 + abs(s) * sy / 2
            ey = abs(s) * sx / 2 + abs(c) * sy / 2
            return min(xs) + ex, max(xs) - ex, min(ys) + ey, max(ys) - ey

        lo_x, hi_x, lo_y, hi_y = free_range(local_yaw)
        if lo_x > hi_x or lo_y > hi_y:
            # tight fit: fall back to the nearest axis-aligned yaw
            local_yaw = normalize_yaw(round(local_yaw / (math.pi / 2)) * (math.pi / 2))
            lo_x, hi_x, lo_y, hi_y = free_range(local_yaw)
        if lo_x > hi_x or lo_y > hi_y:
            return None
        lx, ly = rng.uniform(lo_x, hi_x), rng.uniform(lo_y, hi_y)
        op = owner.pose
        wx, wy = local_to_world(op.x, op.y, op.yaw, lx, ly)
        yaw = normalize_yaw(op.yaw + local_yaw)
        pose = Pose(q(wx), q(wy), q(op.z + surface.height), yaw)
        return PlacedAsset(iid, rec.asset_id, pose, ref, SUPPORT_KIND[surface.kind], owner.room_id, rec.bounds)

    def _sample_wall(self, room: Room, sx: float, sy: float, rng: PRNGStream, gap: float):
        pts = room.polygon
        edges = []
        for k in range(len(pts)):
            a, b = pts[k], pts[(k + 1) % len(pts)]
            length = abs(b[0] - a[0]) + abs(b[1] - a[1])
            if length >= sx:
                edges.append((a, b, length))
        if not edges:
            return None
        a, b, length = rng.weighted_choice(edges, [e[2] for e in edges])
        dx, dy = (b[0] - a[0]) / length, (b[1] - a[1]) / length
        nx, ny = -dy, dx  # inward normal of a counter-clockwise ring
        t = q(rng.uniform(sx / 2, length - sx / 2), 1e-3)
        off = sy / 2 + gap
        x = a[0] + dx * t + nx * off
        y = a[1] + dy * t + ny * off
        yaw = normalize_yaw(math.atan2(-nx, ny))
        yaw = normalize_yaw(round(yaw / (math.pi / 2)) * (math.pi / 2))
        return q(x), q(y), yaw

    def _sample_free(self, room: Room, sx: float, sy: float, rng: PRNGStream, any_yaw: bool):
        yaw = normalize_yaw(rng.uniform(0.0, TWO_PI) if any_yaw else rng.integers(0, 4) * math.pi / 2)
        c, s = yaw_cos_sin(yaw)
        ex = abs(c) * sx / 2 + abs(s) * sy / 2
        ey = abs(s) * sx / 2 + abs(c) * sy / 2
        xs = [p[0] for p in room.polygon]
        ys = [p[1] for p in room.polygon]
        lo_x, hi_x = min(xs) + ex, max(xs) - ex
        lo_y, hi_y = min(ys) + ey, max(ys) - ey
        if lo_x > hi_x or lo_y > hi_y:
            return None
        return q(rng.uniform(lo_x, hi_x)), q(rng.uniform(lo_y, hi_y)), yaw

    def valid(self, cand: PlacedAsset) -> bool:
        fp = cand.footprint()
        if not self.contained(fp, cand.room_id):
            return False
        if cand.support_kind == "floor" and self.blocks_clearance(fp, cand.room_id):
            return False
        exempt = set()
        if cand.parent in self.by_id:
            exempt = {cand.parent} | self.ancestors(cand.parent)
        return not self.collides(cand.box(), cand.room_id, exempt)

    def place(self, rec: AssetRecord, targets: Sequence[tuple[str, str]], rng: PRNGStream,
              near: Sequence[tuple[float, float]] = (), near_prob: float = 0.0) -> PlacedAsset:
        if not targets:
            raise SemanticMismatch(f"no compatible target for {rec.asset_id}")
        weights = [self._target_weight(t) for t in targets]
        for attempt in range(ATTEMPTS):
            target = rng.weighted_choice(targets, weights)
            cand = self.sample(rec, target, rng)
            if cand is None:
                continue
            if near and near_prob > 0 and attempt < ATTEMPTS // 2 and rng.bernoulli(near_prob):
                d = min(math.hypot(cand.pose.x - nx, cand.pose.y - ny) for nx, ny in near)
                if d > NEAR_RADIUS:
                    continue
            if self.valid(cand):
                self.add(cand)
                return cand
        rooms = sorted({t[1] if t[0] != "surface" else self.by_id[t[1]].room_id for t in targets})
        raise PlacementExhausted(rec.asset_id, ",".join(rooms), ATTEMPTS)

    def _target_weight(self, target: tuple[str, str]) -> float:
        kind, ref = target
        if kind == "surface":
            xs = [p[0] for p in self.surfaces[ref].polygon]
            ys = [p[1] for p in self.surfaces[ref].polygon]
            return max((max(xs) - min(xs)) * (max(ys) - min(ys)), 1e-6)
        return max(self.room_shapes[ref].area, 1e-6) * (0.2 if kind == "wall" else 1.0)

    # -------------------------------------------------------- co-occurrence

    def excluded_rooms(self, rec: AssetRecord) -> set[str]:
        out = set()
        for rule in self.catalog.co_occurrence:
            if rule.relation != "excludes":
                continue
            if matches_term(rule.subject, rec):
                other = rule.object
            elif matches_term(rule.object, rec):
                other = rule.subject
            else:
                continue
            for p in self.placed:
                if matches_term(other, self.catalog.asset(p.asset_id)):
                    out.add(p.room_id)
        return out

    def instances_matching(self, term: str, room_id: str | None = None) -> list[PlacedAsset]:
        return [
            p
            for p in self.placed
            if matches_term(term, self.catalog.asset(p.asset_id)) and (room_id is None or p.room_id == room_id)
        ]


# ---------------------------------------------------------------- phase 1


def place_basic_assets(plan: FloorPlan, catalog: Catalog, seed: int) -> SceneGraph:
    """Mandatory furniture per room type plus a few optional extras; deterministic in (plan, seed)."""
    ws = PlacementState(SceneGraph(plan), catalog)
    root = PRNGStream(seed, ("furnish", "basic"))
    for room in sorted(plan.rooms(), key=lambda r: r.room_id):
        rng = root.child(room.room_id)
        for slot in MANDATORY_SLOTS.get(room.room_type, ()):
            cands = query_assets(catalog, category="basic", semantic_class=slot, room=room.room_type)
            if not cands:
                raise CatalogGap(room.room_type, slot)
            last: PlacementExhausted | None = None
            for rec in rng.shuffled(cands):
                try:
                    ws.place(rec, ws.floor_targets(rec, [room.room_id]), rng)
                    last = None
                    break
                except PlacementExhausted as exc:
                    last = exc
            if last is not None:
                raise PlacementExhausted(last.asset_id, room.room_id, ATTEMPTS)
        lo, hi = EXTRA_COUNTS.get(room.room_type, (0, 0))
        n_extra = rng.integers(lo, hi + 1)
        mandatory = set(MANDATORY_SLOTS.get(room.room_type, ()))
        pool = [
            a
            for a in query_assets(catalog, category="basic", room=room.room_type)
            if a.semantic_class not in mandatory
        ]
        order = rng.shuffled(pool)
        # lead with one surface-bearing piece so interactables have somewhere to go
        bearing = [a for a in order if a.surface_kind in ("tabletop", "counter", "shelf")]
        if bearing:
            order.remove(bearing[0])
            order.insert(0, bearing[0])
        placed = 0
        for rec in order:
            if placed >= n_extra:
                break
            if room.room_id in ws.excluded_rooms(rec):
                continue
            try:
                ws.place(rec, ws.floor_targets(rec, [room.room_id]), rng.child("extra", rec.asset_id))
                placed += 1
            except (PlacementExhausted, SemanticMismatch):
                continue
    return ws.to_scene()


# ---------------------------------------------------------------- phase 2


def resolve_request(catalog: Catalog, term: str) -> list[AssetRecord]:
    if term in catalog:
        return [catalog.asset(term)]
    hits = [a for a in catalog.assets if a.semantic_class == term]
    if not hits:
        hits = [a for a in catalog.assets if a.subtype == term]
    inter = [a for a in hits if a.category == "interactable"]
    return inter or hits


def place_into(ws: PlacementState, rec: AssetRecord, rng: PRNGStream, *, rooms: Iterable[str] | None = None,
                        owners: set[str] | None = None, depth: int = 0) -> PlacedAsset:
    if rooms is None:
        rooms = [rid for rid, r in ws.rooms.items() if room_allows(rec, r.room_type)]
    rooms = sorted(rooms)
    if not rooms:
        raise SemanticMismatch(f"no room in scene accepts {rec.asset_id}")

    def targets_in(rs):
        floor = [] if owners is not None else ws.floor_targets(rec, rs)
        return floor + ws.surface_targets(rec, rs, owners)

    if not targets_in(rooms):
        raise SemanticMismatch(f"no compatible surface for {rec.asset_id} ({sorted(compatible_kinds(rec))})")
    excluded = ws.excluded_rooms(rec)
    allowed = [r for r in rooms if r not in excluded]
    if not targets_in(allowed):
        raise RuleConflict(f"{rec.asset_id} excluded from every compatible room")

    for rule in ws.catalog.co_occurrence:
        if rule.relation != "requires" or not matches_term(rule.subject, rec):
            continue
        having = [r for r in allowed if ws.instances_matching(rule.object, r)]
        if having and targets_in(having):
            allowed = having
            continue
        if depth > 2:
            raise RuleConflict(f"{rec.asset_id} requires {rule.object}: nesting too deep")
        last: Exception | None = None
        for room_id in allowed:
            for dep in rng.shuffled(resolve_request(ws.catalog, rule.object)):
                if not room_allows(dep, ws.rooms[room_id].room_type) or room_id in ws.excluded_rooms(dep):
                    continue
                try:
                    place_into(ws, dep, rng.child("requires", dep.asset_id), rooms=[room_id], depth=depth + 1)
                except (PlacementExhausted, SemanticMismatch, RuleConflict) as exc:
                    last = exc
                    continue
                if targets_in([room_id]):
                    allowed = [room_id]
                    break
            else:
                continue
            break
        else:
            raise RuleConflict(f"{rec.asset_id} requires {rule.object}, which cannot be placed: {last}")

    near: list[tuple[float, float]] = []
    near_prob = 0.0
    for rule in ws.catalog.co_occurrence:
        if rule.relation == "prefers_near" and matches_term(rule.subject, rec):
            hits = [p for r in allowed for p in ws.instances_matching(rule.object, r)]
            if hits:
                near = [(p.pose.x, p.pose.y) for p in hits]
                w = rule.weight or 0.0
                near_prob = w / (1.0 + w)
    return ws.place(rec, targets_in(allowed), rng, near=near, near_prob=near_prob)


def place_interactables(scene: SceneGraph, catalog: Catalog, request: Iterable[str] | Mapping[str, int], seed: int) -> SceneGraph:
    """Add requested assets (asset ids, semantic classes or subtypes) onto compatible targets."""
    items = _expand_request(request)
    ws = PlacementState(scene, catalog)
    root = PRNGStream(seed, ("furnish", "interactables"))
    for k, term in enumerate(items):
        rng = root.child(k, term)
        cands = resolve_request(catalog, term)
        if not cands:
            raise SemanticMismatch(f"request {term!r} matches no catalog asset")
        errors: list[Exception] = []
        for rec in rng.shuffled(cands):
            try:
                place_into(ws, rec, rng.child(rec.asset_id))
                break
            except (PlacementExhausted, SemanticMismatch, RuleConflict) as exc:
                errors.append(exc)
        else:
            for kind in (PlacementExhausted, RuleConflict, SemanticMismatch):
                for exc in errors:
                    if isinstance(exc, kind):
                        raise exc
    return ws.to_scene()


def place_asset_at(scene: SceneGraph, catalog: Catalog, asset_id: str, rng: PRNGStream, *,
                   rooms: Iterable[str] | None = None, owners: set[str] | None = None) -> tuple[SceneGraph, str]:
    """Place one specific catalog asset; returns the new scene and the new instance id."""
    ws = PlacementState(scene, catalog)
    placed = place_into(ws, catalog.asset(asset_id), rng, rooms=rooms, owners=owners)
    return ws.to_scene(), placed.instance_id


def _expand_request(request) -> list[str]:
    if isinstance(request, Mapping):
        items = [k for k, n in request.items() for _ in range(int(n))]
    elif isinstance(request, str):
        items = [request]
    else:
        items = list(request)
    return sorted(items)


# ---------------------------------------------------------------- verification


def support_ancestors(placed: Sequence[PlacedAsset]) -> dict[str, set[str]]:
    by_id = {p.instance_id: p for p in placed}
    out: dict[str, set[str]] = {}
    for p in placed:
        seen: set[str] = set()
        cur = p
        while cur.parent in by_id and cur.parent not in seen:
            seen.add(cur.parent)
            cur = by_id[cur.parent]
        out[p.instance_id] = seen
    return out


def check_collision_free(scene: SceneGraph) -> ValidationReport:
    """Overlapping footprint pairs (beyond 1 mm) and assets protruding from their room."""
    report = ValidationReport()
    placed = sorted(scene.placed, key=lambda p: p.instance_id)
    rooms = {r.room_id: r for r in scene.floorplan.rooms()}
    anc = support_ancestors(placed)
    by_floor: dict[int, list[PlacedAsset]] = {}
    for p in placed:
        room = rooms.get(p.room_id)
        if room is None:
            report.error("DANGLING_REF", f"placed.{p.instance_id}.room_id", f"unknown room {p.room_id}")
            continue
        by_floor.setdefault(room.floor_index, []).append(p)
        if not contains_with_tolerance(room.shape, p.footprint(), TOLERANCE):
            report.error("CONTAINMENT", f"placed.{p.instance_id}", f"{p.instance_id} protrudes outside {p.room_id}")
    for floor in sorted(by_floor):
        group = by_floor[floor]
        boxes = np.vstack([p.box() for p in group])
        for i, j in _kernels.overlap_pairs(boxes, TOLERANCE):
            a, b = group[int(i)], group[int(j)]
            if a.instance_id in anc[b.instance_id] or b.instance_id in anc[a.instance_id]:
                continue
            report.error("COLLISION", f"placed.{a.instance_id}", f"{a.instance_id} overlaps {b.instance_id}")
    return report


# ---------------------------------------------------------------- adjustment


def apply_adjustment(scene: SceneGraph, instance_id: str, delta: Mapping[str, object]) -> SceneGraph:
    """Move or rotate one placed asset (and whatever rests on it) if every invariant still holds.

    ``delta`` may carry ``position`` as a planar (dx, dy) offset and ``yaw`` as
    an angle increment in radians. The input scene is never modified.
    """
    target = scene.asset(instance_id)
    dx, dy = (0.0, 0.0)
    if delta.get("position") is not None:
        dx, dy = (float(v) for v in list(delta["position"])[:2])  # type: ignore[call-overload]
    dyaw = float(delta.get("yaw") or 0.0)  # type: ignore[arg-type]

    anc = support_ancestors(scene.placed)
    moving = {p.instance_id for p in scene.placed if instance_id in anc[p.instance_id]} | {instance_id}
    pivot = (target.pose.x, target.pose.y)
    c, s = math.cos(dyaw), math.sin(dyaw)
    if abs(math.fmod(dyaw, TWO_PI)) < 1e-12:
        c, s = 1.0, 0.0

    moved: dict[str, PlacedAsset] = {}
    for p in scene.placed:
        if p.instance_id not in moving:
            continue
        rx, ry = p.pose.x - pivot[0], p.pose.y - pivot[1]
        nx = pivot[0] + rx * c - ry * s + dx
        ny = pivot[1] + rx * s + ry * c + dy
        moved[p.instance_id] = replace(p, pose=Pose(q(nx), q(ny), p.pose.z, normalize_yaw(p.pose.yaw + dyaw)))

    new_placed = tuple(moved.get(p.instance_id, p) for p in scene.placed)
    new_scene = replace(scene, placed=new_placed)
    rooms = {r.room_id: r for r in scene.floorplan.rooms()}
    by_id = {p.instance_id: p for p in new_placed}
    for iid in sorted(moved):
        p = by_id[iid]
        if not contains_with_tolerance(rooms[p.room_id].shape, p.footprint(), TOLERANCE):
            raise InvalidAdjustment("room containment", f"{iid} would leave {p.room_id}")
    target_new = by_id[instance_id]
    if target_new.parent in by_id:
        owner = by_id[target_new.parent]
        surface = next((s for s in scene.surfaces if s.owner == owner.instance_id), None)
        if surface is None or not contains_with_tolerance(surface_world_polygon(surface, owner), target_new.footprint(), TOLERANCE):
            raise InvalidAdjustment("support", f"{instance_id} would detach from {owner.instance_id}")
    report = check_collision_free(new_scene)
    bad = [e for e in report.errors if e.code == "COLLISION" and any(m in e.message for m in moved)]
    if bad:
        raise InvalidAdjustment("collision", bad[0].message)
    if target_new.support_kind == "floor":
        zones = [Polygon(z.polygon) for z in scene.clearance_map if z.room_id == target_new.room_id]
        fp = target_new.footprint()
        if any(z.intersection(fp).area > TOLERANCE * TOLERANCE for z in zones) and not any(
            z.intersection(target.footprint()).area > TOLERANCE * TOLERANCE for z in zones
        ):
            raise InvalidAdjustment("clearance", f"{instance_id} would block a reserved walkway")
    return new_scene
