"""Rectilinear floorplan generation.

Each proposal recursively splits the footprint grid into one rectangle per
room, trims over-elongated rooms and offers the trimmed strip to a neighbour
(L-shape expansion), derives walls with thickness from the cell ownership
grid, then places doors along a random spanning tree of the adjacency graph.
Proposals failing any threshold are rejected and the next one is tried.
"""

from __future__ import annotations

import math
from collections import deque
from collections.abc import Iterator, Sequence
from dataclasses import dataclass, field, replace

import numpy as np
import shapely
import shapely.prepared
from shapely.geometry import Polygon
from shapely.ops import unary_union

from scenesmith.catalog import ROOM_TYPES
from scenesmith.errors import DegeneratePolygon, GenerationExhausted, InvalidSpec, NotAdjacent
from scenesmith.geometry import Point, bbox, polygon_vertices, q, shoelace
from scenesmith.rng import PRNGStream

EXTERIOR = "EXTERIOR"

DEFAULT_MIN_AREA = {"living_room": 12.0, "kitchen": 6.0, "bedroom": 9.0}

# relative share of floor area a room type asks for during splitting
_AREA_WEIGHT = {"living_room": 1.6, "kitchen": 0.9, "bedroom": 1.2}
_ROOM_ORDER = {t: i for i, t in enumerate(ROOM_TYPES)}
_DOOR_MARGIN = 0.3
_MIN_SIDE = 2.0

CellRect = tuple[int, int, int, int]  # i0, j0, i1, j1 (half-open, grid units)


@dataclass(frozen=True)
class Thresholds:
    max_aspect_ratio: float = 2.5
    min_fill_ratio: float = 0.7
    min_room_area: dict[str, float] = field(default_factory=lambda: dict(DEFAULT_MIN_AREA))


@dataclass(frozen=True)
class LayoutSpec:
    rooms_requested: tuple[str, ...]
    floors: int = 1
    footprint: tuple[float, float] = (12.0, 10.0)
    grid_resolution: float = 0.25
    thresholds: Thresholds = field(default_factory=Thresholds)
    interior_wall_thickness: float = 0.10
    exterior_wall_thickness: float = 0.20
    floor_height: float = 2.8
    door_width: float = 0.9
    door_height: float = 2.1
    extra_door_probability: float = 0.25
    stair_size: tuple[float, float] = (1.0, 3.0)
    proposal_budget: int = 200

    def __post_init__(self):
        rooms = tuple(sorted(self.rooms_requested, key=lambda t: (_ROOM_ORDER.get(t, 99), t)))
        object.__setattr__(self, "rooms_requested", rooms)
        object.__setattr__(self, "footprint", (float(self.footprint[0]), float(self.footprint[1])))

    def validate(self) -> None:
        if not self.rooms_requested:
            raise InvalidSpec("rooms_requested must be non-empty")
        for t in self.rooms_requested:
            if t not in ROOM_TYPES:
                raise InvalidSpec(f"unknown room type {t!r}")
        if self.floors < 1:
            raise InvalidSpec("floors must be >= 1")
        if len(self.rooms_requested) < self.floors:
            raise InvalidSpec("every floor needs at least one room")
        w, d = self.footprint
        if w < 4.0 or d < 4.0:
            raise InvalidSpec("footprint must be at least 4 m x 4 m")
        res = self.grid_resolution
        if res <= 0:
            raise InvalidSpec("grid_resolution must be positive")
        for dim in (w, d):
            if abs(round(dim / res) * res - dim) > 1e-9:
                raise InvalidSpec(f"grid_resolution {res} does not divide footprint dimension {dim}")
        th = self.thresholds
        if th.max_aspect_ratio < 1 or th.min_fill_ratio <= 0 or th.min_fill_ratio > 1:
            raise InvalidSpec("thresholds out of range")
        for t in set(self.rooms_requested):
            if th.min_room_area.get(t, 0.0) <= 0:
                raise InvalidSpec(f"min_room_area for {t} must be positive")
        if min(self.interior_wall_thickness, self.exterior_wall_thickness) <= 0:
            raise InvalidSpec("wall thickness must be positive")
        if self.proposal_budget < 1:
            raise InvalidSpec("proposal_budget must be >= 1")

    @property
    def grid_shape(self) -> tuple[int, int]:
        return round(self.footprint[0] / self.grid_resolution), round(self.footprint[1] / self.grid_resolution)

    def rooms_for_floor(self, floor: int) -> tuple[str, ...]:
        """Rooms are split across floors in canonical order, earlier floors taking the remainder."""
        k, n = len(self.rooms_requested), self.floors
        sizes = [k // n + (1 if f < k % n else 0) for f in range(n)]
        start = sum(sizes[:floor])
        return self.rooms_requested[start : start + sizes[floor]]


@dataclass(frozen=True)
class Room:
    room_id: str
    room_type: str
    floor_index: int
    polygon: tuple[tuple[float, float], ...]
    cell_polygon: tuple[tuple[float, float], ...]

    @property
    def shape(self) -> Polygon:
        return Polygon(self.polygon)


@dataclass(frozen=True)
class WallSegment:
    wall_id: str
    floor_index: int
    kind: str
    p0: tuple[float, float]
    p1: tuple[float, float]
    thickness: float
    rooms: tuple[str, str]
    body: tuple[float, float, float, float]

    @property
    def length(self) -> float:
        return abs(self.p1[0] - self.p0[0]) + abs(self.p1[1] - self.p0[1])

    @property
    def horizontal(self) -> bool:
        return self.p0[1] == self.p1[1]


@dataclass(frozen=True)
class Opening:
    opening_id: str
    kind: str
    wall_ref: str
    floor_index: int
    center: tuple[float, float]
    width: float
    height: float
    connects: tuple[str, str]


@dataclass(frozen=True)
class Staircase:
    staircase_id: str
    footprint: tuple[tuple[float, float], ...]
    lower_floor: int
    upper_floor: int
    run_direction: str
    lower_room: str
    upper_room: str


@dataclass(frozen=True)
class FloorLayout:
    floor_index: int
    rooms: tuple[Room, ...]
    walls: tuple[WallSegment, ...]
    openings: tuple[Opening, ...]
    ceiling_cutouts: tuple[tuple[tuple[float, float], ...], ...] = ()


@dataclass(frozen=True)
class RoomMetrics:
    aspect_ratio: float
    fill_ratio: float
    area: float = 0.0


@dataclass(frozen=True)
class FloorPlan:
    spec: LayoutSpec
    floors: tuple[FloorLayout, ...]
    staircases: tuple[Staircase, ...]
    metrics: dict[str, RoomMetrics]
    generation_seed: int
    rejected_proposals: int = 0

    def rooms(self) -> Iterator[Room]:
        for fl in self.floors:
            yield from fl.rooms

    def room(self, room_id: str) -> Room:
        for r in self.rooms():
            if r.room_id == room_id:
                return r
        raise KeyError(room_id)

    def walls(self) -> Iterator[WallSegment]:
        for fl in self.floors:
            yield from fl.walls

    def openings(self) -> Iterator[Opening]:
        for fl in self.floors:
            yield from fl.openings


# ---------------------------------------------------------------- scoring


def score_room(room: Room | Sequence[Point]) -> RoomMetrics:
    """Aspect ratio (long over short bbox side) and fill ratio (area over bbox area)."""
    verts = room.polygon if isinstance(room, Room) else tuple(room)
    if len(verts) < 3:
        raise DegeneratePolygon("polygon needs at least 3 vertices")
    area = shoelace(verts)
    x0, y0, x1, y1 = bbox(verts)
    w, h = x1 - x0, y1 - y0
    if area <= 0 or w <= 0 or h <= 0:
        raise DegeneratePolygon("polygon has zero area")
    return RoomMetrics(aspect_ratio=max(w, h) / min(w, h), fill_ratio=area / (w * h), area=area)


def passes_thresholds(room_type: str, metrics: RoomMetrics, th: Thresholds) -> str | None:
    """Name of the first failed threshold, or None."""
    if metrics.aspect_ratio > th.max_aspect_ratio + 1e-12:
        return "aspect_ratio"
    if metrics.fill_ratio < th.min_fill_ratio - 1e-12:
        return "fill_ratio"
    if metrics.area < th.min_room_area.get(room_type, 0.0) - 1e-12:
        return "min_room_area"
    return None


# ---------------------------------------------------------------- draft + L-shape expansion


@dataclass
class DraftRoom:
    room_id: str
    room_type: str
    floor_index: int
    rects: list[CellRect]


@dataclass
class PlanDraft:
    """Mutable working state of one proposal, in grid cells."""

    resolution: float
    min_fill_ratio: float
    rooms: dict[str, DraftRoom] = field(default_factory=dict)
    unusable: list[tuple[int, CellRect]] = field(default_factory=list)

    def cell_shape(self, rects: Sequence[CellRect]) -> Polygon:
        r = self.resolution
        return unary_union([shapely.box(i0 * r, j0 * r, i1 * r, j1 * r) for i0, j0, i1, j1 in rects])

    def room_view(self, room_id: str) -> Room:
        d = self.rooms[room_id]
        verts = polygon_vertices(self.cell_shape(d.rects))
        return Room(d.room_id, d.room_type, d.floor_index, verts, verts)


def _shares_edge(a: CellRect, b: CellRect) -> bool:
    ai0, aj0, ai1, aj1 = a
    bi0, bj0, bi1, bj1 = b
    if ai1 == bi0 or bi1 == ai0:
        return min(aj1, bj1) - max(aj0, bj0) > 0
    if aj1 == bj0 or bj1 == aj0:
        return min(ai1, bi1) - max(ai0, bi0) > 0
    return False


def _as_rects(region) -> list[CellRect]:
    if len(region) == 4 and all(isinstance(v, (int, np.integer)) for v in region):
        return [tuple(int(v) for v in region)]  # type: ignore[list-item]
    return [tuple(int(v) for v in r) for r in region]  # type: ignore[misc]


def merged_metrics(draft: PlanDraft, room_id: str, region) -> RoomMetrics | None:
    """Metrics of the room after absorbing ``region``; None if the union is not a simple polygon."""
    merged = draft.cell_shape(draft.rooms[room_id].rects + _as_rects(region))
    if merged.geom_type != "Polygon" or len(merged.interiors) > 0:
        return None
    return score_room(polygon_vertices(merged))


def expand_l_shape(draft: PlanDraft, room_id: str, region) -> Room:
    """Absorb a leftover cell region into a room if its fill ratio stays high enough.

    ``region`` is one cell rectangle ``(i0, j0, i1, j1)`` or a list of them.
    When the merged fill ratio drops below the draft's minimum the room is left
    unchanged and the region is recorded as unusable.
    """
    rects = _as_rects(region)
    room = draft.rooms[room_id]
    if not any(_shares_edge(a, b) for a in room.rects for b in rects):
        raise NotAdjacent(f"region {rects} does not share an edge with {room_id}")
    metrics = merged_metrics(draft, room_id, rects)
    if metrics is None:
        raise ValueError(f"absorbing {rects} into {room_id} would not leave a simple polygon")
    if metrics.fill_ratio >= draft.min_fill_ratio:
        room.rects.extend(rects)
    else:
        draft.unusable.extend((room.floor_index, r) for r in rects)
    return draft.room_view(room_id)


# ---------------------------------------------------------------- generation


class _Reject(Exception):
    def __init__(self, reason: str):
        self.reason = reason
        super().__init__(reason)


def generate_floorplan(spec: LayoutSpec, catalog=None, seed: int = 0) -> FloorPlan:
    """Generate a scored floorplan; pure in (spec, seed).

    Raises GenerationExhausted when no proposal within ``spec.proposal_budget``
    passes every threshold.
    """
    spec.validate()
    seed = int(seed) & 0xFFFFFFFFFFFFFFFF
    root = PRNGStream(seed, ("layout",))
    reasons: dict[str, int] = {}
    for attempt in range(spec.proposal_budget):
        rng = root.child("proposal", attempt)
        try:
            plan = _propose(spec, rng, seed)
        except _Reject as rej:
            reasons[rej.reason] = reasons.get(rej.reason, 0) + 1
            continue
        return replace(plan, rejected_proposals=attempt)
    raise GenerationExhausted(spec.proposal_budget, reasons)


def _propose(spec: LayoutSpec, rng: PRNGStream, seed: int) -> FloorPlan:
    nx, ny = spec.grid_shape
    res = spec.grid_resolution
    th = spec.thresholds
    draft = PlanDraft(resolution=res, min_fill_ratio=th.min_fill_ratio)

    for f in range(spec.floors):
        types = list(rng.shuffled(list(spec.rooms_for_floor(f))))
        leaves = _split((0, 0, nx, ny), types, rng.child("split", f), spec)
        leaves.sort(key=lambda lr: (lr[1][1], lr[1][0]))
        for k, (rtype, cells) in enumerate(leaves):
            rid = f"room_{f}_{k}"
            draft.rooms[rid] = DraftRoom(rid, rtype, f, [cells])
        _trim_elongated(draft, f, spec, rng.child("trim", f))

    floors: list[FloorLayout] = []
    metrics: dict[str, RoomMetrics] = {}
    owners: list[np.ndarray] = []
    for f in range(spec.floors):
        rooms_f = [d for d in draft.rooms.values() if d.floor_index == f]
        owner, ids = _owner_grid(rooms_f, nx, ny)
        owners.append(owner)
        walls = _walls(owner, ids, f, spec)
        bodies = unary_union([shapely.box(*w.body) for w in walls])
        rooms: list[Room] = []
        for d in rooms_f:
            cell_shape = draft.cell_shape(d.rects)
            inner = cell_shape.difference(bodies)
            if inner.geom_type != "Polygon" or inner.is_empty or len(inner.interiors) > 0:
                raise _Reject("interior_not_simple")
            room = Room(d.room_id, d.room_type, f, polygon_vertices(inner), polygon_vertices(cell_shape))
            m = score_room(room)
            failed = passes_thresholds(d.room_type, m, th)
            if failed:
                raise _Reject(failed)
            metrics[room.room_id] = RoomMetrics(q(m.aspect_ratio, 1e-9), q(m.fill_ratio, 1e-9), q(m.area, 1e-9))
            rooms.append(room)
        rooms.sort(key=lambda r: r.room_id)
        openings = _doors(rooms, walls, f, spec, rng.child("doors", f))
        floors.append(FloorLayout(f, tuple(rooms), tuple(walls), tuple(openings)))

    staircases = []
    for f in range(spec.floors - 1):
        stair = _staircase(floors[f], floors[f + 1], owners[f], owners[f + 1], spec, rng.child("stairs", f), f)
        staircases.append(stair)
        floors[f] = replace(floors[f], ceiling_cutouts=floors[f].ceiling_cutouts + (stair.footprint,))

    plan = FloorPlan(spec, tuple(floors), tuple(staircases), metrics, seed)
    if not check_connectivity(plan):
        raise _Reject("disconnected")
    return plan


def _split(rect: CellRect, types: list[str], rng: PRNGStream, spec: LayoutSpec) -> list[tuple[str, CellRect]]:
    if len(types) == 1:
        return [(types[0], rect)]
    i0, j0, i1, j1 = rect
    w, h = i1 - i0, j1 - j0
    min_cells = math.ceil(_MIN_SIDE / spec.grid_resolution - 1e-9)
    k = len(types)
    m = rng.choice(sorted({k // 2, (k + 1) // 2}))
    left, right = types[:m], types[m:]
    weight = lambda ts: sum(_AREA_WEIGHT[t] * rng.uniform(0.85, 1.15) for t in ts)  # noqa: E731
    wl, wr = weight(left), weight(right)
    axes = ["x", "y"] if w > h else ["y", "x"] if h > w else rng.shuffled(["x", "y"])
    for axis in axes:
        length = w if axis == "x" else h
        if length < 2 * min_cells:
            continue
        cut = round(length * (wl / (wl + wr) + rng.uniform(-0.06, 0.06)))
        cut = min(max(cut, min_cells), length - min_cells)
        if axis == "x":
            a, b = (i0, j0, i0 + cut, j1), (i0 + cut, j0, i1, j1)
        else:
            a, b = (i0, j0, i1, j0 + cut), (i0, j0 + cut, i1, j1)
        return _split(a, left, rng.child("a"), spec) + _split(b, right, rng.child("b"), spec)
    raise _Reject("footprint_too_small")


def _interior_extent(cells: CellRect, spec: LayoutSpec, nx: int, ny: int) -> tuple[float, float]:
    """Approximate interior width/depth of a rectangular cell block after wall insets."""
    i0, j0, i1, j1 = cells
    res = spec.grid_resolution
    ext, inner = spec.exterior_wall_thickness, spec.interior_wall_thickness / 2

    def inset(on_boundary: bool) -> float:
        return ext if on_boundary else inner

    w = (i1 - i0) * res - inset(i0 == 0) - inset(i1 == nx)
    d = (j1 - j0) * res - inset(j0 == 0) - inset(j1 == ny)
    return w, d


def _trim_elongated(draft: PlanDraft, floor: int, spec: LayoutSpec, rng: PRNGStream) -> None:
    nx, ny = spec.grid_shape
    res = spec.grid_resolution
    max_ar = spec.thresholds.max_aspect_ratio
    for rid in sorted(r for r, d in draft.rooms.items() if d.floor_index == floor):
        d = draft.rooms[rid]
        if len(d.rects) != 1:
            continue
        cells = d.rects[0]
        w, h = _interior_extent(cells, spec, nx, ny)
        if max(w, h) <= max_ar * min(w, h):
            continue
        i0, j0, i1, j1 = cells
        along_x = w > h
        excess = max(w, h) - 0.98 * max_ar * min(w, h)
        strip_cells = math.ceil(excess / res - 1e-9)
        length = (i1 - i0) if along_x else (j1 - j0)
        if strip_cells <= 0 or strip_cells >= length:
            continue
        at_start = rng.bernoulli(0.5)
        if along_x:
            keep = (i0 + strip_cells, j0, i1, j1) if at_start else (i0, j0, i1 - strip_cells, j1)
            strip = (i0, j0, i0 + strip_cells, j1) if at_start else (i1 - strip_cells, j0, i1, j1)
        else:
            keep = (i0, j0 + strip_cells, i1, j1) if at_start else (i0, j0, i1, j1 - strip_cells)
            strip = (i0, j0, i1, j0 + strip_cells) if at_start else (i0, j1 - strip_cells, i1, j1)
        d.rects[0] = keep
        neighbours = sorted(
            other
            for other, od in draft.rooms.items()
            if other != rid and od.floor_index == floor and any(_shares_edge(r, strip) for r in od.rects)
        )
        absorbed = False
        for other in neighbours:
            m = merged_metrics(draft, other, strip)
            if m is None or m.aspect_ratio > max_ar:
                continue
            before = len(draft.rooms[other].rects)
            expand_l_shape(draft, other, strip)
            if len(draft.rooms[other].rects) > before:
                absorbed = True
                break
            draft.unusable.pop()
        if not absorbed:
            draft.unusable.append((floor, strip))


def _owner_grid(rooms: list[DraftRoom], nx: int, ny: int) -> tuple[np.ndarray, list[str]]:
    owner = np.full((ny, nx), -1, dtype=np.int32)
    ids = sorted(d.room_id for d in rooms)
    by_id = {d.room_id: d for d in rooms}
    for k, rid in enumerate(ids):
        for i0, j0, i1, j1 in by_id[rid].rects:
            owner[j0:j1, i0:i1] = k
    return owner, ids


def _walls(owner: np.ndarray, ids: list[str], floor: int, spec: LayoutSpec) -> list[WallSegment]:
    ny, nx = owner.shape
    res = spec.grid_resolution
    t_int, t_ext = spec.interior_wall_thickness, spec.exterior_wall_thickness
    raw: list[tuple[str, int, int, int, int, int]] = []  # orient, line, start, end, a, b

    padded = np.full((ny + 2, nx + 2), -1, dtype=np.int32)
    padded[1:-1, 1:-1] = owner
    # horizontal lines: between row j-1 (below) and j (above)
    for j in range(ny + 1):
        below = padded[j, 1:-1]
        above = padded[j + 1, 1:-1]
        _collect_runs(raw, "h", j, below, above)
    for i in range(nx + 1):
        left = padded[1:-1, i]
        right = padded[1:-1, i + 1]
        _collect_runs(raw, "v", i, left, right)

    walls: list[WallSegment] = []
    for orient, line, start, end, a, b in raw:
        c = line * res
        s, e = start * res, end * res
        if orient == "h":
            p0, p1 = (s, c), (e, c)
        else:
            p0, p1 = (c, s), (c, e)
        if a >= 0 and b >= 0:
            kind, t = "interior", t_int
            rooms = tuple(sorted((ids[a], ids[b])))
            lo, hi = c - t / 2, c + t / 2
        else:
            kind, t = "exterior", t_ext
            inside = a if a >= 0 else b
            rooms = (ids[inside], EXTERIOR)
            # the wall body grows into the room side of the line
            lo, hi = (c - t, c) if inside == a else (c, c + t)
        body = (s, lo, e, hi) if orient == "h" else (lo, s, hi, e)
        walls.append(
            WallSegment(
                wall_id="",
                floor_index=floor,
                kind=kind,
                p0=(q(p0[0], 1e-9), q(p0[1], 1e-9)),
                p1=(q(p1[0], 1e-9), q(p1[1], 1e-9)),
                thickness=t,
                rooms=rooms,  # type: ignore[arg-type]
                body=tuple(q(v, 1e-9) for v in body),  # type: ignore[arg-type]
            )
        )
    walls.sort(key=lambda w: (w.p0[1], w.p0[0], w.p1[1], w.p1[0]))
    return [replace(w, wall_id=f"wall_{floor}_{k}") for k, w in enumerate(walls)]


def _collect_runs(out: list, orient: str, line: int, side_a: np.ndarray, side_b: np.ndarray) -> None:
    n = side_a.shape[0]
    k = 0
    while k < n:
        a, b = int(side_a[k]), int(side_b[k])
        if a == b:
            k += 1
            continue
        start = k
        while k < n and int(side_a[k]) == a and int(side_b[k]) == b:
            k += 1
        out.append((orient, line, start, k, a, b))


def _door_span(wall: WallSegment, width: float) -> tuple[float, float] | None:
    lo = (wall.p0[0] if wall.horizontal else wall.p0[1]) + _DOOR_MARGIN + width / 2
    hi = (wall.p1[0] if wall.horizontal else wall.p1[1]) - _DOOR_MARGIN - width / 2
    return (lo, hi) if hi >= lo else None


def _door_at(wall: WallSegment, spec: LayoutSpec, rng: PRNGStream) -> tuple[float, float]:
    lo, hi = _door_span(wall, spec.door_width)  # type: ignore[misc]
    steps = int(math.floor((hi - lo) / 0.05 + 1e-9))
    t = q(lo + 0.05 * rng.integers(0, steps + 1), 1e-9)
    return (t, wall.p0[1]) if wall.horizontal else (wall.p0[0], t)


def _doors(rooms: list[Room], walls: list[WallSegment], floor: int, spec: LayoutSpec, rng: PRNGStream) -> list[Opening]:
    by_pair: dict[tuple[str, str], list[WallSegment]] = {}
    for w in walls:
        if w.kind == "interior" and _door_span(w, spec.door_width) is not None:
            by_pair.setdefault(w.rooms, []).append(w)
    pairs = sorted(by_pair)
    ids = [r.room_id for r in rooms]
    parent = {r: r for r in ids}

    def find(x: str) -> str:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    tree: list[tuple[str, str]] = []
    rest: list[tuple[str, str]] = []
    for pair in rng.shuffled(pairs):
        ra, rb = find(pair[0]), find(pair[1])
        if ra != rb:
            parent[ra] = rb
            tree.append(pair)
        else:
            rest.append(pair)
    if len({find(r) for r in ids}) > 1:
        raise _Reject("disconnected")

    chosen: list[tuple[tuple[str, str], WallSegment]] = []
    for pair in sorted(tree):
        segs = sorted(by_pair[pair], key=lambda w: (-w.length, w.wall_id))
        chosen.append((pair, segs[0]))
    for pair in sorted(rest):
        if rng.bernoulli(spec.extra_door_probability):
            segs = sorted(by_pair[pair], key=lambda w: (-w.length, w.wall_id))
            chosen.append((pair, segs[0]))

    openings: list[Opening] = []
    for pair, wall in chosen:
        openings.append(
            Opening("", "door", wall.wall_id, floor, _door_at(wall, spec, rng), spec.door_width, spec.door_height, pair)
        )

    if floor == 0:
        w_total, d_total = spec.footprint
        boundary = []
        for w in walls:
            if w.kind != "exterior" or _door_span(w, spec.door_width) is None:
                continue
            coord = w.p0[1] if w.horizontal else w.p0[0]
            limit = d_total if w.horizontal else w_total
            if abs(coord) < 1e-9 or abs(coord - limit) < 1e-9:
                boundary.append(w)
        if not boundary:
            raise _Reject("no_exterior_door")
        type_of = {r.room_id: r.room_type for r in rooms}
        best_rank = min((_ROOM_ORDER[type_of[w.rooms[0]]], w.rooms[0]) for w in boundary)
        candidates = [w for w in boundary if w.rooms[0] == best_rank[1]]
        wall = rng.choice(candidates)
        openings.append(
            Opening("", "exterior_door", wall.wall_id, floor, _door_at(wall, spec, rng), spec.door_width, spec.door_height, (wall.rooms[0], EXTERIOR))
        )
    openings.sort(key=lambda o: (o.kind != "exterior_door", o.wall_ref, o.center))
    return [replace(o, opening_id=f"door_{floor}_{k}") for k, o in enumerate(openings)]


def door_swing_zone(opening: Opening, wall: WallSegment, room: Room) -> Polygon | None:
    """Square in front of a door on the given room's side of the wall."""
    if room.room_id not in opening.connects:
        return None
    cx, cy = opening.center
    half = opening.width / 2
    depth = opening.width
    if wall.horizontal:
        lo_b, hi_b = wall.body[1], wall.body[3]
        up = shapely.box(cx - half, hi_b, cx + half, hi_b + depth)
        down = shapely.box(cx - half, lo_b - depth, cx + half, lo_b)
    else:
        lo_b, hi_b = wall.body[0], wall.body[2]
        up = shapely.box(hi_b, cy - half, hi_b + depth, cy + half)
        down = shapely.box(lo_b - depth, cy - half, lo_b, cy + half)
    shape = room.shape
    return up if shape.intersection(up).area >= shape.intersection(down).area else down


def door_zones(floor: FloorLayout) -> dict[str, list[Polygon]]:
    walls = {w.wall_id: w for w in floor.walls}
    zones: dict[str, list[Polygon]] = {r.room_id: [] for r in floor.rooms}
    for o in floor.openings:
        for r in floor.rooms:
            z = door_swing_zone(o, walls[o.wall_ref], r)
            if z is not None:
                zones[r.room_id].append(z)
    return zones


def _staircase(lower: FloorLayout, upper: FloorLayout, own_lo: np.ndarray, own_hi: np.ndarray,
               spec: LayoutSpec, rng: PRNGStream, f: int) -> Staircase:
    res = spec.grid_resolution
    ny, nx = own_lo.shape
    sw, sl = spec.stair_size
    zones_lo = door_zones(lower)
    zones_hi = door_zones(upper)
    shapes_lo = {r.room_id: shapely.prepared.prep(r.shape) for r in lower.rooms}
    shapes_hi = {r.room_id: shapely.prepared.prep(r.shape) for r in upper.rooms}
    ids_lo = [r.room_id for r in sorted(lower.rooms, key=lambda r: r.room_id)]
    ids_hi = [r.room_id for r in sorted(upper.rooms, key=lambda r: r.room_id)]
    step = max(1, round(0.5 / res))
    candidates = []
    for wc, lc, run in ((round(sw / res), round(sl / res), "+y"), (round(sl / res), round(sw / res), "+x")):
        for j0 in range(1, ny - lc, step):
            for i0 in range(1, nx - wc, step):
                blk_lo = own_lo[j0 : j0 + lc, i0 : i0 + wc]
                blk_hi = own_hi[j0 : j0 + lc, i0 : i0 + wc]
                a, b = int(blk_lo[0, 0]), int(blk_hi[0, 0])
                if a < 0 or b < 0 or (blk_lo != a).any() or (blk_hi != b).any():
                    continue
                ra, rb = ids_lo[a], ids_hi[b]
                box = shapely.box(i0 * res, j0 * res, (i0 + wc) * res, (j0 + lc) * res)
                if not (shapes_lo[ra].contains(box) and shapes_hi[rb].contains(box)):
                    continue
                if any(z.intersects(box) and z.intersection(box).area > 0 for z in zones_lo[ra] + zones_hi[rb]):
                    continue
                candidates.append((box, run, ra, rb))
    if not candidates:
        raise _Reject("no_staircase_site")
    box, run, ra, rb = rng.choice(candidates)
    if rng.bernoulli(0.5):
        run = "-" + run[1]
    return Staircase(f"stair_{f}", polygon_vertices(box), f, f + 1, run, ra, rb)


# ---------------------------------------------------------------- connectivity


def room_graph(plan: FloorPlan) -> dict[str, set[str]]:
    graph: dict[str, set[str]] = {r.room_id: set() for r in plan.rooms()}
    for o in plan.openings():
        a, b = o.connects
        if a in graph and b in graph:
            graph[a].add(b)
            graph[b].add(a)
    for s in plan.staircases:
        if s.lower_room in graph and s.upper_room in graph:
            graph[s.lower_room].add(s.upper_room)
            graph[s.upper_room].add(s.lower_room)
    return graph


def check_connectivity(plan: FloorPlan) -> bool:
    """True iff rooms across all floors form one component via interior doors and staircases."""
    graph = room_graph(plan)
    if not graph:
        return True
    start = min(graph)
    seen = {start}
    todo = deque([start])
    while todo:
        cur = todo.popleft()
        for nxt in sorted(graph[cur]):
            if nxt not in seen:
                seen.add(nxt)
                todo.append(nxt)
    return len(seen) == len(graph)

