"""End-to-end scene generation: layout, furnishing, dressing and physics for one scene key."""

from __future__ import annotations

import json
from collections.abc import Mapping
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any

from scenesmith.catalog import ROOM_TYPES, Catalog, load_catalog, load_sample_catalog
from scenesmith.dress import assign_materials, place_lights
from scenesmith.errors import InvalidSpec, ParseError, PlacementExhausted, RuleConflict, SemanticMismatch
from scenesmith.furnish import SceneGraph, place_basic_assets, place_interactables
from scenesmith.layout import LayoutSpec, generate_floorplan
from scenesmith.physicalize import annotate_architecture, annotate_physics, configure_joints
from scenesmith.rng import PRNGStream
from scenesmith.scenefile import GenerationHeader, PhysicsSection, SceneDocument, build_document

CONFIG_SCHEMA = "agentworld-config/1"
DEFAULT_COUNTS = {t: (10, 5) for t in ROOM_TYPES}
FOOTPRINT_RANGE = (4.0, 7.0)
FOOTPRINT_STEP = 0.25
MAX_FOOTPRINT_ASPECT = 1.6
_SEED_MASK = (1 << 63) - 1

# requests drawn from when populating a fresh scene with interactables
POPULATION = {
    "kitchen": ("food", "food", "food", "plate", "cup", "bowl", "pitcher", "fridge", "microwave", "stove",
                "kitchen_cabinet", "sponge", "pot", "knife"),
    "living_room": ("book", "book", "cup", "pitcher", "trash", "toy_car", "teddy_bear", "rubber_duck", "bottle"),
    "bedroom": ("pillow", "book", "alarm_clock", "nightstand", "closet", "clothes_rack", "dresser", "toy_robot"),
}
POPULATION_SIZE = (3, 6)


@dataclass(frozen=True)
class SceneKey:
    room_type: str
    layout_index: int
    variant: int

    def __str__(self) -> str:
        return f"{self.room_type}/L{self.layout_index:02d}/V{self.variant:02d}"

    @classmethod
    def parse(cls, text: str) -> SceneKey:
        room, layout, variant = text.split("/")
        return cls(room, int(layout[1:]), int(variant[1:]))


@dataclass(frozen=True)
class RunConfig:
    catalog_path: str | None = None
    out_dir: str = "scenes"
    layout_overrides: dict[str, Any] = field(default_factory=dict)
    counts: dict[str, tuple[int, int]] = field(default_factory=lambda: dict(DEFAULT_COUNTS))
    seed: int = 0
    jobs: int = 1
    dr: bool = False
    populate: bool = True

    def validate(self) -> None:
        if not self.counts:
            raise InvalidSpec("counts must name at least one room type")
        for room, (n_layouts, n_variants) in self.counts.items():
            if room not in ROOM_TYPES:
                raise InvalidSpec(f"unknown room type {room!r} in counts")
            if n_layouts < 1 or n_variants < 1:
                raise InvalidSpec(f"counts for {room} must be positive")
        if self.jobs < 1:
            raise InvalidSpec("jobs must be >= 1")
        if not 0 <= self.seed <= 0xFFFFFFFFFFFFFFFF:
            raise InvalidSpec("seed must fit in 64 bits")
        allowed = {f.name for f in fields(LayoutSpec)} - {"rooms_requested"}
        unknown = set(self.layout_overrides) - allowed
        if unknown:
            raise InvalidSpec(f"unknown layout overrides {sorted(unknown)}")

    def keys(self) -> list[SceneKey]:
        out = []
        for room in ROOM_TYPES:
            if room not in self.counts:
                continue
            n_layouts, n_variants = self.counts[room]
            out += [SceneKey(room, i, v) for i in range(n_layouts) for v in range(n_variants)]
        return out

    def fingerprint(self) -> dict[str, Any]:
        """Everything that influences scene content (not paths or parallelism)."""
        return {
            "seed": self.seed,
            "dr": self.dr,
            "populate": self.populate,
            "layout_overrides": dict(sorted(self.layout_overrides.items())),
        }


def config_from_document(doc: Mapping[str, Any]) -> RunConfig:
    if doc.get("schema_version") != CONFIG_SCHEMA:
        raise ParseError(f"schema_version must be {CONFIG_SCHEMA!r}", "config")
    known = {"schema_version", "catalog", "out", "seed", "jobs", "dr", "populate", "counts", "layout"}
    unknown = set(doc) - known
    if unknown:
        raise ParseError(f"unknown keys {sorted(unknown)}", "config")
    kwargs: dict[str, Any] = {}
    if "catalog" in doc:
        kwargs["catalog_path"] = doc["catalog"]
    if "out" in doc:
        kwargs["out_dir"] = doc["out"]
    for key in ("seed", "jobs"):
        if key in doc:
            if not isinstance(doc[key], int) or isinstance(doc[key], bool):
                raise ParseError(f"{key} must be an integer", f"config.{key}")
            kwargs[key] = doc[key]
    for key in ("dr", "populate"):
        if key in doc:
            if not isinstance(doc[key], bool):
                raise ParseError(f"{key} must be a boolean", f"config.{key}")
            kwargs[key] = doc[key]
    if "counts" in doc:
        counts = {}
        for room, pair in doc["counts"].items():
            if not (isinstance(pair, list) and len(pair) == 2 and all(isinstance(v, int) for v in pair)):
                raise ParseError("counts entries are [n_layouts, n_variants]", f"config.counts.{room}")
            counts[room] = (pair[0], pair[1])
        kwargs["counts"] = counts
    if "layout" in doc:
        if not isinstance(doc["layout"], dict):
            raise ParseError("layout must be an object", "config.layout")
        kwargs["layout_overrides"] = dict(doc["layout"])
    return RunConfig(**kwargs)


def load_config(path: str | Path) -> RunConfig:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, f"{path}:{exc.lineno}:{exc.colno}") from exc
    if not isinstance(doc, dict):
        raise ParseError("config must be an object", str(path))
    return config_from_document(doc)


def resolve_catalog(path: str | None) -> Catalog:
    return load_sample_catalog() if path is None else load_catalog(path)


def _seed(master: int, *path) -> int:
    return PRNGStream(master, tuple(path)).next_u64() & _SEED_MASK


def _footprint(master: int, room_type: str, layout_index: int) -> tuple[float, float]:
    rng = PRNGStream(master, ("footprint", room_type, layout_index))
    steps = int(round((FOOTPRINT_RANGE[1] - FOOTPRINT_RANGE[0]) / FOOTPRINT_STEP)) + 1
    while True:
        w = FOOTPRINT_RANGE[0] + FOOTPRINT_STEP * rng.integers(0, steps)
        d = FOOTPRINT_RANGE[0] + FOOTPRINT_STEP * rng.integers(0, steps)
        if max(w, d) / min(w, d) <= MAX_FOOTPRINT_ASPECT:
            return w, d


def layout_spec_for(key: SceneKey, config: RunConfig) -> LayoutSpec:
    overrides = dict(config.layout_overrides)
    if "footprint" not in overrides:
        overrides["footprint"] = _footprint(config.seed, key.room_type, key.layout_index)
    if "thresholds" in overrides and isinstance(overrides["thresholds"], dict):
        from scenesmith.layout import Thresholds

        overrides["thresholds"] = Thresholds(**overrides["thresholds"])
    for k in ("footprint", "stair_size"):
        if k in overrides:
            overrides[k] = tuple(overrides[k])
    return LayoutSpec(rooms_requested=(key.room_type,), **overrides)


def populate(scene: SceneGraph, catalog: Catalog, seed: int) -> SceneGraph:
    """Best-effort random interactables per room; requests that cannot be placed are skipped."""
    rng = PRNGStream(seed, ("populate",))
    for room in sorted(scene.floorplan.rooms(), key=lambda r: r.room_id):
        rrng = rng.child(room.room_id)
        pool = POPULATION.get(room.room_type, ())
        n = rrng.integers(POPULATION_SIZE[0], POPULATION_SIZE[1] + 1)
        for k in range(n):
            term = rrng.choice(pool)
            try:
                scene = place_interactables(scene, catalog, [term], _seed(seed, "populate", room.room_id, k))
            except (PlacementExhausted, SemanticMismatch, RuleConflict):
                continue
    return scene


def generate_scene(key: SceneKey, config: RunConfig, catalog: Catalog | None = None) -> SceneDocument:
    """Deterministic in (key, config fingerprint, catalog); independent of scheduling."""
    catalog = catalog or resolve_catalog(config.catalog_path)
    spec = layout_spec_for(key, config)
    layout_seed = _seed(config.seed, "layout", key.room_type, key.layout_index)
    variant_seed = _seed(config.seed, "variant", key.room_type, key.layout_index, key.variant)
    plan = generate_floorplan(spec, catalog, layout_seed)
    scene = place_basic_assets(plan, catalog, variant_seed)
    if config.populate:
        scene = populate(scene, catalog, variant_seed)
    return dress_scene(scene, catalog, GenerationHeader(str(key), config.seed, layout_seed, key.variant, spec, dr=config.dr),
                       variant_seed)


def dress_scene(scene: SceneGraph, catalog: Catalog, header: GenerationHeader, seed: int) -> SceneDocument:
    materials = assign_materials(scene, catalog, seed, dr=header.dr)
    lights = place_lights(scene, seed, dr=header.dr, catalog=catalog)
    physics = PhysicsSection(tuple(annotate_physics(scene, catalog, seed)), tuple(annotate_architecture(scene)))
    joints = configure_joints(scene, catalog, seed)
    return build_document(header, scene, catalog, materials, lights, physics, joints)


def scene_filename(doc: SceneDocument) -> str:
    return f"{doc.content_hash}.scene.json"


def with_overrides(config: RunConfig, **kwargs) -> RunConfig:
    return replace(config, **{k: v for k, v in kwargs.items() if v is not None})
