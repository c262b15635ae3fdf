"""Deterministic, seed-driven procedural household scene synthesis."""

__version__ = "0.1.0"

from scenesmith.catalog import Catalog, lint_catalog, load_catalog, load_sample_catalog, query_assets
from scenesmith.layout import LayoutSpec, generate_floorplan
from scenesmith.pipeline import RunConfig, SceneKey, generate_scene
from scenesmith.rng import PRNGStream
from scenesmith.scenefile import parse_scene, serialize_scene, validate_scene

__all__ = [
    "Catalog",
    "LayoutSpec",
    "PRNGStream",
    "RunConfig",
    "SceneKey",
    "generate_floorplan",
    "generate_scene",
    "lint_catalog",
    "load_catalog",
    "load_sample_catalog",
    "parse_scene",
    "query_assets",
    "serialize_scene",
    "validate_scene",
]
