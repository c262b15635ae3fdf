"""Command-line front end: generate, validate, preview, manifest and lint."""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

from scenesmith.catalog import lint_catalog
from scenesmith.errors import FloorOutOfRange, InsufficientAssets, ParseError, SceneSmithError
from scenesmith.pipeline import (
    RunConfig,
    SceneKey,
    generate_scene,
    load_config,
    resolve_catalog,
)
from scenesmith.scenefile import parse_scene, render_floorplan_svg, validate_scene
from scenesmith.taskgen import EMBODIMENTS, batch_manifest, load_templates, manifest_document

INDEX_NAME = "index.json"
INDEX_SCHEMA = "agentworld-index/1"
CATALOG_ENV = "SCENESMITH_CATALOG"

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_USAGE = 2
EXIT_FAILED = 3


def _dump(obj) -> bytes:
    return (json.dumps(obj, sort_keys=True, indent=1, allow_nan=False) + "\n").encode("utf-8")


def _err(msg: str) -> None:
    print(msg, file=sys.stderr)


# ---------------------------------------------------------------- generate

_WORKER_CATALOG = None


def _worker(args: tuple[str, RunConfig]):
    global _WORKER_CATALOG
    key_text, config = args
    if _WORKER_CATALOG is None:
        _WORKER_CATALOG = resolve_catalog(config.catalog_path)
    from scenesmith.scenefile import serialize_scene

    t0 = time.perf_counter()
    try:
        doc = generate_scene(SceneKey.parse(key_text), config, _WORKER_CATALOG)
    except SceneSmithError as exc:
        return key_text, None, None, f"{type(exc).__name__}: {exc}", time.perf_counter() - t0
    return key_text, doc.content_hash, serialize_scene(doc), None, time.perf_counter() - t0


def run_generate(config: RunConfig) -> tuple[int, dict]:
    """Generate (or resume) the corpus; returns the exit status and the index document."""
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    fingerprint = config.fingerprint()
    catalog = resolve_catalog(config.catalog_path)
    fingerprint["catalog"] = hashlib.sha256(_dump(catalog.to_document())).hexdigest()
    index_path = out / INDEX_NAME
    previous: dict[str, str] = {}
    if index_path.exists():
        try:
            old = json.loads(index_path.read_text(encoding="utf-8"))
            if old.get("config") == fingerprint:
                previous = {e["key"]: e["hash"] for e in old.get("scenes", [])}
        except (json.JSONDecodeError, KeyError, AttributeError):
            previous = {}

    keys = [str(k) for k in config.keys()]
    todo = [k for k in keys if not (k in previous and (out / f"{previous[k]}.scene.json").exists())]
    results: dict[str, tuple[str | None, str | None]] = {k: (previous[k], None) for k in keys if k not in todo}
    written = 0
    timings = []
    jobs = [(k, config) for k in todo]
    if config.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=config.jobs) as pool:
            stream = pool.map(_worker, jobs, chunksize=max(1, len(jobs) // (config.jobs * 4)))
            for key, digest, data, error, dt in stream:
                written += _store(out, key, digest, data, error, results)
                timings.append(dt)
    else:
        global _WORKER_CATALOG
        _WORKER_CATALOG = catalog
        for job in jobs:
            key, digest, data, error, dt = _worker(job)
            written += _store(out, key, digest, data, error, results)
            timings.append(dt)

    scenes = [{"key": k, "hash": results[k][0], "file": f"{results[k][0]}.scene.json"} for k in keys if results[k][0]]
    failures = [{"key": k, "error": results[k][1]} for k in keys if results[k][1]]
    index = {"schema_version": INDEX_SCHEMA, "config": fingerprint, "scenes": scenes, "failures": failures}
    index_bytes = _dump(index)
    index_path.write_bytes(index_bytes)
    summary = {"generated": len(todo), "written": written, "total": len(scenes), "failed": len(failures),
               "index_hash": hashlib.sha256(index_bytes).hexdigest(), "timings": timings}
    return (EXIT_FAILED if failures else EXIT_OK), {"index": index, "summary": summary}


def _store(out: Path, key, digest, data, error, results) -> int:
    if error is not None:
        results[key] = (None, error)
        return 0
    results[key] = (digest, None)
    path = out / f"{digest}.scene.json"
    if path.exists():
        return 0
    tmp = path.with_suffix(".tmp")
    tmp.write_bytes(data)
    os.replace(tmp, path)
    return 1


def cmd_generate(args) -> int:
    try:
        config = load_config(args.config) if args.config else RunConfig()
        overrides = {}
        if args.seed is not None:
            overrides["seed"] = args.seed
        if args.out is not None:
            overrides["out_dir"] = args.out
        if args.jobs is not None:
            overrides["jobs"] = args.jobs
        if args.dr:
            overrides["dr"] = True
        if args.no_populate:
            overrides["populate"] = False
        if args.catalog or (config.catalog_path is None and os.environ.get(CATALOG_ENV)):
            overrides["catalog_path"] = args.catalog or os.environ[CATALOG_ENV]
        if args.counts:
            overrides["counts"] = _parse_counts(args.counts)
        config = replace(config, **overrides)
        config.validate()
        resolve_catalog(config.catalog_path)
    except (SceneSmithError, OSError, ValueError) as exc:
        _err(f"config error: {exc}")
        return EXIT_USAGE
    status, result = run_generate(config)
    s = result["summary"]
    timings = sorted(s["timings"])
    median = timings[len(timings) // 2] if timings else 0.0
    print(f"{s['total']} scenes in index ({s['written']} new files, {s['failed']} failed); "
          f"median {median * 1000:.1f} ms/scene; index sha256 {s['index_hash']}")
    for f in result["index"]["failures"]:
        print(f"FAILED {f['key']}: {f['error']}")
    return status


def _parse_counts(items: list[str]) -> dict[str, tuple[int, int]]:
    """``room=LxV`` items, e.g. ``bedroom=1x1``."""
    out = {}
    for item in items:
        room, _, spec = item.partition("=")
        layouts, _, variants = spec.partition("x")
        out[room] = (int(layouts), int(variants))
    return out


# ---------------------------------------------------------------- validate


def _scene_paths(paths: list[str]) -> list[Path]:
    out = []
    for p in paths:
        path = Path(p)
        if path.is_dir():
            out += sorted(path.glob("*.scene.json"))
        elif path.is_file():
            out.append(path)
        else:
            raise FileNotFoundError(p)
    return out


def cmd_validate(args) -> int:
    try:
        files = _scene_paths(args.paths)
    except OSError as exc:
        _err(f"unreadable path: {exc}")
        return EXIT_USAGE
    failed = 0
    for path in files:
        try:
            data = path.read_bytes()
        except OSError as exc:
            _err(f"unreadable path: {path}: {exc}")
            return EXIT_USAGE
        report = validate_scene(data)
        if report.ok:
            if args.verbose:
                print(f"OK   {path}")
            continue
        failed += 1
        print(f"FAIL {path}")
        for issue in report.errors:
            print(f"  {issue.code} {issue.path}: {issue.message}")
    print(f"{len(files)} files, {failed} with errors")
    return EXIT_INVALID if failed else EXIT_OK


# ---------------------------------------------------------------- preview


def cmd_preview(args) -> int:
    try:
        data = Path(args.scene).read_bytes()
        report = validate_scene(data)
        if not report.ok:
            _err(f"invalid scene: {report.errors[0].code} {report.errors[0].message}")
            return EXIT_USAGE
        svg = render_floorplan_svg(parse_scene(data), args.floor)
    except (OSError, ParseError, FloorOutOfRange) as exc:
        _err(f"preview failed: {exc}")
        return EXIT_USAGE
    out = Path(args.out) if args.out else Path(args.scene).with_suffix(f".floor{args.floor}.svg")
    out.write_bytes(svg)
    print(f"wrote {out}")
    return EXIT_OK


# ---------------------------------------------------------------- manifest


def cmd_manifest(args) -> int:
    try:
        templates = load_templates(args.templates) if args.templates else load_templates()
        catalog = resolve_catalog(args.catalog or os.environ.get(CATALOG_ENV))
        files = _scene_paths([args.scenes])
        scenes = []
        for path in files:
            doc = parse_scene(path.read_bytes())
            scenes.append((doc.content_hash, doc.graph()))
    except (OSError, SceneSmithError) as exc:
        _err(f"manifest input error: {exc}")
        return EXIT_USAGE
    counts = None
    if args.counts:
        a, _, b = args.counts.partition("x")
        counts = {t.template_id: (int(a), int(b)) for t in templates}
    try:
        manifest = batch_manifest(templates, scenes, counts, args.seed, catalog, embodiment=args.embodiment,
                                  vary_scenes=args.vary_scenes)
    except InsufficientAssets as exc:
        _err(f"insufficient assets for template {exc.template_id}: {exc}")
        return EXIT_FAILED
    doc = manifest_document(manifest)
    out = Path(args.out)
    out.write_bytes(_dump(doc))
    for b in manifest.batches:
        print(f"{b.template_id}: {b.n_assets} x {b.n_sequences} = {len(b.instances)}")
    print(f"total {manifest.total} instances -> {out}")
    return EXIT_OK


# ---------------------------------------------------------------- lint


def cmd_lint(args) -> int:
    path = args.catalog or os.environ.get(CATALOG_ENV)
    try:
        catalog = resolve_catalog(path)
    except (OSError, SceneSmithError) as exc:
        _err(f"catalog error: {exc}")
        return EXIT_USAGE
    report = lint_catalog(catalog)
    for w in report.warnings:
        print(f"{w.code} {w.subject}: {w.message}")
    print(f"{len(catalog.assets)} assets, {len(catalog.materials)} materials, {len(report.warnings)} warnings")
    return EXIT_OK if report.ok else EXIT_INVALID


# ---------------------------------------------------------------- entry point


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="scenesmith", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="generate the scene corpus")
    g.add_argument("--config", help="agentworld-config/1 JSON file")
    g.add_argument("--catalog", help=f"catalog path (default: ${CATALOG_ENV} or the bundled sample)")
    g.add_argument("--seed", type=int)
    g.add_argument("--out")
    g.add_argument("--jobs", type=int)
    g.add_argument("--dr", action="store_true", help="domain-randomization profile")
    g.add_argument("--counts", nargs="+", metavar="ROOM=LxV", help="e.g. bedroom=1x1")
    g.add_argument("--no-populate", action="store_true", help="skip random interactables")
    g.set_defaults(func=cmd_generate)

    v = sub.add_parser("validate", help="validate scene files or directories")
    v.add_argument("paths", nargs="*")
    v.add_argument("-v", "--verbose", action="store_true")
    v.set_defaults(func=cmd_validate)

    pv = sub.add_parser("preview", help="render one floor as SVG")
    pv.add_argument("scene")
    pv.add_argument("--floor", type=int, default=0)
    pv.add_argument("--out")
    pv.set_defaults(func=cmd_preview)

    m = sub.add_parser("manifest", help="build an episode manifest over a scene corpus")
    m.add_argument("--scenes", required=True, help="directory of scene files")
    m.add_argument("--templates", help="task template file (default: bundled)")
    m.add_argument("--catalog")
    m.add_argument("--seed", type=int, default=0)
    m.add_argument("--out", default="manifest.json")
    m.add_argument("--embodiment", choices=EMBODIMENTS, default=EMBODIMENTS[0])
    m.add_argument("--counts", metavar="AxS", help="override every template's counts, e.g. 1x1")
    m.add_argument("--vary-scenes", action="store_true")
    m.set_defaults(func=cmd_manifest)

    lt = sub.add_parser("lint", help="lint a catalog")
    lt.add_argument("catalog", nargs="?")
    lt.set_defaults(func=cmd_lint)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
