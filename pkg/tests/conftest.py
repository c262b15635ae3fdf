from __future__ import annotations

from pathlib import Path

import pytest

from scenesmith.catalog import load_sample_catalog
from scenesmith.cli import run_generate
from scenesmith.pipeline import RunConfig


@pytest.fixture(scope="session")
def catalog():
    return load_sample_catalog()


@pytest.fixture(scope="session")
def corpus(tmp_path_factory) -> tuple[Path, dict]:
    """The default 150-scene corpus at master seed 7, generated once per session."""
    out = tmp_path_factory.mktemp("corpus")
    status, result = run_generate(RunConfig(out_dir=str(out), seed=7))
    assert status == 0, result["index"]["failures"]
    return out, result


@pytest.fixture(scope="session")
def corpus_docs(corpus):
    from scenesmith.scenefile import parse_scene

    out, _ = corpus
    return [(p, parse_scene(p.read_bytes())) for p in sorted(out.glob("*.scene.json"))]


# one line per acceptance criterion, printed at the end of the run
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[n])
