import shutil

import pytest

from bitextforge.pipeline import run_pipeline
from bitextforge.toydata import make_toy_data


@pytest.fixture(scope="session")
def toy_dir(tmp_path_factory):
    """The bundled toy corpora at their default size and seed."""
    d = tmp_path_factory.mktemp("toy")
    make_toy_data(d)
    return d


@pytest.fixture(scope="session")
def toy_run(toy_dir, tmp_path_factory):
    """One full pipeline run over a private copy of the toy corpora."""
    d = tmp_path_factory.mktemp("run1")
    for p in toy_dir.iterdir():
        shutil.copy(p, d / p.name)
    manifest = run_pipeline(d / "pipeline.json")
    return d, manifest


@pytest.fixture
def fresh_toy(toy_dir, tmp_path):
    """A writable copy of the toy corpora for tests that mutate configs or inputs."""
    for p in toy_dir.iterdir():
        shutil.copy(p, tmp_path / p.name)
    return tmp_path


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
