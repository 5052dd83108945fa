from pathlib import Path

import pytest

from jgrekit.ir import bundled_corpus_dir, load_corpus
from jgrekit.ir.config import load_config

FIXTURES = Path(__file__).parent / "fixtures"


def fixture_path(name: str) -> Path:
    return FIXTURES / name


def load_fixture(name: str, config=None):
    return load_corpus([FIXTURES / name], config)


@pytest.fixture(scope="session")
def corpus_db():
    """The bundled corpus with the bundled greylist applied."""
    return load_corpus([bundled_corpus_dir()], load_config())


@pytest.fixture
def audio_db():
    return load_fixture("audio_service.jgr")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if rep.when == "call":
        item.rep_call = rep


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
