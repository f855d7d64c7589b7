from pathlib import Path

import pytest

from isadiff import fixture_corpus_path, load_corpus

FIXTURES = Path(__file__).parent / "fixtures"
GOLDEN = FIXTURES / "golden"


@pytest.fixture(scope="session")
def corpus():
    return load_corpus(fixture_corpus_path())


@pytest.fixture(scope="session")
def specs(corpus):
    return {s.encoding_id: s for s in corpus}


@pytest.fixture(scope="session")
def vld4(specs):
    return specs["VLD4-A32"]


@pytest.fixture(scope="session")
def str_t32(specs):
    return specs["STR-imm-T32"]


@pytest.fixture(scope="session")
def golden_dir():
    return GOLDEN


_ACCEPTANCE = {}


@pytest.fixture
def acceptance_log():
    return _ACCEPTANCE


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for n in sorted(_ACCEPTANCE):
            terminalreporter.write_line(_ACCEPTANCE[n])
