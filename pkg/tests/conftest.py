from pathlib import Path

import pytest

import loopsmith
from loopsmith.reader import parse_source

CORPUS = Path(loopsmith.__file__).parent / "corpus"

_acceptance: dict[str, list] = {}


def load(name: str):
    return parse_source((CORPUS / f"{name}.rkt").read_text(encoding="utf-8"))


@pytest.fixture
def corpus():
    return load


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(key, title): acceptance criterion check")


def pytest_runtest_makereport(item, call):
    mark = item.get_closest_marker("acceptance")
    if mark is None or call.when not in ("setup", "call"):
        return
    key, title = mark.args
    entry = _acceptance.setdefault(key, [title, True])
    if call.excinfo is not None:
        entry[1] = False


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(_acceptance, key=lambda k: int(k[2:])):
        title, ok = _acceptance[key]
        terminalreporter.write_line(f"{key} {'PASS' if ok else 'FAIL'}  {title}")
