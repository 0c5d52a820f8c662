from pathlib import Path

import pytest

from solarmesh import synthetic

REPO = Path(__file__).resolve().parent.parent
DATA = REPO / "data"

ACCEPTANCE_RESULTS: dict[str, tuple[bool, str]] = {}


@pytest.fixture
def demo_world():
    return synthetic.demo_world()


@pytest.fixture
def demo_config():
    return DATA / "demo" / "config.json"


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(ACCEPTANCE_RESULTS):
        ok, detail = ACCEPTANCE_RESULTS[name]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
