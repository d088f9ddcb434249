from pathlib import Path

import pytest

from hcplan.actions import bundled_ledger
from hcplan.env import load_bundled
from hcplan.tasks import bundled_tasks

FIXTURES = Path(__file__).parent / "fixtures"

COFFEETABLE_LOW = """1. walk | kitchen
2. grab | coffeepot
3. walk | livingroom
4. placeon | coffeepot | coffeetable
5. walk | kitchen
6. grab | cupcake
7. walk | livingroom
8. placeon | cupcake | coffeetable"""

COFFEETABLE_HIGH = """1. Walk to the kitchen
2. Pick up the coffeepot
3. Walk to the living room
4. Put the coffeepot on the coffeetable
5. Walk over to the kitchen
6. Get the cupcake
7. Go to the living room
8. Place the cupcake on the coffeetable"""


def fixture_text(name: str) -> str:
    return (FIXTURES / name).read_text(encoding="utf-8")


@pytest.fixture(scope="session")
def desk():
    return load_bundled("desk")


@pytest.fixture(scope="session")
def pack():
    return bundled_tasks()


@pytest.fixture(scope="session")
def ledger():
    return bundled_ledger()


def pytest_terminal_summary(terminalreporter):
    lines = []
    for outcome in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(outcome, []):
            nodeid = getattr(rep, "nodeid", "")
            if "test_acceptance.py::test_criterion_" in nodeid and rep.when == "call" or (
                    outcome == "error" and "test_criterion_" in nodeid):
                name = nodeid.split("::test_criterion_", 1)[1]
                number, title = name.split("_", 1)
                lines.append((int(number), title.replace("_", " "), "PASS" if outcome == "passed" else "FAIL"))
    if lines:
        terminalreporter.section("acceptance criteria")
        for number, title, verdict in sorted(lines):
            terminalreporter.write_line(f"criterion {number:2d} ({title}): {verdict}")
