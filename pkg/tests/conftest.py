import csv
from pathlib import Path

import pytest
from hypothesis import settings

GOLDENS = Path(__file__).resolve().parent.parent / "goldens"

settings.register_profile("default", deadline=None, max_examples=100)
settings.load_profile("default")


def read_golden(name):
    with open(GOLDENS / name, newline="") as fh:
        return list(csv.DictReader(line for line in fh if not line.startswith("#")))


@pytest.fixture(scope="session")
def goldens():
    return GOLDENS


# one line per acceptance criterion, filled in by test_acceptance.py
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
