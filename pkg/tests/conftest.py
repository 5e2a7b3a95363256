import math

import pytest

from besr.config import default_config_text, parse_config

OMEGA0 = 2 * math.pi * 4.44e9

# Lines collected by the acceptance suite, echoed in the terminal summary.
ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def cfg():
    return parse_config(default_config_text(), source="default.conf")


@pytest.fixture(scope="session")
def default_config_path(tmp_path_factory):
    p = tmp_path_factory.mktemp("cfg") / "default.conf"
    p.write_text(default_config_text())
    return p


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
