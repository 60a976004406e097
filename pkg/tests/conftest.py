import os

import numpy as np
import pytest

from mgcss import channel

# criterion number -> (title, passed, detail); filled by the acceptance suite
ACCEPTANCE = {}


def pytest_collection_modifyitems(config, items):
    if os.environ.get("MGCSS_EXPENSIVE"):
        return
    skip = pytest.mark.skip(reason="set MGCSS_EXPENSIVE=1 to run")
    for item in items:
        if "expensive" in item.keywords:
            item.add_marker(skip)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(ACCEPTANCE):
        title, ok, detail = ACCEPTANCE[num]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  [{num:2d}] {title}: {detail}")


@pytest.fixture
def record_criterion():
    def record(num, title, ok, detail):
        ACCEPTANCE[num] = (title, bool(ok), detail)
        print(f"{'PASS' if ok else 'FAIL'}  [{num:2d}] {title}: {detail}")

    return record


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def table_presets():
    """Every fitted preset row keyed by label, with Nakagami at m = 2."""
    return {channel.preset(name, **kw).label: channel.preset(name, **kw) for name, kw in channel.TABLE_ROWS}
