import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from pvsc import ingestion  # noqa: E402


@pytest.fixture(scope="session")
def catalog():
    return ingestion.load_catalog("reference")


@pytest.fixture(scope="session")
def regions():
    return ingestion.load_regions("builtin")


@pytest.fixture(scope="session")
def national(regions):
    return ingestion.synthesize_profiles(ingestion.find_region(regions, "national"), price_seed=0)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    report = getattr(mod, "REPORT", None)
    if not report:
        return
    terminalreporter.section("acceptance criteria")
    for _, _, line in sorted(report, key=lambda r: r[0]):
        terminalreporter.write_line(line)
