import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from seumrm.reproduce import CaseStudy, data_path  # noqa: E402


@pytest.fixture(scope="session")
def case() -> CaseStudy:
    """Shipped library, FIR graph and C1..C4 with a shared model cache."""
    return CaseStudy()


@pytest.fixture(scope="session")
def c1(case):
    return case.model("C1", 1.0, 0.99)


@pytest.fixture(scope="session")
def c4(case):
    return case.model("C4", 1.0, 0.99)


@pytest.fixture
def data():
    return data_path


ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")
