from pathlib import Path

import pytest

from qldpc_mismatch.codes import GbCodeSpec, StabilizerCode, build_gb_code, load_code

CODES = Path(__file__).resolve().parent.parent / "codes"
FIVE_QUBIT_ROWS = ["XZZXI", "IXZZX", "XIXZZ", "ZXIXZ"]

# acceptance verdicts, echoed in the terminal summary
CRITERIA: list[tuple[str, bool, str]] = []


@pytest.fixture(scope="session")
def five_qubit() -> StabilizerCode:
    return StabilizerCode.from_strings(FIVE_QUBIT_ROWS, name="five_qubit")


@pytest.fixture(scope="session")
def gb18() -> StabilizerCode:
    return build_gb_code(GbCodeSpec(9, (0, 1, 2), (0, 1, 5)), name="gb18")


@pytest.fixture(scope="session")
def gb48() -> StabilizerCode:
    return load_code(CODES / "gb48.code")


@pytest.fixture(scope="session")
def codes_dir() -> Path:
    return CODES


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in CRITERIA:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}  {detail}")
