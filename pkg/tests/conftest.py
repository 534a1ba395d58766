import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from nlsvirial import Nonlinearity  # noqa: E402
from nlsvirial.solver import DEFAULT_GRID, estimate_threshold, ground_state  # noqa: E402

_ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def acceptance_log():
    """Record one summary line per acceptance criterion."""
    def record(number: int, passed: bool, detail: str):
        line = f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}"
        _ACCEPTANCE_LINES.append(line)
        print(line)
        return passed
    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def sat():
    return Nonlinearity.saturable()


@pytest.fixture(scope="session")
def sqrt_nl():
    return Nonlinearity.square_root()


@pytest.fixture(scope="session")
def sat100(sat):
    return ground_state(sat, 100.0)


@pytest.fixture(scope="session")
def sqrt100(sqrt_nl):
    return ground_state(sqrt_nl, 100.0)


@pytest.fixture(scope="session")
def thresholds(sat, sqrt_nl):
    return {"saturable": estimate_threshold(sat, DEFAULT_GRID),
            "sqrt": estimate_threshold(sqrt_nl, DEFAULT_GRID)}


@pytest.fixture(scope="session")
def sweeps(sat, sqrt_nl, thresholds):
    """Default sweeps for both bounded kinds, run once per session."""
    from nlsvirial.sweep import SWEEP_GRID, default_gammas, run_sweep
    return {"saturable": run_sweep(sat, default_gammas(), SWEEP_GRID),
            "sqrt": run_sweep(sqrt_nl, default_gammas(), SWEEP_GRID)}
