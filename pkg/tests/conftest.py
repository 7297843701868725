import numpy as np
import pytest

from ctqw_traps import build_chain, sort_by_decay, spectrum_of, survival_curve


@pytest.fixture(scope="session")
def chain100():
    return build_chain(100, 1.0)


@pytest.fixture(scope="session")
def spectrum100(chain100):
    return sort_by_decay(spectrum_of(chain100))


@pytest.fixture(scope="session")
def curve100(chain100):
    return survival_curve(chain100)


@pytest.fixture(scope="session")
def curves_by_n():
    return {n: survival_curve(build_chain(n, 1.0)) for n in (40, 60, 80, 100)}


@pytest.fixture
def rng():
    return np.random.default_rng(20071)


_ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def criterion():
    """Record one PASS/FAIL line for an acceptance criterion, then assert it."""

    def check(cid: str, ok: bool, detail: str) -> None:
        line = f"{cid:<4} {'PASS' if ok else 'FAIL'}  {detail}"
        _ACCEPTANCE_LINES.append(line)
        print(line)
        assert ok, line

    return check


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE_LINES, key=lambda s: int(s[1:].split()[0])):
            terminalreporter.write_line(line)
