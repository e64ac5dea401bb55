import numpy as np
import pytest

from randlyap import _backend


@pytest.fixture(params=_backend.available())
def backend(request):
    prev = _backend.use_backend(request.param)
    yield request.param
    _backend.use_backend(prev)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


ACCEPTANCE_LINES = []


@pytest.fixture
def criterion(request):
    """Records one pass/fail line for an acceptance criterion.

    Usage: ``with criterion(3, "FTLE exact values") as c: ...; c.detail = "..."``
    """

    class _Rec:
        def __init__(self, num, title):
            self.num, self.title, self.detail = num, title, ""

        def __enter__(self):
            return self

        def __exit__(self, exc_type, exc, tb):
            status = "PASS" if exc_type is None else "FAIL"
            line = f"[{status}] criterion {self.num:>2}: {self.title}"
            if self.detail:
                line += f" | {self.detail}"
            if exc_type is not None and exc_type is not AssertionError:
                line += f" | {exc_type.__name__}: {exc}"
            ACCEPTANCE_LINES.append(line)
            capman = request.config.pluginmanager.getplugin("capturemanager")
            with capman.global_and_fixture_disabled():
                print("\n" + line)
            return False

    return _Rec


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split("criterion")[1].split(":")[0])):
            terminalreporter.write_line(line)
