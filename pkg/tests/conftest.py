import numpy as np
import pytest

from skinny_qr import _backend
from skinny_qr.plan import get_num_threads, set_num_threads

ACCEPTANCE: dict[int, tuple[str, str, str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


@pytest.fixture(params=sorted(_backend.available()))
def backend(request):
    with _backend.use_backend(request.param):
        yield request.param


@pytest.fixture
def four_threads():
    old = get_num_threads()
    set_num_threads(4)
    yield
    set_num_threads(old)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or rep.when != "call":
        return
    number, title = mark.args
    detail = ""
    if rep.failed and call.excinfo is not None:
        detail = str(call.excinfo.value).strip().splitlines()[0][:160]
    ACCEPTANCE[number] = ("PASS" if rep.passed else "FAIL", title, detail)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        status, title, detail = ACCEPTANCE[number]
        line = f"criterion {number:2d}: {status}  {title}"
        if detail:
            line += f"  ({detail})"
        terminalreporter.write_line(line)
