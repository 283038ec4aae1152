import numpy as np
import pytest

from patternaug import _kernels


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


BACKENDS = [_kernels.fallback] + ([_kernels.compiled] if _kernels.compiled is not None else [])


@pytest.fixture(params=BACKENDS, ids=lambda m: m.__name__.rsplit(".", 1)[-1])
def backend(request):
    return request.param


# acceptance criteria: one summary line per criterion

def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(num, title): acceptance criterion covered by a test")
    config._criteria = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    num, title = mark.args
    results = item.config._criteria
    detail = "; ".join(f"{k}={v}" for k, v in item.user_properties)
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        status = "PASS" if rep.passed else ("SKIP" if rep.skipped else "FAIL")
        if rep.skipped and isinstance(rep.longrepr, tuple):
            detail = rep.longrepr[2]
        results[num] = (status, title, detail)


def pytest_terminal_summary(terminalreporter, config):
    results = getattr(config, "_criteria", {})
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(results, key=lambda n: (int(str(n).split("-")[0]), str(n))):
        status, title, detail = results[num]
        line = f"criterion {num}: {status} {title}"
        terminalreporter.write_line(line + (f" [{detail}]" if detail else ""))
