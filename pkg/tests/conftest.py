import numpy as np
import pytest

from eogscrub import synth


@pytest.fixture(scope="session")
def small_cfg():
    return synth.SynthConfig(n_subjects=6, seed=11)


@pytest.fixture(scope="session")
def small_pairs(small_cfg):
    return synth.make_dataset(small_cfg)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def full_pairs():
    return synth.make_dataset(synth.SynthConfig(seed=7))


# -- acceptance reporting ------------------------------------------------------
# Tests marked ``@pytest.mark.acceptance(n, title)`` get one PASS/FAIL line in
# the terminal summary; details come from ``record_property("detail", ...)``.

_ACCEPTANCE = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(number, title): numbered acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("acceptance")
    if mark is None or (rep.when != "call" and not rep.failed):
        return
    number, title = mark.args
    details = [str(v) for k, v in item.user_properties if k == "detail"]
    if rep.failed and not details:
        details = [str(call.excinfo.value).splitlines()[0] if call.excinfo else "error"]
    if number not in _ACCEPTANCE or rep.failed:
        _ACCEPTANCE[number] = (title, "PASS" if rep.passed else "FAIL", details)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        title, status, details = _ACCEPTANCE[number]
        terminalreporter.write_line(f"[{status}] {number:>2}. {title}")
        for d in details:
            for line in d.splitlines():
                terminalreporter.write_line(f"        {line}")
