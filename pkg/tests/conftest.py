import numpy as np
import pytest

from mgskel.core import SkeletonSequence

_ACCEPTANCE = []


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(name): acceptance criterion reported in the summary")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is not None and rep.when == "call":
        _ACCEPTANCE.append((marker.args[0], rep.outcome, rep.duration))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, outcome, duration in _ACCEPTANCE:
        status = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"{status}  {name}  ({duration:.2f}s)")


def random_sequence(rng, n, v=5, label=None, sample_id="rand"):
    """Valid sequence with coordinates in [0, 500) and confidences in [0, 1]."""
    kp = np.empty((n, v, 3))
    kp[..., :2] = rng.uniform(0, 500, (n, v, 2))
    kp[..., 2] = rng.uniform(0, 1, (n, v))
    return SkeletonSequence(kp, label, sample_id)


def sentinel_sequence(n, v=3):
    """Frame t carries x = t, y = 1000 + t at every joint, confidence 1."""
    kp = np.zeros((n, v, 3))
    kp[..., 0] = np.arange(n)[:, None]
    kp[..., 1] = 1000 + np.arange(n)[:, None]
    kp[..., 2] = 1.0
    return SkeletonSequence(kp, label=1, sample_id="sentinel")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
