import math

import numpy as np
import pytest
from hypothesis import settings

from trajsc.groups import WarpGroup

settings.register_profile("default", deadline=None, max_examples=40, derandomize=True)
settings.load_profile("default")

G = WarpGroup


def rot(theta):
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


def random_linear(group, rng):
    """A random linear part inside ``group``."""
    R = rot(rng.uniform(0, 2 * math.pi))
    flip = np.diag([1.0, -1.0]) if rng.random() < 0.5 else np.eye(2)
    s = math.exp(rng.uniform(math.log(0.5), math.log(2)))
    if group == G.RIGID:
        return R
    if group == G.RIGID_REF:
        return R @ flip
    if group == G.SIM:
        return s * R
    if group == G.SIM_REF:
        return s * R @ flip
    sx, sy = (math.exp(rng.uniform(math.log(0.5), math.log(2))) for _ in range(2))
    if group == G.SIM_ANI:
        return R @ np.diag([sx, sy])
    return R @ np.array([[1.0, rng.uniform(-0.5, 0.5)], [0.0, 1.0]]) @ np.diag([sx, sy])


def warp_about(pts, L, t=(0.0, 0.0), center=(200.0, 200.0)):
    c = np.asarray(center)
    return (np.asarray(pts) - c) @ np.asarray(L).T + c + np.asarray(t)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split("criterion")[1].split(":")[0])):
            terminalreporter.write_line(line)
