import sys

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from prescribed_curvature.curve import DiscreteCurve, frames
from prescribed_curvature.geometry import ConformalMetric

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

PERTURBED_TERMS = ((2, 0, 0.1),)
WOBBLY_TERMS = ((2, 0, 0.1), (3, 1, 0.05))


def latitude_nodes(r, N=256, axis=(0.0, 0.0, 1.0), phase=0.0):
    a = np.asarray(axis, float)
    a = a / np.linalg.norm(a)
    helper = np.eye(3)[np.argmin(np.abs(a))]
    u1 = np.cross(helper, a)
    u1 /= np.linalg.norm(u1)
    u2 = np.cross(a, u1)
    th = 2 * np.pi * np.arange(N) / N + phase
    return np.cos(r) * a + np.sin(r) * (np.cos(th)[:, None] * u1 + np.sin(th)[:, None] * u2)


def latitude(r, N=256, axis=(0.0, 0.0, 1.0)):
    return DiscreteCurve(latitude_nodes(r, N, axis), normalize=True)


def wobbly(N=256, r=np.pi / 3, amp=0.15, freq=3):
    """Embedded star-shaped curve about the north pole."""
    th = 2 * np.pi * np.arange(N) / N
    rr = r + amp * np.sin(freq * th)
    return DiscreteCurve(np.stack([np.sin(rr) * np.cos(th), np.sin(rr) * np.sin(th), np.cos(rr)], 1))


def perturb_normal(curve, amp, rng):
    _, n = frames(curve)
    return DiscreteCurve(curve.nodes + amp * rng.uniform(-1, 1, curve.N)[:, None] * n, normalize=True)


def random_unit(rng, n):
    x = rng.normal(size=(n, 3))
    return x / np.linalg.norm(x, axis=1, keepdims=True)


@pytest.fixture(scope="session")
def round_metric():
    return ConformalMetric.round(1.0)


@pytest.fixture(scope="session")
def perturbed_metric():
    return ConformalMetric(PERTURBED_TERMS)


@pytest.fixture(scope="session")
def wobbly_metric():
    return ConformalMetric(WOBBLY_TERMS)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    lines = []
    for mod in list(sys.modules.values()):
        found = getattr(mod, "ACCEPTANCE_LINES", None) if mod is not None else None
        if isinstance(found, dict):
            lines.extend(found.values())
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
