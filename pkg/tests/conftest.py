import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from dpconvex.noise import RngStream

settings.register_profile("default", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def rng():
    return RngStream(1234, (0,))


def ball_points(gen, n, d, radius=1.0):
    g = gen.standard_normal((n, d))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    return g * (radius * gen.random(n) ** (1.0 / d))[:, None]


VERDICTS: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in VERDICTS:
            terminalreporter.write_line(line)
