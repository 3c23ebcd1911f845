import numpy as np
import pytest
from hypothesis import HealthCheck, settings

import report

settings.register_profile(
    "default", max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


def pytest_terminal_summary(terminalreporter):
    if report.LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in sorted(report.LINES, key=lambda s: int(s.split("criterion")[1].split(":")[0])):
            terminalreporter.write_line(line)


def random_complex(rng, N):
    return (rng.standard_normal((N, N)) + 1j * rng.standard_normal((N, N))) / np.sqrt(2)


def random_hermitian(rng, N):
    Z = random_complex(rng, N)
    return 0.5 * (Z + Z.conj().T)


def random_skew(rng, N):
    Z = random_complex(rng, N)
    return 0.5 * (Z - Z.conj().T)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
