import numpy as np
import pytest

from lagrangeflow.flux import normalize, velocity_law


def burgers_spec(lo=1.0, hi=3.0, **kw):
    return normalize(lambda r: 0.5 * r ** 2, lambda r: 1.0 * r, (lo, hi), name="burgers", **kw)


def cubic_spec(lo=0.5, hi=2.0, **kw):
    return normalize(lambda r: r ** 3, lambda r: 3.0 * r ** 2, (lo, hi), name="cubic", **kw)


@pytest.fixture
def burgers():
    """Burgers on [1, 3]: no shifts are needed (L = K = 0)."""
    spec = burgers_spec()
    return spec, velocity_law(spec)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


# (criterion number, title, passed, detail) rows filled by test_acceptance.py
ACCEPTANCE: list[tuple[int, str, bool, str]] = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, ok, detail in sorted(ACCEPTANCE, key=lambda row: row[0]):
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  criterion {number}: {title}  [{detail}]")
