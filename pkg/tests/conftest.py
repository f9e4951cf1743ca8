import numpy as np
import pytest

from subradiance.kernel import build_coupling_matrix
from subradiance.lattice import REFERENCE_LABELING, FieldConfig, build_lattice
from subradiance.spectrum import decompose


class Setup:
    def __init__(self, nx, ny, nz, spacing, labeling=REFERENCE_LABELING):
        self.field = FieldConfig()
        self.geom = build_lattice(nx, ny, nz, spacing, labeling=labeling)
        self.coupling = build_coupling_matrix(self.geom, self.field)
        self.dec = decompose(self.coupling)


@pytest.fixture(scope="session")
def preset():
    """Cached reference configurations keyed by ``(nx, ny, nz, spacing)``."""
    cache = {}

    def get(nx, ny, nz, spacing):
        key = (nx, ny, nz, spacing)
        if key not in cache:
            cache[key] = Setup(nx, ny, nz, spacing)
        return cache[key]

    return get


@pytest.fixture
def rng():
    return np.random.default_rng(20161)


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def verdict(request):
    """Record one PASS/FAIL line for the acceptance summary and assert it."""

    def record(label: str, ok: bool, detail: str):
        line = f"{'PASS' if ok else 'FAIL'}  {label}: {detail}"
        print(line)
        ACCEPTANCE_LINES.append(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
