from pathlib import Path

import numpy as np
import pytest

from grslra import manifold

DATA = Path(__file__).parent / "data"
ORTHO_BOUND = 1e-10


class BasisAudit:
    """Records ||U^T U - I||_F for every SubspaceBasis built during the session."""

    def __init__(self):
        self.count = 0
        self.worst = 0.0
        self.failures = 0

    def record(self, entries):
        U = np.asarray(entries, dtype=float)
        if U.ndim != 2 or not 1 <= U.shape[1] < U.shape[0]:
            return
        err = float(np.linalg.norm(U.T @ U - np.eye(U.shape[1])))
        self.count += 1
        self.worst = max(self.worst, err)
        self.failures += err > ORTHO_BOUND


AUDIT = BasisAudit()
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_configure(config):
    original = manifold.SubspaceBasis.__post_init__

    def audited(self):
        AUDIT.record(self.entries)
        original(self)

    manifold.SubspaceBasis.__post_init__ = audited


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])


@pytest.fixture(autouse=True)
def _bases_stay_orthonormal(request):
    before = AUDIT.failures
    yield
    if "invalid_basis" not in request.keywords:
        assert AUDIT.failures == before, f"a SubspaceBasis left the orthonormality bound (worst {AUDIT.worst:.3g})"


@pytest.fixture
def basis_audit():
    return AUDIT


@pytest.fixture
def acceptance_lines():
    return ACCEPTANCE_LINES


@pytest.fixture
def rng():
    return np.random.default_rng(20150101)


@pytest.fixture(scope="session")
def airline_path():
    return DATA / "airline_passengers.csv"


@pytest.fixture(scope="session")
def airline_normalized(airline_path):
    from grslra.io import load_series_csv, normalize_unit

    return normalize_unit(load_series_csv(airline_path).values)[0]
