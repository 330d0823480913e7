import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from sdal.burgers import BurgersConfig, BurgersFom, CachedFom
from sdal.params import evenly_spaced_indices, linear_grid, split_initial

settings.register_profile(
    "sdal", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("sdal")

ACCEPTANCE = pytest.StashKey[dict]()
CRITERIA = {
    1: "metric axioms",
    2: "D1 premetric counterexample",
    3: "chordal reduction",
    4: "SVD-free equivalence and speed",
    5: "POD energy criterion",
    6: "active-learning loop correctness",
    7: "monotone-trend report",
    8: "energy robustness of sampling",
    9: "POD-KSNN round trip and held-out error",
    10: "POD-NN pipeline",
    11: "online speedup over the FOM",
    12: "determinism of learn traces",
}


def pytest_configure(config):
    config.stash[ACCEPTANCE] = {}


@pytest.fixture
def criterion(request):
    """``report(number, ok, detail)`` records one acceptance line and returns ``ok``."""
    results = request.config.stash[ACCEPTANCE]

    def report(number: int, ok: bool, detail: str) -> bool:
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {number:2d} ({CRITERIA[number]}): {detail}"
        results[number] = line
        print(line)
        return ok

    return report


def pytest_terminal_summary(terminalreporter, config):
    results = config.stash[ACCEPTANCE]
    if not results:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for number in sorted(CRITERIA):
        terminalreporter.write_line(
            results.get(number, f"[FAIL] criterion {number:2d} ({CRITERIA[number]}): not reached")
        )


def random_frame(rng, n, p):
    return np.linalg.qr(rng.standard_normal((n, p)))[0]


@pytest.fixture(scope="session")
def demo_config():
    return BurgersConfig.demo()


@pytest.fixture(scope="session")
def demo_grid():
    """76 log10-viscosity points on [-3, 0]; 12 evenly spaced ones start the training set."""
    grid = linear_grid(-3.0, 0.0, 76)
    train, cand = split_initial(grid, evenly_spaced_indices(76, 12))
    return grid, train, cand


@pytest.fixture(scope="session")
def demo_fom(demo_config):
    """Shared memoizing oracle; each test counts its own queries separately."""
    return CachedFom(BurgersFom(demo_config, "log10"))
