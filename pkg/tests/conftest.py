import numpy as np
import pytest
import scipy.sparse as sp

from gibbsbps.ct import ForwardModel, build_radon, phantom_shepp_logan, simulate_measurement
from gibbsbps.distributions import make_rng
from gibbsbps.operators import PrecisionContext


@pytest.fixture(scope="session")
def ct16():
    """16x16 Shepp-Logan, 8 angles, 1% inf-norm noise."""
    d = 16
    truth = phantom_shepp_logan(d)
    sino, model = simulate_measurement(build_radon(d, 8), truth, "inf-norm", 0.01, make_rng(0))
    return truth, model


def random_model(d, m, seed=0, sigma=0.1):
    """Dense random forward model on a d x d grid; handy for operator checks."""
    rng = np.random.default_rng(seed)
    A = sp.csr_matrix(rng.standard_normal((m, d * d)))
    y = rng.standard_normal(m)
    return ForwardModel(A, d, 1, m).with_data(y, sigma)


def random_context(d, m=None, seed=0, policy="auto"):
    rng = np.random.default_rng(seed + 1)
    model = random_model(d, m or d * d, seed)
    n = d * d
    lam = rng.uniform(0.5, 2.0, n)
    lam_h = rng.uniform(0.5, 2.0, (d - 1) * d)
    lam_v = rng.uniform(0.5, 2.0, (d - 1) * d)
    return PrecisionContext.from_model(model, lam, lam_h, lam_v, policy=policy)


ACCEPTANCE_LINES = []


@pytest.fixture
def report():
    """Record one ``PASS``/``FAIL`` line for an acceptance criterion."""
    def record(number, name, ok, detail):
        line = f"criterion {number:2d} {'PASS' if ok else 'FAIL'}  {name}: {detail}"
        ACCEPTANCE_LINES.append((number, line))
        print(line)
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
