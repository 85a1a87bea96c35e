import numpy as np
import pytest

from dixlab import models


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def ce_small():
    return models.build_counterexample(models.CounterexampleSpec(1.0, 2.0, 1.0, 16))


@pytest.fixture(scope="session")
def ce_small_dense():
    return models.build_counterexample(models.CounterexampleSpec(1.0, 2.0, 1.0, 16), dense=True)


def random_dense(rng, dim, hermitian=False):
    z = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    if hermitian:
        z = z + z.conj().T
    return z


def random_banded(rng, dim, offsets):
    from dixlab.operators import BandedOperator

    offsets = np.asarray(sorted(offsets), dtype=np.int64)
    data = rng.standard_normal((offsets.size, dim)) + 1j * rng.standard_normal((offsets.size, dim))
    return BandedOperator(dim, offsets, data)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(results):
        terminalreporter.write_line(results[num])
