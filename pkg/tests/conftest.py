import numpy as np
import pytest

from corrinterf.generator import AcquisitionSpec, ChannelPair, generate
from corrinterf.noise_model import QuadratureState


def make_pair(state=None, signals=(), n=100_000, seed=0, **kw):
    state = state or QuadratureState.coherent()
    return generate(state, signals, AcquisitionSpec.from_samples(n, seed=seed), **kw)


def white_pair(n, seed=0, var1=1.0, var2=1.0, cov=0.0):
    """Pair drawn with NumPy's default generator, independent of the package's streams."""
    rng = np.random.default_rng(seed)
    x = rng.multivariate_normal([0, 0], [[var1, cov], [cov, var2]], size=n)
    return ChannelPair(x[:, 0], x[:, 1], 500e3)


@pytest.fixture
def coherent_pair():
    return make_pair(n=200_000, seed=1)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
