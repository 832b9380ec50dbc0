import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "suite",
    deadline=None,
    max_examples=25,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("suite")


@pytest.fixture(scope="session", autouse=True)
def _compiled_kernels():
    """Compile (or load from cache) every hot kernel once up front so
    individual tests measure logic, not JIT latency."""
    from quditfold.backends import warmup

    warmup()


@pytest.fixture()
def rng():
    return np.random.default_rng(20260819)
