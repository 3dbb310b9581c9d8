import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from heisenpaths.sde import SimConfig

# numeric property tests: runtime per example varies wildly with the point
# drawn, so the default deadline only produces flaky timeouts
settings.register_profile(
    "numeric",
    deadline=None,
    max_examples=50,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("numeric")


@pytest.fixture(scope="session")
def geometry_records():
    from heisenpaths.verify import verify_geometry

    return {r.name: r for r in verify_geometry(seed=1)}


@pytest.fixture(scope="session")
def operator_records():
    from heisenpaths.verify import verify_operators

    records, meta = verify_operators(seed=1)
    return {r.name: r for r in records}, meta


def small_cfg(**kw) -> SimConfig:
    base = dict(n=1, step=2e-3, horizon=0.5, paths=4096, seed=7)
    base.update(kw)
    return SimConfig(**base)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
