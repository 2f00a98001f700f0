import numpy as np
import pytest

from photongate.circuit import BlockParams, CircuitSpec


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_spec(rng, blocks=3, u=0.5, omega=0.0, **kwargs) -> CircuitSpec:
    return CircuitSpec(
        blocks=tuple(BlockParams(*rng.uniform(0.0, 1.0, 5)) for _ in range(blocks)),
        u=u,
        omega=omega,
        **kwargs,
    )
