import numpy as np
import pytest

from peppy import kernels
from peppy.chainmodel import build_topology, canonical_conformation, default_config
from peppy.geometry import forward_kinematics
from peppy.validation import find_fixture


@pytest.fixture(scope="session")
def geom():
    return default_config().backbone


@pytest.fixture(scope="session")
def alpha13(geom):
    t = build_topology("A" * 13)
    c = canonical_conformation("alpha_helix", 13)
    return t, c, forward_kinematics(t, geom, c)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(params=sorted(kernels.backends()))
def backend(request):
    return kernels.backends()[request.param]


@pytest.fixture(scope="session")
def zta_path():
    path = find_fixture("2ZTA.pdb")
    if path is None:
        pytest.skip("2ZTA.pdb fixture absent; run scripts/fetch_fixtures.py")
    return path
