import pytest

from mzimesh.chip import VirtualChip, VirtualChipParams
from mzimesh.core import MeshTopology, PathElement, default_topology


@pytest.fixture(scope="session")
def topo():
    return default_topology()


@pytest.fixture(scope="session")
def single_mzi_topo():
    """1x1 mesh with one MZI on the cross port."""
    return MeshTopology(n_inputs=1, n_outputs=1, n_mzis=1,
                        paths={(1, 1): [PathElement(1, "cross")]})


@pytest.fixture
def clean_chip(topo):
    """Crosstalk-free, quartic-free, noise-free chip: exactly the m1 class."""
    params = VirtualChipParams.default(topo, seed=11, xt_scale=0.0,
                                       quartic_scale=0.0, noise_sigma_db=0.0)
    return VirtualChip(params)


@pytest.fixture
def default_chip(topo):
    return VirtualChip(VirtualChipParams.default(topo, seed=7))
