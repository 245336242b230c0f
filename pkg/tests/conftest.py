import pytest

from blockade.models.lattice_models import Lattice
from blockade.services.export_service import ArtifactWriter
from blockade.services.lattice_service import enumerate_configurations


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run the slow acceptance tests")


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long-running acceptance test, needs --runslow")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture(scope="session")
def ring8():
    return enumerate_configurations(Lattice.ring(8))


@pytest.fixture(scope="session")
def ring12():
    return enumerate_configurations(Lattice.ring(12))


@pytest.fixture
def writer(tmp_path):
    return ArtifactWriter(str(tmp_path))
