import pytest

from dscsim.workload import builtin_mobilenet_v1_cifar10


@pytest.fixture(scope="session")
def net():
    return builtin_mobilenet_v1_cifar10()
