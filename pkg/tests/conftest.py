import pytest

from tests.helpers import write_mnist_dir


@pytest.fixture
def mnist_dir(tmp_path):
    return write_mnist_dir(tmp_path / "mnist")
