import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from prunesearch.arch import bundled_arch_path, load_arch


@pytest.fixture(scope="session")
def t2():
    return load_arch(bundled_arch_path("t2"))


@pytest.fixture(scope="session")
def vgg16():
    return load_arch(bundled_arch_path("vgg16-cifar"))


@pytest.fixture(scope="session")
def resnet56():
    return load_arch(bundled_arch_path("resnet56-cifar"))
