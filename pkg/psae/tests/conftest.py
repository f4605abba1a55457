import pytest

from psae.archdesc import asset_path, load
from psae.model import pretrain


@pytest.fixture(scope="session")
def tiny3():
    return load(asset_path("tiny3"))


@pytest.fixture(scope="session")
def quick_model(tiny3):
    """A cheap reference model for unit tests (seconds, not minutes)."""
    return pretrain(tiny3, epochs=3, seed=0)


@pytest.fixture(scope="session")
def trained_models(tiny3):
    """Fully trained reference models for the five acceptance seeds."""
    return {seed: pretrain(tiny3, epochs=20, seed=seed) for seed in range(5)}
