import numpy as np
import pytest

from data_store import DataStore
from experiments import ExperimentConfig, ExperimentRunner
from metasurface import DesignKind, DesignSpec


@pytest.fixture
def rng():
    return np.random.default_rng(20240521)


@pytest.fixture
def resonant_spec():
    return DesignSpec.reference_design(DesignKind.RESONANT)


@pytest.fixture
def geometric_spec():
    # a smaller aperture keeps the 2-D grid quick
    return DesignSpec.reference_design(DesignKind.GEOMETRIC, aperture_radius=6000.0)


@pytest.fixture
def store(tmp_path):
    return DataStore(str(tmp_path / "out"))


@pytest.fixture
def runner(store):
    config = ExperimentConfig.from_mapping(store.load_config())
    return ExperimentRunner(config, store)
