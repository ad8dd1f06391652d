import numpy as np
import pandas as pd
import pytest

from lazyvi.models.dataset import Dataset, split
from lazyvi.models.network import MlpModel, init_model
from lazyvi.schemas.network import NetworkConfig, TrainOptions
from lazyvi.services.simulation_service import gen_linear_corr
from lazyvi.services.training_service import train


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def linear_data() -> Dataset:
    return gen_linear_corr(400, 0.5, rng=7)


@pytest.fixture
def linear_split(linear_data):
    return split(linear_data, 300, rng=11)


@pytest.fixture
def small_opts() -> TrainOptions:
    return TrainOptions(epochs=150, seed=3)


@pytest.fixture
def small_model(linear_split, small_opts) -> MlpModel:
    """Width-16 network trained briefly on the correlated linear data"""
    config = NetworkConfig(input_dim=linear_split.p, hidden_widths=[16])
    return train(init_model(config, 3), linear_split.train, small_opts)


def linear_head(weights, bias: float = 0.0) -> MlpModel:
    """h(x) = w'x + b as a network with no hidden layers"""
    weights = np.asarray(weights, dtype=float)
    config = NetworkConfig(input_dim=weights.shape[0], hidden_widths=[])
    return MlpModel(config, np.concatenate([weights, [bias]]))


def ols_head(train_data: Dataset) -> MlpModel:
    """Linear head at the least-squares fit of the training data"""
    design = np.column_stack([train_data.X, np.ones(train_data.n)])
    coef, *_ = np.linalg.lstsq(design, train_data.y, rcond=None)
    return linear_head(coef[:-1], coef[-1])


def write_dataset_csv(data: Dataset, path, response_column: str = "y"):
    """Dataset as a header-row CSV with the response last"""
    frame = pd.DataFrame(data.X, columns=[data.name_of(j) for j in range(data.p)])
    frame[response_column] = data.y
    frame.to_csv(path, index=False, float_format="%.17g")
    return path
