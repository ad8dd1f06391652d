import numpy as np
import pytest

from lazyvi.core.exceptions import OutOfRangeException, TooManyFeaturesException
from lazyvi.models.dataset import Dataset, mask_features, split
from lazyvi.models.enums import CoalitionMethod
from lazyvi.models.network import init_model
from lazyvi.schemas.estimate import LazyConfig
from lazyvi.schemas.network import NetworkConfig, TrainOptions
from lazyvi.services.estimator_service import VariableImportanceService, eval_skill
from lazyvi.services.shapley_service import (
    ShapleyService,
    fit_coalition,
    shapley_exact,
    shapley_sampled,
)
from lazyvi.services.simulation_service import gen_linear_corr
from lazyvi.services.training_service import train


@pytest.fixture
def three_feature(linear_data):
    data = Dataset.from_arrays(linear_data.X[:, :3], linear_data.y)
    parts = split(data, 300, rng=5)
    config = NetworkConfig(input_dim=3, hidden_widths=[8])
    full = train(init_model(config, 0), parts.train, TrainOptions(epochs=150))
    return full, parts


def test_full_coalition_is_full_skill(three_feature):
    full, parts = three_feature
    service = ShapleyService(full, parts)
    expected = VariableImportanceService(full, parts).full_skill()
    assert service.value([0, 1, 2]) == expected


def test_memoized(three_feature):
    full, parts = three_feature
    service = ShapleyService(full, parts, LazyConfig(fixed_lambda=1.0))
    assert service.fit_coalition((0,)) is service.fit_coalition([0])


def test_default_penalty(three_feature):
    full, parts = three_feature
    assert ShapleyService(full, parts).penalty == 50.0
    assert ShapleyService(full, parts, LazyConfig(fixed_lambda=2.0)).penalty == 2.0


def test_exact_is_efficient(three_feature):
    full, parts = three_feature
    service = ShapleyService(full, parts, LazyConfig(fixed_lambda=1.0))
    estimate = service.exact()
    assert estimate.exact and estimate.num_samples == 0
    assert sum(estimate.psi) == pytest.approx(service.value([0, 1, 2]) - service.value([]), abs=1e-10)
    assert estimate.se == [0.0, 0.0, 0.0]


def test_sampled_agrees_with_exact(three_feature):
    full, parts = three_feature
    cfg = LazyConfig(fixed_lambda=1.0)
    exact = shapley_exact(full, parts, cfg)
    sampled = shapley_sampled(full, parts, cfg, num_permutations=300, rng=0)
    for psi, psi_hat, se in zip(exact.psi, sampled.psi, sampled.se):
        assert abs(psi_hat - psi) <= 4 * se + 1e-9


def test_single_feature(linear_data):
    data = Dataset.from_arrays(linear_data.X[:, :1], linear_data.y)
    parts = split(data, 300, rng=0)
    full = train(init_model(NetworkConfig(input_dim=1, hidden_widths=[4]), 0), parts.train, TrainOptions(epochs=50))
    service = ShapleyService(full, parts, LazyConfig(fixed_lambda=1.0))
    estimate = service.sampled(5, rng=0)
    assert estimate.psi[0] == pytest.approx(service.value([0]) - service.value([]))
    assert estimate.se[0] == pytest.approx(0.0, abs=1e-12)


def test_empty_coalition_is_best_constant(three_feature):
    full, parts = three_feature
    service = ShapleyService(full, parts, LazyConfig(fixed_lambda=1e-6))
    best_constant = -float(np.mean((parts.test.y - parts.train.y.mean()) ** 2))
    assert service.value([]) == pytest.approx(best_constant, abs=1e-4)


def test_huge_penalty_is_plug_in(three_feature):
    full, parts = three_feature
    fit = fit_coalition(full, parts, [0], LazyConfig(fixed_lambda=1e9))
    plug_in = eval_skill(full, mask_features(parts.test, [1, 2]))
    assert fit.skill == pytest.approx(plug_in, abs=1e-4)
    assert fit.lambda_used == 1e9


def test_retrain_coalitions(three_feature):
    full, parts = three_feature
    fit = fit_coalition(
        full, parts, [1], method=CoalitionMethod.RETRAIN, opts=TrainOptions(epochs=30)
    )
    assert fit.method == CoalitionMethod.RETRAIN
    assert fit.lambda_used is None
    assert np.isfinite(fit.skill)


def test_exact_refuses_large_p(rng):
    p = 13
    data = Dataset.from_arrays(rng.standard_normal((20, p)), rng.standard_normal(20))
    parts = split(data, 10, rng=0)
    full = init_model(NetworkConfig(input_dim=p, hidden_widths=[2]), 0)
    with pytest.raises(TooManyFeaturesException):
        ShapleyService(full, parts).exact()


def test_needs_a_permutation(three_feature):
    full, parts = three_feature
    with pytest.raises(OutOfRangeException):
        ShapleyService(full, parts).sampled(0)


def test_sampled_keeps_feature_cache_within_budget(linear_data):
    data = Dataset.from_arrays(linear_data.X, linear_data.y)
    parts = split(data, 300, rng=5)
    config = NetworkConfig(input_dim=parts.p, hidden_widths=[12])
    full = train(init_model(config, 0), parts.train, TrainOptions(epochs=50))
    service = ShapleyService(full, parts, LazyConfig(fixed_lambda=1.0))
    entry = parts.n1 * config.num_params * 8
    service.estimators.cache_max_bytes = 3 * entry
    service.sampled(2, rng=0)
    assert service.estimators.cached_bytes <= 3 * entry
    assert service.estimators.cached_entries == 0


@pytest.fixture(scope="module")
def four_feature():
    # X4 carries no weight in the response
    data = gen_linear_corr(1000, 0.5, rng=21)
    data = Dataset.from_arrays(data.X[:, :4], data.y)
    parts = split(data, 800, rng=22)
    config = NetworkConfig(input_dim=4, hidden_widths=[50])
    full = train(init_model(config, 23), parts.train, TrainOptions(seed=23))
    return full, parts


@pytest.mark.slow
class TestShapleyAccuracy:
    def test_zero_weight_feature_near_zero(self, four_feature):
        full, parts = four_feature
        estimate = shapley_sampled(full, parts, LazyConfig(fixed_lambda=50.0), num_permutations=200, rng=0)
        assert abs(estimate.psi[3]) <= 2 * estimate.se[3] + 0.01
        assert abs(estimate.psi[3]) < 0.05 * estimate.psi[0]

    def test_sampled_within_three_se_of_exact(self, four_feature):
        full, parts = four_feature
        cfg = LazyConfig(fixed_lambda=50.0)
        exact = shapley_exact(full, parts, cfg)
        sampled = shapley_sampled(full, parts, cfg, num_permutations=500, rng=1)
        for psi, psi_hat, se in zip(exact.psi, sampled.psi, sampled.se):
            assert abs(psi_hat - psi) <= 3 * se + 1e-9
