import numpy as np
import pytest

from conftest import linear_head, ols_head
from lazyvi.core.exceptions import (
    BadFoldCountException,
    BadStepsException,
    DimensionMismatchException,
    EmptyDatasetException,
    IndexOutOfRangeException,
    OutOfRangeException,
)
from lazyvi.models.dataset import Dataset, Split, dropout_transform, split
from lazyvi.models.enums import LazyInit, SkillMeasure, VIMethod
from lazyvi.models.network import init_model
from lazyvi.schemas.estimate import LazyConfig
from lazyvi.schemas.network import NetworkConfig, TrainOptions
from lazyvi.services.estimator_service import (
    VariableImportanceService,
    cv_lambda,
    eval_skill,
    standard_error,
    vi_dropout,
    vi_lazy,
    vi_lazy_es,
    vi_ols,
    vi_retrain,
    wald_ci,
)
from lazyvi.services.simulation_service import gen_linear_corr
from lazyvi.services.training_service import train


def manual_split(X_train, y_train, X_test, y_test) -> Split:
    train_data = Dataset.from_arrays(X_train, y_train)
    test_data = Dataset.from_arrays(X_test, y_test, column_means=train_data.column_means)
    return Split(
        train=train_data,
        test=test_data,
        train_index=np.arange(train_data.n),
        test_index=np.arange(test_data.n),
    )


@pytest.fixture
def three_rows() -> Split:
    # h(x) = x1 + 2 x2 fits the test rows exactly; training means are (1, 1)
    return manual_split(
        [[0.0, 0.0], [2.0, 2.0]],
        [0.0, 6.0],
        [[1.0, 0.0], [0.0, 1.0], [2.0, 2.0]],
        [1.0, 2.0, 6.0],
    )


class TestSkill:
    def test_perfect_predictor(self):
        d = Dataset.from_arrays(np.arange(4.0).reshape(-1, 1), np.arange(4.0))
        assert eval_skill(lambda X: X[:, 0], d) == 0.0

    def test_constant_predictor_mse(self):
        d = Dataset.from_arrays(np.zeros((2, 1)), [0.0, 2.0])
        assert eval_skill(lambda X: np.ones(len(X)), d) == pytest.approx(-1.0)

    def test_half_threshold_counts_as_one(self):
        d = Dataset.from_arrays(np.zeros((4, 1)), [1.0, 1.0, 1.0, 0.0])
        skill = eval_skill(lambda X: np.full(len(X), 0.5), d, SkillMeasure.ACCURACY)
        assert skill == pytest.approx(0.75)

    def test_empty_dataset(self):
        d = Dataset.from_arrays(np.zeros((0, 1)), np.zeros(0))
        with pytest.raises(EmptyDatasetException):
            eval_skill(lambda X: X[:, 0], d)


class TestWald:
    def test_interval(self):
        lo, hi = wald_ci(1.0, 0.5, 0.05)
        assert lo == pytest.approx(1.0 - 0.5 * 1.959964, abs=1e-6)
        assert hi == pytest.approx(1.0 + 0.5 * 1.959964, abs=1e-6)

    def test_degenerate(self):
        assert wald_ci(0.3, 0.0, 0.05) == (0.3, 0.3)

    def test_width_scales_with_tau(self):
        lo1, hi1 = wald_ci(0.0, 1.0)
        lo2, hi2 = wald_ci(0.0, 2.0)
        assert hi2 - lo2 == pytest.approx(2 * (hi1 - lo1))

    @pytest.mark.parametrize("tau,alpha", [(-0.1, 0.05), (1.0, 0.0), (1.0, 1.0)])
    def test_out_of_range(self, tau, alpha):
        with pytest.raises(OutOfRangeException):
            wald_ci(0.0, tau, alpha)

    def test_standard_error(self):
        assert standard_error(np.array([1.0, 1.0, 1.0])) == 0.0
        assert standard_error(np.array([0.0, 2.0])) == pytest.approx(np.sqrt(0.5))


class TestDropout:
    def test_hand_computed(self, three_rows):
        estimate = vi_dropout(linear_head([1.0, 2.0]), three_rows, 0)
        assert estimate.method == VIMethod.DROPOUT
        assert estimate.vi_hat == pytest.approx(2.0 / 3.0)
        assert estimate.tau_hat == pytest.approx(np.sqrt(2.0 / 27.0))
        np.testing.assert_allclose(estimate.terms, [0.0, 1.0, 1.0])

    def test_standard_error_replays_terms(self, small_model, linear_split):
        estimate = vi_dropout(small_model, linear_split, 1)
        t = np.asarray(estimate.terms)
        assert estimate.vi_hat == float(np.mean(t))
        assert estimate.tau_hat == float(np.sqrt(np.mean((t - t.mean()) ** 2) / t.size))

    def test_constant_test_column_has_zero_importance(self, three_rows):
        parts = manual_split(
            three_rows.train.X,
            three_rows.train.y,
            [[1.0, 0.0], [1.0, 1.0], [1.0, 2.0]],
            [1.0, 3.0, 5.0],
        )
        estimate = vi_dropout(linear_head([1.0, 2.0]), parts, 0)
        assert estimate.vi_hat == 0.0
        assert estimate.tau_hat == 0.0

    def test_interval_contains_estimate(self, small_model, linear_split):
        estimate = vi_dropout(small_model, linear_split, 0)
        assert estimate.ci_lo <= estimate.vi_hat <= estimate.ci_hi

    @pytest.mark.parametrize("j", [-1, 6])
    def test_bad_index(self, small_model, linear_split, j):
        with pytest.raises(IndexOutOfRangeException):
            vi_dropout(small_model, linear_split, j)

    def test_dimension_mismatch(self, linear_split):
        model = init_model(NetworkConfig(input_dim=3, hidden_widths=[4]), 0)
        with pytest.raises(DimensionMismatchException):
            VariableImportanceService(model, linear_split)


class TestLazy:
    def test_linear_network_matches_ols(self, linear_split):
        full = ols_head(linear_split.train)
        cfg = LazyConfig(fixed_lambda=1e-8)
        for j in range(linear_split.p):
            lazy = vi_lazy(full, linear_split, j, cfg=cfg)
            ols = vi_ols(linear_split, j)
            assert lazy.vi_hat == pytest.approx(ols.vi_hat, abs=1e-6)
            assert lazy.lambda_used == 1e-8

    def test_huge_penalty_recovers_dropout(self, small_model, linear_split):
        for j in (0, 3):
            lazy = vi_lazy(small_model, linear_split, j, cfg=LazyConfig(fixed_lambda=1e9))
            dropout = vi_dropout(small_model, linear_split, j)
            assert lazy.vi_hat == pytest.approx(dropout.vi_hat, abs=1e-4)

    def test_cross_validated_penalty_in_grid(self, small_model, linear_split):
        cfg = LazyConfig(lambda_grid=[0.01, 0.1, 1.0])
        estimate = vi_lazy(small_model, linear_split, 0, cfg=cfg)
        assert estimate.lambda_used in (0.01, 0.1, 1.0)
        assert estimate.method == VIMethod.LAZY

    def test_random_linearization_point(self, small_model, linear_split):
        cfg = LazyConfig(fixed_lambda=1.0, init=LazyInit.RANDOM, init_seed=4)
        service = VariableImportanceService(small_model, linear_split)
        estimate = service.lazy(0, cfg)
        assert np.isfinite(estimate.vi_hat)
        assert service.linearization_point(cfg) is service.linearization_point(cfg)
        assert service.linearization_point(cfg) is not small_model

    def test_feature_cache_reused(self, small_model, linear_split):
        service = VariableImportanceService(small_model, linear_split)
        cfg = LazyConfig()
        assert service.gradient_features((2,), cfg) is service.gradient_features((2,), cfg)

    def test_feature_cache_respects_byte_budget(self, small_model, linear_split):
        cfg = LazyConfig()
        entry = VariableImportanceService(small_model, linear_split).gradient_features((0,), cfg).nbytes
        service = VariableImportanceService(small_model, linear_split, cache_max_bytes=2 * entry)
        for j in range(linear_split.p):
            service.gradient_features((j,), cfg)
            assert service.cached_bytes <= 2 * entry
        assert service.cached_entries == 2
        last = (linear_split.p - 1,)
        assert service.gradient_features(last, cfg) is service.gradient_features(last, cfg)

    def test_feature_cache_evicts_least_recent(self, small_model, linear_split):
        cfg = LazyConfig()
        entry = VariableImportanceService(small_model, linear_split).gradient_features((0,), cfg).nbytes
        service = VariableImportanceService(small_model, linear_split, cache_max_bytes=2 * entry)
        first = service.gradient_features((0,), cfg)
        service.gradient_features((1,), cfg)
        service.gradient_features((0,), cfg)
        service.gradient_features((2,), cfg)
        assert service.gradient_features((0,), cfg) is first

    def test_entry_over_budget_not_cached(self, small_model, linear_split):
        service = VariableImportanceService(small_model, linear_split, cache_max_bytes=1)
        service.gradient_features((0,), LazyConfig())
        assert service.cached_entries == 0 and service.cached_bytes == 0

    def test_uncached_correction_leaves_cache_empty(self, small_model, linear_split):
        service = VariableImportanceService(small_model, linear_split)
        cached, lam = service.lazy_correct((0, 1), LazyConfig(lambda_grid=[0.1, 1.0]))
        service.lazy_correct((2, 3), LazyConfig(fixed_lambda=lam), cache=False)
        assert service.cached_entries == 1
        np.testing.assert_allclose(
            service.lazy_correct((0, 1), LazyConfig(fixed_lambda=lam), cache=False)[0].theta,
            cached.theta,
        )

    def test_clear_cache(self, small_model, linear_split):
        service = VariableImportanceService(small_model, linear_split)
        service.gradient_features((0,), LazyConfig())
        service.clear_cache()
        assert service.cached_entries == 0 and service.cached_bytes == 0


class TestCvLambda:
    def test_prefers_refit_over_dropout(self, linear_split):
        service = VariableImportanceService(ols_head(linear_split.train), linear_split)
        cfg = LazyConfig(lambda_grid=[1e-3, 1e9])
        assert service.cv_lambda((0,), cfg) == 1e-3

    def test_singleton_grid(self, small_model, linear_split):
        cfg = LazyConfig(lambda_grid=[0.7])
        assert cv_lambda(small_model, linear_split.train, 0, cfg) == 0.7

    def test_deterministic(self, small_model, linear_split):
        cfg = LazyConfig(lambda_grid=[0.01, 0.1, 1.0, 10.0])
        a = cv_lambda(small_model, linear_split.train, 1, cfg)
        b = cv_lambda(small_model, linear_split.train, 1, cfg)
        assert a == b

    def test_module_function_matches_service(self, small_model, linear_split):
        cfg = LazyConfig(lambda_grid=[0.01, 1.0, 100.0])
        service = VariableImportanceService(small_model, linear_split)
        assert cv_lambda(small_model, linear_split.train, 0, cfg) == service.cv_lambda((0,), cfg)

    @pytest.mark.parametrize("j", [-1, 6])
    def test_module_function_rejects_bad_index(self, small_model, linear_split, j):
        with pytest.raises(IndexOutOfRangeException):
            cv_lambda(small_model, linear_split.train, j, LazyConfig(lambda_grid=[0.1, 1.0]))

    def test_too_many_folds(self, small_model):
        tiny = gen_linear_corr(8, 0.0, rng=0)
        parts = split(tiny, 4, rng=0)
        service = VariableImportanceService(small_model, parts)
        with pytest.raises(BadFoldCountException):
            service.cv_lambda((0,), LazyConfig(cv_folds=5))


class TestLazyEarlyStop:
    def test_zero_learning_rate_equals_dropout(self, small_model, linear_split):
        es = vi_lazy_es(small_model, linear_split, 0, steps=1, lr=0.0)
        dropout = vi_dropout(small_model, linear_split, 0)
        assert es.vi_hat == pytest.approx(dropout.vi_hat, abs=1e-12)
        assert es.method == VIMethod.LAZY_ES

    def test_zero_steps_rejected(self, small_model, linear_split):
        with pytest.raises(BadStepsException):
            vi_lazy_es(small_model, linear_split, 0, steps=0)

    def test_fine_tuning_moves_towards_retrain(self, small_model, linear_split):
        es = vi_lazy_es(small_model, linear_split, 0, steps=20, lr=1e-2)
        assert np.isfinite(es.vi_hat)


class TestRetrain:
    def test_trains_full_model_when_missing(self, linear_split):
        config = NetworkConfig(input_dim=6, hidden_widths=[8])
        estimate = vi_retrain(config, linear_split, 3, opts=TrainOptions(epochs=40))
        assert estimate.method == VIMethod.RETRAIN
        assert estimate.seconds > 0

    def test_uses_given_full_model(self, small_model, linear_split):
        before = small_model.theta.copy()
        estimate = vi_retrain(
            small_model.config, linear_split, 0, opts=TrainOptions(epochs=40), full=small_model
        )
        assert np.isfinite(estimate.vi_hat)
        assert len(estimate.terms) == linear_split.n2
        np.testing.assert_array_equal(small_model.theta, before)

    def test_dispatch(self, small_model, linear_split):
        service = VariableImportanceService(small_model, linear_split)
        for method in (VIMethod.DROPOUT, VIMethod.OLS):
            assert service.estimate(0, method).method == method


class TestOls:
    def test_irrelevant_feature_near_zero(self):
        parts = split(gen_linear_corr(4000, 0.5, rng=0), 3000, rng=0)
        assert abs(vi_ols(parts, 5).vi_hat) < 0.01

    def test_important_feature(self):
        parts = split(gen_linear_corr(4000, 0.5, rng=1), 3000, rng=1)
        # retrain VI of X1 is 1.5^2 * (1 - 0.25)
        assert vi_ols(parts, 0).vi_hat == pytest.approx(1.6875, abs=0.35)

    def test_reduced_model_ignores_dropped_column(self):
        parts = split(gen_linear_corr(200, 0.0, rng=2), 150, rng=2)
        estimate = vi_ols(parts, 2)
        reduced = dropout_transform(parts.test, 2)
        assert np.all(reduced.X[:, 2] == parts.train.column_means[2])
        assert estimate.variable == 2


@pytest.mark.slow
def test_dropout_overstates_correlated_feature():
    gaps = []
    for seed in range(5):
        data = gen_linear_corr(2000, 0.5, rng=seed)
        parts = split(data, 1500, rng=seed)
        config = NetworkConfig(input_dim=6, hidden_widths=[50])
        opts = TrainOptions(epochs=500, seed=seed)
        full = train(init_model(config, seed), parts.train, opts)
        service = VariableImportanceService(full, parts)
        gaps.append(service.dropout(0).vi_hat - service.retrain(0, opts=opts).vi_hat)
    # population gap is 1.5^2 * 0.5^2 = 0.5625
    assert np.mean(gaps) > 0.25
