import numpy as np
import pydantic
import pytest

from conftest import linear_head
from lazyvi.core.exceptions import OutOfRangeException
from lazyvi.models.dataset import Dataset
from lazyvi.models.enums import OrderingSource, VIMethod
from lazyvi.schemas.estimate import LazyConfig
from lazyvi.schemas.network import NetworkConfig, TrainOptions
from lazyvi.schemas.roar import Ordering
from lazyvi.services.roar_service import grad_saliency, num_removed, random_ordering, roar_curve


class TestSaliency:
    def test_linear_head_ranks_by_weight_magnitude(self, rng):
        model = linear_head([0.5, -3.0, 0.0, 3.0, 1.0])
        data = Dataset.from_arrays(rng.standard_normal((30, 5)), np.zeros(30))
        ordering = grad_saliency(model, data)
        assert ordering.ranked == [1, 3, 4, 0, 2]
        assert ordering.source == OrderingSource.GRAD
        np.testing.assert_allclose(ordering.scores, [0.5, 3.0, 0.0, 3.0, 1.0])

    def test_row_order_invariant(self, small_model, linear_data, rng):
        shuffled = Dataset.from_arrays(linear_data.X[rng.permutation(linear_data.n)], linear_data.y)
        a = grad_saliency(small_model, linear_data)
        b = grad_saliency(small_model, shuffled)
        np.testing.assert_allclose(a.scores, b.scores, rtol=1e-10)


def test_random_ordering():
    a = random_ordering(10, rng=3)
    assert sorted(a.ranked) == list(range(10))
    assert a.ranked == random_ordering(10, rng=3).ranked
    assert a.source == OrderingSource.RANDOM


def test_ordering_must_be_permutation():
    with pytest.raises(pydantic.ValidationError):
        Ordering(ranked=[0, 0, 2], source=OrderingSource.GIVEN)


@pytest.mark.parametrize("t,p,k", [(0.0, 6, 0), (0.1, 6, 1), (0.5, 6, 3), (1.0, 6, 6), (0.1, 100, 10), (0.99, 100, 99)])
def test_num_removed(t, p, k):
    assert num_removed(t, p) == k


class TestCurve:
    @pytest.fixture
    def ordering(self):
        return Ordering(ranked=[0, 1, 2, 3, 4, 5], source=OrderingSource.GIVEN)

    def test_zero_removed_is_full_model(self, small_model, linear_split, ordering):
        curve = roar_curve(
            small_model.config,
            linear_split,
            ordering,
            ts=[0.0, 0.5],
            opts=TrainOptions(epochs=30),
            full=small_model,
            lazy_cfg=LazyConfig(fixed_lambda=1.0),
        )
        full_mse = float(np.mean((linear_split.test.y - small_model(linear_split.test.X)) ** 2))
        for method in (VIMethod.DROPOUT, VIMethod.RETRAIN, VIMethod.LAZY):
            assert curve.mse(0.0, method) == pytest.approx(full_mse, rel=1e-12)
            assert np.isfinite(curve.mse(0.5, method))
        assert curve.source == OrderingSource.GIVEN
        assert set(curve.seconds_by_method()) == {VIMethod.DROPOUT, VIMethod.RETRAIN, VIMethod.LAZY}

    def test_all_removed_retrain_predicts_mean(self, small_model, linear_split, ordering):
        curve = roar_curve(
            small_model.config,
            linear_split,
            ordering,
            ts=[1.0],
            methods=[VIMethod.RETRAIN],
            opts=TrainOptions(epochs=500),
            full=small_model,
        )
        variance = float(np.var(linear_split.test.y))
        assert curve.mse(1.0, VIMethod.RETRAIN) == pytest.approx(variance, rel=0.1)

    def test_trains_full_model_when_missing(self, linear_split, ordering):
        config = NetworkConfig(input_dim=6, hidden_widths=[4])
        curve = roar_curve(
            config,
            linear_split,
            ordering,
            ts=[0.0],
            methods=[VIMethod.DROPOUT],
            opts=TrainOptions(epochs=10),
        )
        assert len(curve.points) == 1

    def test_unsupported_method(self, small_model, linear_split, ordering):
        with pytest.raises(OutOfRangeException):
            roar_curve(
                small_model.config, linear_split, ordering, ts=[0.5], methods=[VIMethod.OLS], full=small_model
            )

    def test_proportion_out_of_range(self, small_model, linear_split, ordering):
        with pytest.raises(OutOfRangeException):
            roar_curve(small_model.config, linear_split, ordering, ts=[1.5], full=small_model)
