import logging
from math import ceil
from typing import List, Optional, Sequence

import numpy as np

from lazyvi.core.exceptions import DimensionMismatchException, OutOfRangeException
from lazyvi.core.numerics import RngLike, make_rng
from lazyvi.models.dataset import Dataset, Split, mask_features
from lazyvi.models.enums import OrderingSource, SkillMeasure, VIMethod
from lazyvi.models.network import MlpModel, init_model, input_gradients
from lazyvi.schemas.estimate import LazyConfig
from lazyvi.schemas.network import NetworkConfig, TrainOptions
from lazyvi.schemas.roar import Ordering, RoarCurve, RoarPoint
from lazyvi.services.estimator_service import VariableImportanceService, eval_skill
from lazyvi.services.training_service import train
from lazyvi.utils.helpers import Stopwatch


logger = logging.getLogger(__name__)

DEFAULT_PROPORTIONS = [0.0, 0.1, 0.25, 0.5, 0.75, 0.9, 0.99]
ROAR_METHODS = (VIMethod.DROPOUT, VIMethod.RETRAIN, VIMethod.LAZY)


def grad_saliency(model: MlpModel, d: Dataset) -> Ordering:
    """Rank features by mean absolute input gradient, ties broken by index"""
    if model.input_dim != d.p:
        raise DimensionMismatchException(
            f"Model expects {model.input_dim} features but the data has {d.p}"
        )
    scores = np.mean(np.abs(input_gradients(model, d.X)), axis=0)
    ranked = np.argsort(-scores, kind="stable")
    return Ordering(ranked=ranked.tolist(), source=OrderingSource.GRAD, scores=scores.tolist())


def random_ordering(p: int, rng: RngLike = None) -> Ordering:
    return Ordering(ranked=make_rng(rng).permutation(p).tolist(), source=OrderingSource.RANDOM)


def num_removed(t: float, p: int) -> int:
    """ceil(t * p), guarded against round-off just above an integer"""
    return min(p, int(ceil(t * p - 1e-9)))


def roar_curve(
    config: NetworkConfig,
    split: Split,
    ordering: Ordering,
    ts: Optional[Sequence[float]] = None,
    methods: Sequence[VIMethod] = ROAR_METHODS,
    opts: Optional[TrainOptions] = None,
    full: Optional[MlpModel] = None,
    lazy_cfg: Optional[LazyConfig] = None,
) -> RoarCurve:
    """
    Test MSE after imputing the top ceil(t * p) ranked features, for each t

    One full model is trained (or passed in) and shared by the dropout and
    lazy methods; retrain fits a fresh network per t.
    """
    ts = list(DEFAULT_PROPORTIONS if ts is None else ts)
    if any(t < 0 or t > 1 for t in ts):
        raise OutOfRangeException(f"Proportions must lie in [0, 1], got {ts}")
    if len(ordering.ranked) != split.p:
        raise DimensionMismatchException(
            f"Ordering ranks {len(ordering.ranked)} features, data has {split.p}"
        )
    opts = opts or TrainOptions()
    lazy_cfg = lazy_cfg or LazyConfig()
    if full is None:
        full = train(init_model(config, opts.seed), split.train, opts)

    service = VariableImportanceService(full, split, SkillMeasure.NEG_MSE)
    full_mse = -service.full_skill()
    points: List[RoarPoint] = []

    for t in sorted(ts):
        k = num_removed(t, split.p)
        removed = ordering.ranked[:k]
        test_t = mask_features(split.test, removed)
        for method in methods:
            if k == 0:
                points.append(RoarPoint(t=t, method=method, mse=full_mse, num_removed=0))
                continue
            with Stopwatch() as watch:
                if method == VIMethod.DROPOUT:
                    reduced = full
                elif method == VIMethod.RETRAIN:
                    reduced = train(init_model(config, opts.seed), mask_features(split.train, removed), opts)
                elif method == VIMethod.LAZY:
                    reduced, _ = service.lazy_correct(removed, lazy_cfg, cache=False)
                else:
                    raise OutOfRangeException(f"ROAR does not support method {method.value}")
                mse = -eval_skill(reduced, test_t, SkillMeasure.NEG_MSE)
            points.append(
                RoarPoint(t=t, method=method, mse=mse, seconds=watch.seconds, num_removed=k)
            )
        logger.info(f"ROAR t={t}: removed {k} of {split.p} features")

    return RoarCurve(proportions=sorted(ts), points=points, source=ordering.source)
