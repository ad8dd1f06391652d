from itertools import combinations
import logging
from math import comb
import threading
from typing import Dict, FrozenSet, Iterable, Optional

import numpy as np

from lazyvi.core.config import settings
from lazyvi.core.exceptions import (
    IndexOutOfRangeException,
    OutOfRangeException,
    TooManyFeaturesException,
)
from lazyvi.core.numerics import RngLike, make_rng
from lazyvi.models.dataset import Split, mask_features
from lazyvi.models.enums import CoalitionMethod, SkillMeasure
from lazyvi.models.network import MlpModel, init_model
from lazyvi.schemas.estimate import LazyConfig
from lazyvi.schemas.network import TrainOptions
from lazyvi.schemas.shapley import CoalitionFit, ShapleyEstimate
from lazyvi.services.estimator_service import VariableImportanceService, eval_skill
from lazyvi.services.training_service import train
from lazyvi.utils.helpers import Stopwatch
from lazyvi.utils.validators import is_valid_index


logger = logging.getLogger(__name__)


class ShapleyService:
    """Coalition fits memoized by subset, shared by the sampled and exact estimators"""

    def __init__(
        self,
        full: MlpModel,
        split: Split,
        cfg: Optional[LazyConfig] = None,
        method: CoalitionMethod = CoalitionMethod.LAZY,
        opts: Optional[TrainOptions] = None,
        measure: SkillMeasure = SkillMeasure.NEG_MSE,
    ):
        self.full = full
        self.split = split
        self.cfg = cfg or LazyConfig()
        self.method = method
        self.opts = opts or TrainOptions()
        self.measure = measure
        self.estimators = VariableImportanceService(full, split, measure)
        self._memo: Dict[FrozenSet[int], CoalitionFit] = {}
        self._lock = threading.Lock()

    @property
    def p(self) -> int:
        return self.split.p

    @property
    def penalty(self) -> float:
        """Coalition ridge penalty: fixed, never cross-validated"""
        if self.cfg.fixed_lambda is not None:
            return self.cfg.fixed_lambda
        return settings.SHAPLEY_LAMBDA

    def fit_coalition(self, subset: Iterable[int]) -> CoalitionFit:
        """Test skill of the reduced model keeping only ``subset``"""
        key = frozenset(int(k) for k in subset)
        for k in key:
            if not is_valid_index(k, self.p):
                raise IndexOutOfRangeException(k, self.p)

        with self._lock:
            cached = self._memo.get(key)
        if cached is not None:
            return cached

        fit = self._fit(key)
        with self._lock:
            self._memo[key] = fit
        return fit

    def _fit(self, key: FrozenSet[int]) -> CoalitionFit:
        removed = [k for k in range(self.p) if k not in key]
        if not removed:
            return CoalitionFit(
                subset=key, skill=self.estimators.full_skill(), method=self.method
            )

        lam = None
        with Stopwatch() as watch:
            test_s = mask_features(self.split.test, removed)
            if self.method == CoalitionMethod.LAZY:
                reduced, lam = self.estimators.lazy_correct(
                    removed, self.cfg, lam=self.penalty, cache=False
                )
            else:
                train_s = mask_features(self.split.train, removed)
                reduced = train(init_model(self.full.config, self.opts.seed), train_s, self.opts)
            skill = eval_skill(reduced, test_s, self.measure)

        logger.debug(f"Coalition {sorted(key)}: skill {skill:.5f}")
        return CoalitionFit(
            subset=key, skill=skill, method=self.method, lambda_used=lam, seconds=watch.seconds
        )

    def value(self, subset: Iterable[int]) -> float:
        return self.fit_coalition(subset).skill

    def sampled(self, num_permutations: int, rng: RngLike = None) -> ShapleyEstimate:
        """
        Permutation-sampling estimate

        Each permutation contributes the marginal gain of every feature along
        its prefix chain; psi is the mean over permutations and se the
        standard error across them.
        """
        if num_permutations < 1:
            raise OutOfRangeException(f"num_permutations must be >= 1, got {num_permutations}")
        gen = make_rng(rng)
        gains = np.zeros((num_permutations, self.p))

        with Stopwatch() as watch:
            empty_value = self.value(())
            for r in range(num_permutations):
                prefix = set()
                previous = empty_value
                for j in gen.permutation(self.p):
                    prefix.add(int(j))
                    current = self.value(prefix)
                    gains[r, j] = current - previous
                    previous = current

        psi = gains.mean(axis=0)
        if num_permutations > 1:
            se = gains.std(axis=0, ddof=1) / np.sqrt(num_permutations)
        else:
            se = np.zeros(self.p)
        logger.info(
            f"Sampled Shapley ({self.method.value}) over {num_permutations} permutations, "
            f"{len(self._memo)} coalitions fit in {watch.seconds:.2f}s"
        )
        return ShapleyEstimate(
            psi=psi.tolist(),
            se=se.tolist(),
            num_samples=num_permutations,
            method=self.method,
            exact=False,
            seconds=watch.seconds,
            feature_names=self._names(),
        )

    def exact(self) -> ShapleyEstimate:
        """Weighted sum over every coalition, weight (1/p) * C(p-1, |s|)^-1"""
        p = self.p
        if p > settings.SHAPLEY_MAX_EXACT_FEATURES:
            raise TooManyFeaturesException(p, settings.SHAPLEY_MAX_EXACT_FEATURES)

        psi = np.zeros(p)
        with Stopwatch() as watch:
            for j in range(p):
                others = [k for k in range(p) if k != j]
                for size in range(p):
                    weight = 1.0 / (p * comb(p - 1, size))
                    for subset in combinations(others, size):
                        gain = self.value(subset + (j,)) - self.value(subset)
                        psi[j] += weight * gain

        logger.info(f"Exact Shapley ({self.method.value}) over {2 ** p} coalitions")
        return ShapleyEstimate(
            psi=psi.tolist(),
            se=[0.0] * p,
            num_samples=0,
            method=self.method,
            exact=True,
            seconds=watch.seconds,
            feature_names=self._names(),
        )

    def _names(self):
        return [self.split.train.name_of(j) for j in range(self.p)]


def fit_coalition(
    full: MlpModel,
    split: Split,
    s: Iterable[int],
    cfg: Optional[LazyConfig] = None,
    method: CoalitionMethod = CoalitionMethod.LAZY,
    opts: Optional[TrainOptions] = None,
) -> CoalitionFit:
    return ShapleyService(full, split, cfg, method, opts).fit_coalition(s)


def shapley_sampled(
    full: MlpModel,
    split: Split,
    cfg: Optional[LazyConfig] = None,
    num_permutations: int = 100,
    rng: RngLike = None,
    method: CoalitionMethod = CoalitionMethod.LAZY,
    opts: Optional[TrainOptions] = None,
) -> ShapleyEstimate:
    return ShapleyService(full, split, cfg, method, opts).sampled(num_permutations, rng)


def shapley_exact(
    full: MlpModel,
    split: Split,
    cfg: Optional[LazyConfig] = None,
    method: CoalitionMethod = CoalitionMethod.LAZY,
    opts: Optional[TrainOptions] = None,
) -> ShapleyEstimate:
    return ShapleyService(full, split, cfg, method, opts).exact()
