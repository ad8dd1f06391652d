from collections import OrderedDict
import logging
import threading
from typing import Callable, Dict, Iterable, Optional, Tuple, Union

import numpy as np

from lazyvi.core.config import settings
from lazyvi.core.exceptions import (
    BadFoldCountException,
    BadStepsException,
    DimensionMismatchException,
    EmptyDatasetException,
    IndexOutOfRangeException,
    OutOfRangeException,
)
from lazyvi.core.numerics import make_rng, normal_quantile, ridge_solve
from lazyvi.models.dataset import Dataset, Split, dropout_transform, mask_features
from lazyvi.models.enums import LazyInit, SkillMeasure, VIMethod
from lazyvi.models.network import MlpModel, init_model, jacobian, predict
from lazyvi.schemas.estimate import LazyConfig, ViEstimate
from lazyvi.schemas.network import NetworkConfig, TrainOptions
from lazyvi.services.training_service import train
from lazyvi.utils.helpers import Stopwatch
from lazyvi.utils.validators import is_probability, is_valid_index, is_valid_subset


logger = logging.getLogger(__name__)

Predictor = Union[MlpModel, Callable[[np.ndarray], np.ndarray]]


def classify(predictions: np.ndarray) -> np.ndarray:
    """0.5 threshold on a regression output; exactly 0.5 is class 1"""
    return (np.asarray(predictions) >= 0.5).astype(float)


def skill_terms(f: Predictor, d: Dataset, measure: SkillMeasure) -> np.ndarray:
    """Per-sample skill: -(y - f(x))^2 or 1{correct}"""
    if d.n == 0:
        raise EmptyDatasetException("Cannot evaluate skill on an empty dataset")
    predictions = np.asarray(f(d.X), dtype=float).reshape(-1)
    if measure == SkillMeasure.ACCURACY:
        return (classify(predictions) == d.y).astype(float)
    return -((d.y - predictions) ** 2)


def eval_skill(f: Predictor, d: Dataset, measure: SkillMeasure = SkillMeasure.NEG_MSE) -> float:
    """V(f, P_n): negative MSE or 0.5-threshold accuracy"""
    return float(np.mean(skill_terms(f, d, measure)))


def standard_error(terms: np.ndarray) -> float:
    """sqrt(mean((t - t_bar)^2) / n), the plug-in standard error of mean(t)"""
    terms = np.asarray(terms, dtype=float)
    if terms.size == 0:
        raise EmptyDatasetException("No per-sample terms to summarize")
    return float(np.sqrt(np.mean((terms - terms.mean()) ** 2) / terms.size))


def wald_ci(vi_hat: float, tau_hat: float, alpha: float = 0.05) -> Tuple[float, float]:
    """vi_hat -/+ z_{alpha/2} * tau_hat"""
    if tau_hat < 0:
        raise OutOfRangeException(f"Standard error must be >= 0, got {tau_hat}")
    if not is_probability(alpha):
        raise OutOfRangeException(f"alpha must lie in (0, 1), got {alpha}")
    z = normal_quantile(1 - alpha / 2)
    return (vi_hat - z * tau_hat, vi_hat + z * tau_hat)


def build_estimate(
    j: int,
    terms: np.ndarray,
    method: VIMethod,
    alpha: float,
    seconds: float = 0.0,
    lambda_used: Optional[float] = None,
    feature_name: Optional[str] = None,
) -> ViEstimate:
    vi_hat = float(np.mean(terms))
    tau_hat = standard_error(terms)
    return ViEstimate(
        variable=j,
        vi_hat=vi_hat,
        tau_hat=tau_hat,
        ci=wald_ci(vi_hat, tau_hat, alpha),
        alpha=alpha,
        seconds=seconds,
        method=method,
        lambda_used=lambda_used,
        feature_name=feature_name,
        terms=np.asarray(terms, dtype=float).tolist(),
    )


def fit_ols(X: np.ndarray, y: np.ndarray) -> Callable[[np.ndarray], np.ndarray]:
    """Least squares with intercept; minimum-norm solution when X is rank deficient"""
    design = np.column_stack([X, np.ones(X.shape[0])])
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    return lambda Z: np.column_stack([Z, np.ones(Z.shape[0])]) @ coef


class VariableImportanceService:
    """
    Estimators sharing one trained full model and one split

    Gradient features of the imputed training set are cached per removed
    column set, least recently used first out once the total passes
    ``cache_max_bytes``. Callers fitting a column set once (coalitions,
    removal proportions) pass ``cache=False``.
    """

    def __init__(
        self,
        full: MlpModel,
        split: Split,
        measure: SkillMeasure = SkillMeasure.NEG_MSE,
        cache_features: bool = True,
        cache_max_bytes: Optional[int] = None,
    ):
        if full.input_dim != split.p:
            raise DimensionMismatchException(
                f"Model expects {full.input_dim} features but the data has {split.p}"
            )
        self.full = full
        self.split = split
        self.measure = measure
        self.cache_features = cache_features
        self.cache_max_bytes = (
            settings.FEATURE_CACHE_MAX_BYTES if cache_max_bytes is None else cache_max_bytes
        )
        self._features: "OrderedDict[tuple, np.ndarray]" = OrderedDict()
        self._cached_bytes = 0
        self._points: Dict[tuple, MlpModel] = {}
        self._lock = threading.Lock()
        self._full_terms: Optional[np.ndarray] = None

    # Helpers

    @property
    def cached_bytes(self) -> int:
        return self._cached_bytes

    @property
    def cached_entries(self) -> int:
        return len(self._features)

    def check_variable(self, j: int) -> None:
        if not is_valid_index(j, self.split.p):
            raise IndexOutOfRangeException(j, self.split.p)

    def _check_columns(self, columns: Iterable[int]) -> Tuple[int, ...]:
        columns = tuple(sorted(set(int(c) for c in columns)))
        if not is_valid_subset(columns, self.split.p):
            bad = next(c for c in columns if not is_valid_index(c, self.split.p))
            raise IndexOutOfRangeException(bad, self.split.p)
        return columns

    def full_terms(self) -> np.ndarray:
        """Per-sample full-model skill on the test set"""
        if self._full_terms is None:
            self._full_terms = skill_terms(self.full, self.split.test, self.measure)
        return self._full_terms

    def full_skill(self) -> float:
        return float(np.mean(self.full_terms()))

    def _estimate(self, j, reduced: Predictor, test: Dataset, method, alpha, seconds, lam=None):
        terms = self.full_terms() - skill_terms(reduced, test, self.measure)
        return build_estimate(
            j,
            terms,
            method,
            alpha,
            seconds=seconds,
            lambda_used=lam,
            feature_name=self.split.train.name_of(j),
        )

    @staticmethod
    def _point_key(cfg: LazyConfig) -> tuple:
        return (cfg.init.value, cfg.init_seed if cfg.init == LazyInit.RANDOM else None)

    def linearization_point(self, cfg: LazyConfig) -> MlpModel:
        """theta_f, or a fresh random network for the random-initialization ablation"""
        if cfg.init == LazyInit.RANDOM:
            key = self._point_key(cfg)
            with self._lock:
                base = self._points.get(key)
                if base is None:
                    base = init_model(self.full.config, cfg.init_seed)
                    self._points[key] = base
            return base
        return self.full

    def gradient_features(
        self, columns: Tuple[int, ...], cfg: LazyConfig, cache: bool = True
    ) -> np.ndarray:
        """Phi rows = d h(X_i^(columns)) / d theta at the linearization point, over training rows"""
        key = (columns, self._point_key(cfg))
        with self._lock:
            cached = self._features.get(key)
            if cached is not None:
                self._features.move_to_end(key)
        if cached is not None:
            logger.debug(f"Gradient feature cache hit for columns {columns}")
            return cached

        base = self.linearization_point(cfg)
        phi = jacobian(base, mask_features(self.split.train, columns).X)
        if cache and self.cache_features:
            self._store(key, phi)
        return phi

    def _store(self, key: tuple, phi: np.ndarray) -> None:
        if phi.nbytes > self.cache_max_bytes:
            return
        with self._lock:
            if key in self._features:
                return
            while self._features and self._cached_bytes + phi.nbytes > self.cache_max_bytes:
                _, evicted = self._features.popitem(last=False)
                self._cached_bytes -= evicted.nbytes
            self._features[key] = phi
            self._cached_bytes += phi.nbytes

    def clear_cache(self) -> None:
        with self._lock:
            self._features.clear()
            self._cached_bytes = 0

    # Estimators

    def dropout(self, j: int, alpha: float = settings.DEFAULT_ALPHA) -> ViEstimate:
        """Plug the imputed test set into the unchanged full model"""
        self.check_variable(j)
        with Stopwatch() as watch:
            test_j = dropout_transform(self.split.test, j)
            reduced_terms = skill_terms(self.full, test_j, self.measure)
        terms = self.full_terms() - reduced_terms
        return build_estimate(
            j, terms, VIMethod.DROPOUT, alpha, watch.seconds, feature_name=self.split.train.name_of(j)
        )

    def retrain(
        self,
        j: int,
        config: Optional[NetworkConfig] = None,
        opts: Optional[TrainOptions] = None,
        alpha: float = settings.DEFAULT_ALPHA,
    ) -> ViEstimate:
        """Train a fresh network on the imputed training set"""
        self.check_variable(j)
        config = config or self.full.config
        opts = opts or TrainOptions()
        with Stopwatch() as watch:
            train_j = dropout_transform(self.split.train, j)
            reduced = train(init_model(config, opts.seed), train_j, opts)
            test_j = dropout_transform(self.split.test, j)
        return self._estimate(j, reduced, test_j, VIMethod.RETRAIN, alpha, watch.seconds)

    def ols(self, j: int, alpha: float = settings.DEFAULT_ALPHA) -> ViEstimate:
        return vi_ols(self.split, j, self.measure, alpha)

    def cv_lambda(
        self,
        columns: Iterable[int],
        cfg: Optional[LazyConfig] = None,
        phi: Optional[np.ndarray] = None,
    ) -> float:
        """
        K-fold cross-validation of the ridge penalty

        For each fold the correction is fit on the remaining rows and the
        corrected network is scored by held-out squared error. The lowest mean
        error wins; ties go to the larger penalty.
        """
        cfg = cfg or LazyConfig()
        columns = self._check_columns(columns)
        n1 = self.split.n1
        if cfg.cv_folds < 2 or cfg.cv_folds > n1:
            raise BadFoldCountException(cfg.cv_folds, n1)

        grid = cfg.grid_for(n1)
        if len(grid) == 1:
            return grid[0]

        base = self.linearization_point(cfg)
        train_c = mask_features(self.split.train, columns)
        if phi is None:
            phi = self.gradient_features(columns, cfg)
        residual = train_c.y - predict(base, train_c.X)
        folds = np.array_split(make_rng(cfg.fold_seed).permutation(n1), cfg.cv_folds)

        errors = np.zeros(len(grid))
        for k, held_out in enumerate(folds):
            fit_rows = np.setdiff1d(np.arange(n1), held_out)
            for g, lam in enumerate(grid):
                delta = ridge_solve(phi[fit_rows], residual[fit_rows], lam)
                pred = predict(base.shifted(delta), train_c.X[held_out])
                errors[g] += np.mean((train_c.y[held_out] - pred) ** 2) / len(folds)
            logger.debug(f"CV fold {k}: running errors {errors.tolist()}")

        best = 0
        for g in range(1, len(grid)):
            if errors[g] <= errors[best]:
                best = g
        logger.debug(f"CV selected lambda={grid[best]:.4g} for columns {columns}")
        return float(grid[best])

    def lazy_correct(
        self,
        columns: Iterable[int],
        cfg: Optional[LazyConfig] = None,
        lam: Optional[float] = None,
        cache: bool = True,
    ) -> Tuple[MlpModel, float]:
        """
        Corrected reduced model for the given imputed columns

        Solves the ridge problem of the dropout residuals on the gradient
        features and returns the shifted network with the penalty used.
        With ``cache=False`` the features are computed once for this call
        and never stored.
        """
        cfg = cfg or LazyConfig()
        columns = self._check_columns(columns)
        phi = self.gradient_features(columns, cfg, cache=cache)
        if lam is None:
            lam = cfg.fixed_lambda
        if lam is None:
            lam = self.cv_lambda(columns, cfg, phi=phi)

        base = self.linearization_point(cfg)
        train_c = mask_features(self.split.train, columns)
        residual = train_c.y - predict(base, train_c.X)
        delta = ridge_solve(phi, residual, lam)
        return base.shifted(delta), float(lam)

    def lazy(self, j: int, cfg: Optional[LazyConfig] = None) -> ViEstimate:
        self.check_variable(j)
        cfg = cfg or LazyConfig()
        with Stopwatch() as watch:
            reduced, lam = self.lazy_correct((j,), cfg)
            test_j = dropout_transform(self.split.test, j)
        logger.debug(f"Lazy correction for variable {j} used lambda={lam:.4g}")
        return self._estimate(j, reduced, test_j, VIMethod.LAZY, cfg.alpha, watch.seconds, lam)

    def lazy_es(
        self,
        j: int,
        steps: int,
        learning_rate: float,
        opts: Optional[TrainOptions] = None,
        alpha: float = settings.DEFAULT_ALPHA,
    ) -> ViEstimate:
        """Fine-tune the full model for ``steps`` updates on the imputed training set"""
        self.check_variable(j)
        if steps < 1:
            raise BadStepsException(steps)
        if learning_rate < 0:
            raise OutOfRangeException(f"learning_rate must be >= 0, got {learning_rate}")
        opts = (opts or TrainOptions()).model_copy(
            update={"early_stop_steps": steps, "learning_rate": learning_rate}
        )
        with Stopwatch() as watch:
            reduced = train(self.full, dropout_transform(self.split.train, j), opts)
            test_j = dropout_transform(self.split.test, j)
        return self._estimate(j, reduced, test_j, VIMethod.LAZY_ES, alpha, watch.seconds)

    def estimate(
        self,
        j: int,
        method: VIMethod,
        lazy_cfg: Optional[LazyConfig] = None,
        opts: Optional[TrainOptions] = None,
        es_steps: int = 1,
        es_learning_rate: float = settings.DEFAULT_LEARNING_RATE,
    ) -> ViEstimate:
        """Dispatch on method"""
        lazy_cfg = lazy_cfg or LazyConfig()
        if method == VIMethod.DROPOUT:
            return self.dropout(j, lazy_cfg.alpha)
        if method == VIMethod.RETRAIN:
            return self.retrain(j, opts=opts, alpha=lazy_cfg.alpha)
        if method == VIMethod.LAZY:
            return self.lazy(j, lazy_cfg)
        if method == VIMethod.LAZY_ES:
            return self.lazy_es(j, es_steps, es_learning_rate, opts, lazy_cfg.alpha)
        return self.ols(j, lazy_cfg.alpha)


def vi_dropout(
    full: MlpModel, split: Split, j: int, m: SkillMeasure = SkillMeasure.NEG_MSE
) -> ViEstimate:
    return VariableImportanceService(full, split, m).dropout(j)


def vi_retrain(
    config: NetworkConfig,
    split: Split,
    j: int,
    m: SkillMeasure = SkillMeasure.NEG_MSE,
    opts: Optional[TrainOptions] = None,
    full: Optional[MlpModel] = None,
) -> ViEstimate:
    """Retrain estimator; trains the full model too when none is given"""
    opts = opts or TrainOptions()
    if full is None:
        full = train(init_model(config, opts.seed), split.train, opts)
    return VariableImportanceService(full, split, m).retrain(j, config, opts)


def vi_lazy(
    full: MlpModel,
    split: Split,
    j: int,
    m: SkillMeasure = SkillMeasure.NEG_MSE,
    cfg: Optional[LazyConfig] = None,
) -> ViEstimate:
    return VariableImportanceService(full, split, m).lazy(j, cfg)


def cv_lambda(full: MlpModel, train_data: Dataset, j: int, cfg: Optional[LazyConfig] = None) -> float:
    """Cross-validated penalty using ``train_data`` as the training split"""
    holder = Split(
        train=train_data,
        test=train_data,
        train_index=np.arange(train_data.n),
        test_index=np.arange(train_data.n),
    )
    service = VariableImportanceService(full, holder)
    service.check_variable(j)
    return service.cv_lambda((j,), cfg)


def vi_lazy_es(
    full: MlpModel,
    split: Split,
    j: int,
    m: SkillMeasure = SkillMeasure.NEG_MSE,
    steps: int = 1,
    lr: float = settings.DEFAULT_LEARNING_RATE,
    opts: Optional[TrainOptions] = None,
) -> ViEstimate:
    return VariableImportanceService(full, split, m).lazy_es(j, steps, lr, opts)


def vi_ols(
    split: Split,
    j: int,
    m: SkillMeasure = SkillMeasure.NEG_MSE,
    alpha: float = settings.DEFAULT_ALPHA,
) -> ViEstimate:
    """Linear regression baseline: both full and reduced models are OLS fits"""
    if not is_valid_index(j, split.p):
        raise IndexOutOfRangeException(j, split.p)
    with Stopwatch() as watch:
        full_fit = fit_ols(split.train.X, split.train.y)
        train_j = dropout_transform(split.train, j)
        reduced_fit = fit_ols(train_j.X, train_j.y)
        test_j = dropout_transform(split.test, j)
        terms = skill_terms(full_fit, split.test, m) - skill_terms(reduced_fit, test_j, m)
    return build_estimate(
        j, terms, VIMethod.OLS, alpha, watch.seconds, feature_name=split.train.name_of(j)
    )
