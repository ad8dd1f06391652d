from concurrent.futures import ThreadPoolExecutor
import logging
from typing import Any, Callable, Dict, Iterable, List, Optional, Sequence

import numpy as np
import pandas as pd
from scipy import stats

from lazyvi.core.config import settings
from lazyvi.core.exceptions import ConfigException, MissingTruthException
from lazyvi.models.dataset import Dataset, Split, split
from lazyvi.models.enums import Experiment, OrderingSource, SkillMeasure, VIMethod
from lazyvi.models.network import MlpModel, init_model, ntk_trace
from lazyvi.repositories.dataset_repository import DatasetRepository
from lazyvi.repositories.model_repository import ModelRepository
from lazyvi.schemas.estimate import ViEstimate
from lazyvi.schemas.network import TrainOptions
from lazyvi.schemas.run import CoverageRow, ExperimentResult, NetworkSettings, RunConfig
from lazyvi.services.analytic_service import dropout_retrain_gap, linear_corr_spec, linear_truth_vis
from lazyvi.services.estimator_service import VariableImportanceService
from lazyvi.services.roar_service import ROAR_METHODS, grad_saliency, random_ordering, roar_curve
from lazyvi.services.shapley_service import ShapleyService
from lazyvi.services.simulation_service import (
    gen_binary_probit,
    gen_highdim_teacher,
    gen_linear_corr,
    gen_logistic_sparse,
)
from lazyvi.services.training_service import train
from lazyvi.utils.helpers import Stopwatch


logger = logging.getLogger(__name__)

# Population accuracy VI of the probit simulation
BINARY_TRUE_VI = (0.136, 0.236, 0.0, 0.0)

COVERAGE_SETTING_KEYS = ("rho", "width")


def summarize_coverage(rows: Sequence[Dict[str, Any]]) -> List[CoverageRow]:
    """
    Per (rho, width, variable, method): fraction of intervals containing the
    truth and mean bias truth - vi_hat

    rho and width only key the groups when every row carries them.
    """
    if not rows:
        raise MissingTruthException("No results to summarize")
    frame = pd.DataFrame(list(rows))
    if "truth" not in frame.columns or frame["truth"].isna().any():
        raise MissingTruthException()

    frame["covered"] = (frame["ci_lo"] <= frame["truth"]) & (frame["truth"] <= frame["ci_hi"])
    frame["bias"] = frame["truth"] - frame["vi"]
    if "seconds" not in frame.columns:
        frame["seconds"] = 0.0

    settings_keys = [
        key for key in COVERAGE_SETTING_KEYS if key in frame.columns and frame[key].notna().all()
    ]
    keys = settings_keys + ["variable", "method"]

    summary = []
    for values, group in frame.groupby(keys, sort=True):
        group_key = dict(zip(keys, values))
        summary.append(
            CoverageRow(
                variable=int(group_key["variable"]),
                method=VIMethod(group_key["method"]),
                rho=float(group_key["rho"]) if "rho" in group_key else None,
                width=int(group_key["width"]) if "width" in group_key else None,
                num_runs=len(group),
                coverage=float(group["covered"].mean()),
                mean_bias=float(group["bias"].mean()),
                truth=float(group["truth"].iloc[0]),
                mean_vi=float(group["vi"].mean()),
                mean_seconds=float(group["seconds"].mean()),
            )
        )
    return summary


def fit_trace_line(sizes: Sequence[int], traces: Sequence[float]) -> Dict[str, float]:
    """Least-squares line of tr(K) against n, with R^2 and the spread of tr(K)/n"""
    sizes = np.asarray(sizes, dtype=float)
    traces = np.asarray(traces, dtype=float)
    fit = stats.linregress(sizes, traces)
    per_n = traces / sizes
    return {
        "slope": float(fit.slope),
        "intercept": float(fit.intercept),
        "r_squared": float(fit.rvalue**2),
        "max_relative_spread": float(np.max(np.abs(per_n - per_n.mean())) / per_n.mean()),
    }


def estimate_row(estimate: ViEstimate, **extra) -> Dict[str, Any]:
    row = dict(extra)
    row.update(
        {
            "variable": estimate.variable,
            "feature": estimate.feature_name,
            "method": estimate.method.value,
            "vi": estimate.vi_hat,
            "se": estimate.tau_hat,
            "ci_lo": estimate.ci[0],
            "ci_hi": estimate.ci[1],
            "lambda": estimate.lambda_used,
            "seconds": estimate.seconds,
        }
    )
    return row


class ExperimentService:
    """
    Runs one RunConfig and collects its rows

    Rows are appended as they are produced, so a failure part-way still
    leaves the completed rows available to flush.
    """

    def __init__(self, config: RunConfig, model_repository: Optional[ModelRepository] = None):
        self.config = config
        self.model_repository = model_repository
        self.result = ExperimentResult(experiment=config.experiment)
        self.workers = max(1, settings.MAX_WORKERS)

    def run(self) -> ExperimentResult:
        drivers: Dict[Experiment, Callable[[], None]] = {
            Experiment.LINEAR_CORR: self.linear_corr,
            Experiment.BINARY: self.binary,
            Experiment.HIGHDIM: self.highdim,
            Experiment.CSV_VI: self.csv_vi,
            Experiment.SHAPLEY: self.shapley,
            Experiment.ROAR: self.roar,
            Experiment.TRACE_CHECK: self.trace_check,
            Experiment.WIDTH_SWEEP: self.width_sweep,
        }
        logger.info(
            f"🚀 Running {self.config.experiment.value} with seeds {self.config.seeds}"
        )
        with Stopwatch() as watch:
            drivers[self.config.experiment]()
        self.result.summary["seconds"] = watch.seconds
        logger.info(
            f"✅ {self.config.experiment.value} finished: {len(self.result.rows)} rows "
            f"in {watch.seconds:.1f}s"
        )
        return self.result

    # Shared steps

    def _streams(self, seed: int) -> List[np.random.Generator]:
        """Independent data / split / auxiliary streams derived from one seed"""
        return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(3)]

    def _opts(self, seed: int) -> TrainOptions:
        return self.config.train.model_copy(update={"seed": seed})

    def _fit(self, data: Dataset, seed: int, split_rng, network: Optional[NetworkSettings] = None):
        cfg = self.config
        parts = split(data, cfg.n1, split_rng)
        net = (network or cfg.network).build(data.p)
        with Stopwatch() as watch:
            full = train(init_model(net, seed), parts.train, self._opts(seed))
        self.result.summary["full_training_seconds"] = (
            self.result.summary.get("full_training_seconds", 0.0) + watch.seconds
        )
        logger.info(f"Seed {seed}: trained full model ({net.num_params} params) in {watch.seconds:.2f}s")
        return parts, full

    def _variables(self, p: int, default: Optional[Iterable[int]] = None) -> List[int]:
        if self.config.variables is not None:
            variables = list(self.config.variables)
        else:
            variables = list(default) if default is not None else list(range(p))
        bad = [j for j in variables if not 0 <= j < p]
        if bad:
            raise ConfigException(f"Field 'variables' has indices {bad} outside [0, {p})")
        return variables

    def _map(self, fn: Callable, items: Sequence) -> List:
        """Ordered map, threaded when MAX_WORKERS > 1"""
        if self.workers == 1 or len(items) < 2:
            return [fn(item) for item in items]
        with ThreadPoolExecutor(max_workers=self.workers) as executor:
            return list(executor.map(fn, items))

    def _estimate(
        self,
        full: MlpModel,
        parts: Split,
        variables: Sequence[int],
        seed: int,
        methods: Optional[Sequence[VIMethod]] = None,
    ) -> List[ViEstimate]:
        cfg = self.config
        methods = list(methods or cfg.methods)
        service = VariableImportanceService(full, parts, cfg.skill_measure)
        opts = self._opts(seed)

        def per_variable(j: int) -> List[ViEstimate]:
            return [
                service.estimate(
                    j,
                    method,
                    lazy_cfg=cfg.lazy,
                    opts=opts,
                    es_steps=cfg.es_steps,
                    es_learning_rate=cfg.es_learning_rate,
                )
                for method in methods
            ]

        estimates = [e for group in self._map(per_variable, variables) for e in group]
        for e in estimates:
            logger.info(
                f"Seed {seed} {e.feature_name} {e.method.value}: vi={e.vi_hat:.4f} "
                f"se={e.tau_hat:.4f} ({e.seconds:.3f}s)"
            )
        return estimates

    # Drivers

    def _linear_corr_seed(
        self, rho: float, seed: int, network: NetworkSettings, methods=None, variables=None, **extra
    ) -> List[Dict[str, Any]]:
        cfg = self.config
        spec = linear_corr_spec(rho, cfg.noise_sd)
        data_rng, split_rng, _ = self._streams(seed)
        data = gen_linear_corr(cfg.n, rho, data_rng, cfg.noise_sd)
        parts, full = self._fit(data, seed, split_rng, network)

        rows = []
        for estimate in self._estimate(full, parts, self._variables(data.p, variables), seed, methods):
            j = estimate.variable
            rows.append(
                estimate_row(
                    estimate,
                    seed=seed,
                    rho=rho,
                    **extra,
                    truth=linear_truth_vis(spec, j)[0],
                    theoretical_gap=dropout_retrain_gap(spec, j),
                )
            )
        return rows

    def linear_corr(self) -> None:
        for rho in self.config.rho_grid:
            for seed in self.config.seeds:
                self.result.rows.extend(self._linear_corr_seed(rho, seed, self.config.network))
        self.result.coverage = summarize_coverage(self.result.rows)

    def binary(self) -> None:
        cfg = self.config
        for seed in cfg.seeds:
            data_rng, split_rng, _ = self._streams(seed)
            data = gen_binary_probit(cfg.n, data_rng)
            parts, full = self._fit(data, seed, split_rng)
            for estimate in self._estimate(full, parts, self._variables(data.p), seed):
                self.result.rows.append(
                    estimate_row(estimate, seed=seed, truth=BINARY_TRUE_VI[estimate.variable])
                )
        self.result.coverage = summarize_coverage(self.result.rows)

    def highdim(self) -> None:
        cfg = self.config
        for seed in cfg.seeds:
            data_rng, split_rng, _ = self._streams(seed)
            data = gen_highdim_teacher(
                cfg.n,
                cfg.sigma_w,
                data_rng,
                width=cfg.teacher_width,
                p=cfg.p or 100,
                rho=cfg.rho if cfg.rho is not None else 0.5,
                noise_sd=cfg.noise_sd,
            )
            parts, full = self._fit(data, seed, split_rng)
            estimates = self._estimate(full, parts, self._variables(data.p, range(min(data.p, 10))), seed)

            retrain_vi = {
                e.variable: e.vi_hat for e in estimates if e.method == VIMethod.RETRAIN
            }
            for estimate in estimates:
                reference = retrain_vi.get(estimate.variable)
                relative = None
                if reference is not None and reference != 0:
                    relative = (estimate.vi_hat - reference) / reference
                self.result.rows.append(
                    estimate_row(estimate, seed=seed, relative_error=relative)
                )

        frame = pd.DataFrame(self.result.rows)
        if frame["relative_error"].notna().any():
            self.result.summary["mean_abs_relative_error"] = (
                frame.dropna(subset=["relative_error"])
                .groupby("method")["relative_error"]
                .apply(lambda s: float(np.mean(np.abs(s))))
                .to_dict()
            )

    def csv_vi(self) -> None:
        cfg = self.config
        data = DatasetRepository().load_csv(cfg.data_path, cfg.response)
        if cfg.n1 >= data.n:
            raise ConfigException(f"Field 'n1' must be smaller than the {data.n} data rows")
        for seed in cfg.seeds:
            _, split_rng, _ = self._streams(seed)
            parts, full = self._fit(data, seed, split_rng)
            if cfg.save_model and self.model_repository is not None:
                self.model_repository.save_model(f"full_seed{seed}.json", full)
            for estimate in self._estimate(full, parts, self._variables(data.p), seed):
                self.result.estimates.append(estimate)
                self.result.rows.append(estimate_row(estimate, seed=seed))

    def shapley(self) -> None:
        cfg = self.config
        seconds: Dict[str, float] = {}
        for seed in cfg.seeds:
            data_rng, split_rng, aux_rng = self._streams(seed)
            data = gen_logistic_sparse(
                cfg.n, data_rng, rho=cfg.rho if cfg.rho is not None else 0.75, p=cfg.p or 100
            )
            parts, full = self._fit(data, seed, split_rng)
            for method in cfg.coalition_methods:
                service = ShapleyService(
                    full, parts, cfg.lazy, method, self._opts(seed), SkillMeasure.NEG_MSE
                )
                if cfg.shapley_exact:
                    estimate = service.exact()
                else:
                    estimate = service.sampled(cfg.num_permutations, aux_rng)
                seconds[method.value] = seconds.get(method.value, 0.0) + estimate.seconds
                self.result.shapley[f"shapley_{method.value}_seed{seed}"] = estimate
                for j, row in enumerate(estimate.to_rows()):
                    self.result.rows.append(
                        {"seed": seed, "coalition_method": method.value, "variable": j, **row}
                    )
        self.result.summary["seconds_by_method"] = seconds

    def roar(self) -> None:
        cfg = self.config
        methods = [m for m in cfg.methods if m in ROAR_METHODS] or list(ROAR_METHODS)
        for seed in cfg.seeds:
            data_rng, split_rng, aux_rng = self._streams(seed)
            data = gen_highdim_teacher(
                cfg.n,
                cfg.sigma_w,
                data_rng,
                width=cfg.teacher_width,
                p=cfg.p or 100,
                rho=cfg.rho if cfg.rho is not None else 0.5,
                noise_sd=cfg.noise_sd,
            )
            parts, full = self._fit(data, seed, split_rng)
            if cfg.ordering == OrderingSource.RANDOM:
                ordering = random_ordering(data.p, aux_rng)
            else:
                ordering = grad_saliency(full, parts.train)
            curve = roar_curve(
                full.config,
                parts,
                ordering,
                cfg.proportions,
                methods,
                self._opts(seed),
                full=full,
                lazy_cfg=cfg.lazy,
            )
            self.result.roar[f"roar_seed{seed}"] = curve
            for point in curve.points:
                self.result.rows.append(
                    {
                        "seed": seed,
                        "ordering": ordering.source.value,
                        "t": point.t,
                        "method": point.method.value,
                        "num_removed": point.num_removed,
                        "mse": point.mse,
                        "seconds": point.seconds,
                    }
                )

        frame = pd.DataFrame(self.result.rows)
        mean_mse = frame.groupby(["t", "method"])["mse"].mean()
        self.result.summary["mean_mse"] = {
            f"{t}|{method}": float(value) for (t, method), value in mean_mse.items()
        }

    def trace_check(self) -> None:
        cfg = self.config
        rho = cfg.rho if cfg.rho is not None else 0.5
        sizes = sorted(cfg.test_sizes)
        for seed in cfg.seeds:
            data_rng, _, aux_rng = self._streams(seed)
            data = gen_linear_corr(cfg.n1, rho, data_rng, cfg.noise_sd)
            net = cfg.network.build(data.p)
            full = train(init_model(net, seed), data, self._opts(seed))
            pool = gen_linear_corr(sizes[-1], rho, aux_rng, cfg.noise_sd)
            for size in sizes:
                trace = ntk_trace(full, pool.X[:size])
                self.result.rows.append(
                    {"seed": seed, "n": size, "trace": trace, "trace_per_n": trace / size}
                )
                logger.info(f"Seed {seed}: tr(K) at n={size} is {trace:.3f}")

        frame = pd.DataFrame(self.result.rows)
        fit = fit_trace_line(frame["n"], frame["trace"])
        self.result.summary["trace_fit"] = fit
        logger.info(f"tr(K) vs n: slope={fit['slope']:.4f} R^2={fit['r_squared']:.4f}")

    def width_sweep(self) -> None:
        cfg = self.config
        rho = cfg.rho if cfg.rho is not None else 0.5
        methods = cfg.methods if cfg.methods else [VIMethod.LAZY]
        by_width: Dict[str, Any] = {}
        for width in cfg.widths:
            network = NetworkSettings(hidden_widths=[width] * max(1, len(cfg.network.hidden_widths)))
            rows: List[Dict[str, Any]] = []
            for seed in cfg.seeds:
                rows.extend(
                    self._linear_corr_seed(
                        rho, seed, network, methods=methods, variables=[0, 1, 2], width=width
                    )
                )
            self.result.rows.extend(rows)
            coverage = summarize_coverage(rows)
            by_width[str(width)] = [row.model_dump(mode="json") for row in coverage]
            logger.info(
                f"Width {width}: coverage "
                + ", ".join(f"{c.method.value}/X{c.variable + 1}={c.coverage:.2f}" for c in coverage)
            )
        self.result.summary["coverage_by_width"] = by_width
        self.result.coverage = summarize_coverage(self.result.rows)


def run_experiment(config: RunConfig, model_repository: Optional[ModelRepository] = None) -> ExperimentResult:
    return ExperimentService(config, model_repository).run()
