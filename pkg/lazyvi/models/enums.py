from enum import Enum


class SkillMeasure(str, Enum):
    NEG_MSE = "neg_mse"
    ACCURACY = "accuracy"


class VIMethod(str, Enum):
    DROPOUT = "dropout"
    RETRAIN = "retrain"
    LAZY = "lazy"
    LAZY_ES = "lazy_es"
    OLS = "ols"


class Optimizer(str, Enum):
    ADAM = "adam"
    MOMENTUM = "momentum"


class LazyInit(str, Enum):
    FULL = "full"
    RANDOM = "random"


class CoalitionMethod(str, Enum):
    LAZY = "lazy"
    RETRAIN = "retrain"


class OrderingSource(str, Enum):
    GRAD = "grad"
    RANDOM = "random"
    GIVEN = "given"


class Experiment(str, Enum):
    LINEAR_CORR = "linear_corr"
    BINARY = "binary"
    HIGHDIM = "highdim"
    CSV_VI = "csv_vi"
    SHAPLEY = "shapley"
    ROAR = "roar"
    TRACE_CHECK = "trace_check"
    WIDTH_SWEEP = "width_sweep"
