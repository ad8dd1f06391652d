from dataclasses import dataclass
import logging
from typing import List, Tuple

import numpy as np

from lazyvi.core.exceptions import DimensionMismatchException, NonFiniteInputException
from lazyvi.core.numerics import RngLike, make_rng
from lazyvi.schemas.network import NetworkConfig
from lazyvi.utils.validators import is_finite_array


logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class MlpModel:
    """
    Fully connected ReLU network with a flat parameter vector

    theta holds, for each layer in turn, the weight matrix (fan_out x fan_in,
    row-major) then the bias vector. Gradient feature columns follow the same
    order, so a correction from gradient space adds to theta directly.
    """

    config: NetworkConfig
    theta: np.ndarray

    def __post_init__(self):
        if self.theta.shape != (self.config.num_params,):
            raise DimensionMismatchException(
                f"theta has shape {self.theta.shape}, expected ({self.config.num_params},)"
            )
        if not is_finite_array(self.theta):
            raise NonFiniteInputException("Model parameters contain non-finite entries")
        self.theta.setflags(write=False)

    @property
    def num_params(self) -> int:
        return self.config.num_params

    @property
    def input_dim(self) -> int:
        return self.config.input_dim

    def layers(self) -> List[Tuple[np.ndarray, np.ndarray]]:
        """(W, b) views into theta, W with shape (fan_out, fan_in)"""
        out = []
        offset = 0
        sizes = self.config.layer_sizes
        for fan_in, fan_out in zip(sizes, sizes[1:]):
            w = self.theta[offset : offset + fan_in * fan_out].reshape(fan_out, fan_in)
            offset += fan_in * fan_out
            b = self.theta[offset : offset + fan_out]
            offset += fan_out
            out.append((w, b))
        return out

    def with_theta(self, theta: np.ndarray) -> "MlpModel":
        return MlpModel(self.config, np.array(theta, dtype=float, copy=True))

    def shifted(self, delta: np.ndarray) -> "MlpModel":
        """Model at theta + delta"""
        return self.with_theta(self.theta + np.asarray(delta, dtype=float))

    def __call__(self, X: np.ndarray) -> np.ndarray:
        return predict(self, X)


def init_model(config: NetworkConfig, rng: RngLike = None) -> MlpModel:
    """He-style fan-in Gaussian weights, zero biases"""
    gen = make_rng(rng)
    parts = []
    sizes = config.layer_sizes
    last = len(sizes) - 2
    for k, (fan_in, fan_out) in enumerate(zip(sizes, sizes[1:])):
        gain = 1.0 if k == last else 2.0
        parts.append(gen.normal(0.0, np.sqrt(gain / fan_in), size=fan_in * fan_out))
        parts.append(np.zeros(fan_out))
    return MlpModel(config, np.concatenate(parts))


def _as_batch(model: MlpModel, X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X.reshape(1, -1)
    if X.ndim != 2 or X.shape[1] != model.input_dim:
        raise DimensionMismatchException(
            f"Input has shape {X.shape}, network expects {model.input_dim} features"
        )
    return X


def _forward_cache(model: MlpModel, X: np.ndarray):
    """Output plus (pre-activations, activations) for every hidden layer"""
    layers = model.layers()
    activations = [X]
    pre_activations = []
    a = X
    for w, b in layers[:-1]:
        z = a @ w.T + b
        a = np.maximum(z, 0.0)
        pre_activations.append(z)
        activations.append(a)
    w_out, b_out = layers[-1]
    output = (a @ w_out.T + b_out)[:, 0]
    return output, pre_activations, activations


def _backward(model: MlpModel, pre_activations, activations, delta: np.ndarray):
    """
    Back-propagate output sensitivities ``delta`` (n,)

    Returns per-layer deltas (n, fan_out) and the input sensitivity (n, p).
    ReLU'(0) is taken as 0.
    """
    layers = model.layers()
    deltas = [None] * len(layers)
    d = delta.reshape(-1, 1)
    for k in range(len(layers) - 1, -1, -1):
        deltas[k] = d
        w, _ = layers[k]
        d = d @ w
        if k > 0:
            d = d * (pre_activations[k - 1] > 0.0)
    return deltas, d


def predict(model: MlpModel, X) -> np.ndarray:
    """Network output for each row of X"""
    output, _, _ = _forward_cache(model, _as_batch(model, X))
    return output


def forward(model: MlpModel, x) -> float:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise DimensionMismatchException(f"Expected a single input vector, got {x.shape}")
    return float(predict(model, x)[0])


def jacobian(model: MlpModel, X) -> np.ndarray:
    """Gradient feature matrix: row i is d h(X_i) / d theta, shape (n, M)"""
    X = _as_batch(model, X)
    n = X.shape[0]
    _, pre, acts = _forward_cache(model, X)
    deltas, _ = _backward(model, pre, acts, np.ones(n))

    phi = np.empty((n, model.num_params))
    offset = 0
    for k, d in enumerate(deltas):
        a_prev = acts[k]
        fan_out, fan_in = d.shape[1], a_prev.shape[1]
        size = fan_out * fan_in
        phi[:, offset : offset + size] = (d[:, :, None] * a_prev[:, None, :]).reshape(n, size)
        offset += size
        phi[:, offset : offset + fan_out] = d
        offset += fan_out
    return phi


def param_gradient(model: MlpModel, x) -> np.ndarray:
    """d h(x) / d theta in theta's flattening order"""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise DimensionMismatchException(f"Expected a single input vector, got {x.shape}")
    return jacobian(model, x)[0]


def input_gradients(model: MlpModel, X) -> np.ndarray:
    """d h(X_i) / d x for each row, shape (n, p)"""
    X = _as_batch(model, X)
    _, pre, acts = _forward_cache(model, X)
    _, dx = _backward(model, pre, acts, np.ones(X.shape[0]))
    return dx


def input_gradient(model: MlpModel, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise DimensionMismatchException(f"Expected a single input vector, got {x.shape}")
    return input_gradients(model, x)[0]


def ntk_matrix(model: MlpModel, X) -> np.ndarray:
    """Empirical neural tangent kernel K = Phi Phi^T at the model's parameters"""
    phi = jacobian(model, X)
    kernel = phi @ phi.T
    return 0.5 * (kernel + kernel.T)


def ntk_trace(model: MlpModel, X) -> float:
    """tr(K) = sum_i ||phi_i||^2 without forming K"""
    phi = jacobian(model, X)
    return float(np.einsum("ij,ij->", phi, phi))


def loss_and_gradient(model: MlpModel, X: np.ndarray, y: np.ndarray) -> Tuple[float, np.ndarray]:
    """Training MSE and its gradient with respect to theta"""
    X = _as_batch(model, X)
    n = X.shape[0]
    output, pre, acts = _forward_cache(model, X)
    residual = output - y
    loss = float(np.mean(residual**2))
    deltas, _ = _backward(model, pre, acts, (2.0 / n) * residual)

    grad = np.empty(model.num_params)
    offset = 0
    for k, d in enumerate(deltas):
        a_prev = acts[k]
        g_w = d.T @ a_prev
        grad[offset : offset + g_w.size] = g_w.ravel()
        offset += g_w.size
        grad[offset : offset + d.shape[1]] = d.sum(axis=0)
        offset += d.shape[1]
    return loss, grad
