import logging
from typing import List, Optional

import numpy as np

from lazyvi.core.exceptions import EmptyDatasetException, NonFiniteLossException
from lazyvi.models.dataset import Dataset
from lazyvi.models.enums import Optimizer
from lazyvi.models.network import MlpModel, loss_and_gradient
from lazyvi.schemas.network import TrainOptions


logger = logging.getLogger(__name__)


class Trainer:
    """Full-batch trainer for MlpModel on squared error"""

    def __init__(self, opts: Optional[TrainOptions] = None):
        self.opts = opts or TrainOptions()
        self.loss_history: List[float] = []

    def train(self, model: MlpModel, data: Dataset) -> MlpModel:
        """
        Minimize training MSE starting from ``model``

        Without early stopping the lowest-loss iterate is returned, so the
        result never has a higher training MSE than the input. With
        ``early_stop_steps`` set, exactly that many updates are applied and the
        last iterate is returned.
        """
        if data.n == 0:
            raise EmptyDatasetException("Cannot train on an empty dataset")

        opts = self.opts
        early_stop = opts.early_stop_steps is not None
        steps = opts.early_stop_steps if early_stop else opts.epochs
        self.loss_history = []

        theta = np.array(model.theta, dtype=float)
        velocity = np.zeros_like(theta)
        second_moment = np.zeros_like(theta)
        best_theta = theta.copy()
        best_loss = np.inf

        for step in range(steps):
            loss, grad = loss_and_gradient(model.with_theta(theta), data.X, data.y)
            if not (np.isfinite(loss) and np.all(np.isfinite(grad))):
                logger.error(f"Training diverged at step {step}")
                raise NonFiniteLossException(step, opts.learning_rate)

            self.loss_history.append(loss)
            if loss < best_loss:
                best_loss, best_theta = loss, theta.copy()

            if opts.optimizer == Optimizer.ADAM:
                velocity = opts.beta1 * velocity + (1 - opts.beta1) * grad
                second_moment = opts.beta2 * second_moment + (1 - opts.beta2) * grad**2
                v_hat = velocity / (1 - opts.beta1 ** (step + 1))
                s_hat = second_moment / (1 - opts.beta2 ** (step + 1))
                theta = theta - opts.learning_rate * v_hat / (np.sqrt(s_hat) + opts.eps)
            else:
                velocity = opts.momentum * velocity - opts.learning_rate * grad
                theta = theta + velocity

            if not np.all(np.isfinite(theta)):
                logger.error(f"Parameters became non-finite after step {step}")
                raise NonFiniteLossException(step + 1, opts.learning_rate)

            if step % 100 == 0:
                logger.debug(f"step {step}: train mse {loss:.6f}")

        if early_stop:
            return model.with_theta(theta)

        final_loss, _ = loss_and_gradient(model.with_theta(theta), data.X, data.y)
        if not np.isfinite(final_loss):
            raise NonFiniteLossException(steps, opts.learning_rate)
        self.loss_history.append(final_loss)
        if final_loss < best_loss:
            best_loss, best_theta = final_loss, theta

        logger.debug(f"Trained {steps} epochs, best train mse {best_loss:.6f}")
        return model.with_theta(best_theta)


def train(model: MlpModel, data: Dataset, opts: Optional[TrainOptions] = None) -> MlpModel:
    return Trainer(opts).train(model, data)
