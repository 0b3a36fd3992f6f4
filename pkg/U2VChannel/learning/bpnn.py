from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
from mashumaro import DataClassDictMixin
from pyee.base import EventEmitter

from U2VChannel.client.errors import InvalidHyperparameterError, TrainingDivergedError, ModelShapeError
from U2VChannel.client.logger import U2VChannelLogHandler
from U2VChannel.events import emit_event, EpochEndEvent
from U2VChannel.geometry.paths import PathKind
from U2VChannel.learning.mlp import MlpModel, AdamOptimizer, parse_activation

MIN_TRAINING_SAMPLES: int = 10

"""Trained 1-4-1 parameters of the delay-to-power networks, input in µs and output in dB"""
PRESET_PARAMETERS: dict = {
    PathKind.LOS: {
        "hidden_weights": [-2.033, 0.615, 1.951, 1.044],
        "hidden_biases": [0.050, -1.323, 0.818, 0.950],
        "output_weights": [-0.343, -21.993, -29.861, -29.012],
        "output_bias": -30.082
    },
    PathKind.NLOS: {
        "hidden_weights": [0.430, 0.746, 0.772, 1.213],
        "hidden_biases": [-1.729, 0.922, 1.033, 1.345],
        "output_weights": [-18.140, -32.827, -32.964, -32.980],
        "output_bias": -33.212
    }
}


@dataclass()
class TrainConfig(DataClassDictMixin):
    """
    Hyperparameters of delay-to-power training

    """

    learning_rate: float = 0.001
    epochs: int = 2000
    l2: float = 0.0
    split: float = 0.7
    seed: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    batch_size: Optional[int] = None
    hidden: List[int] = field(default_factory=lambda: [4])
    hidden_activation: str = "sigmoid"

    # Train on z-scored delays/powers and fold the scaling back into the first and last layers
    standardize: bool = True

    def validate(self) -> None:
        """
        Check the preconditions of every hyperparameter

        :raises InvalidHyperparameterError: On the first violation

        """

        if not 0.0 < self.split < 1.0:
            raise InvalidHyperparameterError(f"Split ratio must lie in (0, 1), got {self.split}.")

        if self.learning_rate <= 0:
            raise InvalidHyperparameterError(f"Learning rate must be positive, got {self.learning_rate}.")

        if self.epochs < 1:
            raise InvalidHyperparameterError(f"Epoch count must be at least 1, got {self.epochs}.")

        if self.l2 < 0:
            raise InvalidHyperparameterError(f"L2 factor must be non-negative, got {self.l2}.")

        if self.batch_size is not None and self.batch_size < 1:
            raise InvalidHyperparameterError(f"Batch size must be at least 1, got {self.batch_size}.")

        if any(h < 1 for h in self.hidden):
            raise InvalidHyperparameterError(f"Hidden layer sizes must be positive, got {self.hidden}.")

        parse_activation(self.hidden_activation)


@dataclass()
class TrainHistory:
    """
    Per-epoch record of a training run

    """

    cost: List[float] = field(default_factory=list)
    train_rmse: List[float] = field(default_factory=list)
    validation_rmse: List[float] = field(default_factory=list)
    train_indices: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))
    validation_indices: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))


@dataclass(frozen=True)
class ExponentialFit:
    """
    Exponential power law, a straight line in (µs, dB)

    """

    intercept_db: float
    slope_db_per_us: float

    def predict(self, delays_us: np.ndarray) -> np.ndarray:
        return self.intercept_db + self.slope_db_per_us * np.asarray(delays_us, dtype=float)

    def rmse(self, delays_us: np.ndarray, powers_db: np.ndarray) -> float:
        return float(np.sqrt(np.mean((self.predict(delays_us) - np.asarray(powers_db, dtype=float)) ** 2)))


def forward(model: MlpModel, delays_us: np.ndarray) -> np.ndarray:
    """
    Path power for one or more delays

    :param model: A 1-input, 1-output network
    :param delays_us: Delay(s) in microseconds
    :return: Power(s) in dB, same length as the input

    """

    if model.layer_dims[0] != 1 or model.layer_dims[-1] != 1:
        raise ModelShapeError(f"A delay-to-power model maps 1 input to 1 output, got {model.layer_dims}.")

    return model.forward(np.atleast_1d(np.asarray(delays_us, dtype=float))).reshape(-1)


def cost(model: MlpModel, delays_us: np.ndarray, powers_db: np.ndarray, l2: float = 0.0) -> float:
    """
    Mean squared error plus (l2 / 2) times the squared norm of every weight matrix

    :param model: The network
    :param delays_us: Training inputs (µs)
    :param powers_db: Training targets (dB)
    :param l2: Regularisation factor λ
    :return: The cost

    """

    value, _ = cost_gradients(model, delays_us, powers_db, l2, with_gradients=False)
    return value


def cost_gradients(
        model: MlpModel,
        delays_us: np.ndarray,
        powers_db: np.ndarray,
        l2: float = 0.0,
        with_gradients: bool = True
) -> Tuple[float, Optional[List[np.ndarray]]]:
    """
    Cost and its gradient with respect to `model.parameters`

    :return: (cost, gradients in parameter order or None)

    """

    x: np.ndarray = np.atleast_1d(np.asarray(delays_us, dtype=float))
    y: np.ndarray = np.atleast_1d(np.asarray(powers_db, dtype=float)).reshape(-1, 1)

    if len(x) == 0:
        raise InvalidHyperparameterError("The cost of an empty training set is undefined.")

    prediction, cache = model.forward_with_cache(x)
    residual: np.ndarray = prediction - y
    value: float = float(np.mean(residual ** 2) + 0.5 * l2 * sum(float(np.sum(w * w)) for w in model.weights))

    if not with_gradients:
        return value, None

    weight_grads, bias_grads, _ = model.backward(cache, 2.0 * residual / len(x))
    weight_grads = [dw + l2 * w for dw, w in zip(weight_grads, model.weights)]
    return value, model.gradients(weight_grads, bias_grads)


def validation_rmse(model: MlpModel, delays_us: np.ndarray, powers_db: np.ndarray) -> float:
    """
    Root mean squared error of a model on held-out data

    """

    return float(np.sqrt(np.mean((forward(model, delays_us) - np.asarray(powers_db, dtype=float)) ** 2)))


def split_indices(count: int, ratio: float, rng: np.random.Generator) -> Tuple[np.ndarray, np.ndarray]:
    """
    Seeded shuffle split into disjoint training and validation index sets

    :param count: Number of samples
    :param ratio: Training share
    :param rng: Seeded generator
    :return: (sorted training indices, sorted validation indices)

    """

    order: np.ndarray = rng.permutation(count)
    n_train: int = int(np.clip(round(ratio * count), 1, count - 1))
    return np.sort(order[:n_train]), np.sort(order[n_train:])


def fold_scaling(model: MlpModel, x_mean: float, x_scale: float, y_mean: float, y_scale: float) -> MlpModel:
    """
    Turn a network trained on z-scored data into one on raw (µs, dB) data

    :return: A new model with identical predictions on the raw scale

    """

    folded: MlpModel = model.copy()
    first_weights: np.ndarray = folded.weights[0]
    folded.biases[0] = folded.biases[0] - (x_mean / x_scale) * first_weights.sum(axis=0)
    folded.weights[0] = first_weights / x_scale
    folded.weights[-1] = folded.weights[-1] * y_scale
    folded.biases[-1] = folded.biases[-1] * y_scale + y_mean
    return folded


def train(
        delays_us: Sequence[float],
        powers_db: Sequence[float],
        config: Optional[TrainConfig] = None,
        emitter: Optional[EventEmitter] = None,
        model_name: str = "bpnn"
) -> Tuple[MlpModel, TrainHistory]:
    """
    Train a delay-to-power network with backpropagation and ADAM

    :param delays_us: Path delays (µs)
    :param powers_db: Path powers (dB)
    :param config: Hyperparameters
    :param emitter: Optional emitter for per-epoch events
    :param model_name: Name used in events, logs and errors
    :return: (trained model on the raw scale, history)

    """

    config = config or TrainConfig()
    config.validate()
    logger: logging.Logger = U2VChannelLogHandler.get_logger()

    x: np.ndarray = np.asarray(delays_us, dtype=float).reshape(-1)
    y: np.ndarray = np.asarray(powers_db, dtype=float).reshape(-1)

    if len(x) != len(y):
        raise InvalidHyperparameterError(f"Got {len(x)} delays but {len(y)} powers.")

    if len(x) < MIN_TRAINING_SAMPLES:
        raise InvalidHyperparameterError(f"Training needs at least {MIN_TRAINING_SAMPLES} samples, got {len(x)}.")

    rng: np.random.Generator = np.random.default_rng(config.seed)
    train_idx, val_idx = split_indices(len(x), config.split, rng)
    history: TrainHistory = TrainHistory(train_indices=train_idx, validation_indices=val_idx)

    dims: List[int] = [1, *config.hidden, 1]
    activations: List[str] = [config.hidden_activation] * len(config.hidden) + ["linear"]
    model: MlpModel = MlpModel.initialize(dims, activations, rng)

    x_mean, x_scale, y_mean, y_scale = 0.0, 1.0, 0.0, 1.0

    if config.standardize:
        x_mean, y_mean = float(np.mean(x[train_idx])), float(np.mean(y[train_idx]))
        x_scale, y_scale = float(np.std(x[train_idx])) or 1.0, float(np.std(y[train_idx])) or 1.0

    x_train: np.ndarray = (x[train_idx] - x_mean) / x_scale
    y_train: np.ndarray = (y[train_idx] - y_mean) / y_scale

    optimizer: AdamOptimizer = AdamOptimizer(
        model.parameters,
        learning_rate=config.learning_rate,
        beta1=config.beta1,
        beta2=config.beta2,
        epsilon=config.epsilon
    )

    batch_size: int = config.batch_size or len(train_idx)
    raw_model: MlpModel = model

    for epoch in range(1, config.epochs + 1):
        order: np.ndarray = rng.permutation(len(train_idx)) if batch_size < len(train_idx) else np.arange(len(train_idx))

        for start in range(0, len(order), batch_size):
            batch: np.ndarray = order[start:start + batch_size]
            _, grads = cost_gradients(model, x_train[batch], y_train[batch], config.l2)
            optimizer.step(grads)

        raw_model = fold_scaling(model, x_mean, x_scale, y_mean, y_scale) if config.standardize else model.copy()
        epoch_cost: float = cost(raw_model, x[train_idx], y[train_idx], config.l2)

        if not np.isfinite(epoch_cost):
            raise TrainingDivergedError(model_name, epoch)

        history.cost.append(epoch_cost)
        history.train_rmse.append(validation_rmse(raw_model, x[train_idx], y[train_idx]))
        history.validation_rmse.append(validation_rmse(raw_model, x[val_idx], y[val_idx]))
        logger.debug(f"{model_name} epoch {epoch}: cost {epoch_cost:.6g}, validation RMSE {history.validation_rmse[-1]:.4f} dB")
        emit_event(emitter, EpochEndEvent(model_name, epoch, epoch_cost, history.validation_rmse[-1]))

    raw_model.trained = True
    logger.info(
        f"Trained {model_name} on {len(train_idx)} samples, validated on {len(val_idx)}: "
        f"validation RMSE {history.validation_rmse[-1]:.4f} dB"
    )

    return raw_model, history


def fit_exponential_baseline(delays_us: np.ndarray, powers_db: np.ndarray) -> ExponentialFit:
    """
    Least-squares exponential power law (a straight line in dB)

    :param delays_us: Delays (µs)
    :param powers_db: Powers (dB)
    :return: The fitted law

    """

    if len(delays_us) < 2:
        raise InvalidHyperparameterError("An exponential fit needs at least 2 samples.")

    slope, intercept = np.polyfit(np.asarray(delays_us, dtype=float), np.asarray(powers_db, dtype=float), 1)
    return ExponentialFit(intercept_db=float(intercept), slope_db_per_us=float(slope))


def preset_network(kind: PathKind) -> MlpModel:
    """
    The bundled trained 1-4-1 network for LoS or NLoS paths

    :param kind: Which path population
    :return: A trained model

    """

    params: dict = PRESET_PARAMETERS[kind]

    return MlpModel(
        layer_dims=[1, 4, 1],
        weights=[np.array([params["hidden_weights"]]), np.array(params["output_weights"]).reshape(4, 1)],
        biases=[np.array(params["hidden_biases"]), np.array([params["output_bias"]])],
        activations=["sigmoid", "linear"],
        trained=True
    )


__all__ = [
    "PRESET_PARAMETERS",
    "TrainConfig",
    "TrainHistory",
    "ExponentialFit",
    "forward",
    "cost",
    "cost_gradients",
    "validation_rmse",
    "split_indices",
    "fold_scaling",
    "train",
    "fit_exponential_baseline",
    "preset_network"
]
