from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
from mashumaro import DataClassDictMixin
from pyee.base import EventEmitter
from scipy import stats
from scipy.special import expit

from U2VChannel.client.errors import InvalidHyperparameterError, TrainingDivergedError
from U2VChannel.client.logger import U2VChannelLogHandler
from U2VChannel.events import emit_event, GanStepEvent
from U2VChannel.learning.mlp import MlpModel, AdamOptimizer

MIN_GAN_SAMPLES: int = 100
RECOMMENDED_GAN_SAMPLES: int = 1000
PROBABILITY_CLAMP: float = 1e-12


class NoisePrior(enum.Enum):
    """
    Distribution of the generator's input noise

    """

    NORMAL = "normal"
    UNIFORM = "uniform"


class GeneratorLoss(enum.Enum):
    """
    Generator objective: descend log(1 − d(g(z))) directly, or ascend log d(g(z)) (same fixed point)

    """

    MINIMAX = "minimax"
    NON_SATURATING = "non_saturating"


class BaselineFamily(enum.Enum):
    GAUSSIAN = "gaussian"
    LAPLACIAN = "laplacian"


@dataclass()
class GanConfig(DataClassDictMixin):
    """
    Hyperparameters of scalar GAN training

    """

    noise_dim: int = 8
    generator_hidden: List[int] = field(default_factory=lambda: [32, 32])
    discriminator_hidden: List[int] = field(default_factory=lambda: [32, 32])
    leaky_slope: float = 0.2
    learning_rate: float = 2e-4
    beta1: float = 0.5
    beta2: float = 0.999
    steps: int = 20000
    batch_size: int = 256
    discriminator_steps: int = 1
    seed: int = 0
    noise: NoisePrior = NoisePrior.NORMAL
    generator_loss: GeneratorLoss = GeneratorLoss.NON_SATURATING
    log_every: int = 100

    def validate(self) -> None:
        if self.learning_rate <= 0:
            raise InvalidHyperparameterError(f"Learning rate must be positive, got {self.learning_rate}.")

        if min(self.noise_dim, self.steps, self.batch_size, self.discriminator_steps, self.log_every) < 1:
            raise InvalidHyperparameterError("Noise dimension, steps, batch size, discriminator steps and log interval must be positive.")

        if self.leaky_slope < 0:
            raise InvalidHyperparameterError(f"LeakyReLU slope must be non-negative, got {self.leaky_slope}.")


@dataclass()
class GanHistory:
    discriminator_loss: List[float] = field(default_factory=list)
    generator_loss: List[float] = field(default_factory=list)
    bce: List[float] = field(default_factory=list)


@dataclass()
class GanModel:
    """
    Generator/discriminator pair over one scalar angle offset.

    Both networks work on offsets standardised by (location, scale); the discriminator
    returns a logit and d(x) is its sigmoid.

    """

    generator: MlpModel
    discriminator: MlpModel
    noise: NoisePrior = NoisePrior.NORMAL
    location: float = 0.0
    scale: float = 1.0
    history: Optional[GanHistory] = None

    @property
    def noise_dim(self) -> int:
        return self.generator.layer_dims[0]

    @property
    def trained(self) -> bool:
        return self.generator.trained and self.discriminator.trained

    def draw_noise(self, n: int, rng: np.random.Generator) -> np.ndarray:
        if self.noise is NoisePrior.UNIFORM:
            return rng.uniform(-1.0, 1.0, size=(n, self.noise_dim))

        return rng.standard_normal(size=(n, self.noise_dim))

    def standardize(self, offsets: np.ndarray) -> np.ndarray:
        return ((np.asarray(offsets, dtype=float).reshape(-1) - self.location) / self.scale).reshape(-1, 1)

    def generate(self, noise: np.ndarray) -> np.ndarray:
        """
        Generator output on the raw offset scale

        :param noise: Noise batch, shape (N, noise_dim)
        :return: Offsets (rad), shape (N,)

        """

        return self.generator.forward(noise).reshape(-1) * self.scale + self.location

    def discriminate(self, offsets: np.ndarray) -> np.ndarray:
        """
        Probability that each offset is real

        :param offsets: Offsets (rad)
        :return: d(x) in (0, 1)

        """

        return expit(self.discriminator.forward(self.standardize(offsets)).reshape(-1))


@dataclass(frozen=True)
class FitBaseline:
    """
    Maximum-likelihood Gaussian or Laplacian fit of the offsets

    """

    family: BaselineFamily
    location: float
    scale: float

    @property
    def distribution(self):
        if self.family is BaselineFamily.LAPLACIAN:
            return stats.laplace(loc=self.location, scale=self.scale)

        return stats.norm(loc=self.location, scale=self.scale)

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        return self.distribution.rvs(size=n, random_state=rng)


def bce_from_probabilities(d_real: np.ndarray, d_fake: np.ndarray) -> float:
    """
    E[log d(x)] + E[log(1 − d(g(z)))] from discriminator outputs, clamped before the logs

    :param d_real: d on the real batch
    :param d_fake: d on the generated batch
    :return: The cross-entropy objective (natural log)

    """

    d_real = np.clip(np.asarray(d_real, dtype=float), PROBABILITY_CLAMP, 1.0 - PROBABILITY_CLAMP)
    d_fake = np.clip(np.asarray(d_fake, dtype=float), PROBABILITY_CLAMP, 1.0 - PROBABILITY_CLAMP)

    if d_real.size == 0 or d_fake.size == 0:
        raise InvalidHyperparameterError("Cross-entropy needs non-empty real and noise batches.")

    return float(np.mean(np.log(d_real)) + np.mean(np.log(1.0 - d_fake)))


def bce(model: GanModel, real: np.ndarray, noise: np.ndarray) -> float:
    """
    Cross-entropy objective of a GAN on a real batch and a noise batch

    :param model: The GAN
    :param real: Real offsets (rad)
    :param noise: Noise batch, shape (N, noise_dim)
    :return: The objective value

    """

    if len(real) == 0 or len(noise) == 0:
        raise InvalidHyperparameterError("Cross-entropy needs non-empty real and noise batches.")

    return bce_from_probabilities(model.discriminate(real), model.discriminate(model.generate(noise)))


def _initialize(dims: Sequence[int], activations: Sequence[str], rng: np.random.Generator) -> MlpModel:
    # Uniform(±1/√fan_in), the usual default for fully connected layers
    weights: List[np.ndarray] = []
    biases: List[np.ndarray] = []

    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        bound: float = 1.0 / np.sqrt(fan_in)
        weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
        biases.append(rng.uniform(-bound, bound, size=fan_out))

    return MlpModel(layer_dims=list(dims), weights=weights, biases=biases, activations=list(activations))


def initialize_gan(config: GanConfig, rng: np.random.Generator, location: float = 0.0, scale: float = 1.0) -> GanModel:
    """
    Create an untrained generator/discriminator pair

    :param config: Architecture and noise settings
    :param rng: Seeded generator
    :param location: Offset standardisation location
    :param scale: Offset standardisation scale
    :return: The untrained GAN

    """

    hidden_tag: str = f"leaky_relu({config.leaky_slope})"

    generator: MlpModel = _initialize(
        [config.noise_dim, *config.generator_hidden, 1],
        [hidden_tag] * len(config.generator_hidden) + ["linear"],
        rng
    )

    discriminator: MlpModel = _initialize(
        [1, *config.discriminator_hidden, 1],
        [hidden_tag] * len(config.discriminator_hidden) + ["linear"],
        rng
    )

    return GanModel(generator=generator, discriminator=discriminator, noise=config.noise, location=location, scale=scale)


def discriminator_loss_gradients(model: GanModel, real: np.ndarray, noise: np.ndarray) -> Tuple[float, List[np.ndarray]]:
    """
    Discriminator loss −(E[log d(x)] + E[log(1 − d(g(z)))]) and its gradient

    :param model: The GAN
    :param real: Standardised real batch, shape (N, 1)
    :param noise: Noise batch, shape (M, noise_dim)
    :return: (loss, gradients in discriminator parameter order)

    """

    fake: np.ndarray = model.generator.forward(noise)
    logit_real, cache_real = model.discriminator.forward_with_cache(real)
    logit_fake, cache_fake = model.discriminator.forward_with_cache(fake)
    p_real, p_fake = expit(logit_real), expit(logit_fake)

    # log σ(l) = −logaddexp(0, −l) and log(1 − σ(l)) = −logaddexp(0, l) stay finite for large logits
    loss: float = float(np.mean(np.logaddexp(0.0, -logit_real)) + np.mean(np.logaddexp(0.0, logit_fake)))

    w_real, b_real, _ = model.discriminator.backward(cache_real, -(1.0 - p_real) / len(real))
    w_fake, b_fake, _ = model.discriminator.backward(cache_fake, p_fake / len(fake))

    return loss, model.discriminator.gradients(
        [a + b for a, b in zip(w_real, w_fake)],
        [a + b for a, b in zip(b_real, b_fake)]
    )


def generator_loss_gradients(
        model: GanModel,
        noise: np.ndarray,
        objective: GeneratorLoss = GeneratorLoss.NON_SATURATING
) -> Tuple[float, List[np.ndarray]]:
    """
    Generator loss and its gradient, backpropagated through the frozen discriminator

    :param model: The GAN
    :param noise: Noise batch, shape (M, noise_dim)
    :param objective: Which generator objective to descend
    :return: (loss, gradients in generator parameter order)

    """

    fake, cache_gen = model.generator.forward_with_cache(noise)
    logit, cache_disc = model.discriminator.forward_with_cache(fake)
    p_fake: np.ndarray = expit(logit)

    if objective is GeneratorLoss.MINIMAX:
        loss: float = float(-np.mean(np.logaddexp(0.0, logit)))
        grad_logit: np.ndarray = -p_fake / len(noise)
    else:
        loss = float(np.mean(np.logaddexp(0.0, -logit)))
        grad_logit = -(1.0 - p_fake) / len(noise)

    _, _, grad_fake = model.discriminator.backward(cache_disc, grad_logit)
    weight_grads, bias_grads, _ = model.generator.backward(cache_gen, grad_fake)
    return loss, model.generator.gradients(weight_grads, bias_grads)


def train_gan(
        offsets: Sequence[float],
        config: Optional[GanConfig] = None,
        emitter: Optional[EventEmitter] = None,
        model_name: str = "gan"
) -> GanModel:
    """
    Alternating ADAM training of a scalar GAN on angle offsets

    :param offsets: Training offsets (rad)
    :param config: Hyperparameters
    :param emitter: Optional emitter for progress events
    :param model_name: Name used in events, logs and errors
    :return: The trained model with its loss history

    """

    config = config or GanConfig()
    config.validate()
    logger: logging.Logger = U2VChannelLogHandler.get_logger()

    data: np.ndarray = np.asarray(offsets, dtype=float).reshape(-1)

    if len(data) < MIN_GAN_SAMPLES:
        raise InvalidHyperparameterError(f"GAN training needs at least {MIN_GAN_SAMPLES} offsets, got {len(data)}.")

    if len(data) < RECOMMENDED_GAN_SAMPLES:
        logger.warning(f"Training {model_name} on only {len(data)} offsets; at least {RECOMMENDED_GAN_SAMPLES} are recommended.")

    rng: np.random.Generator = np.random.default_rng(config.seed)
    model: GanModel = initialize_gan(config, rng, location=float(np.mean(data)), scale=float(np.std(data)) or 1.0)
    model.history = GanHistory()
    real_data: np.ndarray = model.standardize(data)

    d_optimizer = AdamOptimizer(model.discriminator.parameters, config.learning_rate, config.beta1, config.beta2)
    g_optimizer = AdamOptimizer(model.generator.parameters, config.learning_rate, config.beta1, config.beta2)

    for step in range(1, config.steps + 1):
        d_loss: float = 0.0

        for _ in range(config.discriminator_steps):
            real: np.ndarray = real_data[rng.integers(0, len(real_data), size=config.batch_size)]
            d_loss, d_grads = discriminator_loss_gradients(model, real, model.draw_noise(config.batch_size, rng))
            d_optimizer.step(d_grads)

        g_loss, g_grads = generator_loss_gradients(model, model.draw_noise(config.batch_size, rng), config.generator_loss)
        g_optimizer.step(g_grads)

        if not (np.isfinite(d_loss) and np.isfinite(g_loss)):
            raise TrainingDivergedError(model_name, step)

        model.history.discriminator_loss.append(d_loss)
        model.history.generator_loss.append(g_loss)
        model.history.bce.append(-d_loss)

        if step % config.log_every == 0 or step == config.steps:
            logger.debug(f"{model_name} step {step}: discriminator loss {d_loss:.4f}, generator loss {g_loss:.4f}")
            emit_event(emitter, GanStepEvent(step, d_loss, g_loss, -d_loss))

    model.generator.trained = True
    model.discriminator.trained = True
    logger.info(f"Trained {model_name} for {config.steps} steps on {len(data)} offsets")
    return model


def sample_offsets(model: GanModel, n: int, seed: int) -> np.ndarray:
    """
    Draw offsets from a trained generator

    :param model: The GAN
    :param n: Number of samples (≥ 1)
    :param seed: Noise seed
    :return: Offsets (rad), shape (n,)

    """

    if n < 1:
        raise InvalidHyperparameterError(f"Sample count must be at least 1, got {n}.")

    rng: np.random.Generator = np.random.default_rng(seed)
    return model.generate(model.draw_noise(n, rng))


def discriminator_accuracy(model: GanModel, real: np.ndarray, seed: int) -> float:
    """
    Share of real and generated offsets the discriminator labels correctly (0.5 at equilibrium)

    :param model: The GAN
    :param real: Held-out real offsets
    :param seed: Noise seed for the generated half
    :return: Accuracy in [0, 1]

    """

    fake: np.ndarray = sample_offsets(model, len(real), seed)
    correct: np.ndarray = np.concatenate([model.discriminate(real) > 0.5, model.discriminate(fake) < 0.5])
    return float(np.mean(correct))


def fit_baseline(offsets: Sequence[float], family: BaselineFamily) -> FitBaseline:
    """
    Maximum-likelihood location/scale fit

    Gaussian uses the mean and the population standard deviation; Laplacian uses the median
    and the mean absolute deviation from it.

    :param offsets: Samples
    :param family: Gaussian or Laplacian
    :return: The fit

    """

    data: np.ndarray = np.asarray(offsets, dtype=float).reshape(-1)

    if len(data) < 2:
        raise InvalidHyperparameterError("A baseline fit needs at least 2 samples.")

    if family is BaselineFamily.LAPLACIAN:
        location: float = float(np.median(data))
        scale: float = float(np.mean(np.abs(data - location)))
    else:
        location = float(np.mean(data))
        scale = float(np.std(data))

    if scale <= 0:
        raise InvalidHyperparameterError(f"The {family.value} fit has zero scale.")

    return FitBaseline(family=family, location=location, scale=scale)


def ks_statistic(samples: np.ndarray, reference: np.ndarray) -> float:
    """
    Two-sample Kolmogorov–Smirnov statistic

    """

    return float(stats.ks_2samp(np.asarray(samples).reshape(-1), np.asarray(reference).reshape(-1)).statistic)


def ks_against_baseline(reference: np.ndarray, baseline: FitBaseline) -> float:
    """
    One-sample Kolmogorov–Smirnov statistic of data against a fitted baseline

    """

    return float(stats.kstest(np.asarray(reference).reshape(-1), baseline.distribution.cdf).statistic)


__all__ = [
    "NoisePrior",
    "GeneratorLoss",
    "BaselineFamily",
    "GanConfig",
    "GanHistory",
    "GanModel",
    "FitBaseline",
    "bce_from_probabilities",
    "bce",
    "initialize_gan",
    "discriminator_loss_gradients",
    "generator_loss_gradients",
    "train_gan",
    "sample_offsets",
    "discriminator_accuracy",
    "fit_baseline",
    "ks_statistic",
    "ks_against_baseline"
]
