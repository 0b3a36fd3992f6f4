from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import List, Tuple, Sequence, Optional

import numpy as np
from scipy.special import expit

from U2VChannel.client.errors import ModelShapeError, InvalidHyperparameterError

DEFAULT_LEAKY_SLOPE: float = 0.01

_LEAKY_PATTERN = re.compile(r"^leaky_relu(?:\((?P<slope>[-+0-9.eE]+)\))?$")


def parse_activation(tag: str) -> Tuple[str, float]:
    """
    Split an activation tag into its name and LeakyReLU slope

    :param tag: "sigmoid", "linear", "leaky_relu" or "leaky_relu(a)"
    :return: (name, slope)

    """

    if tag in ("sigmoid", "linear"):
        return tag, 0.0

    match = _LEAKY_PATTERN.match(tag)

    if match is None:
        raise ModelShapeError(f"Unknown activation tag '{tag}'.")

    slope: Optional[str] = match.group("slope")
    return "leaky_relu", float(slope) if slope is not None else DEFAULT_LEAKY_SLOPE


def activation(tag: str, x: np.ndarray) -> np.ndarray:
    """
    Evaluate an activation function

    :param tag: Activation tag
    :param x: Pre-activation values
    :return: Activated values

    """

    name, slope = parse_activation(tag)
    x = np.asarray(x, dtype=float)

    if name == "sigmoid":
        return expit(x)

    if name == "leaky_relu":
        return np.maximum(0.0, x) + slope * np.minimum(0.0, x)

    return x


def activation_derivative(tag: str, pre: np.ndarray, post: np.ndarray) -> np.ndarray:
    """
    Derivative of an activation with respect to its input

    :param tag: Activation tag
    :param pre: Pre-activation values
    :param post: Activated values (reused by the sigmoid)
    :return: Elementwise derivative

    """

    name, slope = parse_activation(tag)

    if name == "sigmoid":
        return post * (1.0 - post)

    if name == "leaky_relu":
        return np.where(pre > 0, 1.0, slope)

    return np.ones_like(pre)


@dataclass()
class MlpModel:
    """
    Fully connected feed-forward network.

    Layer q maps its input x to activation_q(x @ weights[q] + biases[q]); weights[q] has
    shape (layer_dims[q], layer_dims[q + 1]).

    """

    layer_dims: List[int]
    weights: List[np.ndarray]
    biases: List[np.ndarray]
    activations: List[str]
    trained: bool = field(default=False)

    def __post_init__(self):
        self.weights = [np.asarray(w, dtype=float) for w in self.weights]
        self.biases = [np.asarray(b, dtype=float).reshape(-1) for b in self.biases]
        self.validate()

    @classmethod
    def initialize(
            cls,
            layer_dims: Sequence[int],
            activations: Sequence[str],
            rng: np.random.Generator,
            scale: float = 0.5
    ) -> MlpModel:
        """
        Create a network with weights and biases drawn uniformly from [−scale, scale]

        :param layer_dims: Units per layer, input first
        :param activations: One tag per non-input layer
        :param rng: Seeded generator
        :param scale: Half-width of the uniform initialisation
        :return: An untrained model

        """

        dims: List[int] = [int(d) for d in layer_dims]
        weights: List[np.ndarray] = []
        biases: List[np.ndarray] = []

        for fan_in, fan_out in zip(dims[:-1], dims[1:]):
            weights.append(rng.uniform(-scale, scale, size=(fan_in, fan_out)))
            biases.append(rng.uniform(-scale, scale, size=fan_out))

        return cls(layer_dims=dims, weights=weights, biases=biases, activations=list(activations))

    def validate(self) -> None:
        """
        Check that the layer matrices chain and hold finite values

        :raises ModelShapeError: On any inconsistency

        """

        depth: int = len(self.layer_dims) - 1

        if depth < 1:
            raise ModelShapeError("A model needs at least an input and an output layer.")

        if not (len(self.weights) == len(self.biases) == len(self.activations) == depth):
            raise ModelShapeError(
                f"Expected {depth} weight matrices, bias vectors and activations, got "
                f"{len(self.weights)}, {len(self.biases)} and {len(self.activations)}."
            )

        for q, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.shape != (self.layer_dims[q], self.layer_dims[q + 1]):
                raise ModelShapeError(f"Layer {q} weights have shape {w.shape}, expected {(self.layer_dims[q], self.layer_dims[q + 1])}.")

            if b.shape != (self.layer_dims[q + 1],):
                raise ModelShapeError(f"Layer {q} biases have shape {b.shape}, expected {(self.layer_dims[q + 1],)}.")

            if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
                raise ModelShapeError(f"Layer {q} holds non-finite parameters.")

            parse_activation(self.activations[q])

    @property
    def parameters(self) -> List[np.ndarray]:
        """
        Parameter arrays in optimiser order, shared with the model (updates are in-place)

        """

        params: List[np.ndarray] = []

        for w, b in zip(self.weights, self.biases):
            params += [w, b]

        return params

    def copy(self) -> MlpModel:
        return MlpModel(
            layer_dims=list(self.layer_dims),
            weights=[w.copy() for w in self.weights],
            biases=[b.copy() for b in self.biases],
            activations=list(self.activations),
            trained=self.trained
        )

    def _as_batch(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)

        if x.ndim <= 1 and self.layer_dims[0] == 1:
            x = x.reshape(-1, 1)

        if x.ndim != 2 or x.shape[1] != self.layer_dims[0]:
            raise ModelShapeError(f"Input of shape {x.shape} does not match {self.layer_dims[0]} input units.")

        return x

    def forward(self, x: np.ndarray) -> np.ndarray:
        """
        Evaluate the network

        :param x: Batch of inputs, shape (N, layer_dims[0]); 1-D accepted for a single input unit
        :return: Outputs, shape (N, layer_dims[-1])

        """

        out, _ = self.forward_with_cache(x)
        return out

    def forward_with_cache(self, x: np.ndarray) -> Tuple[np.ndarray, List[Tuple[np.ndarray, np.ndarray, np.ndarray]]]:
        """
        Evaluate the network and keep what backpropagation needs

        :param x: Batch of inputs
        :return: (outputs, per-layer (input, pre-activation, post-activation))

        """

        current: np.ndarray = self._as_batch(x)
        cache: List[Tuple[np.ndarray, np.ndarray, np.ndarray]] = []

        for w, b, tag in zip(self.weights, self.biases, self.activations):
            pre: np.ndarray = current @ w + b
            post: np.ndarray = activation(tag, pre)
            cache.append((current, pre, post))
            current = post

        return current, cache

    def backward(
            self,
            cache: List[Tuple[np.ndarray, np.ndarray, np.ndarray]],
            grad_output: np.ndarray
    ) -> Tuple[List[np.ndarray], List[np.ndarray], np.ndarray]:
        """
        Backpropagate a loss gradient through the cached forward pass

        :param cache: The cache from forward_with_cache
        :param grad_output: dLoss/dOutput, shape (N, layer_dims[-1])
        :return: (weight gradients, bias gradients, dLoss/dInput)

        """

        grad: np.ndarray = np.asarray(grad_output, dtype=float)
        weight_grads: List[np.ndarray] = [np.empty(0)] * len(self.weights)
        bias_grads: List[np.ndarray] = [np.empty(0)] * len(self.biases)

        for q in reversed(range(len(self.weights))):
            layer_input, pre, post = cache[q]
            grad = grad * activation_derivative(self.activations[q], pre, post)
            weight_grads[q] = layer_input.T @ grad
            bias_grads[q] = grad.sum(axis=0)
            grad = grad @ self.weights[q].T

        return weight_grads, bias_grads, grad

    def gradients(self, weight_grads: List[np.ndarray], bias_grads: List[np.ndarray]) -> List[np.ndarray]:
        """
        Interleave weight and bias gradients in the order of `parameters`

        """

        grads: List[np.ndarray] = []

        for dw, db in zip(weight_grads, bias_grads):
            grads += [dw, db]

        return grads


class AdamOptimizer:
    """
    ADAM update rule applied in-place to a list of parameter arrays

    """

    def __init__(
            self,
            parameters: List[np.ndarray],
            learning_rate: float = 0.001,
            beta1: float = 0.9,
            beta2: float = 0.999,
            epsilon: float = 1e-8
    ):
        """
        Create an optimiser bound to a set of parameters

        :param parameters: Arrays updated in-place on every step
        :param learning_rate: Step size
        :param beta1: First-moment decay
        :param beta2: Second-moment decay
        :param epsilon: Denominator floor

        """

        if learning_rate <= 0:
            raise InvalidHyperparameterError(f"Learning rate must be positive, got {learning_rate}.")

        self._parameters: List[np.ndarray] = parameters
        self._first: List[np.ndarray] = [np.zeros_like(p) for p in parameters]
        self._second: List[np.ndarray] = [np.zeros_like(p) for p in parameters]
        self._steps: int = 0

        self.learning_rate: float = learning_rate
        self.beta1: float = beta1
        self.beta2: float = beta2
        self.epsilon: float = epsilon

    @property
    def steps(self) -> int:
        return self._steps

    def step(self, gradients: List[np.ndarray]) -> None:
        """
        Apply one ADAM update

        :param gradients: One gradient per parameter array, same order and shapes
        :return: None

        """

        self._steps += 1
        correction1: float = 1.0 - self.beta1 ** self._steps
        correction2: float = 1.0 - self.beta2 ** self._steps

        for param, grad, first, second in zip(self._parameters, gradients, self._first, self._second):
            first *= self.beta1
            first += (1.0 - self.beta1) * grad
            second *= self.beta2
            second += (1.0 - self.beta2) * grad * grad
            param -= self.learning_rate * (first / correction1) / (np.sqrt(second / correction2) + self.epsilon)


__all__ = [
    "DEFAULT_LEAKY_SLOPE",
    "parse_activation",
    "activation",
    "activation_derivative",
    "MlpModel",
    "AdamOptimizer"
]
