import numpy as np
import pytest
from scipy.special import expit

from U2VChannel.client.errors import InvalidHyperparameterError, TrainingDivergedError, ModelShapeError
from U2VChannel.geometry.paths import PathKind
from U2VChannel.learning.bpnn import (
    PRESET_PARAMETERS, TrainConfig, forward, cost, cost_gradients, validation_rmse, split_indices, fold_scaling, train,
    fit_exponential_baseline, preset_network
)
from U2VChannel.learning.mlp import MlpModel, AdamOptimizer


def hand_forward(kind: PathKind, delay_us: float) -> float:
    params = PRESET_PARAMETERS[kind]
    hidden = expit(np.array(params["hidden_weights"]) * delay_us + np.array(params["hidden_biases"]))
    return float(np.dot(params["output_weights"], hidden) + params["output_bias"])


@pytest.mark.parametrize("kind", [PathKind.LOS, PathKind.NLOS])
def test_preset_matches_hand_evaluation(kind):
    delays = np.array([0.1, 0.5, 1.0, 2.5, 10.0])
    expected = [hand_forward(kind, d) for d in delays]

    assert np.allclose(forward(preset_network(kind), delays), expected, rtol=0, atol=1e-9)


def test_preset_los_at_one_microsecond(bpnn_los):
    assert forward(bpnn_los, 1.0)[0] == pytest.approx(-91.02, abs=0.05)


def test_preset_power_decays_with_delay(bpnn_los, bpnn_nlos):
    delays = np.linspace(0.3, 10.0, 50)

    for model in (bpnn_los, bpnn_nlos):
        assert np.all(np.diff(forward(model, delays)) < 0)


def test_forward_rejects_wide_models():
    model = MlpModel.initialize([2, 3, 1], ["sigmoid", "linear"], np.random.default_rng(0))

    with pytest.raises(ModelShapeError):
        forward(model, [1.0])


def test_cost_includes_l2_penalty(bpnn_los):
    x = np.array([0.5, 1.0, 2.0])
    y = forward(bpnn_los, x) + 1.0
    squared_weights = sum(float(np.sum(w * w)) for w in bpnn_los.weights)

    assert cost(bpnn_los, x, y) == pytest.approx(1.0)
    assert cost(bpnn_los, x, y, l2=0.1) == pytest.approx(1.0 + 0.05 * squared_weights)

    with pytest.raises(InvalidHyperparameterError):
        cost(bpnn_los, [], [])


def test_gradients_match_finite_differences():
    rng = np.random.default_rng(4)
    model = MlpModel.initialize([1, 4, 1], ["sigmoid", "linear"], rng)
    x, y = rng.uniform(0, 3, size=12), rng.normal(size=12)
    l2, eps = 0.05, 1e-6

    _, grads = cost_gradients(model, x, y, l2)

    for param, grad in zip(model.parameters, grads):
        for index in np.ndindex(param.shape):
            original = param[index]
            param[index] = original + eps
            upper = cost(model, x, y, l2)
            param[index] = original - eps
            lower = cost(model, x, y, l2)
            param[index] = original

            assert grad[index] == pytest.approx((upper - lower) / (2 * eps), rel=1e-4, abs=1e-7)


def test_split_indices_are_disjoint_and_complete():
    train_idx, val_idx = split_indices(100, 0.7, np.random.default_rng(0))

    assert len(train_idx) == 70
    assert len(val_idx) == 30
    assert np.array_equal(np.sort(np.concatenate([train_idx, val_idx])), np.arange(100))


def test_fold_scaling_preserves_predictions():
    model = MlpModel.initialize([1, 4, 1], ["sigmoid", "linear"], np.random.default_rng(2))
    folded = fold_scaling(model, 2.0, 3.0, -50.0, 10.0)
    x = np.linspace(-1, 8, 25)

    assert np.allclose(forward(folded, x), forward(model, (x - 2.0) / 3.0) * 10.0 - 50.0)


def test_training_learns_a_linear_law():
    rng = np.random.default_rng(1)
    x = rng.uniform(0.5, 5.0, size=500)
    y = -80.0 - 5.0 * x + rng.normal(0.0, 0.5, size=500)

    model, history = train(x, y, TrainConfig(learning_rate=0.01, epochs=2000))

    assert model.trained
    assert len(history.cost) == 2000
    assert len(history.train_indices) == 350
    assert len(np.intersect1d(history.train_indices, history.validation_indices)) == 0

    val = history.validation_rmse[-1]
    assert val < 1.0
    assert 0.5 <= val / history.train_rmse[-1] <= 2.0
    assert val == pytest.approx(validation_rmse(model, x[history.validation_indices], y[history.validation_indices]))


def test_training_is_deterministic():
    rng = np.random.default_rng(9)
    x = rng.uniform(0.5, 5.0, size=60)
    y = -90.0 - 3.0 * x
    config = TrainConfig(epochs=20, seed=5)

    first, _ = train(x, y, config)
    second, _ = train(x, y, config)

    for a, b in zip(first.parameters, second.parameters):
        assert np.array_equal(a, b)


def test_training_preconditions():
    x = np.linspace(0.5, 5.0, 20)

    with pytest.raises(InvalidHyperparameterError):
        train(x[:5], x[:5])

    with pytest.raises(InvalidHyperparameterError):
        train(x, x[:10])

    with pytest.raises(InvalidHyperparameterError):
        train(x, x, TrainConfig(split=1.0))

    with pytest.raises(InvalidHyperparameterError):
        train(x, x, TrainConfig(learning_rate=0.0))


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_runaway_learning_rate_diverges():
    x = np.linspace(0.5, 5.0, 40)

    with pytest.raises(TrainingDivergedError) as info:
        train(x, -80.0 - 5.0 * x, TrainConfig(learning_rate=1e300, epochs=5))

    assert info.value.step == 1


def test_exponential_baseline_is_exact_on_a_line():
    x = np.array([0.5, 1.0, 2.0, 4.0])
    fit = fit_exponential_baseline(x, 3.0 - 7.0 * x)

    assert fit.intercept_db == pytest.approx(3.0)
    assert fit.slope_db_per_us == pytest.approx(-7.0)
    assert fit.rmse(x, 3.0 - 7.0 * x) == pytest.approx(0.0, abs=1e-9)

    with pytest.raises(InvalidHyperparameterError):
        fit_exponential_baseline([1.0], [1.0])


def test_adam_rejects_non_positive_learning_rate():
    with pytest.raises(InvalidHyperparameterError):
        AdamOptimizer([np.zeros(2)], learning_rate=-1.0)


def test_adam_first_step_moves_by_learning_rate():
    param = np.array([1.0, -1.0])
    optimizer = AdamOptimizer([param], learning_rate=0.1)
    optimizer.step([np.array([3.0, -0.5])])

    assert np.allclose(param, [0.9, -0.9])
    assert optimizer.steps == 1
