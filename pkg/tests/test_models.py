import json

import numpy as np
import pytest
import torch

from models.checkpoint import load_checkpoint, save_checkpoint
from models.inference import ClassifierModel, ModelOutput, class_probability, degradation_value, output_distance
from models.networks import ModelSpec, TrainConfig, WindowClassifier, build_network
from models.optim import AdamState, adam_step
from models.trainer import ModelTrainer, _loss_and_accuracy, channel_statistics, fit_network, model_spec_for, train
from signals.types import Dataset, Modality, Split
from utils.exceptions import (
    DimensionMismatchError,
    EmptyDatasetError,
    InvalidConfigError,
    MissingInputError,
    SchemaMismatchError,
    ShapeMismatchError,
)

from conftest import ALL_MODALITIES, make_dataset


def _model(arch, t=12, channels=3, seed=0):
    spec = ModelSpec(arch=arch, t=t, input_channels=channels, num_classes=2, hidden_size=8, num_heads=2, seed=seed)
    modalities = ALL_MODALITIES[:channels]
    return ClassifierModel(build_network(spec), modalities, ("a", "b"))


@pytest.mark.parametrize("arch", ["fcn", "lstm", "transformer"])
def test_networks_produce_probabilities(arch, rng):
    model = _model(arch)
    x = rng.standard_normal((5, 12, 3))
    probs = model.predict_proba_batch(x)
    assert probs.shape == (5, 2)
    np.testing.assert_allclose(probs.sum(axis=1), 1.0)
    np.testing.assert_allclose(model.forward_array(x[2]).probs, probs[2], rtol=1e-12)


@pytest.mark.parametrize("arch", ["fcn", "lstm", "transformer"])
def test_same_seed_same_network(arch, rng):
    x = rng.standard_normal((3, 12, 3))
    np.testing.assert_array_equal(_model(arch, seed=4).predict_proba_batch(x),
                                  _model(arch, seed=4).predict_proba_batch(x))


def test_model_spec_validation():
    with pytest.raises(InvalidConfigError):
        ModelSpec(arch="cnn")
    with pytest.raises(InvalidConfigError):
        ModelSpec(arch="transformer", hidden_size=10, num_heads=4)
    assert ModelSpec(arch="LSTM").arch == "lstm"
    with pytest.raises(InvalidConfigError):
        TrainConfig(lr=0.0)


def test_wrong_input_shape_is_rejected(rng):
    model = _model("fcn")
    with pytest.raises(ShapeMismatchError):
        model.forward_array(rng.standard_normal((10, 3)))
    with pytest.raises(ShapeMismatchError):
        model.predict_proba_batch(rng.standard_normal((2, 12, 4)))


def test_model_rejects_window_without_required_modality(rng):
    model = _model("fcn", t=32, channels=4)
    dataset = make_dataset(rng, modalities=(Modality.HR, Modality.EDA, Modality.TEMP))
    with pytest.raises(ShapeMismatchError):
        model.forward(dataset.windows[0])


@pytest.mark.parametrize("arch", ["fcn", "lstm", "transformer"])
def test_input_gradient_matches_finite_differences(arch, rng):
    model = _model(arch)
    x = rng.standard_normal((12, 3))
    objective = class_probability(1)
    _, grad = model.value_and_input_gradient(x, objective)

    h = 1e-6
    for (i, j) in [(0, 0), (5, 1), (11, 2)]:
        up, down = x.copy(), x.copy()
        up[i, j] += h
        down[i, j] -= h
        numeric = (model.forward_array(up).probs[1] - model.forward_array(down).probs[1]) / (2 * h)
        assert grad[i, j] == pytest.approx(numeric, rel=1e-4, abs=1e-8)


def test_output_distance_agrees_with_numpy_degradation(rng):
    model = _model("lstm")
    x = rng.standard_normal((12, 3))
    reference = np.array([0.3, 0.7])
    for reduction in ("mean", "max"):
        value, _ = model.value_and_input_gradient(x, output_distance(reference, "probs", reduction))
        assert value == pytest.approx(degradation_value(model.forward_array(x), reference, "probs", reduction))


def test_checkpoint_round_trip(tmp_path, rng):
    model = _model("transformer")
    model.network.set_input_statistics([1.0, 2.0, 3.0], [0.5, 0.0, 2.0])
    path = save_checkpoint(model, str(tmp_path / "model.ckpt.json"), {"baselines": {"HR": 70.0}})

    restored, metadata = load_checkpoint(path)
    x = rng.standard_normal((4, 12, 3))
    np.testing.assert_array_equal(restored.predict_proba_batch(x), model.predict_proba_batch(x))
    assert restored.modalities == model.modalities
    assert restored.class_names == ("a", "b")
    assert metadata == {"baselines": {"HR": 70.0}}
    assert float(restored.network.input_std[1]) == 1.0


def test_checkpoint_errors(tmp_path):
    with pytest.raises(MissingInputError):
        load_checkpoint(str(tmp_path / "missing.json"))
    path = tmp_path / "old.json"
    path.write_text(json.dumps({"format": "ckpt_v0"}))
    with pytest.raises(SchemaMismatchError):
        load_checkpoint(str(path))


def test_adam_first_steps_by_hand():
    params = np.array([1.0, -2.0])
    grads = np.array([0.5, -0.1])
    state = AdamState.zeros_like(params)
    lr, betas, eps = 0.1, (0.9, 0.999), 1e-8

    first, state = adam_step(params, grads, state, lr, betas, eps)
    np.testing.assert_allclose(state.m, 0.1 * grads)
    np.testing.assert_allclose(state.v, 0.001 * grads ** 2)
    np.testing.assert_allclose(first, params - lr * grads / (np.abs(grads) + eps))

    second, state = adam_step(first, grads, state, lr, betas, eps)
    m = 0.9 * 0.1 * grads + 0.1 * grads
    v = 0.999 * 0.001 * grads ** 2 + 0.001 * grads ** 2
    m_hat, v_hat = m / (1 - 0.9 ** 2), v / (1 - 0.999 ** 2)
    np.testing.assert_allclose(second, first - lr * m_hat / (np.sqrt(v_hat) + eps))
    assert state.step == 2
    np.testing.assert_allclose(params, [1.0, -2.0])


def test_adam_shape_mismatch():
    with pytest.raises(DimensionMismatchError):
        adam_step(np.zeros(3), np.zeros(2), AdamState.zeros_like(np.zeros(3)), 0.1)


def test_adam_matches_torch():
    params = np.array([0.7, -0.3, 1.5])
    target = torch.tensor(params.copy(), requires_grad=True)
    optimizer = torch.optim.Adam([target], lr=0.05, betas=(0.9, 0.999), eps=1e-8)
    state = AdamState.zeros_like(params)
    for step in range(5):
        grads = np.array([0.2, -1.0, 0.05]) * (step + 1)
        params, state = adam_step(params, grads, state, 0.05)
        optimizer.zero_grad()
        target.grad = torch.tensor(grads)
        optimizer.step()
    np.testing.assert_allclose(params, target.detach().numpy(), rtol=1e-10)


def test_channel_statistics(rng):
    x = rng.standard_normal((4, 10, 2)) + np.array([1.0, -5.0])
    mean, std = channel_statistics(x)
    np.testing.assert_allclose(mean, x.reshape(-1, 2).mean(axis=0))
    np.testing.assert_allclose(std, x.reshape(-1, 2).std(axis=0))


def test_trainer_input_checks(rng):
    trainer = ModelTrainer()
    dataset = make_dataset(rng, split=Split.TRAIN)
    spec = model_spec_for(dataset, "fcn")
    with pytest.raises(EmptyDatasetError):
        trainer.train(spec, Dataset([], Split.TRAIN, ("a", "b")), None, TrainConfig(epochs=1))
    only_rest = dataset.subset([i for i, y in enumerate(dataset.labels) if y == 0])
    with pytest.raises(SchemaMismatchError):
        trainer.train(spec, only_rest, None, TrainConfig(epochs=1))
    wrong = ModelSpec(arch="fcn", t=16, input_channels=4)
    with pytest.raises(SchemaMismatchError):
        trainer.train(wrong, dataset, None, TrainConfig(epochs=1))


@pytest.mark.slow
def test_training_separates_easy_classes():
    rng = np.random.default_rng(0)
    train_ds = make_dataset(rng, n_per_class=12, split=Split.TRAIN)
    eval_ds = make_dataset(rng, n_per_class=4, split=Split.EVAL)
    spec = model_spec_for(train_ds, "fcn", seed=0, hidden_size=16)
    result = train(spec, train_ds, eval_ds, TrainConfig(lr=1e-2, epochs=40, patience=40, restarts=2))

    assert len(result.restart_losses) == 2
    assert result.best_eval_loss == min(result.restart_losses)
    assert 1 <= result.best_epoch <= len(result.history)
    predictions = result.model.predict(eval_ds)
    assert np.mean(predictions == eval_ds.labels) >= 0.9


def _training_arrays(seed=0):
    rng = np.random.default_rng(seed)
    train_ds = make_dataset(rng, n_per_class=6, t=12, modalities=ALL_MODALITIES[:3], split=Split.TRAIN)
    eval_ds = make_dataset(rng, n_per_class=3, t=12, modalities=ALL_MODALITIES[:3], split=Split.EVAL)
    modalities = ALL_MODALITIES[:3]
    return train_ds.to_array(modalities), train_ds.labels, eval_ds.to_array(modalities), eval_ds.labels


def test_fit_network_history_is_reproducible_with_fixed_seed():
    x_train, y_train, x_eval, y_eval = _training_arrays()
    spec = ModelSpec(arch="fcn", t=12, input_channels=3, num_classes=2, hidden_size=8, dropout=0.2, seed=3)
    cfg = TrainConfig(lr=1e-2, epochs=6, batch_size=4, patience=0, seed=5)

    first = fit_network(build_network(spec), x_train, y_train, x_eval, y_eval, cfg)
    second = fit_network(build_network(spec), x_train, y_train, x_eval, y_eval, cfg)
    assert first["history"] == second["history"]
    assert first["best_epoch"] == second["best_epoch"]
    assert len(first["history"]) == 6


def test_restored_checkpoint_has_best_eval_loss(tmp_path):
    x_train, y_train, x_eval, y_eval = _training_arrays(seed=1)
    spec = ModelSpec(arch="fcn", t=12, input_channels=3, num_classes=2, hidden_size=8, seed=0)
    network = build_network(spec)
    result = fit_network(network, x_train, y_train, x_eval, y_eval,
                         TrainConfig(lr=5e-2, epochs=8, batch_size=4, patience=0, seed=0))
    eval_losses = [row["eval_loss"] for row in result["history"]]
    assert result["best_eval_loss"] == min(eval_losses)
    assert result["history"][result["best_epoch"] - 1]["eval_loss"] == min(eval_losses)

    model = ClassifierModel(network, ALL_MODALITIES[:3], ("a", "b"))
    restored, _ = load_checkpoint(save_checkpoint(model, str(tmp_path / "best.ckpt.json")))
    criterion = torch.nn.CrossEntropyLoss()
    xe, ye = torch.from_numpy(x_eval), torch.from_numpy(np.asarray(y_eval, dtype=np.int64))
    loss, _ = _loss_and_accuracy(restored.network, xe, ye, criterion, batch_size=4)
    assert loss == pytest.approx(min(eval_losses), rel=1e-12)


class LinearNetwork(WindowClassifier):
    """평탄화 입력의 선형 로짓 (은닉층 없음)"""

    def __init__(self, spec, weight):
        super().__init__(spec)
        self.linear = torch.nn.Linear(spec.t * spec.input_channels, spec.num_classes, dtype=torch.float64)
        with torch.no_grad():
            self.linear.weight.copy_(torch.as_tensor(weight))
            self.linear.bias.fill_(0.3)

    def encode(self, x):
        return self.linear(x.flatten(start_dim=1))


def test_constant_objective_has_zero_input_gradient(rng):
    model = _model("lstm")
    x = rng.standard_normal((12, 3))
    value, grad = model.value_and_input_gradient(x, lambda probs, logits: torch.tensor(0.25, dtype=torch.float64))
    assert value == 0.25
    np.testing.assert_array_equal(grad, 0.0)

    _, grad = model.value_and_input_gradient(x, lambda probs, logits: probs.sum())
    np.testing.assert_allclose(grad, 0.0, atol=1e-12)


def test_linear_model_input_gradient_is_its_weight_row(rng):
    spec = ModelSpec(arch="fcn", t=6, input_channels=2, num_classes=2, hidden_size=1)
    weight = rng.standard_normal((2, 12))
    network = LinearNetwork(spec, weight)
    network.set_input_statistics([1.0, -2.0], [2.0, 0.5])
    model = ClassifierModel(network, ALL_MODALITIES[:2], ("a", "b"))
    x = rng.standard_normal((6, 2))

    value, grad = model.value_and_input_gradient(x, lambda probs, logits: logits[1])
    # 표준화 (x - mean) / std의 연쇄 법칙
    expected = weight[1].reshape(6, 2) / np.array([2.0, 0.5])
    np.testing.assert_allclose(grad, expected, rtol=1e-12)
    z = (x - np.array([1.0, -2.0])) / np.array([2.0, 0.5])
    assert value == pytest.approx(z.reshape(-1) @ weight[1] + 0.3, rel=1e-12)


def test_degradation_of_known_outputs():
    output = ModelOutput(probs=np.array([0.9, 0.1]), logits=np.zeros(2))
    assert degradation_value(output, np.array([0.7, 0.3])) == pytest.approx(0.2)
    assert degradation_value(output, np.array([0.7, 0.3]), reduction="max") == pytest.approx(0.2)
    assert degradation_value(output, np.array([0.9, 0.1])) == 0.0


def test_zero_final_layer_gives_uniform_probabilities(rng):
    spec = ModelSpec(arch="fcn", t=12, input_channels=3, num_classes=3, hidden_size=8, seed=1)
    network = build_network(spec)
    with torch.no_grad():
        network.head.weight.zero_()
        network.head.bias.zero_()
    model = ClassifierModel(network, ALL_MODALITIES[:3], ("a", "b", "c"))
    probs = model.predict_proba_batch(rng.standard_normal((4, 12, 3)))
    np.testing.assert_allclose(probs, 1.0 / 3.0, rtol=1e-12)
