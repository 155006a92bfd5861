import numpy as np
import pytest

from decomposition.components import AuxState, Component, ComponentSet
from decomposition.decomposer import ComponentDecomposer, decompose
from explainers.explanation import Explanation, load_explanations, save_explanations
from explainers.iic import IICConfig, IICExplainer, batch_explain, iic_loss
from models.inference import ClassifierModel
from models.networks import ModelSpec
from signals.types import BaselineSet, Dataset, Modality, MultimodalWindow, Split
from utils.exceptions import InvalidConfigError, SchemaMismatchError

from conftest import ConstantNetwork

HR_BASELINES = BaselineSet({Modality.HR: 70.0, Modality.EDA: 2.0, Modality.TEMP: 33.0})


def _hr_window(window_id="w0", label=1, t=16):
    phase = np.arange(t) * 2 * np.pi / t
    channels = {
        Modality.HR: 90.0 + 0.2 * np.sin(phase),
        Modality.EDA: 2.5 + 0.1 * np.cos(phase),
        Modality.TEMP: 33.3 + 0.02 * phase,
    }
    return MultimodalWindow(channels, 4.0, "S0", window_id, label)


def test_iic_loss_terms():
    cfg = IICConfig(max_deg=0.01, penalty=25.0)
    l_weights, l_degradation, total = iic_loss(np.array([1.0, 0.0, 0.5, 0.5]), 0.03, cfg)
    assert l_weights == pytest.approx(0.5)
    assert l_degradation == pytest.approx(0.5)
    assert total == pytest.approx(1.0)
    assert iic_loss(np.zeros(3), 0.005, cfg)[1] == 0.0


@pytest.mark.parametrize("overrides", [
    {"epochs": -1}, {"lr": 0.0}, {"max_deg": -0.1}, {"penalty": 0.0},
    {"threshold": 1.0}, {"reduction": "sum"}, {"representation": "labels"},
])
def test_invalid_config(overrides):
    with pytest.raises(InvalidConfigError):
        IICConfig(**overrides)


def test_mean_heart_rate_model_keeps_only_mean_offset(hr_model):
    explanation = IICExplainer(hr_model, HR_BASELINES).explain(_hr_window())

    weights = explanation.importance()
    assert weights["HR.MeanOB"] > 0.3
    assert explanation.kept == ["HR.MeanOB"]
    for name in ("EDA.TonicMeanOB", "EDA.TonicChange", "EDA.Phasic", "TEMP.MeanOB", "TEMP.Rising", "TEMP.Falling"):
        assert weights[name] == 0.0
    assert weights["HR.Variability"] < 0.01
    assert explanation.degradation_final <= 0.02
    assert explanation.predicted_class == 1


def test_model_ignoring_input_drops_every_component():
    spec = ModelSpec(arch="fcn", t=16, input_channels=3, num_classes=2, hidden_size=1)
    model = ClassifierModel(ConstantNetwork(spec), (Modality.HR, Modality.EDA, Modality.TEMP), ("a", "b"))
    explanation = IICExplainer(model, HR_BASELINES).explain(_hr_window())
    np.testing.assert_array_equal(explanation.weights, 0.0)
    np.testing.assert_array_equal(explanation.binary, 0)
    assert explanation.degradation_final == pytest.approx(0.0, abs=1e-15)


def test_trace_has_one_entry_per_epoch_plus_final(hr_model):
    cfg = IICConfig(epochs=7)
    explanation = IICExplainer(hr_model, HR_BASELINES, cfg).explain(_hr_window())
    assert len(explanation.loss_trace) == 8
    first = explanation.loss_trace[0]
    assert first[0] == pytest.approx(1.0)
    assert first[2] == pytest.approx(0.0, abs=1e-12)
    assert explanation.loss_trace[-1][2] == pytest.approx(explanation.degradation_final)


def test_zero_epochs_keeps_all_components(hr_model):
    explanation = IICExplainer(hr_model, HR_BASELINES, IICConfig(epochs=0)).explain(_hr_window())
    np.testing.assert_array_equal(explanation.weights, 1.0)
    assert len(explanation.loss_trace) == 1


def test_final_degradation_is_recomputed_from_final_weights(hr_model):
    explainer = IICExplainer(hr_model, HR_BASELINES, IICConfig(epochs=30))
    window = _hr_window()
    explanation = explainer.explain(window)
    reference = hr_model.forward(window).probs
    cs = decompose(window, HR_BASELINES)
    assert explainer.degradation(cs, explanation.weights, reference) == pytest.approx(explanation.degradation_final)


def test_weights_stay_in_unit_interval(tiny_model, window, baselines):
    explanation = IICExplainer(tiny_model, baselines, IICConfig(epochs=25, lr=0.1)).explain(window)
    assert np.all((explanation.weights >= 0.0) & (explanation.weights <= 1.0))
    assert explanation.names == decompose(window, baselines).names


def test_batch_preserves_order_and_collects_failures(hr_model, monkeypatch):
    windows = [_hr_window(f"w{k}") for k in range(4)]
    dataset = Dataset(windows, Split.EVAL, ("low", "high"))
    explainer = IICExplainer(hr_model, HR_BASELINES, IICConfig(epochs=5))

    original = explainer.explain

    def flaky(window):
        if window.window_id == "w2":
            raise RuntimeError("boom")
        return original(window)

    monkeypatch.setattr(explainer, "explain", flaky)
    batch = explainer.batch_explain(dataset, jobs=2)
    assert [e.window_id for e in batch] == ["w0", "w1", "w3"]
    assert batch.failures == [{"window_id": "w2", "error": "RuntimeError: boom"}]
    assert batch.summary()["failed"] == 1


def test_parallel_and_serial_agree(hr_model):
    dataset = Dataset([_hr_window(f"w{k}") for k in range(3)], Split.EVAL, ("low", "high"))
    cfg = IICConfig(epochs=10)
    serial = batch_explain(hr_model, dataset, HR_BASELINES, cfg, jobs=1)
    parallel = batch_explain(hr_model, dataset, HR_BASELINES, cfg, jobs=3)
    for a, b in zip(serial, parallel):
        np.testing.assert_array_equal(a.weights, b.weights)


def test_empty_dataset_gives_empty_batch(hr_model):
    batch = IICExplainer(hr_model, HR_BASELINES).batch_explain(Dataset([], Split.EVAL, ("low", "high")))
    assert len(batch) == 0 and batch.failures == []


def test_explanations_round_trip(tmp_path, hr_model):
    explanation = IICExplainer(hr_model, HR_BASELINES, IICConfig(epochs=3)).explain(_hr_window())
    path = save_explanations([explanation], str(tmp_path / "explanations_iic.json"))
    [restored] = load_explanations(path)
    assert restored.names == explanation.names
    np.testing.assert_array_equal(restored.weights, explanation.weights)
    np.testing.assert_array_equal(restored.binary, explanation.binary)
    assert restored.config == explanation.config
    assert restored.loss_trace == [tuple(entry) for entry in explanation.loss_trace]


def test_explanation_schema_checks():
    with pytest.raises(SchemaMismatchError):
        Explanation("w0", "iic", ("a", "b"), [1.0], [1], 0)
    with pytest.raises(SchemaMismatchError):
        Explanation("w0", "lime", ("a",), [1.0], [1], 0)
    with pytest.raises(SchemaMismatchError):
        Explanation.from_dict({"window_id": "w0"})


class TemperatureLevelDecomposer(ComponentDecomposer):
    """TEMP 평균 오프셋 하나만 쓰는 분해기 (d = 1, x' = b + w * MeanOB)"""

    def decompose(self, window, baselines):
        x = window.channel(Modality.TEMP)
        meanob = float(np.mean(x - baselines[Modality.TEMP]))
        return ComponentSet(
            components=(Component("TEMP.MeanOB", Modality.TEMP, meanob),),
            aux=AuxState(), baselines=baselines, t=window.t, sample_rate_hz=window.sample_rate_hz,
            window_id=window.window_id, label=window.label, modalities=(Modality.TEMP,),
        )

    def reconstruct_array(self, cs, w):
        w = self._validate_weights(cs, w)
        level = cs.baselines[Modality.TEMP] + w[0] * cs.components[0].payload
        return np.full((cs.t, 1), level)

    def weight_jvp(self, cs, w, g_x):
        return np.array([cs.components[0].payload * float(np.sum(g_x))])


def _temperature_explainer(cfg):
    spec = ModelSpec(arch="fcn", t=8, input_channels=1, num_classes=2, hidden_size=1)
    model = ClassifierModel(ConstantNetwork(spec), (Modality.TEMP,), ("a", "b"))
    window = MultimodalWindow({Modality.TEMP: 33.0 + 0.1 * np.arange(8)}, 4.0, "S0", "t0", 0)
    return IICExplainer(model, HR_BASELINES, cfg, TemperatureLevelDecomposer()), window


@pytest.mark.parametrize("lr, epochs", [(0.3, 6), (0.05, 4), (0.5, 3)])
def test_single_component_follows_clamped_adam_closed_form(lr, epochs):
    cfg = IICConfig(epochs=epochs, lr=lr, eps=1e-8)
    explainer, window = _temperature_explainer(cfg)
    explanation = explainer.explain(window)

    # 일정한 그래디언트 1/d = 1: 매 스텝 lr * 1 / (1 + eps)만큼 감소, 0에서 고정
    step = lr / (1.0 + cfg.eps)
    expected = [min(1.0, max(0.0, 1.0 - k * step)) for k in range(epochs + 1)]
    trajectory = [entry[0] for entry in explanation.loss_trace]
    np.testing.assert_allclose(trajectory, expected, rtol=0, atol=1e-12)
    assert explanation.names == ("TEMP.MeanOB",)
    assert explanation.weights[0] == pytest.approx(expected[-1], abs=1e-12)
    assert all(entry[1] == 0.0 for entry in explanation.loss_trace)


def test_single_component_stays_clamped_at_zero():
    explainer, window = _temperature_explainer(IICConfig(epochs=10, lr=0.4))
    explanation = explainer.explain(window)
    trajectory = np.array([entry[0] for entry in explanation.loss_trace])
    assert trajectory[3] == 0.0
    np.testing.assert_array_equal(trajectory[3:], 0.0)
    assert np.all(np.diff(trajectory) <= 0.0)
    np.testing.assert_array_equal(explanation.binary, [0])
