import itertools
import math

import numpy as np
import pytest

from explainers.concepts import (
    baseline_global_importances,
    concept_matrix,
    normalize_importances,
    rank_importances,
    stat_feature_names,
    stat_features,
)
from explainers.explanation import Explanation
from explainers.fcshap import FCSHAPModel
from explainers.lcbm import LCBMModel, lcbm_fit
from explainers.shapley import exact_shapley, shapley_weights
from signals.preprocessing import compute_baselines
from signals.types import Modality, Split
from utils.exceptions import DimensionMismatchError, EmptyDatasetError, SingularFeaturesWarning, TooManyFeaturesError

from conftest import make_dataset


def _brute_force_shapley(value_fn, x, baseline):
    n = len(x)
    phi = np.zeros(n)
    for i in range(n):
        others = [j for j in range(n) if j != i]
        for size in range(n):
            for subset in itertools.combinations(others, size):
                z_without = baseline.copy()
                z_without[list(subset)] = x[list(subset)]
                z_with = z_without.copy()
                z_with[i] = x[i]
                weight = math.factorial(size) * math.factorial(n - size - 1) / math.factorial(n)
                phi[i] += weight * (value_fn(z_with[None, :])[0] - value_fn(z_without[None, :])[0])
    return phi


def _nonlinear(z):
    return z[:, 0] * z[:, 1] + np.sin(z[:, 2]) + z[:, 3] ** 2 - 0.5 * z[:, 0] * z[:, 3]


def test_exact_shapley_matches_brute_force():
    x = np.array([1.0, 2.0, -0.5, 0.3, 4.0])
    baseline = np.array([0.2, -1.0, 0.1, 0.0, 4.0])
    attribution = exact_shapley(lambda z: _nonlinear(z), x, baseline)
    np.testing.assert_allclose(attribution.phi, _brute_force_shapley(_nonlinear, x, baseline), atol=1e-12)
    assert attribution.efficiency_gap == pytest.approx(0.0, abs=1e-12)
    assert attribution.phi[4] == 0.0


def test_linear_model_shapley_is_coefficient_times_offset():
    coef = np.array([0.5, -2.0, 1.5])
    x, baseline = np.array([1.0, 1.0, 2.0]), np.array([0.0, 3.0, 2.0])
    attribution = exact_shapley(lambda z: z @ coef + 7.0, x, baseline)
    np.testing.assert_allclose(attribution.phi, coef * (x - baseline), atol=1e-12)
    assert attribution.base_value == pytest.approx(baseline @ coef + 7.0)
    assert attribution.full_value == pytest.approx(x @ coef + 7.0)


def test_symmetric_features_share_credit():
    attribution = exact_shapley(lambda z: z[:, 0] * z[:, 1], np.array([2.0, 2.0]), np.zeros(2))
    assert attribution.phi[0] == pytest.approx(attribution.phi[1])
    assert attribution.phi.sum() == pytest.approx(4.0)


def test_shapley_weights_sum_over_subsets_to_one():
    n = 6
    weights = shapley_weights(n)
    total = sum(weights[s] * math.comb(n - 1, s) for s in range(n))
    assert total == pytest.approx(1.0)


def test_parallel_blocks_give_same_values():
    rng = np.random.default_rng(0)
    coef = rng.standard_normal(15)
    x, baseline = rng.standard_normal(15), rng.standard_normal(15)
    serial = exact_shapley(lambda z: np.tanh(z @ coef), x, baseline, jobs=1)
    parallel = exact_shapley(lambda z: np.tanh(z @ coef), x, baseline, jobs=2)
    np.testing.assert_allclose(serial.phi, parallel.phi, rtol=0, atol=1e-12)


def test_shapley_input_checks():
    with pytest.raises(TooManyFeaturesError):
        exact_shapley(lambda z: z.sum(axis=1), np.zeros(21), np.zeros(21))
    with pytest.raises(DimensionMismatchError):
        exact_shapley(lambda z: z.sum(axis=1), np.zeros(3), np.zeros(2))


def test_stat_features(window):
    features = stat_features(window, (Modality.HR,))
    hr = window.channel(Modality.HR)
    np.testing.assert_allclose(features, [hr.mean(), hr.min(), hr.max(), hr.std()])
    assert stat_feature_names((Modality.HR, Modality.EDA))[:5] == ["HR.Mean", "HR.Min", "HR.Max", "HR.Std", "EDA.Mean"]


def test_concept_matrix_summarises_components(eval_dataset, baselines):
    matrix, names = concept_matrix(eval_dataset, baselines)
    assert matrix.shape == (len(eval_dataset), 11)
    assert names[0] == "ACC.MeanOB"
    hr_offset = names.index("HR.MeanOB")
    labels = eval_dataset.labels
    assert matrix[labels == 1, hr_offset].mean() > matrix[labels == 0, hr_offset].mean() + 10.0


def test_normalize_and_rank_importances():
    np.testing.assert_allclose(normalize_importances([1.0, -3.0]), [0.25, 0.75])
    np.testing.assert_array_equal(normalize_importances([0.0, 0.0]), [0.0, 0.0])

    table = rank_importances(["a", "b", "c", "d"], [0.2, 0.5, 0.2, 0.0])
    assert list(table["name"]) == ["b", "a", "c"]
    assert list(table["rank"]) == [1, 2, 3]
    assert table["normalized"].sum() == pytest.approx(1.0)


def test_lcbm_flags_constant_concepts_and_ranks_informative_one():
    rng = np.random.default_rng(3)
    y = np.repeat([0, 1], 30)
    x = np.column_stack([
        rng.standard_normal(60) + 3.0 * y,
        rng.standard_normal(60),
        np.full(60, 2.0),
    ])
    model = LCBMModel()
    with pytest.warns(SingularFeaturesWarning):
        model.fit_matrix(x, y, ("a", "b"))
    names, importances = model.global_importances()
    assert names == ["c0", "c1", "c2"]
    assert importances.sum() == pytest.approx(1.0)
    assert importances[2] == 0.0
    assert np.argmax(importances) == 0
    assert np.mean(model.predict_features(x) == y) > 0.9


def test_lcbm_fit_explain_and_reload(tmp_path, rng, baselines):
    train_ds = make_dataset(rng, n_per_class=8, split=Split.TRAIN)
    eval_ds = make_dataset(rng, n_per_class=2)
    model = lcbm_fit(train_ds, compute_baselines(train_ds))

    batch = model.explain_dataset(eval_ds)
    assert [e.window_id for e in batch] == [w.window_id for w in eval_ds.windows]
    for explanation in batch:
        np.testing.assert_array_equal(explanation.weights, batch[0].weights)
        assert explanation.method == "lcbm"

    path = model.save_model(str(tmp_path / "lcbm.joblib"))
    restored = LCBMModel.load_model(path)
    np.testing.assert_array_equal(restored.predict(eval_ds), model.predict(eval_ds))
    assert restored.baselines == model.baselines
    assert list(baseline_global_importances(restored)["name"])[0] == list(baseline_global_importances(model)["name"])[0]


def test_lcbm_requires_training_data(baselines):
    from signals.types import Dataset

    with pytest.raises(EmptyDatasetError):
        LCBMModel().fit(Dataset([], Split.TRAIN, ("a", "b")), baselines)


@pytest.mark.slow
def test_fcshap_attributions_satisfy_efficiency(tmp_path):
    rng = np.random.default_rng(11)
    modalities = (Modality.HR, Modality.EDA)
    train_ds = make_dataset(rng, n_per_class=10, t=16, modalities=modalities, split=Split.TRAIN)
    eval_ds = make_dataset(rng, n_per_class=2, t=16, modalities=modalities)
    model = FCSHAPModel(hidden_size=8, epochs=60, seed=0).fit(train_ds, eval_ds)
    assert model.feature_names == stat_feature_names(modalities)

    batch = model.explain_dataset(eval_ds, jobs=2)
    assert len(batch) == len(eval_ds) and not batch.failures
    for explanation in batch:
        gap = explanation.raw_scores.sum() - (explanation.config["full_value"] - explanation.config["base_value"])
        assert gap == pytest.approx(0.0, abs=1e-10)
        if np.any(explanation.raw_scores != 0):
            assert explanation.weights.sum() == pytest.approx(1.0)

    restored = FCSHAPModel.load_model(model.save_model(str(tmp_path / "fcshap.ckpt.json")))
    np.testing.assert_array_equal(restored.predict(eval_ds), model.predict(eval_ds))
    np.testing.assert_array_equal(restored.train_means, model.train_means)


def test_constant_value_function_gets_no_credit():
    x, baseline = np.array([1.0, -2.0, 0.5, 4.0]), np.array([0.0, 1.0, 0.5, -3.0])
    attribution = exact_shapley(lambda z: np.full(len(z), 3.0), x, baseline)
    np.testing.assert_array_equal(attribution.phi, 0.0)
    assert attribution.base_value == attribution.full_value == 3.0


def test_lcbm_duplicated_concept_splits_importance():
    rng = np.random.default_rng(5)
    y = np.repeat([0, 1], 40)
    signal = rng.standard_normal(80) + 1.5 * y
    noise = rng.standard_normal(80)

    single = LCBMModel().fit_matrix(np.column_stack([signal, noise]), y, ("a", "b"))
    doubled = LCBMModel().fit_matrix(np.column_stack([signal, signal, noise]), y, ("a", "b"))
    _, one = single.global_importances()
    _, two = doubled.global_importances()

    assert two[0] == pytest.approx(two[1], rel=1e-6)
    assert two[0] < one[0]
    assert two[0] + two[1] > two[2]


def test_lcbm_on_label_independent_concepts_is_at_chance():
    rng = np.random.default_rng(11)
    x_train, x_test = rng.standard_normal((200, 5)), rng.standard_normal((1000, 5))
    y_train, y_test = rng.integers(0, 2, 200), rng.integers(0, 2, 1000)
    model = LCBMModel().fit_matrix(x_train, y_train, ("a", "b"))
    accuracy = np.mean(model.predict_features(x_test) == y_test)
    assert 0.44 <= accuracy <= 0.56


def test_all_zero_importances_give_empty_ranking():
    names = ("HR.MeanOB", "EDA.Phasic")
    explanations = [
        Explanation(f"w{k}", "fcshap", names, np.zeros(2), np.zeros(2), 0, raw_scores=np.zeros(2))
        for k in range(3)
    ]
    table = baseline_global_importances(explanations)
    assert table.empty
    assert list(table.columns) == ["name", "importance", "normalized", "rank"]
    assert baseline_global_importances([]).empty
