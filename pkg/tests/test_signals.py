import numpy as np
import pytest

from signals.preprocessing import (
    align_modalities,
    compute_baselines,
    resample_to_rate,
    resultant_acceleration,
    segment_windows,
    subject_kfold,
)
from signals.types import BaselineSet, Dataset, Modality, MultimodalWindow, Split
from utils.exceptions import (
    InvalidWindowError,
    LengthMismatchError,
    MissingModalityError,
    NonPositiveHeartRateError,
    SchemaMismatchError,
)

from conftest import make_dataset, make_window


def test_window_rejects_mismatched_lengths():
    with pytest.raises(LengthMismatchError):
        MultimodalWindow({Modality.HR: [70.0, 71.0, 72.0], Modality.EDA: [1.0, 2.0]}, 4.0, "S0", "w0")


def test_window_rejects_single_sample():
    with pytest.raises(InvalidWindowError):
        MultimodalWindow({Modality.HR: [70.0]}, 4.0, "S0", "w0")


def test_window_rejects_non_positive_heart_rate():
    with pytest.raises(NonPositiveHeartRateError):
        MultimodalWindow({Modality.HR: [70.0, 0.0, 65.0]}, 4.0, "S0", "w0")


def test_window_rejects_nan():
    with pytest.raises(InvalidWindowError):
        MultimodalWindow({Modality.EDA: [1.0, np.nan]}, 4.0, "S0", "w0")


def test_window_channels_follow_global_order_and_are_read_only(rng):
    w = MultimodalWindow({Modality.TEMP: [33.0, 33.1], Modality.HR: [70.0, 71.0]}, 4.0, "S0", "w0")
    assert w.modalities == (Modality.HR, Modality.TEMP)
    with pytest.raises(ValueError):
        w.channel(Modality.HR)[0] = 1.0
    with pytest.raises(MissingModalityError):
        w.channel(Modality.ACC)


def test_window_array_round_trip(window):
    array = window.to_array()
    assert array.shape == (32, 4)
    rebuilt = MultimodalWindow.from_array(array, window.modalities, window.sample_rate_hz,
                                          window.subject_id, window.window_id, window.label)
    assert rebuilt.equals(window)


def test_dataset_rejects_mixed_lengths(rng):
    a = make_window(rng, t=16, window_id="a")
    b = make_window(rng, t=20, window_id="b")
    with pytest.raises(SchemaMismatchError):
        Dataset([a, b], Split.TRAIN, ("x", "y"))


def test_dataset_rejects_label_outside_class_range(rng):
    with pytest.raises(SchemaMismatchError):
        Dataset([make_window(rng, label=2)], Split.TRAIN, ("x", "y"))


def test_compute_baselines_is_mean_over_all_training_samples():
    windows = [
        MultimodalWindow({Modality.HR: [60.0, 80.0], Modality.EDA: [1.0, 2.0]}, 4.0, "S0", "a", 0),
        MultimodalWindow({Modality.HR: [70.0, 70.0], Modality.EDA: [3.0, 4.0]}, 4.0, "S1", "b", 1),
    ]
    baselines = compute_baselines(Dataset(windows, Split.TRAIN, ("x", "y")))
    assert baselines[Modality.HR] == pytest.approx(70.0)
    assert baselines[Modality.EDA] == pytest.approx(2.5)
    assert Modality.ACC not in baselines


def test_compute_baselines_missing_modality(rng):
    train = make_dataset(rng, modalities=(Modality.HR, Modality.EDA), split=Split.TRAIN)
    with pytest.raises(MissingModalityError):
        compute_baselines(train, [Modality.TEMP])


def test_baseline_set_round_trip():
    baselines = BaselineSet({Modality.TEMP: 33.0, Modality.HR: 70.0})
    assert baselines.modalities == (Modality.HR, Modality.TEMP)
    assert BaselineSet.from_dict(baselines.to_dict()) == baselines
    with pytest.raises(NonPositiveHeartRateError):
        BaselineSet({Modality.HR: 0.0})


def test_resultant_acceleration():
    r = resultant_acceleration([3.0, 0.0], [4.0, 0.0], [0.0, 1.0])
    np.testing.assert_allclose(r, [5.0, 1.0])


def test_resample_downsample_and_upsample():
    np.testing.assert_allclose(resample_to_rate(np.arange(8.0), 4.0, 2.0), [0.0, 2.0, 4.0, 6.0])
    np.testing.assert_allclose(resample_to_rate([0.0, 2.0], 1.0, 2.0), [0.0, 1.0, 2.0])
    with pytest.raises(InvalidWindowError):
        resample_to_rate([1.0], 1.0, 2.0)


def test_segment_windows_drops_incomplete_tail():
    recordings = {Modality.HR: np.linspace(60, 70, 10), Modality.TEMP: np.full(10, 33.0)}
    windows = segment_windows(recordings, 4.0, window_seconds=1.0, stride_seconds=None,
                              subject_id="S7", label=1)
    assert [w.window_id for w in windows] == ["S7-w000", "S7-w001"]
    assert all(w.t == 4 and w.label == 1 for w in windows)
    np.testing.assert_allclose(windows[1].channel(Modality.HR), recordings[Modality.HR][4:8])

    overlapping = segment_windows(recordings, 4.0, 1.0, 0.5, "S7")
    assert len(overlapping) == 4


def test_subject_kfold_keeps_subjects_disjoint(rng):
    windows = [make_window(rng, t=8, window_id=f"S{s}_w{k}", subject_id=f"S{s}", label=k % 2)
               for s in range(5) for k in range(2)]
    dataset = Dataset(windows, Split.TRAIN, ("x", "y"))
    folds = subject_kfold(dataset, 3, seed=0)
    assert len(folds) == 3
    held_out = []
    for train, evaluation in folds:
        assert not set(train.subject_ids) & set(evaluation.subject_ids)
        assert len(train) + len(evaluation) == len(dataset)
        held_out.extend(sorted(set(evaluation.subject_ids)))
    assert sorted(held_out) == [f"S{s}" for s in range(5)]


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_compute_baselines_ignores_window_order(seed):
    train = make_dataset(np.random.default_rng(10), n_per_class=6, split=Split.TRAIN)
    order = np.random.default_rng(seed).permutation(len(train))
    shuffled = Dataset([train.windows[i] for i in order], Split.TRAIN, train.class_names)
    original, permuted = compute_baselines(train), compute_baselines(shuffled)
    for modality in train.modalities:
        assert permuted[modality] == original[modality]


def test_align_modalities_upsamples_to_fastest_rate():
    recordings = {
        Modality.TEMP: np.full(40, 33.0),
        Modality.HR: 60.0 + np.arange(10.0),
        Modality.EDA: 2.0 + 0.01 * np.arange(40),
    }
    rates = {Modality.HR: 1.0, Modality.EDA: 4.0, Modality.TEMP: 4.0}
    aligned, rate = align_modalities(recordings, rates)

    assert rate == 4.0
    assert list(aligned) == [Modality.HR, Modality.EDA, Modality.TEMP]
    # 1 Hz 10개 샘플은 0-9초 구간이라 4 Hz로 37개
    assert {len(v) for v in aligned.values()} == {37}
    np.testing.assert_allclose(aligned[Modality.HR], 60.0 + np.arange(37) / 4.0)
    np.testing.assert_array_equal(aligned[Modality.EDA], recordings[Modality.EDA][:37])

    windows = segment_windows(aligned, rate, window_seconds=4.0, stride_seconds=None, subject_id="S1")
    assert len(windows) == 2
    assert windows[0].modalities == (Modality.HR, Modality.EDA, Modality.TEMP)
    np.testing.assert_allclose(windows[1].channel(Modality.HR), 64.0 + np.arange(16) / 4.0)


def test_align_modalities_input_checks():
    with pytest.raises(MissingModalityError):
        align_modalities({}, {})
    with pytest.raises(InvalidWindowError):
        align_modalities({Modality.HR: np.ones(4) * 60.0, Modality.EDA: np.ones(8)}, {Modality.EDA: 4.0})
