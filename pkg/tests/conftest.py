import os

os.environ.setdefault("LOG_TO_FILE", "false")
os.environ.setdefault("LOG_LEVEL", "WARNING")

import numpy as np
import pytest
import torch

from models.inference import ClassifierModel
from models.networks import ModelSpec, WindowClassifier, build_network
from signals.types import BaselineSet, Dataset, Modality, MultimodalWindow, Split

RATE_HZ = 4.0
ALL_MODALITIES = (Modality.ACC, Modality.HR, Modality.EDA, Modality.TEMP)


def make_window(rng, t=32, modalities=ALL_MODALITIES, window_id="w000", subject_id="S000",
                label=0, hr_level=70.0):
    channels = {}
    if Modality.ACC in modalities:
        acc = 1.0 + 0.05 * rng.standard_normal(t)
        acc[t // 2] += 1.5
        channels[Modality.ACC] = np.abs(acc)
    if Modality.HR in modalities:
        channels[Modality.HR] = hr_level + 3.0 * rng.standard_normal(t)
    if Modality.EDA in modalities:
        channels[Modality.EDA] = 2.0 + 0.05 * np.cumsum(rng.standard_normal(t))
    if Modality.TEMP in modalities:
        channels[Modality.TEMP] = 33.0 + 0.05 * rng.standard_normal(t)
    return MultimodalWindow(channels=channels, sample_rate_hz=RATE_HZ, subject_id=subject_id,
                            window_id=window_id, label=label)


def make_dataset(rng, n_per_class=4, t=32, modalities=ALL_MODALITIES, split=Split.EVAL):
    windows = []
    for label in (0, 1):
        for k in range(n_per_class):
            windows.append(make_window(
                rng, t=t, modalities=modalities, window_id=f"S{k % 2:03d}_c{label}_w{k:03d}",
                subject_id=f"S{k % 2:03d}", label=label, hr_level=70.0 + 15.0 * label,
            ))
    return Dataset(windows, split, ("rest", "active"))


class MeanHeartRateNetwork(WindowClassifier):
    """HR 채널 평균만 보는 분류기 (로짓 = [0, slope * (mean HR - center)])"""

    def __init__(self, spec, hr_column=0, center=70.0, slope=0.5):
        super().__init__(spec)
        self.hr_column = hr_column
        self.center = center
        self.slope = slope

    def encode(self, x):
        score = self.slope * (x[:, :, self.hr_column].mean(dim=1) - self.center)
        return torch.stack([torch.zeros_like(score), score], dim=1)


class ConstantNetwork(WindowClassifier):
    """입력을 무시하는 분류기"""

    def encode(self, x):
        zero = x.sum(dim=(1, 2)) * 0.0
        return torch.stack([zero + 1.0, zero - 1.0], dim=1)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def window(rng):
    return make_window(rng)


@pytest.fixture
def baselines():
    return BaselineSet({Modality.ACC: 1.0, Modality.HR: 72.0, Modality.EDA: 2.1, Modality.TEMP: 33.1})


@pytest.fixture
def eval_dataset(rng):
    return make_dataset(rng)


@pytest.fixture
def tiny_model():
    spec = ModelSpec(arch="fcn", t=32, input_channels=4, num_classes=2, hidden_size=8, seed=0)
    network = build_network(spec)
    network.set_input_statistics([1.0, 77.0, 2.0, 33.0], [0.3, 8.0, 0.2, 0.05])
    return ClassifierModel(network, ALL_MODALITIES, ("rest", "active"))


@pytest.fixture
def hr_model():
    spec = ModelSpec(arch="fcn", t=16, input_channels=3, num_classes=2, hidden_size=1)
    modalities = (Modality.HR, Modality.EDA, Modality.TEMP)
    return ClassifierModel(MeanHeartRateNetwork(spec), modalities, ("low", "high"))
