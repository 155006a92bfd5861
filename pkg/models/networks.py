"""
분류 신경망 모듈
FCN / LSTM / Transformer 인코더 분류기와 모델/학습 설정을 정의합니다.
"""

import math
from dataclasses import asdict, dataclass
from typing import Dict, Tuple

import numpy as np
import torch
import torch.nn as nn

from config import (
    FCN_NUM_LAYERS,
    HIDDEN_SIZE,
    LSTM_NUM_LAYERS,
    MODEL_ARCH,
    MODEL_DROPOUT,
    TRAIN_BATCH_SIZE,
    TRAIN_BETAS,
    TRAIN_EPOCHS,
    TRAIN_EPS,
    TRAIN_LR,
    TRAIN_PATIENCE,
    TRAIN_RESTARTS,
    TRANSFORMER_NUM_HEADS,
    TRANSFORMER_NUM_LAYERS,
)
from utils.exceptions import InvalidConfigError, ShapeMismatchError

ARCHITECTURES = ("fcn", "lstm", "transformer")

DEFAULT_NUM_LAYERS = {
    "fcn": FCN_NUM_LAYERS,
    "lstm": LSTM_NUM_LAYERS,
    "transformer": TRANSFORMER_NUM_LAYERS,
}


@dataclass(frozen=True)
class ModelSpec:
    """모델 구조 설정"""
    arch: str = MODEL_ARCH
    t: int = 2
    input_channels: int = 1
    num_classes: int = 2
    hidden_size: int = HIDDEN_SIZE
    num_layers: int = 0
    num_heads: int = TRANSFORMER_NUM_HEADS
    dropout: float = MODEL_DROPOUT
    seed: int = 0

    def __post_init__(self):
        arch = self.arch.lower()
        object.__setattr__(self, "arch", arch)
        if arch not in ARCHITECTURES:
            raise InvalidConfigError(f"지원하지 않는 구조: {self.arch} ({'/'.join(ARCHITECTURES)})")
        if self.num_layers == 0:
            object.__setattr__(self, "num_layers", DEFAULT_NUM_LAYERS[arch])
        for name in ("t", "input_channels", "num_classes", "hidden_size", "num_layers", "num_heads"):
            if getattr(self, name) < 1:
                raise InvalidConfigError(f"{name}는 1 이상이어야 합니다: {getattr(self, name)}")
        if arch == "transformer" and self.hidden_size % self.num_heads != 0:
            raise InvalidConfigError(f"num_heads({self.num_heads})가 hidden_size({self.hidden_size})를 나누지 않습니다")
        if not 0.0 <= self.dropout < 1.0:
            raise InvalidConfigError(f"dropout은 [0, 1) 범위여야 합니다: {self.dropout}")

    def to_dict(self) -> Dict:
        return asdict(self)


@dataclass(frozen=True)
class TrainConfig:
    """학습 설정"""
    lr: float = TRAIN_LR
    epochs: int = TRAIN_EPOCHS
    batch_size: int = TRAIN_BATCH_SIZE
    betas: Tuple[float, float] = TRAIN_BETAS
    eps: float = TRAIN_EPS
    patience: int = TRAIN_PATIENCE
    restarts: int = TRAIN_RESTARTS
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "betas", tuple(self.betas))
        if self.lr <= 0:
            raise InvalidConfigError(f"lr은 양수여야 합니다: {self.lr}")
        if self.epochs < 1 or self.batch_size < 1 or self.restarts < 1:
            raise InvalidConfigError("epochs, batch_size, restarts는 1 이상이어야 합니다")
        if self.patience < 0:
            raise InvalidConfigError(f"patience는 0 이상이어야 합니다: {self.patience}")

    def to_dict(self) -> Dict:
        payload = asdict(self)
        payload["betas"] = list(self.betas)
        return payload


class WindowClassifier(nn.Module):
    """
    (배치, t, 채널) 입력을 로짓으로 바꾸는 분류기 기반 클래스

    입력 표준화 통계는 버퍼로 보관되어 체크포인트에 함께 저장되고,
    원시 윈도우에서 확률까지 전 구간이 미분 가능합니다.
    """

    def __init__(self, spec: ModelSpec):
        super().__init__()
        self.spec = spec
        self.register_buffer("input_mean", torch.zeros(spec.input_channels, dtype=torch.float64))
        self.register_buffer("input_std", torch.ones(spec.input_channels, dtype=torch.float64))

    def set_input_statistics(self, mean, std):
        """학습 분할의 채널별 평균/표준편차 설정 (표준편차 0은 1로 대체)"""
        mean = torch.as_tensor(np.asarray(mean, dtype=np.float64))
        std = np.asarray(std, dtype=np.float64)
        std = torch.as_tensor(np.where(std > 0, std, 1.0))
        self.input_mean.copy_(mean)
        self.input_std.copy_(std)

    def encode(self, x: torch.Tensor) -> torch.Tensor:
        raise NotImplementedError

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        if x.dim() != 3 or x.shape[1] != self.spec.t or x.shape[2] != self.spec.input_channels:
            raise ShapeMismatchError(
                f"입력 형태 {tuple(x.shape)} != (batch, {self.spec.t}, {self.spec.input_channels})"
            )
        return self.encode((x - self.input_mean) / self.input_std)


class FCNClassifier(WindowClassifier):
    """평탄화 입력의 완전연결 분류기"""

    def __init__(self, spec: ModelSpec):
        super().__init__(spec)
        layers = []
        width = spec.t * spec.input_channels
        for _ in range(spec.num_layers):
            layers += [nn.Linear(width, spec.hidden_size), nn.GELU(), nn.Dropout(spec.dropout)]
            width = spec.hidden_size
        self.body = nn.Sequential(*layers)
        self.head = nn.Linear(width, spec.num_classes)

    def encode(self, x: torch.Tensor) -> torch.Tensor:
        return self.head(self.body(x.flatten(start_dim=1)))


class LSTMClassifier(WindowClassifier):
    """마지막 은닉 상태를 쓰는 LSTM 분류기"""

    def __init__(self, spec: ModelSpec):
        super().__init__(spec)
        self.lstm = nn.LSTM(
            spec.input_channels, spec.hidden_size, spec.num_layers,
            batch_first=True, dropout=spec.dropout if spec.num_layers > 1 else 0.0,
        )
        self.head = nn.Linear(spec.hidden_size, spec.num_classes)

    def encode(self, x: torch.Tensor) -> torch.Tensor:
        out, _ = self.lstm(x)
        return self.head(out[:, -1, :])


def sinusoidal_encoding(t: int, d_model: int) -> torch.Tensor:
    """사인/코사인 위치 인코딩 (t, d_model)"""
    position = torch.arange(t, dtype=torch.float64).unsqueeze(1)
    div_term = torch.exp(torch.arange(0, d_model, 2, dtype=torch.float64) * (-math.log(10000.0) / d_model))
    encoding = torch.zeros(t, d_model, dtype=torch.float64)
    encoding[:, 0::2] = torch.sin(position * div_term)
    encoding[:, 1::2] = torch.cos(position * div_term)[:, : d_model // 2]
    return encoding


class TransformerClassifier(WindowClassifier):
    """위치 인코딩 + 인코더 + 시간축 평균 풀링 분류기"""

    def __init__(self, spec: ModelSpec):
        super().__init__(spec)
        self.embed = nn.Linear(spec.input_channels, spec.hidden_size)
        self.register_buffer("positional", sinusoidal_encoding(spec.t, spec.hidden_size))
        layer = nn.TransformerEncoderLayer(
            d_model=spec.hidden_size,
            nhead=spec.num_heads,
            dim_feedforward=2 * spec.hidden_size,
            dropout=spec.dropout,
            activation="gelu",
            batch_first=True,
            norm_first=True,
        )
        self.encoder = nn.TransformerEncoder(layer, num_layers=spec.num_layers, enable_nested_tensor=False)
        self.head = nn.Linear(spec.hidden_size, spec.num_classes)

    def encode(self, x: torch.Tensor) -> torch.Tensor:
        h = self.embed(x) + self.positional
        h = self.encoder(h)
        return self.head(h.mean(dim=1))


NETWORKS = {
    "fcn": FCNClassifier,
    "lstm": LSTMClassifier,
    "transformer": TransformerClassifier,
}


def build_network(spec: ModelSpec) -> WindowClassifier:
    """
    설정에 맞는 float64 신경망 생성 (spec.seed로 초기화 고정)

    Args:
        spec (ModelSpec): 모델 구조 설정

    Returns:
        WindowClassifier: 초기화된 신경망 (평가 모드)
    """
    torch.manual_seed(spec.seed)
    network = NETWORKS[spec.arch](spec).double()
    network.eval()
    return network
