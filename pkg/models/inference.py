"""
모델 추론 모듈
학습된 신경망을 감싸 확률 예측과 입력 그래디언트를 numpy 인터페이스로 제공합니다.
"""

from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Tuple, Union

import numpy as np
import torch

from models.networks import ModelSpec, WindowClassifier
from signals.types import Dataset, Modality, MultimodalWindow
from utils.exceptions import ShapeMismatchError

# objective(probs, logits) -> 스칼라 텐서 (둘 다 1차원 클래스 벡터)
Objective = Callable[[torch.Tensor, torch.Tensor], torch.Tensor]


@dataclass(frozen=True, eq=False)
class ModelOutput:
    """모델 출력 (softmax 확률과 로짓)"""
    probs: np.ndarray
    logits: np.ndarray

    @property
    def predicted_class(self) -> int:
        return int(np.argmax(self.probs))

    def representation(self, kind: str = "probs") -> np.ndarray:
        """degradation 비교에 쓰는 출력 표현"""
        return self.logits if kind == "logits" else self.probs


class ClassifierModel:
    """윈도우 분류 모델 래퍼"""

    def __init__(self, network: WindowClassifier, modalities: Sequence[Modality],
                 class_names: Sequence[str]):
        """
        초기화

        Args:
            network (WindowClassifier): float64 신경망
            modalities: 입력 채널 순서
            class_names: 클래스 이름
        """
        self.network = network.double().eval()
        self.modalities = tuple(modalities)
        self.class_names = tuple(class_names)

    @property
    def spec(self) -> ModelSpec:
        return self.network.spec

    @property
    def num_classes(self) -> int:
        return self.spec.num_classes

    # ------------------------------------------------------------------
    # 입력 변환
    # ------------------------------------------------------------------

    def window_array(self, window: MultimodalWindow) -> np.ndarray:
        """윈도우를 모델 입력 순서의 (t, 채널) 배열로 변환"""
        missing = [m.value for m in self.modalities if m not in window.channels]
        if missing:
            raise ShapeMismatchError(f"[{window.window_id}] 모델 입력 모달리티가 없습니다: {missing}")
        if window.t != self.spec.t:
            raise ShapeMismatchError(f"[{window.window_id}] 윈도우 길이 {window.t} != 모델 입력 길이 {self.spec.t}")
        return window.to_array(self.modalities)

    def _as_batch(self, x: Union[np.ndarray, MultimodalWindow]) -> Tuple[torch.Tensor, bool]:
        if isinstance(x, MultimodalWindow):
            x = self.window_array(x)
        array = np.asarray(x, dtype=np.float64)
        single = array.ndim == 2
        if single:
            array = array[None, :, :]
        if array.ndim != 3 or array.shape[1:] != (self.spec.t, self.spec.input_channels):
            raise ShapeMismatchError(
                f"입력 형태 {array.shape} != (n, {self.spec.t}, {self.spec.input_channels})"
            )
        return torch.from_numpy(np.ascontiguousarray(array)), single

    # ------------------------------------------------------------------
    # 추론
    # ------------------------------------------------------------------

    def forward(self, window: MultimodalWindow) -> ModelOutput:
        """
        단일 윈도우 추론 (평가 모드, 결정적)

        Args:
            window (MultimodalWindow): 입력 윈도우

        Returns:
            ModelOutput: 확률과 로짓
        """
        return self.forward_array(self.window_array(window))

    def forward_array(self, array: np.ndarray) -> ModelOutput:
        """(t, 채널) 배열 추론"""
        batch, _ = self._as_batch(array)
        # 그래디언트 경로와 같은 연산 경로를 쓰도록 autograd를 끄지 않음
        logits = self.network(batch)[0]
        probs = torch.softmax(logits, dim=-1)
        return ModelOutput(probs=probs.detach().numpy().copy(), logits=logits.detach().numpy().copy())

    def predict_proba_batch(self, arrays: np.ndarray, batch_size: int = 256) -> np.ndarray:
        """
        (n, t, 채널) 배열의 클래스 확률

        Returns:
            np.ndarray: (n, 클래스 수) 확률
        """
        arrays = np.asarray(arrays, dtype=np.float64)
        if len(arrays) == 0:
            return np.zeros((0, self.num_classes))
        outputs = []
        for start in range(0, len(arrays), batch_size):
            batch, _ = self._as_batch(arrays[start:start + batch_size])
            outputs.append(torch.softmax(self.network(batch), dim=-1).detach().numpy())
        return np.concatenate(outputs, axis=0)

    def predict_proba(self, dataset: Dataset) -> np.ndarray:
        """데이터셋 전체 클래스 확률"""
        if dataset.is_empty:
            return np.zeros((0, self.num_classes))
        return self.predict_proba_batch(np.stack([self.window_array(w) for w in dataset.windows]))

    def predict(self, dataset: Dataset) -> np.ndarray:
        """데이터셋 전체 예측 클래스"""
        return np.argmax(self.predict_proba(dataset), axis=1).astype(np.int64)

    # ------------------------------------------------------------------
    # 입력 그래디언트
    # ------------------------------------------------------------------

    def value_and_input_gradient(self, x: Union[np.ndarray, MultimodalWindow],
                                 objective: Objective) -> Tuple[float, np.ndarray]:
        """
        objective 값과 입력에 대한 역전파 그래디언트

        Args:
            x: (t, 채널) 배열 또는 윈도우
            objective: objective(probs, logits) -> 스칼라 텐서

        Returns:
            (값, (t, 채널) 그래디언트)
        """
        batch, _ = self._as_batch(x)
        batch = batch.clone().requires_grad_(True)
        logits = self.network(batch)[0]
        probs = torch.softmax(logits, dim=-1)
        value = objective(probs, logits)
        if not value.requires_grad:
            return float(value), np.zeros(batch.shape[1:])
        (grad,) = torch.autograd.grad(value, batch, allow_unused=True)
        if grad is None:
            return float(value.detach()), np.zeros(batch.shape[1:])
        return float(value.detach()), grad[0].numpy().copy()

    def input_gradient(self, x: Union[np.ndarray, MultimodalWindow], objective: Objective) -> np.ndarray:
        """입력에 대한 objective 그래디언트 ((t, 채널))"""
        return self.value_and_input_gradient(x, objective)[1]


def class_probability(class_index: int) -> Objective:
    """특정 클래스 확률을 objective로 사용"""
    def objective(probs: torch.Tensor, logits: torch.Tensor) -> torch.Tensor:
        return probs[class_index]
    return objective


def output_distance(reference: np.ndarray, representation: str = "probs",
                    reduction: str = "mean") -> Objective:
    """
    기준 출력과의 절대 차이 (degradation)

    Args:
        reference: 원본 윈도우의 출력 표현
        representation (str): "probs" 또는 "logits"
        reduction (str): 클래스 축 "mean" 또는 "max"
    """
    target = torch.as_tensor(np.asarray(reference, dtype=np.float64))

    def objective(probs: torch.Tensor, logits: torch.Tensor) -> torch.Tensor:
        output = logits if representation == "logits" else probs
        diff = torch.abs(output - target)
        return diff.max() if reduction == "max" else diff.mean()
    return objective


def degradation_value(output: ModelOutput, reference: np.ndarray, representation: Optional[str] = "probs",
                      reduction: str = "mean") -> float:
    """numpy 버전 degradation"""
    diff = np.abs(output.representation(representation) - np.asarray(reference, dtype=np.float64))
    return float(diff.max() if reduction == "max" else diff.mean())
