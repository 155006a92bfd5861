"""
컴포넌트 타입 모듈
분해 결과(이름 붙은 컴포넌트 + 역변환용 보조 상태 + 베이스라인)를 표현합니다.
"""

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple, Union

import numpy as np

from config import COMPONENT_ORDER
from signals.types import BaselineSet, Modality
from utils.exceptions import DimensionMismatchError

Payload = Union[float, np.ndarray]


def _readonly(values) -> np.ndarray:
    arr = np.array(values, dtype=np.float64, copy=True).reshape(-1)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Component:
    """이름 붙은 단일 컴포넌트 (스칼라 또는 시계열)"""
    name: str
    modality: Modality
    payload: Payload

    def __post_init__(self):
        if np.ndim(self.payload) == 0:
            object.__setattr__(self, "payload", float(self.payload))
        else:
            object.__setattr__(self, "payload", _readonly(self.payload))

    @property
    def is_scalar(self) -> bool:
        return isinstance(self.payload, float)

    @property
    def concept_value(self) -> float:
        """스칼라 요약값 (시계열은 시간축 평균)"""
        if self.is_scalar:
            return self.payload
        return float(np.mean(self.payload))

    def to_dict(self) -> Dict:
        payload = self.payload if self.is_scalar else [float(v) for v in self.payload]
        return {"name": self.name, "payload": payload}


@dataclass(frozen=True, eq=False)
class AuxState:
    """
    역변환 전용 보조 상태 (가중치로 스케일되지 않음)

    Attributes:
        acc_signs: ACC 잔차 부호 {-1, 0, +1}^t
        hr_signs: 연속 RR 차이 부호 {-1, 0, +1}^(t-1)
        hr_anchor_rr_ms: 첫 RR 간격 - 평균 RR (ms)
        temp_anchor: 평균 제거 후 첫 TEMP 값
        rr_floor_ms: 재구성 RR 하한
    """
    acc_signs: Optional[np.ndarray] = None
    hr_signs: Optional[np.ndarray] = None
    hr_anchor_rr_ms: Optional[float] = None
    temp_anchor: Optional[float] = None
    rr_floor_ms: Optional[float] = None

    def __post_init__(self):
        for name in ("acc_signs", "hr_signs"):
            value = getattr(self, name)
            if value is not None:
                object.__setattr__(self, name, _readonly(value))

    def to_dict(self) -> Dict:
        payload = {}
        if self.acc_signs is not None:
            payload["acc_signs"] = [int(v) for v in self.acc_signs]
        if self.hr_signs is not None:
            payload["hr_signs"] = [int(v) for v in self.hr_signs]
        if self.hr_anchor_rr_ms is not None:
            payload["hr_anchor_rr_ms"] = self.hr_anchor_rr_ms
            payload["rr_floor_ms"] = self.rr_floor_ms
        if self.temp_anchor is not None:
            payload["temp_anchor"] = self.temp_anchor
        return payload


@dataclass(frozen=True, eq=False)
class ComponentSet:
    """한 윈도우의 분해 결과 C_x (전역 순서로 정렬된 컴포넌트)"""
    components: Tuple[Component, ...]
    aux: AuxState
    baselines: BaselineSet
    t: int
    sample_rate_hz: float
    window_id: str = ""
    subject_id: str = ""
    label: Optional[int] = None
    modalities: Tuple[Modality, ...] = field(default_factory=tuple)

    def __post_init__(self):
        components = tuple(sorted(self.components, key=lambda c: COMPONENT_ORDER.index(c.name)))
        object.__setattr__(self, "components", components)
        if not self.modalities:
            seen = []
            for component in components:
                if component.modality not in seen:
                    seen.append(component.modality)
            object.__setattr__(self, "modalities", tuple(seen))

    @property
    def d(self) -> int:
        """가중치 차원 (컴포넌트 수)"""
        return len(self.components)

    @property
    def names(self) -> Tuple[str, ...]:
        return tuple(c.name for c in self.components)

    def index(self, name: str) -> int:
        return self.names.index(name)

    def __getitem__(self, name: str) -> Component:
        return self.components[self.index(name)]

    def __contains__(self, name: str) -> bool:
        return name in self.names

    def modality_slice(self, modality: Modality) -> List[int]:
        """해당 모달리티 컴포넌트의 가중치 인덱스"""
        return [i for i, c in enumerate(self.components) if c.modality == modality]

    def concept_values(self) -> np.ndarray:
        """개념 벡터 (스칼라는 그대로, 시계열은 시간축 평균)"""
        return np.array([c.concept_value for c in self.components], dtype=np.float64)

    def check_weights(self, w) -> np.ndarray:
        w = np.asarray(w, dtype=np.float64).reshape(-1)
        if len(w) != self.d:
            raise DimensionMismatchError(f"[{self.window_id}] 가중치 길이 {len(w)} != 컴포넌트 수 {self.d}")
        return w

    def to_dict(self) -> Dict:
        """컴포넌트 덤프 JSON 구조"""
        return {
            "window_id": self.window_id,
            "components": [c.to_dict() for c in self.components],
            "aux": self.aux.to_dict(),
            "baselines": self.baselines.to_dict(),
        }
