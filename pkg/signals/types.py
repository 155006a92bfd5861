"""
신호 도메인 타입
윈도우, 데이터셋, 베이스라인 등 모든 모듈이 공유하는 타입을 정의합니다.
"""

from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from config import MODALITY_UNITS
from utils.exceptions import (
    InvalidWindowError,
    LengthMismatchError,
    MissingModalityError,
    NonPositiveHeartRateError,
    SchemaMismatchError,
)


class Modality(Enum):
    """센서 모달리티"""
    ACC = "ACC"
    HR = "HR"
    EDA = "EDA"
    TEMP = "TEMP"

    @property
    def unit(self) -> str:
        """측정 단위"""
        return MODALITY_UNITS[self.value]

    @classmethod
    def parse(cls, tag: str) -> "Modality":
        """문자열 태그를 모달리티로 변환"""
        try:
            return cls(tag.strip().upper())
        except ValueError:
            raise SchemaMismatchError(f"알 수 없는 모달리티: {tag!r}")


# 모든 채널 배열/컴포넌트는 이 순서를 따름
MODALITY_ORDER: Tuple[Modality, ...] = (Modality.ACC, Modality.HR, Modality.EDA, Modality.TEMP)


def ordered_modalities(modalities) -> Tuple[Modality, ...]:
    """모달리티 집합을 전역 순서로 정렬"""
    present = set(modalities)
    return tuple(m for m in MODALITY_ORDER if m in present)


class Split(Enum):
    """데이터 분할"""
    TRAIN = "train"
    EVAL = "eval"


def _frozen_array(values) -> np.ndarray:
    arr = np.array(values, dtype=np.float64, copy=True).reshape(-1)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class MultimodalWindow:
    """고정 길이, 고정 샘플링 주파수의 다중 모달리티 윈도우"""
    channels: Mapping[Modality, np.ndarray]
    sample_rate_hz: float
    subject_id: str
    window_id: str
    label: Optional[int] = None

    def __post_init__(self):
        if not self.channels:
            raise InvalidWindowError(f"[{self.window_id}] 채널이 없습니다")
        if not np.isfinite(self.sample_rate_hz) or self.sample_rate_hz <= 0:
            raise InvalidWindowError(f"[{self.window_id}] sample_rate_hz는 양수여야 합니다: {self.sample_rate_hz}")

        frozen: Dict[Modality, np.ndarray] = {}
        for modality in ordered_modalities(self.channels.keys()):
            frozen[modality] = _frozen_array(self.channels[modality])

        lengths = {m.value: len(v) for m, v in frozen.items()}
        if len(set(lengths.values())) != 1:
            raise LengthMismatchError(f"[{self.window_id}] 채널 길이가 다릅니다: {lengths}")
        t = next(iter(lengths.values()))
        if t < 2:
            raise InvalidWindowError(f"[{self.window_id}] 윈도우 길이는 2 이상이어야 합니다 (t={t})")

        for modality, values in frozen.items():
            if not np.all(np.isfinite(values)):
                raise InvalidWindowError(f"[{self.window_id}] {modality.value} 채널에 NaN/Inf가 있습니다")
        if Modality.HR in frozen and np.any(frozen[Modality.HR] <= 0):
            raise NonPositiveHeartRateError(f"[{self.window_id}] HR 샘플은 0보다 커야 합니다")

        object.__setattr__(self, "channels", frozen)
        object.__setattr__(self, "sample_rate_hz", float(self.sample_rate_hz))
        if self.label is not None:
            object.__setattr__(self, "label", int(self.label))

    @property
    def t(self) -> int:
        """샘플 수"""
        return len(next(iter(self.channels.values())))

    @property
    def modalities(self) -> Tuple[Modality, ...]:
        """존재하는 모달리티 (전역 순서)"""
        return tuple(self.channels.keys())

    def channel(self, modality: Modality) -> np.ndarray:
        """단일 채널 반환"""
        if modality not in self.channels:
            raise MissingModalityError(f"[{self.window_id}] {modality.value} 채널이 없습니다")
        return self.channels[modality]

    def to_array(self, modalities: Optional[Sequence[Modality]] = None) -> np.ndarray:
        """
        (t, 채널 수) 배열로 변환

        Args:
            modalities: 채널 순서 (None이면 존재하는 모달리티 전체)

        Returns:
            np.ndarray: 시점별로 채널이 쌓인 배열
        """
        modalities = self.modalities if modalities is None else tuple(modalities)
        return np.stack([self.channel(m) for m in modalities], axis=1)

    def with_channels(self, channels: Mapping[Modality, np.ndarray]) -> "MultimodalWindow":
        """채널만 교체한 새 윈도우"""
        return replace(self, channels=dict(channels))

    @classmethod
    def from_array(cls, array: np.ndarray, modalities: Sequence[Modality], sample_rate_hz: float,
                   subject_id: str, window_id: str, label: Optional[int] = None) -> "MultimodalWindow":
        """(t, 채널 수) 배열에서 윈도우 생성"""
        array = np.asarray(array, dtype=np.float64)
        if array.ndim != 2 or array.shape[1] != len(modalities):
            raise LengthMismatchError(
                f"[{window_id}] 배열 형태 {array.shape}가 모달리티 {len(modalities)}개와 맞지 않습니다"
            )
        channels = {m: array[:, i] for i, m in enumerate(modalities)}
        return cls(channels=channels, sample_rate_hz=sample_rate_hz, subject_id=subject_id,
                   window_id=window_id, label=label)

    def equals(self, other: "MultimodalWindow") -> bool:
        """샘플 단위까지 동일한지 비교 (비트 단위)"""
        if (self.window_id, self.subject_id, self.label, self.sample_rate_hz, self.modalities) != \
                (other.window_id, other.subject_id, other.label, other.sample_rate_hz, other.modalities):
            return False
        return all(np.array_equal(self.channels[m], other.channels[m]) for m in self.modalities)


@dataclass(frozen=True, eq=False)
class Dataset:
    """윈도우 모음 (학습 또는 평가 분할)"""
    windows: Tuple[MultimodalWindow, ...]
    split: Split
    class_names: Tuple[str, ...] = field(default_factory=tuple)

    def __post_init__(self):
        windows = tuple(self.windows)
        object.__setattr__(self, "windows", windows)
        object.__setattr__(self, "class_names", tuple(self.class_names))
        if not isinstance(self.split, Split):
            object.__setattr__(self, "split", Split(self.split))
        if not windows:
            return

        first = windows[0]
        for window in windows[1:]:
            if window.t != first.t:
                raise SchemaMismatchError(
                    f"윈도우 길이가 다릅니다: {first.window_id}={first.t}, {window.window_id}={window.t}"
                )
            if window.sample_rate_hz != first.sample_rate_hz:
                raise SchemaMismatchError(f"샘플링 주파수가 다릅니다: {window.window_id}")
            if window.modalities != first.modalities:
                raise SchemaMismatchError(f"모달리티 구성이 다릅니다: {window.window_id}")

        n_classes = len(self.class_names)
        for window in windows:
            if window.label is not None and not 0 <= window.label < n_classes:
                raise SchemaMismatchError(
                    f"[{window.window_id}] 라벨 {window.label}이 클래스 범위 [0, {n_classes})를 벗어납니다"
                )

    def __len__(self) -> int:
        return len(self.windows)

    def __iter__(self):
        return iter(self.windows)

    def __getitem__(self, index: int) -> MultimodalWindow:
        return self.windows[index]

    @property
    def is_empty(self) -> bool:
        return len(self.windows) == 0

    @property
    def t(self) -> Optional[int]:
        return self.windows[0].t if self.windows else None

    @property
    def sample_rate_hz(self) -> Optional[float]:
        return self.windows[0].sample_rate_hz if self.windows else None

    @property
    def modalities(self) -> Tuple[Modality, ...]:
        return self.windows[0].modalities if self.windows else ()

    @property
    def labels(self) -> np.ndarray:
        """라벨 배열 (라벨 없는 윈도우는 -1)"""
        return np.array([-1 if w.label is None else w.label for w in self.windows], dtype=np.int64)

    @property
    def subject_ids(self) -> Tuple[str, ...]:
        return tuple(w.subject_id for w in self.windows)

    def to_array(self, modalities: Optional[Sequence[Modality]] = None) -> np.ndarray:
        """(n, t, 채널 수) 배열"""
        if not self.windows:
            n_channels = len(modalities) if modalities is not None else 0
            return np.zeros((0, 0, n_channels))
        return np.stack([w.to_array(modalities) for w in self.windows], axis=0)

    def subset(self, indices: Sequence[int], split: Optional[Split] = None) -> "Dataset":
        """인덱스로 부분 데이터셋 생성"""
        return Dataset(
            windows=tuple(self.windows[i] for i in indices),
            split=self.split if split is None else split,
            class_names=self.class_names,
        )


@dataclass(frozen=True)
class BaselineSet:
    """모달리티별 학습 데이터 평균 (스칼라 베이스라인 b)"""
    values: Mapping[Modality, float]

    def __post_init__(self):
        ordered = {m: float(self.values[m]) for m in ordered_modalities(self.values.keys())}
        for modality, value in ordered.items():
            if not np.isfinite(value):
                raise InvalidWindowError(f"{modality.value} 베이스라인이 유한하지 않습니다")
        if Modality.HR in ordered and ordered[Modality.HR] <= 0:
            raise NonPositiveHeartRateError(f"HR 베이스라인은 0보다 커야 합니다: {ordered[Modality.HR]}")
        object.__setattr__(self, "values", ordered)

    def __getitem__(self, modality: Modality) -> float:
        if modality not in self.values:
            raise MissingModalityError(f"{modality.value} 베이스라인이 없습니다")
        return self.values[modality]

    def __contains__(self, modality: Modality) -> bool:
        return modality in self.values

    @property
    def modalities(self) -> Tuple[Modality, ...]:
        return tuple(self.values.keys())

    def to_dict(self) -> Dict[str, float]:
        return {m.value: v for m, v in self.values.items()}

    @classmethod
    def from_dict(cls, payload: Mapping[str, float]) -> "BaselineSet":
        return cls({Modality.parse(k): float(v) for k, v in payload.items()})
