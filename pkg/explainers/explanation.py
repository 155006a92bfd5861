"""
설명 결과 타입
IIC / LCBM / FCSHAP가 공유하는 인스턴스 설명 레코드와 JSON 입출력
"""

import json
import os
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from utils.exceptions import MissingInputError, SchemaMismatchError

METHODS = ("iic", "lcbm", "fcshap")
REQUIRED_FIELDS = ("window_id", "method", "predicted_class", "weights", "binary", "degradation_final", "config")


@dataclass(eq=False)
class Explanation:
    """
    단일 윈도우 설명

    Attributes:
        window_id: 윈도우 ID
        method: iic / lcbm / fcshap
        names: 컴포넌트 또는 특성 이름 (고정 순서)
        weights: 중요도 (IIC는 w, 특성 방법은 합이 1인 정규화 |phi| 또는 계수 중요도)
        binary: 임계값 이상 여부 (0/1)
        predicted_class: 원본 입력의 예측 클래스
        label: 실제 라벨 (없으면 None)
        degradation_final: 최종 가중치의 출력 저하량 (IIC만)
        loss_trace: 에폭별 (L_weights, L_degradation, degradation), 마지막은 최종 가중치 기준
        raw_scores: 정규화 전 점수 (FCSHAP의 phi 등)
        component_values: 이름별 스칼라 요약값 (분포 요약용)
        config: 설명 생성 설정 스냅샷
    """
    window_id: str
    method: str
    names: Tuple[str, ...]
    weights: np.ndarray
    binary: np.ndarray
    predicted_class: int
    label: Optional[int] = None
    degradation_final: Optional[float] = None
    loss_trace: List[Tuple[float, float, float]] = field(default_factory=list)
    raw_scores: Optional[np.ndarray] = None
    component_values: Dict[str, float] = field(default_factory=dict)
    config: Dict = field(default_factory=dict)

    def __post_init__(self):
        self.names = tuple(self.names)
        self.weights = np.asarray(self.weights, dtype=np.float64).reshape(-1)
        self.binary = np.asarray(self.binary, dtype=np.int64).reshape(-1)
        if not len(self.names) == len(self.weights) == len(self.binary):
            raise SchemaMismatchError(
                f"[{self.window_id}] names/weights/binary 길이 불일치: "
                f"{len(self.names)}/{len(self.weights)}/{len(self.binary)}"
            )
        if self.method not in METHODS:
            raise SchemaMismatchError(f"[{self.window_id}] 알 수 없는 설명 방법: {self.method}")
        if self.raw_scores is not None:
            self.raw_scores = np.asarray(self.raw_scores, dtype=np.float64).reshape(-1)

    @property
    def d(self) -> int:
        return len(self.names)

    @property
    def kept(self) -> List[str]:
        """중요하다고 판단된 이름"""
        return [n for n, b in zip(self.names, self.binary) if b]

    def importance(self) -> Dict[str, float]:
        return {n: float(v) for n, v in zip(self.names, self.weights)}

    def to_dict(self) -> Dict:
        payload = {
            "window_id": self.window_id,
            "method": self.method,
            "predicted_class": int(self.predicted_class),
            "label": self.label,
            "weights": self.importance(),
            "binary": {n: int(b) for n, b in zip(self.names, self.binary)},
            "degradation_final": self.degradation_final,
            "config": dict(self.config),
        }
        if self.loss_trace:
            payload["loss_trace"] = [[float(v) for v in entry] for entry in self.loss_trace]
        if self.raw_scores is not None:
            payload["raw_scores"] = {n: float(v) for n, v in zip(self.names, self.raw_scores)}
        if self.component_values:
            payload["component_values"] = {n: float(v) for n, v in self.component_values.items()}
        return payload

    @classmethod
    def from_dict(cls, payload: Dict) -> "Explanation":
        missing = [k for k in REQUIRED_FIELDS if k not in payload]
        if missing:
            raise SchemaMismatchError(f"설명 JSON에 필드가 없습니다: {missing}")
        names = tuple(payload["weights"].keys())
        raw = payload.get("raw_scores")
        return cls(
            window_id=payload["window_id"],
            method=payload["method"],
            names=names,
            weights=[payload["weights"][n] for n in names],
            binary=[payload["binary"][n] for n in names],
            predicted_class=payload["predicted_class"],
            label=payload.get("label"),
            degradation_final=payload["degradation_final"],
            loss_trace=[tuple(entry) for entry in payload.get("loss_trace", [])],
            raw_scores=None if raw is None else [raw[n] for n in names],
            component_values=dict(payload.get("component_values", {})),
            config=dict(payload["config"]),
        )


@dataclass
class ExplanationBatch:
    """배치 설명 결과 (순서 보존 + 윈도우별 실패 목록)"""
    explanations: List[Explanation] = field(default_factory=list)
    failures: List[Dict[str, str]] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.explanations)

    def __iter__(self):
        return iter(self.explanations)

    def __getitem__(self, index: int) -> Explanation:
        return self.explanations[index]

    def summary(self) -> Dict:
        return {"succeeded": len(self.explanations), "failed": len(self.failures), "failures": list(self.failures)}


def threshold_binary(weights: Sequence[float], threshold: float) -> np.ndarray:
    """임계값 이상이면 1"""
    return (np.asarray(weights, dtype=np.float64) >= threshold).astype(np.int64)


def save_explanations(explanations: Sequence[Explanation], path: str) -> str:
    """설명 목록을 JSON 배열로 저장"""
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        json.dump([e.to_dict() for e in explanations], f, indent=1, allow_nan=False)
        f.write("\n")
    return path


def load_explanations(path: str) -> List[Explanation]:
    """JSON 배열에서 설명 목록 로드"""
    if not os.path.exists(path):
        raise MissingInputError(f"설명 파일을 찾을 수 없음: {path}")
    with open(path, "r", encoding="utf-8") as f:
        payload = json.load(f)
    if not isinstance(payload, list):
        raise SchemaMismatchError("설명 JSON 최상위는 배열이어야 합니다")
    return [Explanation.from_dict(item) for item in payload]
