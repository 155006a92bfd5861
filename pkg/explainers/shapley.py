"""
정확한 Shapley 값 모듈
2^F 개 연합을 모두 열거하여 Shapley 값을 계산합니다.
연합 밖 특성은 기준(baseline) 값으로 대체합니다.
"""

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from joblib import Parallel, delayed

from config import SHAPLEY_MAX_FEATURES
from utils.exceptions import DimensionMismatchError, TooManyFeaturesError

# value_fn((m, F) 배열) -> (m,) 값
ValueFunction = Callable[[np.ndarray], np.ndarray]

COALITION_BLOCK = 1 << 14


@dataclass(frozen=True, eq=False)
class ShapleyAttribution:
    """Shapley 분해 결과 (sum(phi) = full_value - base_value)"""
    phi: np.ndarray
    base_value: float
    full_value: float

    @property
    def efficiency_gap(self) -> float:
        return float(np.sum(self.phi) - (self.full_value - self.base_value))


def coalition_inputs(masks: np.ndarray, x: np.ndarray, baseline: np.ndarray) -> np.ndarray:
    """비트마스크 연합을 입력 행렬로 변환 (비트 i가 1이면 x_i, 아니면 baseline_i)"""
    bits = ((masks[:, None] >> np.arange(len(x))[None, :]) & 1).astype(bool)
    return np.where(bits, x[None, :], baseline[None, :])


def shapley_weights(n_features: int) -> np.ndarray:
    """|S|별 가중치 |S|!(F-|S|-1)!/F!"""
    total = math.factorial(n_features)
    return np.array([
        math.factorial(s) * math.factorial(n_features - s - 1) / total for s in range(n_features)
    ], dtype=np.float64)


def exact_shapley(value_fn: ValueFunction, x, baseline, jobs: int = 1) -> ShapleyAttribution:
    """
    완전 열거 Shapley 값

    Args:
        value_fn: 입력 행렬 (m, F) -> 값 (m,)
        x: 설명할 특성 벡터
        baseline: 기준 특성 벡터 (학습 평균)
        jobs (int): 연합 블록 평가 병렬 스레드 수

    Returns:
        ShapleyAttribution: phi, v(빈 연합), v(전체)
    """
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    baseline = np.asarray(baseline, dtype=np.float64).reshape(-1)
    if x.shape != baseline.shape:
        raise DimensionMismatchError(f"x {x.shape}와 baseline {baseline.shape} 길이가 다릅니다")
    n_features = len(x)
    if n_features > SHAPLEY_MAX_FEATURES:
        raise TooManyFeaturesError(
            f"특성 {n_features}개는 완전 열거 한계({SHAPLEY_MAX_FEATURES})를 넘습니다; 샘플링 근사가 필요합니다"
        )
    if n_features == 0:
        v = float(np.asarray(value_fn(baseline[None, :])).reshape(-1)[0])
        return ShapleyAttribution(phi=np.zeros(0), base_value=v, full_value=v)

    n_coalitions = 1 << n_features
    blocks = [np.arange(start, min(start + COALITION_BLOCK, n_coalitions), dtype=np.int64)
              for start in range(0, n_coalitions, COALITION_BLOCK)]

    def evaluate(masks: np.ndarray) -> np.ndarray:
        return np.asarray(value_fn(coalition_inputs(masks, x, baseline)), dtype=np.float64).reshape(-1)

    if jobs > 1 and len(blocks) > 1:
        parts = Parallel(n_jobs=jobs, prefer="threads")(delayed(evaluate)(block) for block in blocks)
    else:
        parts = [evaluate(block) for block in blocks]
    values = np.concatenate(parts)

    masks = np.arange(n_coalitions, dtype=np.int64)
    sizes = np.zeros(n_coalitions, dtype=np.int64)
    for i in range(n_features):
        sizes += (masks >> i) & 1
    weights = shapley_weights(n_features)

    phi = np.zeros(n_features)
    for i in range(n_features):
        bit = 1 << i
        without = masks[(masks & bit) == 0]
        marginal = values[without | bit] - values[without]
        phi[i] = np.sum(weights[sizes[without]] * marginal)

    return ShapleyAttribution(phi=phi, base_value=float(values[0]), full_value=float(values[-1]))
