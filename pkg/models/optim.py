"""
Adam 최적화 모듈
numpy 배열용 함수형 Adam 업데이트 (편향 보정 포함)
"""

from dataclasses import dataclass
from typing import Tuple

import numpy as np

from utils.exceptions import DimensionMismatchError


@dataclass
class AdamState:
    """Adam 1차/2차 모멘트와 스텝 수"""
    m: np.ndarray
    v: np.ndarray
    step: int = 0

    @classmethod
    def zeros_like(cls, params: np.ndarray) -> "AdamState":
        params = np.asarray(params, dtype=np.float64)
        return cls(m=np.zeros_like(params), v=np.zeros_like(params), step=0)


def adam_step(params: np.ndarray, grads: np.ndarray, state: AdamState, lr: float,
              betas: Tuple[float, float] = (0.9, 0.999), eps: float = 1e-8) -> Tuple[np.ndarray, AdamState]:
    """
    Adam 한 스텝

    theta <- theta - lr * m_hat / (sqrt(v_hat) + eps)

    Args:
        params: 현재 파라미터
        grads: 그래디언트
        state (AdamState): 이전 상태
        lr (float): 학습률
        betas: (beta1, beta2)
        eps (float): 분모 안정화 상수

    Returns:
        (새 파라미터, 새 상태) - 입력 배열은 변경하지 않음
    """
    params = np.asarray(params, dtype=np.float64)
    grads = np.asarray(grads, dtype=np.float64)
    if params.shape != grads.shape or params.shape != state.m.shape:
        raise DimensionMismatchError(f"형태 불일치: params={params.shape}, grads={grads.shape}, state={state.m.shape}")

    beta1, beta2 = betas
    step = state.step + 1
    m = beta1 * state.m + (1.0 - beta1) * grads
    v = beta2 * state.v + (1.0 - beta2) * grads * grads
    m_hat = m / (1.0 - beta1 ** step)
    v_hat = v / (1.0 - beta2 ** step)

    updated = params - lr * m_hat / (np.sqrt(v_hat) + eps)
    return updated, AdamState(m=m, v=v, step=step)
