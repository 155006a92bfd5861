"""
EDA 토닉 성분 추출 필터
이동 중앙값 후 1차 저역통과(양방향)로 느린 피부전도 수준(SCL)을 추출합니다.
"""

import math

import numpy as np
from scipy import signal
from scipy.ndimage import median_filter

from config import TONIC_CUTOFF_HZ, TONIC_FILTER_ORDER, TONIC_MEDIAN_SECONDS
from utils.exceptions import InvalidWindowError


def median_kernel_size(n_samples: int, sample_rate_hz: float,
                       median_seconds: float = TONIC_MEDIAN_SECONDS) -> int:
    """이동 중앙값 커널 크기 (홀수, 신호 길이 이하)"""
    size = max(1, int(round(median_seconds * sample_rate_hz)))
    if size % 2 == 0:
        size += 1
    limit = n_samples if n_samples % 2 == 1 else n_samples - 1
    return max(1, min(size, limit))


def tonic_component(x, sample_rate_hz: float,
                    median_seconds: float = TONIC_MEDIAN_SECONDS,
                    cutoff_hz: float = TONIC_CUTOFF_HZ,
                    order: int = TONIC_FILTER_ORDER) -> np.ndarray:
    """
    토닉 EDA 추출

    Args:
        x: EDA 샘플 (µS)
        sample_rate_hz (float): 샘플링 주파수
        median_seconds (float): 이동 중앙값 창 길이(초)
        cutoff_hz (float): 저역통과 차단 주파수
        order (int): Butterworth 차수

    Returns:
        np.ndarray: 토닉 성분 (입력과 같은 길이)
    """
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    if sample_rate_hz <= 0:
        raise InvalidWindowError("샘플링 주파수는 양수여야 합니다")

    size = median_kernel_size(len(x), sample_rate_hz, median_seconds)
    smoothed = median_filter(x, size=size, mode="nearest")

    # 차단 주파수가 나이퀴스트 이상이면 저역통과 생략
    nyquist = 0.5 * sample_rate_hz
    if cutoff_hz >= nyquist or len(x) < 2:
        return smoothed

    b, a = signal.butter(order, cutoff_hz, btype="low", fs=sample_rate_hz)
    padlen = min(len(x) - 1, int(math.ceil(3.0 * sample_rate_hz / cutoff_hz)))
    return signal.filtfilt(b, a, smoothed, padlen=padlen)
