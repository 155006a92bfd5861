"""
신호 전처리 모듈
가속도 합성, 베이스라인 계산, 리샘플링, 윈도우 분할, 피험자 단위 fold 분할을 담당합니다.
"""

import math
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
from scipy.interpolate import interp1d

from config import RESAMPLE_KIND
from signals.types import BaselineSet, Dataset, Modality, MultimodalWindow, Split, ordered_modalities
from utils.exceptions import (
    EmptyDatasetError,
    InvalidWindowError,
    LengthMismatchError,
    MissingModalityError,
    SchemaMismatchError,
)
from utils.logger import setup_logger

logger = setup_logger("preprocessing")


def resultant_acceleration(x, y, z) -> np.ndarray:
    """
    3축 가속도를 합성 가속도로 변환 (r_i = sqrt(x_i^2 + y_i^2 + z_i^2))

    Args:
        x, y, z: 축별 샘플 벡터

    Returns:
        np.ndarray: 합성 가속도
    """
    x, y, z = (np.asarray(v, dtype=np.float64).reshape(-1) for v in (x, y, z))
    if not len(x) == len(y) == len(z):
        raise LengthMismatchError(f"축 길이가 다릅니다: x={len(x)}, y={len(y)}, z={len(z)}")
    return np.sqrt(x * x + y * y + z * z)


def compute_baselines(train: Dataset, modalities: Optional[Sequence[Modality]] = None) -> BaselineSet:
    """
    학습 분할의 모달리티별 전체 샘플 평균 (베이스라인 b)

    math.fsum으로 정확히 반올림된 합을 사용하므로 윈도우/샘플 순서에 무관합니다.

    Args:
        train (Dataset): 학습 데이터셋
        modalities: 계산할 모달리티 (None이면 데이터셋의 모든 모달리티)

    Returns:
        BaselineSet: 모달리티별 스칼라 베이스라인
    """
    if train.is_empty:
        raise EmptyDatasetError("빈 데이터셋으로 베이스라인을 계산할 수 없습니다")
    if train.split != Split.TRAIN:
        raise SchemaMismatchError(f"베이스라인은 학습 분할에서만 계산합니다 (split={train.split.value})")

    requested = train.modalities if modalities is None else ordered_modalities(modalities)
    missing = [m.value for m in requested if m not in train.modalities]
    if missing:
        raise MissingModalityError(f"학습 데이터에 없는 모달리티: {missing}")

    values: Dict[Modality, float] = {}
    for modality in requested:
        samples = np.concatenate([w.channel(modality) for w in train.windows])
        values[modality] = math.fsum(samples) / len(samples)

    baselines = BaselineSet(values)
    logger.info(f"베이스라인 계산 완료: {baselines.to_dict()}")
    return baselines


def resample_to_rate(values, source_rate_hz: float, target_rate_hz: float,
                     kind: str = RESAMPLE_KIND) -> np.ndarray:
    """
    단일 채널을 목표 샘플링 주파수로 보간

    Args:
        values: 원본 샘플
        source_rate_hz (float): 원본 샘플링 주파수
        target_rate_hz (float): 목표 샘플링 주파수
        kind (str): interp1d 보간 방식 ("linear" 또는 "nearest")

    Returns:
        np.ndarray: 리샘플링된 샘플 (원본 구간 [0, (n-1)/fs] 안의 시점만)
    """
    values = np.asarray(values, dtype=np.float64).reshape(-1)
    if source_rate_hz <= 0 or target_rate_hz <= 0:
        raise InvalidWindowError("샘플링 주파수는 양수여야 합니다")
    if len(values) < 2:
        raise InvalidWindowError("보간에는 최소 2개 샘플이 필요합니다")
    if source_rate_hz == target_rate_hz:
        return values.copy()

    source_times = np.arange(len(values)) / source_rate_hz
    n_target = int(math.floor(source_times[-1] * target_rate_hz + 1e-9)) + 1
    target_times = np.arange(n_target) / target_rate_hz
    interpolator = interp1d(source_times, values, kind=kind, assume_sorted=True)
    return interpolator(target_times)


def align_modalities(recordings: Mapping[Modality, np.ndarray],
                     rates: Mapping[Modality, float]) -> Tuple[Dict[Modality, np.ndarray], float]:
    """
    모든 모달리티를 가장 높은 샘플링 주파수로 맞추고 공통 길이로 자름

    Args:
        recordings: 모달리티별 연속 기록
        rates: 모달리티별 샘플링 주파수

    Returns:
        (정렬된 기록, 공통 샘플링 주파수)
    """
    if not recordings:
        raise MissingModalityError("정렬할 기록이 없습니다")
    missing = [m.value for m in recordings if m not in rates]
    if missing:
        raise InvalidWindowError(f"샘플링 주파수가 없는 모달리티: {missing}")
    target_rate = max(rates[m] for m in recordings)
    aligned = {m: resample_to_rate(recordings[m], rates[m], target_rate) for m in ordered_modalities(recordings)}
    common = min(len(v) for v in aligned.values())
    aligned = {m: v[:common] for m, v in aligned.items()}
    logger.debug(f"모달리티 정렬: {target_rate}Hz, {common}개 샘플")
    return aligned, target_rate


def segment_windows(recordings: Mapping[Modality, np.ndarray], sample_rate_hz: float,
                    window_seconds: float, stride_seconds: Optional[float], subject_id: str,
                    label: Optional[int] = None, id_prefix: Optional[str] = None) -> List[MultimodalWindow]:
    """
    연속 기록을 고정 길이 윈도우로 분할

    Args:
        recordings: 모달리티별 연속 기록 (같은 길이, 같은 샘플링 주파수)
        sample_rate_hz (float): 샘플링 주파수
        window_seconds (float): 윈도우 길이(초)
        stride_seconds (float): 이동 간격(초), None이면 겹치지 않음
        subject_id (str): 피험자 ID
        label (int): 모든 윈도우에 붙일 라벨
        id_prefix (str): 윈도우 ID 접두사

    Returns:
        List[MultimodalWindow]: 잘린 윈도우 (끝의 불완전한 조각은 버림)
    """
    lengths = {len(v) for v in recordings.values()}
    if len(lengths) != 1:
        raise LengthMismatchError(f"기록 길이가 다릅니다: {sorted(lengths)}")
    n = lengths.pop()
    size = int(round(window_seconds * sample_rate_hz))
    step = size if stride_seconds is None else int(round(stride_seconds * sample_rate_hz))
    if size < 2 or step < 1:
        raise InvalidWindowError(f"윈도우 크기/간격이 너무 작습니다 (size={size}, step={step})")

    prefix = id_prefix or subject_id
    windows = []
    for k, start in enumerate(range(0, n - size + 1, step)):
        channels = {m: np.asarray(v, dtype=np.float64)[start:start + size] for m, v in recordings.items()}
        windows.append(MultimodalWindow(
            channels=channels,
            sample_rate_hz=sample_rate_hz,
            subject_id=subject_id,
            window_id=f"{prefix}-w{k:03d}",
            label=label,
        ))
    return windows


def subject_kfold(dataset: Dataset, n_folds: int, seed: int = 0) -> List[Tuple[Dataset, Dataset]]:
    """
    피험자 단위 k-fold 분할 (같은 피험자는 한 fold에만 속함)

    Args:
        dataset (Dataset): 전체 데이터셋
        n_folds (int): fold 수
        seed (int): 피험자 순서 섞기 시드

    Returns:
        List[Tuple[Dataset, Dataset]]: (학습, 평가) 쌍 목록
    """
    subjects = sorted(set(dataset.subject_ids))
    if n_folds < 2 or n_folds > len(subjects):
        raise InvalidWindowError(f"fold 수({n_folds})는 2 이상, 피험자 수({len(subjects)}) 이하여야 합니다")

    rng = np.random.default_rng(seed)
    order = [subjects[i] for i in rng.permutation(len(subjects))]
    groups = [set(order[i::n_folds]) for i in range(n_folds)]

    folds = []
    for held_out in groups:
        train_idx = [i for i, w in enumerate(dataset.windows) if w.subject_id not in held_out]
        eval_idx = [i for i, w in enumerate(dataset.windows) if w.subject_id in held_out]
        folds.append((dataset.subset(train_idx, Split.TRAIN), dataset.subset(eval_idx, Split.EVAL)))
    return folds
