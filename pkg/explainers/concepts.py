"""
개념/통계 특성 모듈
LCBM용 개념 벡터(컴포넌트 스칼라 요약)와 FCSHAP용 통계 특성(mean/min/max/std)을 만듭니다.
"""

from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from config import STAT_FEATURES
from decomposition.decomposer import ComponentDecomposer, decomposer as default_decomposer
from signals.types import BaselineSet, Dataset, Modality, MultimodalWindow


# -----------------------------------------------------------------------------
# 통계 특성 (FCSHAP)
# -----------------------------------------------------------------------------

def stat_feature_names(modalities: Sequence[Modality]) -> List[str]:
    """특성 이름 ("HR.Max" 형식)"""
    return [f"{m.value}.{stat}" for m in modalities for stat in STAT_FEATURES]


def stat_features(window: MultimodalWindow, modalities: Optional[Sequence[Modality]] = None) -> np.ndarray:
    """
    모달리티별 평균/최소/최대/표준편차

    Returns:
        np.ndarray: 4 * 모달리티 수 길이의 특성 벡터
    """
    modalities = window.modalities if modalities is None else modalities
    values = []
    for modality in modalities:
        x = window.channel(modality)
        values.extend([np.mean(x), np.min(x), np.max(x), np.std(x)])
    return np.array(values, dtype=np.float64)


def stat_feature_matrix(dataset: Dataset, modalities: Optional[Sequence[Modality]] = None) -> Tuple[np.ndarray, List[str]]:
    """데이터셋의 통계 특성 행렬 (n, F)과 이름"""
    modalities = dataset.modalities if modalities is None else tuple(modalities)
    names = stat_feature_names(modalities)
    if dataset.is_empty:
        return np.zeros((0, len(names))), names
    return np.stack([stat_features(w, modalities) for w in dataset.windows]), names


# -----------------------------------------------------------------------------
# 개념 벡터 (LCBM)
# -----------------------------------------------------------------------------

def concept_matrix(dataset: Dataset, baselines: BaselineSet,
                   decomposer: Optional[ComponentDecomposer] = None) -> Tuple[np.ndarray, List[str]]:
    """
    데이터셋의 개념 행렬 (n, d)과 컴포넌트 이름

    스칼라 컴포넌트는 그대로, 시계열 컴포넌트는 시간축 평균을 씁니다.
    """
    decomposer = decomposer or default_decomposer
    rows, names = [], None
    for window in dataset.windows:
        cs = decomposer.decompose(window, baselines)
        rows.append(cs.concept_values())
        names = list(cs.names)
    if names is None:
        return np.zeros((0, 0)), []
    return np.stack(rows), names


# -----------------------------------------------------------------------------
# 중요도 순위
# -----------------------------------------------------------------------------

def normalize_importances(values: Iterable[float]) -> np.ndarray:
    """합이 1이 되도록 정규화 (모두 0이면 0 유지)"""
    values = np.abs(np.asarray(list(values), dtype=np.float64))
    total = values.sum()
    return values / total if total > 0 else np.zeros_like(values)


def rank_importances(names: Sequence[str], raw: Sequence[float], threshold: float = 0.0) -> pd.DataFrame:
    """
    중요도 순위표

    Args:
        names: 특성/컴포넌트 이름
        raw: 원시 중요도 (음수면 절대값 사용)
        threshold (float): 정규화 중요도가 이 값 이하인 행 제외

    Returns:
        pd.DataFrame: name, importance(원시 |값|), normalized, rank 열 (내림차순)
    """
    raw = np.abs(np.asarray(raw, dtype=np.float64))
    table = pd.DataFrame({
        "name": list(names),
        "importance": raw,
        "normalized": normalize_importances(raw),
        "order": np.arange(len(raw)),
    })
    table = table[table["normalized"] > threshold]
    # 동점은 고정 컴포넌트 순서로
    table = table.sort_values(["normalized", "order"], ascending=[False, True], kind="mergesort")
    table = table.drop(columns="order").reset_index(drop=True)
    table["rank"] = np.arange(1, len(table) + 1)
    return table


def baseline_global_importances(source, threshold: float = 0.0) -> pd.DataFrame:
    """
    비교 방법의 전역 중요도 순위표

    Args:
        source: 설명 목록(FCSHAP, 평균 |phi| 사용) 또는 global_importances()를 가진 모델(LCBM)
        threshold (float): 제외 기준

    Returns:
        pd.DataFrame: 내림차순 순위표
    """
    if hasattr(source, "global_importances"):
        names, values = source.global_importances()
        return rank_importances(names, values, threshold)

    explanations = list(source)
    if not explanations:
        return rank_importances([], [], threshold)
    names = explanations[0].names
    scores = np.stack([
        np.abs(e.raw_scores) if e.raw_scores is not None else np.abs(e.weights) for e in explanations
    ])
    return rank_importances(names, scores.mean(axis=0), threshold)
