"""
설명 충실도(faithfulness) 평가 모듈
중요 컴포넌트/특성을 가린 뒤 예측이 바뀌는 비율(flip rate)로 fidelity와 sufficiency를 측정합니다.

- IIC: 선택한 컴포넌트 가중치를 0으로 두고 재구성 (베이스라인 b만 남음)
- LCBM / FCSHAP: 선택한 특성을 학습 평균 특성으로 대체
"""

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np
import pandas as pd
from joblib import Parallel, delayed

from config import DEFAULT_SEED, RANDOM_MASK_REPEATS
from decomposition.decomposer import ComponentDecomposer, decomposer as default_decomposer
from explainers.explanation import Explanation
from models.inference import ClassifierModel
from signals.types import BaselineSet, Dataset
from utils.exceptions import DimensionMismatchError, EmptyEvalError, InvalidConfigError, KTooLargeError
from utils.logger import log_flip_report, setup_logger

logger = setup_logger("faithfulness")


@dataclass
class FlipReport:
    """마스킹 후 예측 변화 결과"""
    criterion: str
    parameter: float
    flip_rate: float
    n_evaluated: int
    flips: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    n_skipped: int = 0

    def to_row(self) -> Dict:
        return {"metric": self.criterion, "param": self.parameter, "value": self.flip_rate}

    def to_dict(self) -> Dict:
        return {
            "criterion": self.criterion,
            "parameter": self.parameter,
            "flip_rate": self.flip_rate,
            "n_evaluated": self.n_evaluated,
            "flips": [int(v) for v in self.flips],
            "n_skipped": self.n_skipped,
        }


def _flip_report(criterion: str, parameter: float, flips: np.ndarray, n_skipped: int = 0) -> FlipReport:
    flips = np.asarray(flips, dtype=np.int64)
    rate = float(np.mean(flips)) if len(flips) else 0.0
    report = FlipReport(criterion, float(parameter), rate, int(len(flips)), flips, int(n_skipped))
    log_flip_report(logger, criterion, parameter, rate, len(flips), n_skipped)
    return report


# -----------------------------------------------------------------------------
# 마스커
# -----------------------------------------------------------------------------

class ComponentMasker:
    """IIC 컴포넌트 공간 마스커 (가중치 0 + 재구성)"""

    def __init__(self, model: ClassifierModel, baselines: BaselineSet, eval_ds: Dataset,
                 decomposer: Optional[ComponentDecomposer] = None, jobs: int = 1):
        """
        Args:
            model (ClassifierModel): 학습된 분류 모델
            baselines (BaselineSet): 학습 데이터 베이스라인
            eval_ds (Dataset): 평가 데이터셋
            decomposer (ComponentDecomposer): 분해기 (None이면 전역 인스턴스)
            jobs (int): 윈도우 분해 병렬 스레드 수
        """
        if eval_ds.is_empty:
            raise EmptyEvalError("빈 평가 세트는 마스킹할 수 없습니다")
        self.model = model
        self.decomposer = decomposer or default_decomposer
        self.window_ids = [w.window_id for w in eval_ds.windows]
        if jobs > 1:
            self.component_sets = Parallel(n_jobs=jobs, prefer="threads")(
                delayed(self.decomposer.decompose)(w, baselines) for w in eval_ds.windows
            )
        else:
            self.component_sets = [self.decomposer.decompose(w, baselines) for w in eval_ds.windows]
        self.names = list(self.component_sets[0].names)
        self.original = model.predict(eval_ds)

    @property
    def d(self) -> int:
        return len(self.names)

    def masked_predictions(self, masks: np.ndarray) -> np.ndarray:
        """
        마스크 행렬 (n, d)에 따른 예측 클래스

        마스크가 하나도 없는 행은 원본 예측을 그대로 씁니다.
        """
        masks = np.asarray(masks, dtype=bool)
        predictions = self.original.copy()
        rows = np.flatnonzero(masks.any(axis=1))
        if len(rows) == 0:
            return predictions
        arrays = np.stack([
            self.decomposer.reconstruct_array(self.component_sets[i], (~masks[i]).astype(np.float64))
            for i in rows
        ])
        predictions[rows] = np.argmax(self.model.predict_proba_batch(arrays), axis=1)
        return predictions


class FeatureMasker:
    """특성 공간 마스커 (학습 평균 특성으로 대체)"""

    def __init__(self, model_like, eval_ds: Dataset):
        """
        Args:
            model_like: features(dataset), predict_features(x), train_means, feature_names를 가진 모델
            eval_ds (Dataset): 평가 데이터셋
        """
        if eval_ds.is_empty:
            raise EmptyEvalError("빈 평가 세트는 마스킹할 수 없습니다")
        self.model = model_like
        self.window_ids = [w.window_id for w in eval_ds.windows]
        self.features = np.asarray(model_like.features(eval_ds), dtype=np.float64)
        self.names = list(model_like.feature_names)
        self.means = np.asarray(model_like.train_means, dtype=np.float64)
        self.original = model_like.predict_features(self.features)

    @property
    def d(self) -> int:
        return len(self.names)

    def masked_predictions(self, masks: np.ndarray) -> np.ndarray:
        masks = np.asarray(masks, dtype=bool)
        predictions = self.original.copy()
        rows = np.flatnonzero(masks.any(axis=1))
        if len(rows) == 0:
            return predictions
        x = np.where(masks[rows], self.means[None, :], self.features[rows])
        predictions[rows] = self.model.predict_features(x)
        return predictions


# -----------------------------------------------------------------------------
# 중요도 정렬
# -----------------------------------------------------------------------------

def importance_matrix(importances, masker, allow_missing: bool = False) -> np.ndarray:
    """
    마스커의 윈도우 순서에 맞춘 (n, d) 중요도 행렬

    Args:
        importances: 설명 목록(윈도우별), 전역 벡터 (d,), 또는 (n, d) 배열
        masker: ComponentMasker 또는 FeatureMasker
        allow_missing (bool): True면 설명이 없는 윈도우 행을 NaN으로 채움

    Raises:
        DimensionMismatchError: 설명 누락(allow_missing=False), 이름 순서 불일치, 형상 불일치
    """
    n = len(masker.window_ids)
    if isinstance(importances, (list, tuple)) and not importances and allow_missing:
        return np.full((n, masker.d), np.nan)
    if isinstance(importances, (list, tuple)) and importances and isinstance(importances[0], Explanation):
        by_id = {e.window_id: e for e in importances}
        missing = [wid for wid in masker.window_ids if wid not in by_id]
        if missing and not allow_missing:
            raise DimensionMismatchError(f"설명이 없는 윈도우가 있습니다: {missing[:5]}")
        rows = []
        for wid in masker.window_ids:
            explanation = by_id.get(wid)
            if explanation is None:
                rows.append(np.full(masker.d, np.nan))
                continue
            if list(explanation.names) != masker.names:
                raise DimensionMismatchError(f"[{wid}] 설명 이름이 마스커 순서와 다릅니다")
            rows.append(np.asarray(explanation.weights, dtype=np.float64))
        return np.stack(rows)

    matrix = np.asarray(importances, dtype=np.float64)
    if matrix.ndim == 1:
        matrix = np.broadcast_to(matrix, (n, len(matrix)))
    if matrix.shape != (n, masker.d):
        raise DimensionMismatchError(f"중요도 형상 {matrix.shape} != ({n}, {masker.d})")
    return matrix


def covered_rows(matrix: np.ndarray) -> np.ndarray:
    """중요도가 있는(NaN이 아닌) 윈도우 행 (n,)"""
    covered = ~np.isnan(matrix).any(axis=1)
    if not covered.any():
        raise EmptyEvalError("중요도가 있는 평가 윈도우가 없습니다")
    return covered


def top_k_masks(matrix: np.ndarray, k: int) -> np.ndarray:
    """행별 상위 k개 마스크 (동점은 고정 순서상 앞쪽 우선)"""
    order = np.argsort(-matrix, axis=1, kind="stable")
    masks = np.zeros(matrix.shape, dtype=bool)
    np.put_along_axis(masks, order[:, :k], True, axis=1)
    return masks


def _covered_flips(masker, masks: np.ndarray, covered: np.ndarray) -> np.ndarray:
    masks = masks & covered[:, None]
    return (masker.masked_predictions(masks) != masker.original)[covered]


# -----------------------------------------------------------------------------
# 충실도 지표
# -----------------------------------------------------------------------------

def fidelity(importances, k: int, masker) -> FlipReport:
    """
    Fidelity: 가장 중요한 k개를 가렸을 때의 플립률 (높을수록 좋음)

    Args:
        importances: 윈도우별 설명 또는 전역 중요도 (NaN 행은 평가에서 제외)
        k (int): 가릴 개수 (0이면 마스킹 없음)
        masker: ComponentMasker / FeatureMasker

    Returns:
        FlipReport: 플립률
    """
    if k < 0:
        raise InvalidConfigError(f"k는 0 이상이어야 합니다: {k}")
    if k > masker.d:
        raise KTooLargeError(f"k={k}가 컴포넌트/특성 수 {masker.d}보다 큽니다")
    matrix = importance_matrix(importances, masker)
    covered = covered_rows(matrix)
    masks = top_k_masks(np.nan_to_num(matrix, nan=0.0), k)
    return _flip_report("fidelity", k, _covered_flips(masker, masks, covered), int((~covered).sum()))


def sufficiency(importances, tau: float, masker) -> FlipReport:
    """
    Sufficiency: 중요도가 tau 미만인 것을 모두 가렸을 때의 플립률 (낮을수록 좋음)
    """
    matrix = importance_matrix(importances, masker)
    covered = covered_rows(matrix)
    masks = np.nan_to_num(matrix, nan=np.inf) < tau
    return _flip_report("sufficiency", tau, _covered_flips(masker, masks, covered), int((~covered).sum()))


def random_masking_flip_rate(masker, k: int = 1, repeats: int = RANDOM_MASK_REPEATS,
                             seed: int = DEFAULT_SEED, covered: Optional[np.ndarray] = None) -> FlipReport:
    """
    대조군: 윈도우마다 무작위 k개를 가린 플립률 (반복 평균)

    Args:
        covered: 평가할 윈도우 행 (None이면 전체)
    """
    if k > masker.d:
        raise KTooLargeError(f"k={k}가 컴포넌트/특성 수 {masker.d}보다 큽니다")
    rng = np.random.default_rng(seed)
    n = len(masker.window_ids)
    covered = np.ones(n, dtype=bool) if covered is None else np.asarray(covered, dtype=bool)
    # 반복마다 평가 윈도우 수만큼 이어 붙임
    flips = []
    for _ in range(max(repeats, 1)):
        masks = top_k_masks(rng.random((n, masker.d)), k)
        flips.append(_covered_flips(masker, masks, covered))
    return _flip_report("random", k, np.concatenate(flips), int((~covered).sum()))


class FaithfulnessEvaluator:
    """한 방법의 fidelity / sufficiency / 무작위 대조군 일괄 평가"""

    def __init__(self, masker, method: str):
        self.masker = masker
        self.method = method

    def evaluate(self, importances, ks: Sequence[int], tau: float,
                 random_repeats: int = RANDOM_MASK_REPEATS, seed: int = DEFAULT_SEED) -> List[FlipReport]:
        """
        설명이 없는 윈도우(설명 실패)는 모든 지표에서 제외하고 FlipReport.n_skipped에 기록합니다.
        """
        matrix = importance_matrix(importances, self.masker, allow_missing=True)
        covered = covered_rows(matrix)
        skipped = [wid for wid, ok in zip(self.masker.window_ids, covered) if not ok]
        if skipped:
            logger.warning(f"[{self.method}] 설명이 없는 윈도우 {len(skipped)}개 제외: {skipped[:5]}")

        reports = []
        for k in ks:
            if k > self.masker.d:
                logger.warning(f"[{self.method}] k={k} > {self.masker.d}: 건너뜀")
                continue
            reports.append(fidelity(matrix, k, self.masker))
        reports.append(sufficiency(matrix, tau, self.masker))
        if random_repeats > 0:
            reports.append(random_masking_flip_rate(self.masker, 1, random_repeats, seed, covered))
        return reports

    def to_frame(self, reports: Sequence[FlipReport]) -> pd.DataFrame:
        rows = []
        for report in reports:
            row = report.to_row()
            row["metric"] = f"{self.method}.{row['metric']}"
            rows.append(row)
        return pd.DataFrame(rows, columns=["metric", "param", "value"])
