"""
전역 설명 집계 모듈
인스턴스 설명을 평균 중요도, 상위 k 순위표, TP/TN별 컴포넌트 값 분포로 요약합니다.
"""

import math
from collections import Counter
from dataclasses import dataclass, field
from itertools import combinations
from typing import Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

from config import GLOBAL_TOP_K, ITEMSET_MAX_SIZE, ITEMSET_MIN_SUPPORT, POSITIVE_CLASS
from explainers.concepts import rank_importances
from explainers.explanation import Explanation
from utils.exceptions import DimensionMismatchError, EmptyEvalError
from utils.logger import setup_logger

logger = setup_logger("global_explanation")

DISTRIBUTION_COLUMNS = ["component", "group", "value"]


@dataclass
class GlobalExplanation:
    """
    코호트 수준 설명

    Attributes:
        method: 설명 방법
        names: 컴포넌트/특성 이름 (고정 순서)
        mean_importance: 이름별 평균 중요도 (≥ 0)
        ranking: 내림차순 순위표 (name, importance, normalized, rank)
        distributions: component, group(TP/TN), value 행
        n_explanations: 집계한 설명 수
    """
    method: str
    names: List[str]
    mean_importance: np.ndarray
    ranking: pd.DataFrame
    distributions: pd.DataFrame = field(default_factory=lambda: pd.DataFrame(columns=DISTRIBUTION_COLUMNS))
    n_explanations: int = 0

    def top(self, k: int = GLOBAL_TOP_K) -> List[str]:
        return list(self.ranking["name"].head(k))

    def to_dict(self) -> Dict:
        return {
            "method": self.method,
            "n_explanations": self.n_explanations,
            "mean_importance": {n: float(v) for n, v in zip(self.names, self.mean_importance)},
            "ranking": [
                {"name": row.name, "importance": float(row.importance),
                 "normalized": float(row.normalized), "rank": int(row.rank)}
                for row in self.ranking.itertuples(index=False)
            ],
        }


def _outcome_group(explanation: Explanation, positive_class: int) -> Optional[str]:
    """TP / TN / 그 외(None)"""
    if explanation.label is None:
        return None
    correct = explanation.predicted_class == explanation.label
    if not correct:
        return None
    return "TP" if explanation.label == positive_class else "TN"


def _importance_rows(explanations: Sequence[Explanation]) -> np.ndarray:
    """설명별 중요도 (FCSHAP은 |phi|, 그 외는 가중치)"""
    rows = []
    for e in explanations:
        if e.method == "fcshap" and e.raw_scores is not None:
            rows.append(np.abs(e.raw_scores))
        else:
            rows.append(e.weights)
    return np.stack(rows)


def component_distributions(explanations: Sequence[Explanation],
                            positive_class: int = POSITIVE_CLASS) -> pd.DataFrame:
    """
    분포 요약 행 (가중치 > 0인 윈도우만, TP/TN으로 구분)

    Returns:
        pd.DataFrame: component, group, value
    """
    rows = []
    for e in explanations:
        group = _outcome_group(e, positive_class)
        if group is None:
            continue
        for name, weight in zip(e.names, e.weights):
            if weight > 0 and name in e.component_values:
                rows.append({"component": name, "group": group, "value": float(e.component_values[name])})
    return pd.DataFrame(rows, columns=DISTRIBUTION_COLUMNS)


def aggregate_global(explanations: Sequence[Explanation], top_k: int = GLOBAL_TOP_K,
                     positive_class: int = POSITIVE_CLASS) -> GlobalExplanation:
    """
    인스턴스 설명 → 전역 설명

    Args:
        explanations: 같은 방법/이름 순서의 설명 목록
        top_k (int): 순위표 행 수
        positive_class (int): TP/TN 구분 기준 클래스

    Returns:
        GlobalExplanation: 평균 중요도, 순위표, 분포
    """
    explanations = list(explanations)
    if not explanations:
        raise EmptyEvalError("집계할 설명이 없습니다")
    names = list(explanations[0].names)
    for e in explanations:
        if list(e.names) != names:
            raise DimensionMismatchError(f"[{e.window_id}] 설명 이름 순서가 다릅니다")

    # 합산 순서와 무관하도록 fsum
    matrix = _importance_rows(explanations)
    mean_importance = np.array([math.fsum(matrix[:, j]) / len(matrix) for j in range(len(names))])

    ranking = rank_importances(names, mean_importance).head(top_k).reset_index(drop=True)
    result = GlobalExplanation(
        method=explanations[0].method,
        names=names,
        mean_importance=mean_importance,
        ranking=ranking,
        distributions=component_distributions(explanations, positive_class),
        n_explanations=len(explanations),
    )
    logger.info(f"전역 설명 [{result.method}] n={len(explanations)}, 상위: {result.top(top_k)}")
    return result


def local_explanation_table(explanation: Explanation, per_modality: int = 2) -> pd.DataFrame:
    """
    단일 인스턴스 설명표 (모달리티별 상위 컴포넌트)

    Returns:
        pd.DataFrame: modality, component, weight, value, kept
    """
    rows = []
    for name, weight, kept in zip(explanation.names, explanation.weights, explanation.binary):
        rows.append({
            "modality": name.split(".", 1)[0],
            "component": name,
            "weight": float(weight),
            "value": explanation.component_values.get(name, np.nan),
            "kept": int(kept),
        })
    table = pd.DataFrame(rows, columns=["modality", "component", "weight", "value", "kept"])
    if table.empty:
        return table
    table = table.sort_values(["modality", "weight"], ascending=[True, False], kind="mergesort")
    return table.groupby("modality", sort=False).head(per_modality).reset_index(drop=True)


def frequent_component_sets(explanations: Sequence[Explanation], min_support: float = ITEMSET_MIN_SUPPORT,
                            max_size: int = ITEMSET_MAX_SIZE) -> pd.DataFrame:
    """
    이진 설명에서 자주 함께 유지되는 컴포넌트 조합

    Returns:
        pd.DataFrame: itemset ("A+B"), size, support (내림차순)
    """
    explanations = list(explanations)
    if not explanations:
        return pd.DataFrame(columns=["itemset", "size", "support"])
    counts: Counter = Counter()
    for e in explanations:
        kept = e.kept
        for size in range(1, min(max_size, len(kept)) + 1):
            for combo in combinations(kept, size):
                counts[combo] += 1

    n = len(explanations)
    rows = [
        {"itemset": "+".join(combo), "size": len(combo), "support": count / n}
        for combo, count in counts.items() if count / n >= min_support
    ]
    table = pd.DataFrame(rows, columns=["itemset", "size", "support"])
    return table.sort_values(["support", "size", "itemset"], ascending=[False, True, True],
                             kind="mergesort").reset_index(drop=True)
