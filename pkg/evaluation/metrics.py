"""
분류 성능 지표 계산 모듈
"""

from typing import Dict, Optional

import numpy as np
import pandas as pd
from sklearn.metrics import accuracy_score, confusion_matrix, f1_score

from signals.types import Dataset
from utils.exceptions import EmptyEvalError
from utils.logger import setup_logger

logger = setup_logger("metrics")


class ClassificationMetrics:
    """분류 성능 지표 계산 클래스"""

    def calculate_all_metrics(self, y_true, y_pred, num_classes: int) -> Dict:
        """
        모든 분류 지표 계산

        Args:
            y_true: 실제 라벨
            y_pred: 예측 라벨
            num_classes (int): 클래스 수

        Returns:
            Dict: accuracy, f1, confusion_matrix, n
        """
        y_true = np.asarray(y_true, dtype=np.int64)
        y_pred = np.asarray(y_pred, dtype=np.int64)
        if len(y_true) == 0:
            raise EmptyEvalError("빈 평가 세트로 지표를 계산할 수 없습니다")

        metrics = {"n": int(len(y_true))}
        metrics.update(self._calculate_accuracy_metrics(y_true, y_pred, num_classes))
        return metrics

    def _calculate_accuracy_metrics(self, y_true: np.ndarray, y_pred: np.ndarray, num_classes: int) -> Dict:
        """정확도와 F1 (이진은 양성 클래스 기준, 다중 클래스는 macro 평균)"""
        labels = list(range(num_classes))
        if num_classes == 2:
            f1 = f1_score(y_true, y_pred, labels=labels, pos_label=1, average="binary", zero_division=0)
        else:
            f1 = f1_score(y_true, y_pred, labels=labels, average="macro", zero_division=0)
        return {
            "accuracy": float(accuracy_score(y_true, y_pred)),
            "f1": float(f1),
            "confusion_matrix": confusion_matrix(y_true, y_pred, labels=labels).tolist(),
        }

    def evaluate(self, model_like, eval_ds: Dataset) -> Dict:
        """
        모델(또는 predict(dataset)을 가진 객체) 평가

        Args:
            model_like: predict(dataset) -> 라벨 배열
            eval_ds (Dataset): 라벨 있는 평가 데이터셋

        Returns:
            Dict: 분류 지표
        """
        if eval_ds.is_empty:
            raise EmptyEvalError("빈 평가 세트로 지표를 계산할 수 없습니다")
        labels = eval_ds.labels
        if np.any(labels < 0):
            raise EmptyEvalError("라벨 없는 평가 윈도우가 있습니다")
        metrics = self.calculate_all_metrics(labels, model_like.predict(eval_ds), len(eval_ds.class_names))
        logger.info(f"분류 지표 - accuracy: {metrics['accuracy']:.3f}, f1: {metrics['f1']:.3f} (n={metrics['n']})")
        return metrics

    def compare_methods(self, results: Dict[str, Dict], reference: Optional[str] = None) -> pd.DataFrame:
        """
        방법별 지표 비교표

        Args:
            results: {방법: 지표 dict}
            reference (str): 차이를 계산할 기준 방법

        Returns:
            pd.DataFrame: method, accuracy, f1 (+ 기준 대비 차이)
        """
        rows = [{"method": name, "accuracy": m["accuracy"], "f1": m["f1"]} for name, m in results.items()]
        table = pd.DataFrame(rows, columns=["method", "accuracy", "f1"])
        if reference is not None and reference in results:
            table["accuracy_delta"] = table["accuracy"] - results[reference]["accuracy"]
        return table


# 전역 분류 지표 계산기 인스턴스
classification_metrics_calculator = ClassificationMetrics()

def classification_metrics(model_like, eval_ds: Dataset) -> Dict:
    """
    편의 함수: 분류 지표 계산

    Args:
        model_like: predict(dataset)을 제공하는 모델
        eval_ds (Dataset): 평가 데이터셋

    Returns:
        Dict: accuracy, f1, confusion_matrix
    """
    return classification_metrics_calculator.evaluate(model_like, eval_ds)
