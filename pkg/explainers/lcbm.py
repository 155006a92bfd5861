"""
LCBM (선형 개념 병목 모델) 모듈
컴포넌트 스칼라 요약값(개념)을 표준화한 뒤 L2 로지스틱 회귀로 분류합니다.
설명은 계수 기반 전역 중요도뿐입니다.
"""

import os
import warnings
from typing import Dict, List, Optional, Tuple

import joblib
import numpy as np
from sklearn.linear_model import LogisticRegression
from sklearn.preprocessing import StandardScaler

from config import LCBM_L2, LCBM_MAX_ITER, SUFFICIENCY_TAU
from decomposition.decomposer import ComponentDecomposer, decomposer as default_decomposer
from explainers.concepts import concept_matrix, normalize_importances
from explainers.explanation import Explanation, ExplanationBatch, threshold_binary
from signals.types import BaselineSet, Dataset
from utils.exceptions import EmptyDatasetError, MissingInputError, SingularFeaturesWarning
from utils.logger import setup_logger

logger = setup_logger("lcbm")


class LCBMModel:
    """선형 개념 병목 분류기"""

    def __init__(self, l2: float = LCBM_L2, max_iter: int = LCBM_MAX_ITER,
                 decomposer: Optional[ComponentDecomposer] = None):
        self.l2 = l2
        self.max_iter = max_iter
        self.decomposer = decomposer or default_decomposer
        self.scaler: Optional[StandardScaler] = None
        self.classifier: Optional[LogisticRegression] = None
        self.baselines: Optional[BaselineSet] = None
        self.feature_names: List[str] = []
        self.class_names: Tuple[str, ...] = ()
        self.active: Optional[np.ndarray] = None
        self.train_means: Optional[np.ndarray] = None
        self.is_trained = False

    # ------------------------------------------------------------------
    # 학습 / 예측
    # ------------------------------------------------------------------

    def features(self, dataset: Dataset) -> np.ndarray:
        """데이터셋 개념 행렬 (n, d)"""
        matrix, _ = concept_matrix(dataset, self.baselines, self.decomposer)
        return matrix

    def fit(self, train_ds: Dataset, baselines: BaselineSet) -> "LCBMModel":
        """
        LCBM 학습

        Args:
            train_ds (Dataset): 학습 데이터셋
            baselines (BaselineSet): 분해용 베이스라인

        Returns:
            LCBMModel: 학습된 모델 (self)
        """
        if train_ds.is_empty:
            raise EmptyDatasetError("빈 학습 데이터셋으로 LCBM을 학습할 수 없습니다")
        self.baselines = baselines
        x, self.feature_names = concept_matrix(train_ds, baselines, self.decomposer)
        self.fit_matrix(x, train_ds.labels, train_ds.class_names)
        return self

    def fit_matrix(self, x: np.ndarray, y: np.ndarray, class_names) -> "LCBMModel":
        """개념 행렬에서 직접 학습 (분산 0 개념은 계수 0으로 고정)"""
        x = np.asarray(x, dtype=np.float64)
        if not self.feature_names:
            self.feature_names = [f"c{i}" for i in range(x.shape[1])]
        self.class_names = tuple(class_names)
        self.train_means = x.mean(axis=0)

        self.active = x.std(axis=0) > 0
        if not np.all(self.active):
            singular = [n for n, a in zip(self.feature_names, self.active) if not a]
            warnings.warn(f"분산이 0인 개념 (계수 0으로 고정): {singular}", SingularFeaturesWarning)
            logger.warning(f"분산이 0인 개념: {singular}")

        self.scaler = StandardScaler().fit(x)
        self.classifier = LogisticRegression(C=1.0 / self.l2, max_iter=self.max_iter)
        self.classifier.fit(self._transform(x), y)
        self.is_trained = True

        accuracy = float(np.mean(self.classifier.predict(self._transform(x)) == y))
        logger.info(f"LCBM 학습 완료 - 개념 {x.shape[1]}개, 학습 정확도: {accuracy:.3f}")
        return self

    def _transform(self, x: np.ndarray) -> np.ndarray:
        z = self.scaler.transform(np.asarray(x, dtype=np.float64))
        return np.where(self.active, z, 0.0)

    def decision_function(self, x: np.ndarray) -> np.ndarray:
        """표준화 개념의 아핀 함수 값"""
        return self.classifier.decision_function(self._transform(x))

    def predict_proba_features(self, x: np.ndarray) -> np.ndarray:
        return self.classifier.predict_proba(self._transform(x))

    def predict_features(self, x: np.ndarray) -> np.ndarray:
        return np.argmax(self.predict_proba_features(x), axis=1).astype(np.int64)

    def predict(self, dataset: Dataset) -> np.ndarray:
        return self.predict_features(self.features(dataset))

    # ------------------------------------------------------------------
    # 설명
    # ------------------------------------------------------------------

    def global_importances(self) -> Tuple[List[str], np.ndarray]:
        """
        전역 중요도 |coef_i| * std_i (원시 척도 계수 기준, 합 1로 정규화)

        표준화 계수의 절대값과 같고, 다중 클래스는 클래스 축으로 합산합니다.
        """
        coef = np.abs(self.classifier.coef_).sum(axis=0)
        coef = np.where(self.active, coef, 0.0)
        return list(self.feature_names), normalize_importances(coef)

    def explain_dataset(self, dataset: Dataset, threshold: float = SUFFICIENCY_TAU["lcbm"]) -> ExplanationBatch:
        """
        윈도우별 설명 레코드 (모든 윈도우가 같은 전역 중요도를 공유)
        """
        batch = ExplanationBatch()
        if dataset.is_empty:
            return batch
        names, importances = self.global_importances()
        x = self.features(dataset)
        predictions = self.predict_features(x)
        binary = threshold_binary(importances, threshold)
        for window, row, predicted in zip(dataset.windows, x, predictions):
            batch.explanations.append(Explanation(
                window_id=window.window_id,
                method="lcbm",
                names=names,
                weights=importances,
                binary=binary,
                predicted_class=int(predicted),
                label=window.label,
                component_values=dict(zip(names, row)),
                config={"l2": self.l2, "threshold": threshold},
            ))
        logger.info(f"LCBM 설명 완료: {len(batch)}개 윈도우")
        return batch

    # ------------------------------------------------------------------
    # 저장 / 로드
    # ------------------------------------------------------------------

    def save_model(self, filepath: str) -> str:
        """모델 저장 (joblib)"""
        directory = os.path.dirname(filepath)
        if directory:
            os.makedirs(directory, exist_ok=True)
        model_data = {
            "scaler": self.scaler,
            "classifier": self.classifier,
            "baselines": None if self.baselines is None else self.baselines.to_dict(),
            "feature_names": self.feature_names,
            "class_names": list(self.class_names),
            "active": self.active,
            "train_means": self.train_means,
            "parameters": {"l2": self.l2, "max_iter": self.max_iter},
        }
        joblib.dump(model_data, filepath)
        logger.info(f"LCBM 저장 완료: {filepath}")
        return filepath

    @classmethod
    def load_model(cls, filepath: str) -> "LCBMModel":
        """모델 로드"""
        if not os.path.exists(filepath):
            raise MissingInputError(f"LCBM 파일을 찾을 수 없음: {filepath}")
        model_data = joblib.load(filepath)
        model = cls(**model_data["parameters"])
        model.scaler = model_data["scaler"]
        model.classifier = model_data["classifier"]
        baselines = model_data["baselines"]
        model.baselines = None if baselines is None else BaselineSet.from_dict(baselines)
        model.feature_names = list(model_data["feature_names"])
        model.class_names = tuple(model_data["class_names"])
        model.active = model_data["active"]
        model.train_means = model_data["train_means"]
        model.is_trained = True
        logger.info(f"LCBM 로드 완료: {filepath}")
        return model

    def summary(self) -> Dict:
        names, importances = self.global_importances()
        return {"method": "lcbm", "importances": dict(zip(names, importances.tolist()))}


def lcbm_fit(train_ds: Dataset, baselines: BaselineSet, l2: float = LCBM_L2) -> LCBMModel:
    """편의 함수: LCBM 학습"""
    return LCBMModel(l2=l2).fit(train_ds, baselines)
