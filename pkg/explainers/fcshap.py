"""
FCSHAP 모듈
모달리티별 통계 특성(mean/min/max/std) 위의 완전연결 신경망과 정확한 Shapley 설명
"""

from typing import List, Optional, Tuple

import numpy as np
from joblib import Parallel, delayed

from config import FCSHAP_EPOCHS, FCSHAP_HIDDEN_SIZE, FCSHAP_LR, SUFFICIENCY_TAU, TRAIN_BATCH_SIZE, TRAIN_PATIENCE
from explainers.concepts import normalize_importances, stat_feature_matrix, stat_features
from explainers.explanation import Explanation, ExplanationBatch, threshold_binary
from explainers.shapley import exact_shapley
from models.checkpoint import load_checkpoint, save_checkpoint
from models.inference import ClassifierModel
from models.networks import ModelSpec, TrainConfig, build_network
from models.trainer import fit_network
from signals.types import Dataset, Modality, MultimodalWindow
from utils.exceptions import EmptyDatasetError
from utils.logger import log_error, log_explanation, setup_logger

logger = setup_logger("fcshap")


class FCSHAPModel:
    """통계 특성 FCN 분류기 + Shapley 설명"""

    def __init__(self, hidden_size: int = FCSHAP_HIDDEN_SIZE, epochs: int = FCSHAP_EPOCHS,
                 lr: float = FCSHAP_LR, seed: int = 0):
        self.hidden_size = hidden_size
        self.epochs = epochs
        self.lr = lr
        self.seed = seed
        self.model: Optional[ClassifierModel] = None
        self.modalities: Tuple[Modality, ...] = ()
        self.feature_names: List[str] = []
        self.train_means: Optional[np.ndarray] = None
        self.history: List = []

    # ------------------------------------------------------------------
    # 학습 / 예측
    # ------------------------------------------------------------------

    def features(self, dataset: Dataset) -> np.ndarray:
        matrix, _ = stat_feature_matrix(dataset, self.modalities)
        return matrix

    def fit(self, train_ds: Dataset, eval_ds: Optional[Dataset] = None) -> "FCSHAPModel":
        """
        FCN 학습 (특성은 채널 축에 놓여 신경망 내부에서 특성별로 표준화됨)

        Args:
            train_ds (Dataset): 학습 데이터셋
            eval_ds (Dataset): 조기 종료용 평가 데이터셋

        Returns:
            FCSHAPModel: 학습된 모델 (self)
        """
        if train_ds.is_empty:
            raise EmptyDatasetError("빈 학습 데이터셋으로 FCSHAP을 학습할 수 없습니다")
        self.modalities = train_ds.modalities
        x_train, self.feature_names = stat_feature_matrix(train_ds, self.modalities)
        self.train_means = x_train.mean(axis=0)

        x_eval = y_eval = None
        if eval_ds is not None and not eval_ds.is_empty:
            x_eval, y_eval = self.features(eval_ds)[:, None, :], eval_ds.labels

        spec = ModelSpec(arch="fcn", t=1, input_channels=len(self.feature_names),
                         num_classes=len(train_ds.class_names), hidden_size=self.hidden_size, seed=self.seed)
        cfg = TrainConfig(lr=self.lr, epochs=self.epochs, batch_size=TRAIN_BATCH_SIZE,
                          patience=TRAIN_PATIENCE, seed=self.seed)
        network = build_network(spec)
        outcome = fit_network(network, x_train[:, None, :], train_ds.labels, x_eval, y_eval, cfg, tag="fcshap")
        self.history = outcome["history"]
        self.model = ClassifierModel(network, (), train_ds.class_names)

        best = self.history[outcome["best_epoch"] - 1]
        logger.info(f"FCSHAP 학습 완료 - 특성 {len(self.feature_names)}개, eval_acc: {best['eval_acc']:.3f}")
        return self

    def predict_proba_features(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        return self.model.predict_proba_batch(x[:, None, :])

    def predict_features(self, x: np.ndarray) -> np.ndarray:
        return np.argmax(self.predict_proba_features(x), axis=1).astype(np.int64)

    def predict(self, dataset: Dataset) -> np.ndarray:
        return self.predict_features(self.features(dataset))

    # ------------------------------------------------------------------
    # 설명
    # ------------------------------------------------------------------

    def explain(self, window: MultimodalWindow, threshold: float = SUFFICIENCY_TAU["fcshap"]) -> Explanation:
        """
        단일 윈도우 Shapley 설명 (값 함수 = 예측 클래스 확률, 기준 = 학습 평균 특성)

        Returns:
            Explanation: weights는 합 1로 정규화한 |phi|, raw_scores는 phi
        """
        x = stat_features(window, self.modalities)
        predicted = int(np.argmax(self.predict_proba_features(x[None, :])[0]))

        def value_fn(batch: np.ndarray) -> np.ndarray:
            return self.predict_proba_features(batch)[:, predicted]

        attribution = exact_shapley(value_fn, x, self.train_means)
        weights = normalize_importances(attribution.phi)
        explanation = Explanation(
            window_id=window.window_id,
            method="fcshap",
            names=self.feature_names,
            weights=weights,
            binary=threshold_binary(weights, threshold),
            predicted_class=predicted,
            label=window.label,
            raw_scores=attribution.phi,
            component_values=dict(zip(self.feature_names, x)),
            config={"threshold": threshold, "base_value": attribution.base_value,
                    "full_value": attribution.full_value},
        )
        log_explanation(logger, window.window_id, "fcshap", explanation.kept)
        return explanation

    def _explain_safe(self, window: MultimodalWindow, threshold: float):
        try:
            return self.explain(window, threshold), None
        except Exception as e:
            log_error(logger, e, f"explain {window.window_id}")
            return None, {"window_id": window.window_id, "error": f"{type(e).__name__}: {e}"}

    def explain_dataset(self, dataset: Dataset, threshold: float = SUFFICIENCY_TAU["fcshap"],
                        jobs: int = 1) -> ExplanationBatch:
        """데이터셋 전체 설명 (순서 보존, 실패 수집)"""
        batch = ExplanationBatch()
        if jobs > 1:
            results = Parallel(n_jobs=jobs, prefer="threads")(
                delayed(self._explain_safe)(w, threshold) for w in dataset.windows
            )
        else:
            results = [self._explain_safe(w, threshold) for w in dataset.windows]
        for explanation, failure in results:
            if explanation is not None:
                batch.explanations.append(explanation)
            else:
                batch.failures.append(failure)
        logger.info(f"FCSHAP 설명 완료: 성공 {len(batch.explanations)}개, 실패 {len(batch.failures)}개")
        return batch

    # ------------------------------------------------------------------
    # 저장 / 로드
    # ------------------------------------------------------------------

    def save_model(self, filepath: str) -> str:
        metadata = {
            "method": "fcshap",
            "feature_modalities": [m.value for m in self.modalities],
            "feature_names": list(self.feature_names),
            "train_means": [float(v) for v in self.train_means],
            "parameters": {"hidden_size": self.hidden_size, "epochs": self.epochs, "lr": self.lr, "seed": self.seed},
        }
        return save_checkpoint(self.model, filepath, metadata)

    @classmethod
    def load_model(cls, filepath: str) -> "FCSHAPModel":
        model, metadata = load_checkpoint(filepath)
        instance = cls(**metadata["parameters"])
        instance.model = model
        instance.modalities = tuple(Modality.parse(m) for m in metadata["feature_modalities"])
        instance.feature_names = list(metadata["feature_names"])
        instance.train_means = np.array(metadata["train_means"], dtype=np.float64)
        return instance


def fcshap_fit(train_ds: Dataset, eval_ds: Optional[Dataset] = None, seed: int = 0) -> FCSHAPModel:
    """편의 함수: FCSHAP 학습"""
    return FCSHAPModel(seed=seed).fit(train_ds, eval_ds)
