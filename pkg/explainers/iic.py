"""
IIC 설명 모듈
컴포넌트 가중치 w를 인스턴스별로 최적화하여 출력 저하를 제한한 채 불필요한 컴포넌트를 제거합니다.

    L_IIC = mean(w) + p * max(0, degradation - max_deg)
"""

from dataclasses import asdict, dataclass
from typing import Dict, Optional, Tuple

import numpy as np
from joblib import Parallel, delayed

from config import (
    DEFAULT_SEED,
    IIC_BETAS,
    IIC_DEGRADATION_REDUCTION,
    IIC_EPOCHS,
    IIC_EPS,
    IIC_LR,
    IIC_MAX_DEG,
    IIC_OUTPUT_REPRESENTATION,
    IIC_PENALTY,
    IIC_THRESHOLD,
)
from decomposition.components import ComponentSet
from decomposition.decomposer import ComponentDecomposer, decomposer as default_decomposer
from explainers.explanation import Explanation, ExplanationBatch, threshold_binary
from models.inference import ClassifierModel, degradation_value, output_distance
from models.optim import AdamState, adam_step
from signals.types import BaselineSet, Dataset, MultimodalWindow
from utils.exceptions import InvalidConfigError, NonFiniteLossError
from utils.logger import log_error, log_explanation, setup_logger

logger = setup_logger("iic")


@dataclass(frozen=True)
class IICConfig:
    """IIC 최적화 설정"""
    epochs: int = IIC_EPOCHS
    lr: float = IIC_LR
    max_deg: float = IIC_MAX_DEG
    penalty: float = IIC_PENALTY
    threshold: float = IIC_THRESHOLD
    betas: Tuple[float, float] = IIC_BETAS
    eps: float = IIC_EPS
    reduction: str = IIC_DEGRADATION_REDUCTION
    representation: str = IIC_OUTPUT_REPRESENTATION
    seed: int = DEFAULT_SEED

    def __post_init__(self):
        object.__setattr__(self, "betas", tuple(self.betas))
        if self.epochs < 0:
            raise InvalidConfigError(f"epochs는 0 이상이어야 합니다: {self.epochs}")
        if self.lr <= 0:
            raise InvalidConfigError(f"lr은 양수여야 합니다: {self.lr}")
        if self.max_deg < 0:
            raise InvalidConfigError(f"max_deg는 0 이상이어야 합니다: {self.max_deg}")
        if self.penalty <= 0:
            raise InvalidConfigError(f"penalty는 양수여야 합니다: {self.penalty}")
        if not 0.0 <= self.threshold < 1.0:
            raise InvalidConfigError(f"threshold는 [0, 1) 범위여야 합니다: {self.threshold}")
        if self.reduction not in ("mean", "max"):
            raise InvalidConfigError(f"reduction은 mean/max 중 하나여야 합니다: {self.reduction}")
        if self.representation not in ("probs", "logits"):
            raise InvalidConfigError(f"representation은 probs/logits 중 하나여야 합니다: {self.representation}")

    def to_dict(self) -> Dict:
        payload = asdict(self)
        payload["betas"] = list(self.betas)
        return payload


def iic_loss(w: np.ndarray, degradation: float, cfg: IICConfig) -> Tuple[float, float, float]:
    """
    IIC 손실

    Returns:
        (L_weights, L_degradation, L_IIC)
    """
    l_weights = float(np.mean(w))
    l_degradation = cfg.penalty * max(0.0, degradation - cfg.max_deg)
    return l_weights, l_degradation, l_weights + l_degradation


class IICExplainer:
    """IIC 인스턴스 설명 클래스"""

    def __init__(self, model: ClassifierModel, baselines: BaselineSet, cfg: Optional[IICConfig] = None,
                 decomposer: Optional[ComponentDecomposer] = None):
        """
        초기화

        Args:
            model (ClassifierModel): 학습된 분류 모델
            baselines (BaselineSet): 학습 데이터 베이스라인
            cfg (IICConfig): 최적화 설정
            decomposer (ComponentDecomposer): 분해기 (None이면 전역 인스턴스)
        """
        self.model = model
        self.baselines = baselines
        self.cfg = cfg or IICConfig()
        self.decomposer = decomposer or default_decomposer

    def degradation(self, cs: ComponentSet, w, original_output: np.ndarray) -> float:
        """
        가중 재구성 입력과 원본 입력의 출력 차이

        Args:
            cs (ComponentSet): 분해 결과
            w: 가중치
            original_output: 원본 윈도우의 출력 표현 (M(x))

        Returns:
            float: 클래스 축 평균(또는 최대) 절대 차이
        """
        output = self.model.forward_array(self.decomposer.reconstruct_array(cs, w))
        return degradation_value(output, original_output, self.cfg.representation, self.cfg.reduction)

    def loss(self, w, degradation: float) -> Tuple[float, float, float]:
        return iic_loss(np.asarray(w, dtype=np.float64), degradation, self.cfg)

    def explain(self, window: MultimodalWindow) -> Explanation:
        """
        단일 윈도우 설명 (w=1에서 시작, 정해진 에폭 수만큼 Adam + [0,1] 투영)

        Args:
            window (MultimodalWindow): 설명할 윈도우

        Returns:
            Explanation: 최종 가중치, 이진 중요도, 손실 기록
        """
        cfg = self.cfg
        original = self.model.forward(window)
        reference = original.representation(cfg.representation)
        objective = output_distance(reference, cfg.representation, cfg.reduction)

        cs = self.decomposer.decompose(window, self.baselines)
        w = np.ones(cs.d)
        state = AdamState.zeros_like(w)
        weights_grad = np.full(cs.d, 1.0 / cs.d)
        trace = []

        for epoch in range(cfg.epochs):
            x_rec = self.decomposer.reconstruct_array(cs, w)
            deg, g_x = self.model.value_and_input_gradient(x_rec, objective)
            l_weights, l_degradation, total = self.loss(w, deg)
            trace.append((l_weights, l_degradation, deg))
            if not np.isfinite(total) or not np.all(np.isfinite(g_x)):
                raise NonFiniteLossError(f"[{window.window_id}] 에폭 {epoch}에서 손실이 유한하지 않습니다", trace)

            grad = weights_grad.copy()
            if deg > cfg.max_deg:
                grad += cfg.penalty * self.decomposer.weight_jvp(cs, w, g_x)

            w, state = adam_step(w, grad, state, cfg.lr, cfg.betas, cfg.eps)
            w = np.clip(w, 0.0, 1.0)

        final_deg = self.degradation(cs, w, reference)
        l_weights, l_degradation, total = self.loss(w, final_deg)
        if not np.isfinite(total):
            raise NonFiniteLossError(f"[{window.window_id}] 최종 손실이 유한하지 않습니다", trace)
        trace.append((l_weights, l_degradation, final_deg))

        binary = threshold_binary(w, cfg.threshold)
        explanation = Explanation(
            window_id=window.window_id,
            method="iic",
            names=cs.names,
            weights=w,
            binary=binary,
            predicted_class=original.predicted_class,
            label=window.label,
            degradation_final=final_deg,
            loss_trace=trace,
            component_values=dict(zip(cs.names, cs.concept_values())),
            config=cfg.to_dict(),
        )
        log_explanation(logger, window.window_id, "iic", explanation.kept, final_deg)
        return explanation

    def _explain_safe(self, window: MultimodalWindow):
        try:
            return self.explain(window), None
        except Exception as e:
            log_error(logger, e, f"explain {window.window_id}")
            return None, {"window_id": window.window_id, "error": f"{type(e).__name__}: {e}"}

    def batch_explain(self, dataset: Dataset, jobs: int = 1) -> ExplanationBatch:
        """
        데이터셋 전체 설명 (윈도우별 독립 실행, 순서 보존, 실패는 수집)

        Args:
            dataset (Dataset): 설명할 데이터셋
            jobs (int): 병렬 스레드 수

        Returns:
            ExplanationBatch: 설명 목록과 실패 목록
        """
        batch = ExplanationBatch()
        if dataset.is_empty:
            logger.warning("빈 데이터셋: 설명할 윈도우가 없습니다")
            return batch

        if jobs > 1:
            results = Parallel(n_jobs=jobs, prefer="threads")(
                delayed(self._explain_safe)(window) for window in dataset.windows
            )
        else:
            results = [self._explain_safe(window) for window in dataset.windows]

        for explanation, failure in results:
            if explanation is not None:
                batch.explanations.append(explanation)
            else:
                batch.failures.append(failure)

        logger.info(f"IIC 배치 설명 완료: 성공 {len(batch.explanations)}개, 실패 {len(batch.failures)}개")
        return batch


def explain(model: ClassifierModel, window: MultimodalWindow, baselines: BaselineSet,
            cfg: Optional[IICConfig] = None) -> Explanation:
    """편의 함수: 단일 윈도우 IIC 설명"""
    return IICExplainer(model, baselines, cfg).explain(window)

def batch_explain(model: ClassifierModel, dataset: Dataset, baselines: BaselineSet,
                  cfg: Optional[IICConfig] = None, jobs: int = 1) -> ExplanationBatch:
    """편의 함수: 데이터셋 IIC 설명"""
    return IICExplainer(model, baselines, cfg).batch_explain(dataset, jobs)
