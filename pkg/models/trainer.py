"""
모델 학습 모듈
교차 엔트로피 + Adam 학습, 평가 손실 기반 조기 종료, 다중 초기화 중 최적 모델 선택
"""

import copy
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np
import torch
import torch.nn as nn

from models.inference import ClassifierModel
from models.networks import ModelSpec, TrainConfig, WindowClassifier, build_network
from signals.types import Dataset
from utils.exceptions import DivergenceDetectedError, EmptyDatasetError, SchemaMismatchError
from utils.logger import log_training_epoch, setup_logger

logger = setup_logger("trainer")


@dataclass
class TrainingResult:
    """학습 결과"""
    model: ClassifierModel
    history: List[Dict[str, float]] = field(default_factory=list)
    best_epoch: int = 0
    best_eval_loss: float = float("inf")
    seed: int = 0
    restart_losses: List[float] = field(default_factory=list)

    def metrics(self) -> Dict:
        best = self.history[self.best_epoch - 1] if self.history else {}
        return {
            "best_epoch": self.best_epoch,
            "best_eval_loss": self.best_eval_loss,
            "seed": self.seed,
            "restart_losses": list(self.restart_losses),
            "final": dict(best),
        }


def channel_statistics(x: np.ndarray):
    """(n, t, c) 배열의 채널별 평균/표준편차"""
    flat = x.reshape(-1, x.shape[-1])
    return flat.mean(axis=0), flat.std(axis=0)


def _loss_and_accuracy(network: WindowClassifier, x: torch.Tensor, y: torch.Tensor,
                       criterion: nn.Module, batch_size: int):
    network.eval()
    total, correct = 0.0, 0
    for start in range(0, len(x), batch_size):
        logits = network(x[start:start + batch_size]).detach()
        target = y[start:start + batch_size]
        total += float(criterion(logits, target)) * len(target)
        correct += int((logits.argmax(dim=1) == target).sum())
    return total / len(x), correct / len(x)


def fit_network(network: WindowClassifier, x_train: np.ndarray, y_train: np.ndarray,
                x_eval: Optional[np.ndarray], y_eval: Optional[np.ndarray], cfg: TrainConfig,
                tag: str = "model") -> Dict:
    """
    배열 단위 신경망 학습 (입력 표준화 통계 설정 포함)

    평가 손실이 가장 낮았던 에폭의 파라미터로 되돌려 반환합니다.
    평가 배열이 없으면 학습 손실로 선택합니다.

    Args:
        network (WindowClassifier): 초기화된 신경망
        x_train, y_train: (n, t, c) 입력과 라벨
        x_eval, y_eval: 평가 입력과 라벨 (None 또는 빈 배열 허용)
        cfg (TrainConfig): 학습 설정
        tag (str): 로그 식별자

    Returns:
        Dict: {"history", "best_epoch", "best_eval_loss"}
    """
    mean, std = channel_statistics(x_train)
    network.set_input_statistics(mean, std)

    xt = torch.from_numpy(np.ascontiguousarray(x_train, dtype=np.float64))
    yt = torch.from_numpy(np.asarray(y_train, dtype=np.int64))
    has_eval = x_eval is not None and len(x_eval) > 0
    if has_eval:
        xe = torch.from_numpy(np.ascontiguousarray(x_eval, dtype=np.float64))
        ye = torch.from_numpy(np.asarray(y_eval, dtype=np.int64))

    criterion = nn.CrossEntropyLoss()
    optimizer = torch.optim.Adam(network.parameters(), lr=cfg.lr, betas=cfg.betas, eps=cfg.eps)
    generator = torch.Generator().manual_seed(cfg.seed)
    # 드롭아웃은 전역 RNG를 씀
    torch.manual_seed(cfg.seed)

    history: List[Dict[str, float]] = []
    best_loss, best_epoch = float("inf"), 0
    best_state = copy.deepcopy(network.state_dict())
    stale = 0

    for epoch in range(1, cfg.epochs + 1):
        network.train()
        order = torch.randperm(len(xt), generator=generator)
        for start in range(0, len(xt), cfg.batch_size):
            index = order[start:start + cfg.batch_size]
            optimizer.zero_grad()
            loss = criterion(network(xt[index]), yt[index])
            if not torch.isfinite(loss):
                raise DivergenceDetectedError(f"[{tag}] 에폭 {epoch}에서 손실이 발산했습니다 ({float(loss)})")
            loss.backward()
            optimizer.step()

        train_loss, train_acc = _loss_and_accuracy(network, xt, yt, criterion, cfg.batch_size)
        if has_eval:
            eval_loss, eval_acc = _loss_and_accuracy(network, xe, ye, criterion, cfg.batch_size)
        else:
            eval_loss, eval_acc = train_loss, train_acc
        if not np.isfinite(train_loss) or not np.isfinite(eval_loss):
            raise DivergenceDetectedError(f"[{tag}] 에폭 {epoch}에서 손실이 발산했습니다")

        history.append({
            "epoch": epoch,
            "train_loss": train_loss,
            "eval_loss": eval_loss,
            "train_acc": train_acc,
            "eval_acc": eval_acc,
        })
        log_training_epoch(logger, epoch, train_loss, eval_loss, train_acc, eval_acc)

        if eval_loss < best_loss:
            best_loss, best_epoch, stale = eval_loss, epoch, 0
            best_state = copy.deepcopy(network.state_dict())
        else:
            stale += 1
            if cfg.patience and stale >= cfg.patience:
                logger.info(f"[{tag}] 조기 종료: 에폭 {epoch} (최적 에폭 {best_epoch})")
                break

    network.load_state_dict(best_state)
    network.eval()
    return {"history": history, "best_epoch": best_epoch, "best_eval_loss": best_loss}


class ModelTrainer:
    """윈도우 분류 모델 학습 클래스"""

    def train(self, spec: ModelSpec, train_ds: Dataset, eval_ds: Optional[Dataset],
              cfg: TrainConfig) -> TrainingResult:
        """
        단일 초기화 학습

        Args:
            spec (ModelSpec): 모델 구조 (t/채널/클래스 수 포함)
            train_ds (Dataset): 학습 데이터셋
            eval_ds (Dataset): 조기 종료용 평가 데이터셋
            cfg (TrainConfig): 학습 설정

        Returns:
            TrainingResult: 최적 에폭의 모델과 학습 기록
        """
        self._check_inputs(spec, train_ds)
        modalities = train_ds.modalities
        x_train, y_train = train_ds.to_array(modalities), train_ds.labels
        x_eval = y_eval = None
        if eval_ds is not None and not eval_ds.is_empty:
            x_eval, y_eval = eval_ds.to_array(modalities), eval_ds.labels

        network = build_network(spec)
        outcome = fit_network(network, x_train, y_train, x_eval, y_eval, cfg, tag=f"{spec.arch}-seed{spec.seed}")
        model = ClassifierModel(network, modalities, train_ds.class_names)

        last = outcome["history"][outcome["best_epoch"] - 1]
        logger.info(
            f"학습 완료 [{spec.arch}, seed={spec.seed}] - 최적 에폭 {outcome['best_epoch']}, "
            f"eval_loss: {outcome['best_eval_loss']:.4f}, eval_acc: {last['eval_acc']:.3f}"
        )
        return TrainingResult(
            model=model,
            history=outcome["history"],
            best_epoch=outcome["best_epoch"],
            best_eval_loss=outcome["best_eval_loss"],
            seed=spec.seed,
            restart_losses=[outcome["best_eval_loss"]],
        )

    def train_with_restarts(self, spec: ModelSpec, train_ds: Dataset, eval_ds: Optional[Dataset],
                            cfg: TrainConfig) -> TrainingResult:
        """
        여러 초기화로 학습 후 평가 손실이 가장 낮은 모델 선택

        초기화 k는 seed = spec.seed + k 를 사용합니다.
        """
        best: Optional[TrainingResult] = None
        losses = []
        for k in range(cfg.restarts):
            run_spec = ModelSpec(**{**spec.to_dict(), "seed": spec.seed + k})
            run_cfg = TrainConfig(**{**cfg.to_dict(), "seed": cfg.seed + k})
            result = self.train(run_spec, train_ds, eval_ds, run_cfg)
            losses.append(result.best_eval_loss)
            if best is None or result.best_eval_loss < best.best_eval_loss:
                best = result

        best.restart_losses = losses
        if cfg.restarts > 1:
            logger.info(f"{cfg.restarts}회 초기화 중 seed={best.seed} 선택 (eval_loss: {best.best_eval_loss:.4f})")
        return best

    def _check_inputs(self, spec: ModelSpec, train_ds: Dataset):
        if train_ds.is_empty:
            raise EmptyDatasetError("빈 학습 데이터셋으로 학습할 수 없습니다")
        labels = train_ds.labels
        if np.any(labels < 0):
            raise SchemaMismatchError("라벨 없는 학습 윈도우가 있습니다")
        missing = sorted(set(range(spec.num_classes)) - set(labels.tolist()))
        if missing:
            raise SchemaMismatchError(f"학습 분할에 없는 클래스: {missing}")
        if (spec.t, spec.input_channels) != (train_ds.t, len(train_ds.modalities)):
            raise SchemaMismatchError(
                f"모델 입력 ({spec.t}, {spec.input_channels}) != 데이터 ({train_ds.t}, {len(train_ds.modalities)})"
            )


# 전역 학습기 인스턴스
model_trainer = ModelTrainer()

def model_spec_for(dataset: Dataset, arch: str, seed: int = 0, **overrides) -> ModelSpec:
    """
    편의 함수: 데이터셋 형태에 맞는 모델 설정

    Args:
        dataset (Dataset): 학습 데이터셋
        arch (str): fcn / lstm / transformer
        seed (int): 초기화 시드
    """
    return ModelSpec(arch=arch, t=dataset.t, input_channels=len(dataset.modalities),
                     num_classes=len(dataset.class_names), seed=seed, **overrides)

def train(spec: ModelSpec, train_ds: Dataset, eval_ds: Optional[Dataset], cfg: TrainConfig) -> TrainingResult:
    """편의 함수: 다중 초기화 학습"""
    return model_trainer.train_with_restarts(spec, train_ds, eval_ds, cfg)
