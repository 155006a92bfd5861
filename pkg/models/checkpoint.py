"""
모델 체크포인트 모듈
모델 설정 + 평탄화된 float64 파라미터를 버전 있는 JSON("ckpt_v1")으로 저장/로드합니다.
"""

import json
import os
from typing import Dict, Optional, Tuple

import numpy as np
import torch

from config import CHECKPOINT_FORMAT
from models.inference import ClassifierModel
from models.networks import ModelSpec, build_network
from signals.types import Modality
from utils.exceptions import MissingInputError, SchemaMismatchError
from utils.logger import setup_logger

logger = setup_logger("checkpoint")


def checkpoint_payload(model: ClassifierModel, metadata: Optional[Dict] = None) -> Dict:
    """체크포인트 JSON 구조 생성"""
    parameters = {}
    for name, tensor in model.network.state_dict().items():
        array = tensor.detach().cpu().numpy().astype(np.float64)
        parameters[name] = {
            "shape": list(array.shape),
            "values": [float(v) for v in array.reshape(-1)],
        }
    return {
        "format": CHECKPOINT_FORMAT,
        "spec": model.spec.to_dict(),
        "seed": model.spec.seed,
        "modalities": [m.value for m in model.modalities],
        "class_names": list(model.class_names),
        "parameters": parameters,
        "metadata": metadata or {},
    }


def save_checkpoint(model: ClassifierModel, path: str, metadata: Optional[Dict] = None) -> str:
    """
    체크포인트 저장

    Args:
        model (ClassifierModel): 학습된 모델
        path (str): 저장 경로
        metadata (Dict): 함께 저장할 부가 정보 (베이스라인, 학습 지표 등)

    Returns:
        str: 저장 경로
    """
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        json.dump(checkpoint_payload(model, metadata), f, separators=(",", ":"), allow_nan=False)
        f.write("\n")
    logger.info(f"체크포인트 저장 완료: {path}")
    return path


def load_checkpoint(path: str) -> Tuple[ClassifierModel, Dict]:
    """
    체크포인트 로드

    Args:
        path (str): 체크포인트 경로

    Returns:
        (모델, 메타데이터)
    """
    if not os.path.exists(path):
        raise MissingInputError(f"체크포인트 파일을 찾을 수 없음: {path}")
    with open(path, "r", encoding="utf-8") as f:
        payload = json.load(f)

    if payload.get("format") != CHECKPOINT_FORMAT:
        raise SchemaMismatchError(f"지원하지 않는 체크포인트 형식: {payload.get('format')}")
    for key in ("spec", "modalities", "class_names", "parameters"):
        if key not in payload:
            raise SchemaMismatchError(f"체크포인트에 {key} 필드가 없습니다")

    spec = ModelSpec(**payload["spec"])
    network = build_network(spec)
    state = {}
    for name, entry in payload["parameters"].items():
        values = np.array(entry["values"], dtype=np.float64).reshape(entry["shape"])
        state[name] = torch.from_numpy(values)
    network.load_state_dict(state)
    network.eval()

    model = ClassifierModel(network, [Modality.parse(m) for m in payload["modalities"]], payload["class_names"])
    logger.info(f"체크포인트 로드 완료: {path} ({spec.arch})")
    return model, payload.get("metadata", {})
