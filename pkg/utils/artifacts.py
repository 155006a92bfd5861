"""
산출물 저장 유틸리티
JSON/CSV를 고정된 형식(키 순서, 줄바꿈, 실수 표기)으로 저장하고, 저장 전에 필수 필드를 검사합니다.
"""

import json
import os
from typing import Iterable, Optional, Sequence

import numpy as np
import pandas as pd

from utils.exceptions import SchemaMismatchError


def _ensure_parent(path: str):
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)


def _to_builtin(value):
    """numpy 타입을 JSON 기본 타입으로"""
    if isinstance(value, dict):
        return {str(k): _to_builtin(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_to_builtin(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_to_builtin(v) for v in value.tolist()]
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, np.bool_):
        return bool(value)
    return value


def write_json(path: str, payload, required_keys: Optional[Iterable[str]] = None) -> str:
    """
    JSON 저장

    Args:
        path (str): 저장 경로
        payload: dict 또는 list
        required_keys: payload(dict)에 반드시 있어야 하는 키

    Returns:
        str: 저장 경로
    """
    if required_keys is not None:
        if not isinstance(payload, dict):
            raise SchemaMismatchError(f"{os.path.basename(path)}: 최상위가 객체가 아닙니다")
        missing = [k for k in required_keys if k not in payload]
        if missing:
            raise SchemaMismatchError(f"{os.path.basename(path)}: 필수 필드 없음 {missing}")
    _ensure_parent(path)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        json.dump(_to_builtin(payload), f, indent=1, allow_nan=False)
        f.write("\n")
    return path


def read_json(path: str):
    with open(path, "r", encoding="utf-8") as f:
        return json.load(f)


def write_csv(path: str, table: pd.DataFrame, columns: Sequence[str]) -> str:
    """
    CSV 저장 (열 구성이 정확히 columns와 같아야 함)

    Returns:
        str: 저장 경로
    """
    if list(table.columns) != list(columns):
        raise SchemaMismatchError(
            f"{os.path.basename(path)}: 열 {list(table.columns)} != 기대 {list(columns)}"
        )
    _ensure_parent(path)
    table.to_csv(path, index=False, lineterminator="\n")
    return path


def write_text(path: str, content: str) -> str:
    _ensure_parent(path)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(content)
    return path

