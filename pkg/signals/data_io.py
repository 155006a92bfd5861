"""
데이터셋 입출력 모듈
CSV(샘플당 1행)와 JSON(윈도우 객체 배열) 형식으로 데이터셋을 저장/로드합니다.
"""

import json
import os
from typing import Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

from signals.types import Dataset, Modality, MultimodalWindow, Split
from utils.exceptions import ParseError, SchemaMismatchError
from utils.logger import setup_logger

logger = setup_logger("data_io")

CSV_COLUMNS = ["window_id", "subject_id", "label", "sample_rate_hz", "modality", "idx", "value"]
JSON_FIELDS = ["window_id", "subject_id", "label", "sample_rate_hz", "channels"]
SUPPORTED_FORMATS = ("csv", "json")


def format_float(value: float) -> str:
    """최단 왕복 가능 10진 표현 (float(format_float(x)) == x)"""
    return repr(float(value))


class DatasetIO:
    """데이터셋 CSV/JSON 입출력 클래스"""

    def save(self, dataset: Dataset, path: str, fmt: str) -> str:
        """
        데이터셋 저장

        Args:
            dataset (Dataset): 저장할 데이터셋
            path (str): 파일 경로
            fmt (str): "csv" 또는 "json"

        Returns:
            str: 저장된 파일 경로
        """
        fmt = self._check_format(fmt)
        directory = os.path.dirname(path)
        if directory:
            os.makedirs(directory, exist_ok=True)

        if fmt == "csv":
            self._save_csv(dataset, path)
        else:
            self._save_json(dataset, path)

        logger.info(f"데이터셋 저장 완료: {path} ({len(dataset)}개 윈도우)")
        return path

    def load(self, path: str, fmt: str, split: Split = Split.TRAIN,
             class_names: Optional[Sequence[str]] = None) -> Dataset:
        """
        데이터셋 로드

        Args:
            path (str): 파일 경로
            fmt (str): "csv" 또는 "json"
            split (Split): 분할 표시
            class_names: 클래스 이름 (None이면 라벨에서 "0", "1", ... 생성)

        Returns:
            Dataset: 로드된 데이터셋
        """
        fmt = self._check_format(fmt)
        if fmt == "csv":
            windows = self._load_csv(path)
        else:
            windows = self._load_json(path)

        if class_names is None:
            labels = [w.label for w in windows if w.label is not None]
            n_classes = max(labels) + 1 if labels else 0
            class_names = [str(i) for i in range(n_classes)]

        dataset = Dataset(windows=tuple(windows), split=split, class_names=tuple(class_names))
        logger.info(f"데이터셋 로드 완료: {path} ({len(dataset)}개 윈도우)")
        return dataset

    def _check_format(self, fmt: str) -> str:
        fmt = fmt.lower()
        if fmt not in SUPPORTED_FORMATS:
            raise SchemaMismatchError(f"지원하지 않는 형식: {fmt} (csv/json)")
        return fmt

    # ------------------------------------------------------------------
    # CSV
    # ------------------------------------------------------------------

    def _save_csv(self, dataset: Dataset, path: str):
        """CSV 저장 (윈도우 -> 모달리티 -> idx 순서)"""
        rows: Dict[str, List[str]] = {column: [] for column in CSV_COLUMNS}
        for window in dataset.windows:
            label = "" if window.label is None else str(window.label)
            rate = format_float(window.sample_rate_hz)
            for modality in window.modalities:
                values = window.channel(modality)
                n = len(values)
                rows["window_id"].extend([window.window_id] * n)
                rows["subject_id"].extend([window.subject_id] * n)
                rows["label"].extend([label] * n)
                rows["sample_rate_hz"].extend([rate] * n)
                rows["modality"].extend([modality.value] * n)
                rows["idx"].extend(str(i) for i in range(n))
                rows["value"].extend(format_float(v) for v in values)

        frame = pd.DataFrame(rows, columns=CSV_COLUMNS, dtype=str)
        frame.to_csv(path, index=False, lineterminator="\n")

    def _load_csv(self, path: str) -> List[MultimodalWindow]:
        """CSV 로드 (행 번호는 헤더를 1행으로 센 파일 기준)"""
        try:
            frame = pd.read_csv(path, dtype=str, keep_default_na=False)
        except pd.errors.EmptyDataError:
            raise SchemaMismatchError(f"빈 CSV 파일: {path}")

        if list(frame.columns) != CSV_COLUMNS:
            raise SchemaMismatchError(f"CSV 헤더 불일치: {list(frame.columns)} (기대값: {CSV_COLUMNS})")
        if frame.empty:
            return []

        values = self._parse_column(frame, "value", float)
        indices = self._parse_column(frame, "idx", int)
        rates = self._parse_column(frame, "sample_rate_hz", float)
        labels = [None if s == "" else self._parse_cell(s, int, row, "label")
                  for row, s in enumerate(frame["label"], start=2)]
        modalities = []
        for row, tag in enumerate(frame["modality"], start=2):
            try:
                modalities.append(Modality.parse(tag))
            except SchemaMismatchError as e:
                raise ParseError(str(e), row=row, column="modality")

        frame = frame.assign(_value=values, _idx=indices, _rate=rates, _label=labels,
                             _modality=modalities, _row=np.arange(len(frame)) + 2)

        windows = []
        for window_id, group in frame.groupby("window_id", sort=False):
            first_row = int(group["_row"].iloc[0])
            for column in ("subject_id", "_rate", "_label"):
                if group[column].nunique(dropna=False) != 1:
                    raise ParseError(f"윈도우 {window_id}의 {column.lstrip('_')} 값이 행마다 다릅니다",
                                     row=first_row, column=column.lstrip("_"))

            channels = {}
            for modality, part in group.groupby("_modality", sort=False):
                part = part.sort_values("_idx", kind="mergesort")
                expected = np.arange(len(part))
                if not np.array_equal(part["_idx"].to_numpy(), expected):
                    raise ParseError(f"윈도우 {window_id}/{modality.value}의 idx가 0..{len(part) - 1}이 아닙니다",
                                     row=int(part["_row"].iloc[0]), column="idx")
                channels[modality] = part["_value"].to_numpy(dtype=np.float64)

            windows.append(MultimodalWindow(
                channels=channels,
                sample_rate_hz=float(group["_rate"].iloc[0]),
                subject_id=str(group["subject_id"].iloc[0]),
                window_id=str(window_id),
                label=group["_label"].iloc[0],
            ))
        return windows

    def _parse_column(self, frame: pd.DataFrame, column: str, caster) -> list:
        return [self._parse_cell(s, caster, row, column) for row, s in enumerate(frame[column], start=2)]

    def _parse_cell(self, text: str, caster, row: int, column: str):
        try:
            return caster(text)
        except (TypeError, ValueError):
            raise ParseError(f"숫자로 변환할 수 없는 값 {text!r}", row=row, column=column)

    # ------------------------------------------------------------------
    # JSON
    # ------------------------------------------------------------------

    def _save_json(self, dataset: Dataset, path: str):
        """JSON 저장 (필드 순서 고정, float은 최단 왕복 표현)"""
        payload = []
        for window in dataset.windows:
            payload.append({
                "window_id": window.window_id,
                "subject_id": window.subject_id,
                "label": window.label,
                "sample_rate_hz": window.sample_rate_hz,
                "channels": {m.value: [float(v) for v in window.channel(m)] for m in window.modalities},
            })
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            json.dump(payload, f, separators=(",", ":"), allow_nan=False)
            f.write("\n")

    def _load_json(self, path: str) -> List[MultimodalWindow]:
        """JSON 로드 (행 번호는 1부터 센 윈도우 순번, 문법 오류는 파일 줄 번호)"""
        with open(path, "r", encoding="utf-8") as f:
            try:
                payload = json.load(f)
            except json.JSONDecodeError as e:
                raise ParseError(f"JSON 파싱 실패: {e.msg}", row=e.lineno, column=str(e.colno))

        if not isinstance(payload, list):
            raise SchemaMismatchError("JSON 최상위는 윈도우 객체 배열이어야 합니다")

        windows = []
        for position, item in enumerate(payload, start=1):
            if not isinstance(item, dict):
                raise SchemaMismatchError(f"{position}번째 항목이 객체가 아닙니다")
            missing = [k for k in JSON_FIELDS if k not in item]
            if missing:
                raise SchemaMismatchError(f"{position}번째 윈도우에 필드가 없습니다: {missing}")
            if not isinstance(item["channels"], dict):
                raise SchemaMismatchError(f"{position}번째 윈도우의 channels가 객체가 아닙니다")

            channels = {}
            for tag, samples in item["channels"].items():
                try:
                    channels[Modality.parse(tag)] = np.array(samples, dtype=np.float64)
                except (TypeError, ValueError) as e:
                    raise ParseError(f"샘플 변환 실패: {e}", row=position, column=f"channels.{tag}")

            label = item["label"]
            windows.append(MultimodalWindow(
                channels=channels,
                sample_rate_hz=float(item["sample_rate_hz"]),
                subject_id=str(item["subject_id"]),
                window_id=str(item["window_id"]),
                label=None if label is None else int(label),
            ))
        return windows


# 전역 데이터셋 입출력 인스턴스
dataset_io = DatasetIO()

def save_dataset(dataset: Dataset, path: str, fmt: str = "csv") -> str:
    """
    편의 함수: 데이터셋 저장

    Args:
        dataset (Dataset): 데이터셋
        path (str): 파일 경로
        fmt (str): "csv" 또는 "json"

    Returns:
        str: 저장 경로
    """
    return dataset_io.save(dataset, path, fmt)

def load_dataset(path: str, fmt: str = "csv", split: Split = Split.TRAIN,
                 class_names: Optional[Sequence[str]] = None) -> Dataset:
    """
    편의 함수: 데이터셋 로드

    Args:
        path (str): 파일 경로
        fmt (str): "csv" 또는 "json"
        split (Split): 분할 표시
        class_names: 클래스 이름

    Returns:
        Dataset: 데이터셋
    """
    return dataset_io.load(path, fmt, split, class_names)
