"""
실행 설정 관리 모듈
key=value 형식 설정 파일에서 CLI 플래그 기본값을 읽고, 출력 디렉토리마다 실행 매니페스트를 남깁니다.

설정 파일 예:
    # state 과제 기본값
    task = state
    max_deg = 0.02
    epochs = 100
"""

import os
import time
from dataclasses import asdict, dataclass, field
from datetime import datetime
from typing import Any, Dict, List, Optional

from config import MANIFEST_FILE, TOOL_VERSION
from utils.artifacts import write_json
from utils.exceptions import InvalidConfigError, MissingInputError
from utils.logger import setup_logger

logger = setup_logger("settings_manager")

# 설정 파일에서 허용하는 키와 타입
SETTING_TYPES = {
    "task": str,
    "arch": str,
    "method": str,
    "epochs": int,
    "lr": float,
    "max_deg": float,
    "penalty": float,
    "threshold": float,
    "restarts": int,
    "seed": int,
    "jobs": int,
    "hidden_size": int,
    "n_subjects": int,
    "windows_per_class": int,
    "format": str,
    "split": str,
    "top_k": int,
    "fidelity_k": str,
    "sufficiency_tau": float,
}


class SettingsManager:
    """key=value 설정 파일 관리자"""

    def __init__(self, settings_file: Optional[str] = None):
        self.settings_file = settings_file
        self.settings = self._load_settings() if settings_file else {}

    def _load_settings(self) -> Dict[str, Any]:
        """설정 파일 로드 (없으면 MissingInputError)"""
        if not os.path.exists(self.settings_file):
            raise MissingInputError(f"설정 파일을 찾을 수 없음: {self.settings_file}")

        raw = {}
        with open(self.settings_file, "r", encoding="utf-8") as f:
            for line_no, line in enumerate(f, start=1):
                line = line.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise InvalidConfigError(f"{self.settings_file}:{line_no}: 'key = value' 형식이 아닙니다")
                key, value = (part.strip() for part in line.split("=", 1))
                raw[key.replace("-", "_")] = value.strip("'\"")
        return self._ensure_structure(raw)

    def _ensure_structure(self, settings: Dict[str, str]) -> Dict[str, Any]:
        """알려진 키만 허용하고 타입 변환"""
        unknown = sorted(set(settings) - set(SETTING_TYPES))
        if unknown:
            raise InvalidConfigError(f"알 수 없는 설정 키: {unknown}")
        typed = {}
        for key, value in settings.items():
            try:
                typed[key] = SETTING_TYPES[key](value)
            except ValueError:
                raise InvalidConfigError(f"설정 {key}={value!r}를 {SETTING_TYPES[key].__name__}로 변환할 수 없습니다")
        logger.info(f"설정 파일 로드: {self.settings_file} ({len(typed)}개 키)")
        return typed

    def get_settings(self) -> Dict[str, Any]:
        return dict(self.settings)

    def get(self, key: str, default=None):
        return self.settings.get(key, default)


def load_settings(path: Optional[str]) -> Dict[str, Any]:
    """편의 함수: 설정 파일 로드 (None이면 빈 설정)"""
    return SettingsManager(path).get_settings()


@dataclass
class RunManifest:
    """
    실행 매니페스트 (출력 디렉토리마다 하나)

    Attributes:
        command: 서브커맨드 이름
        config: 유효 설정 스냅샷
        inputs / outputs: 입력/출력 경로
        seed: 시드
        tool_version: 도구 버전
        started_at / wall_clock_seconds: 시작 시각과 소요 시간
    """
    command: str
    config: Dict[str, Any] = field(default_factory=dict)
    inputs: List[str] = field(default_factory=list)
    outputs: List[str] = field(default_factory=list)
    seed: Optional[int] = None
    tool_version: str = TOOL_VERSION
    started_at: str = field(default_factory=lambda: datetime.now().isoformat(timespec="seconds"))
    wall_clock_seconds: float = 0.0
    _t0: float = field(default_factory=time.perf_counter, repr=False)

    def to_dict(self) -> Dict[str, Any]:
        payload = asdict(self)
        payload.pop("_t0")
        return payload

    def write(self, out_dir: str) -> str:
        """매니페스트 저장 (같은 디렉토리의 기존 매니페스트는 덮어씀)"""
        self.wall_clock_seconds = round(time.perf_counter() - self._t0, 3)
        path = os.path.join(out_dir, MANIFEST_FILE)
        self.outputs = sorted(os.path.relpath(p, out_dir) for p in self.outputs)
        return write_json(path, self.to_dict(),
                          required_keys=("command", "config", "inputs", "outputs", "seed", "tool_version"))
