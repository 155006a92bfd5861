"""
툴킷 예외 정의

모든 예외는 IICToolkitError를 상속하며, 동시에 대응되는 내장 예외
(ValueError 등)도 상속하므로 어느 쪽으로든 잡을 수 있습니다.
"""

from typing import List, Optional, Tuple


class IICToolkitError(Exception):
    """툴킷 공통 기반 예외"""


# -----------------------------------------------------------------------------
# 데이터 / 스키마
# -----------------------------------------------------------------------------

class EmptyDatasetError(IICToolkitError, ValueError):
    """윈도우가 하나도 없는 데이터셋"""


class MissingModalityError(IICToolkitError, KeyError):
    """필요한 모달리티가 없음"""

    def __str__(self) -> str:
        return str(self.args[0]) if self.args else ""


class LengthMismatchError(IICToolkitError, ValueError):
    """샘플 벡터 길이 불일치"""


class SchemaMismatchError(IICToolkitError, ValueError):
    """파일 스키마(헤더/필드) 불일치"""


class ParseError(IICToolkitError, ValueError):
    """
    데이터 파일 파싱 실패 (행/열 위치 포함)

    row는 항상 1부터 셉니다. CSV는 헤더를 1행으로 센 파일 줄 번호,
    JSON은 배열 안의 윈도우 순번입니다.
    """

    def __init__(self, message: str, row: Optional[int] = None, column: Optional[str] = None):
        location = []
        if row is not None:
            location.append(f"row {row}")
        if column is not None:
            location.append(f"column '{column}'")
        full = f"{message} ({', '.join(location)})" if location else message
        super().__init__(full)
        self.row = row
        self.column = column


class InvalidWindowError(IICToolkitError, ValueError):
    """윈도우 불변식 위반 (길이, NaN/Inf, 샘플링 주파수)"""


# -----------------------------------------------------------------------------
# 분해 / 재구성
# -----------------------------------------------------------------------------

class NonPositiveHeartRateError(IICToolkitError, ValueError):
    """HR 샘플 또는 HR 베이스라인이 0 이하"""


class WeightOutOfRangeError(IICToolkitError, ValueError):
    """가중치가 [0, 1] 범위를 벗어남"""


class DimensionMismatchError(IICToolkitError, ValueError):
    """가중치/그래디언트 차원 불일치"""


# -----------------------------------------------------------------------------
# 모델
# -----------------------------------------------------------------------------

class ShapeMismatchError(IICToolkitError, ValueError):
    """모델 입력 형태 불일치"""


class DivergenceDetectedError(IICToolkitError, RuntimeError):
    """학습 손실이 NaN/Inf로 발산"""


# -----------------------------------------------------------------------------
# 설명 / 평가
# -----------------------------------------------------------------------------

class NonFiniteLossError(IICToolkitError, RuntimeError):
    """IIC 최적화 중 손실이 유한하지 않음 (지금까지의 trace 포함)"""

    def __init__(self, message: str, trace: Optional[List[Tuple[float, float, float]]] = None):
        super().__init__(message)
        self.trace = list(trace or [])


class TooManyFeaturesError(IICToolkitError, ValueError):
    """정확한 Shapley 열거 한계 초과"""


class EmptyEvalError(IICToolkitError, ValueError):
    """평가 세트가 비어 있음"""


class KTooLargeError(IICToolkitError, ValueError):
    """k가 컴포넌트/특성 수보다 큼"""


class InvalidConfigError(IICToolkitError, ValueError):
    """설정값 불변식 위반"""


class MissingInputError(IICToolkitError, FileNotFoundError):
    """상위 단계 산출물이 없음"""


class SingularFeaturesWarning(UserWarning):
    """분산이 0인 개념 특성 (계수를 0으로 고정)"""
