"""
컴포넌트 분해/재구성 모듈
모달리티별 가역 분해 F, 가중 재구성 F^-1(C_x w), 가중치 야코비안-벡터 곱을 제공합니다.
"""

from typing import Dict, Mapping, Tuple, Union

import numpy as np

from config import ACC_OUTLIER_Z, ACC_STD_EPS, RR_FLOOR_MS, TONIC_CUTOFF_HZ, TONIC_FILTER_ORDER, TONIC_MEDIAN_SECONDS
from decomposition.components import AuxState, Component, ComponentSet
from decomposition.tonic_filter import tonic_component
from signals.types import BaselineSet, Modality, MultimodalWindow
from utils.exceptions import DimensionMismatchError, NonPositiveHeartRateError, WeightOutOfRangeError
from utils.logger import setup_logger

logger = setup_logger("decomposer")

MS_PER_MINUTE = 60000.0

ComponentsAndAux = Tuple[Tuple[Component, ...], Dict]


class ComponentDecomposer:
    """모달리티별 가역 분해 클래스"""

    def __init__(self, outlier_z: float = ACC_OUTLIER_Z, rr_floor_ms: float = RR_FLOOR_MS,
                 tonic_median_seconds: float = TONIC_MEDIAN_SECONDS,
                 tonic_cutoff_hz: float = TONIC_CUTOFF_HZ, tonic_order: int = TONIC_FILTER_ORDER):
        """
        초기화

        Args:
            outlier_z (float): ACC 이상 움직임 z-score 임계값
            rr_floor_ms (float): 재구성 RR 하한 (ms)
            tonic_median_seconds (float): EDA 토닉 이동 중앙값 창(초)
            tonic_cutoff_hz (float): EDA 토닉 저역통과 차단 주파수
            tonic_order (int): EDA 토닉 필터 차수
        """
        self.outlier_z = outlier_z
        self.rr_floor_ms = rr_floor_ms
        self.tonic_median_seconds = tonic_median_seconds
        self.tonic_cutoff_hz = tonic_cutoff_hz
        self.tonic_order = tonic_order

    # ------------------------------------------------------------------
    # 모달리티별 분해
    # ------------------------------------------------------------------

    def decompose_acc(self, r, b_acc: float) -> ComponentsAndAux:
        """
        ACC 분해: 평균 오프셋, 이상 움직임, 활동량

        Args:
            r: 합성 가속도
            b_acc (float): ACC 베이스라인

        Returns:
            (컴포넌트, {"acc_signs": ...})
        """
        r = np.asarray(r, dtype=np.float64)
        meanob = float(np.mean(r - b_acc))
        zm = r - b_acc - meanob

        std = float(np.std(zm))
        if std <= ACC_STD_EPS:
            outlier = np.zeros_like(zm)
        else:
            z = np.abs(zm - np.mean(zm)) / std
            outlier = np.where(z > self.outlier_z, zm, 0.0)

        residual = zm - outlier
        components = (
            Component("ACC.MeanOB", Modality.ACC, meanob),
            Component("ACC.Outlier", Modality.ACC, outlier),
            Component("ACC.Activity", Modality.ACC, np.abs(residual)),
        )
        return components, {"acc_signs": np.sign(residual)}

    def decompose_hr(self, x_hr, b_hr: float) -> ComponentsAndAux:
        """
        HR 분해: BPM을 RR 영역으로 옮겨 평균 오프셋과 변동성으로 분리

        Args:
            x_hr: 심박수 (bpm, 모두 양수)
            b_hr (float): HR 베이스라인 (bpm, 양수)

        Returns:
            (컴포넌트, {"hr_signs", "hr_anchor_rr_ms", "rr_floor_ms"})
        """
        x_hr = np.asarray(x_hr, dtype=np.float64)
        if np.any(x_hr <= 0) or b_hr <= 0:
            raise NonPositiveHeartRateError("HR 샘플과 HR 베이스라인은 0보다 커야 합니다")

        rr = MS_PER_MINUTE / x_hr
        m = float(np.mean(rr))
        diffs = np.diff(rr)
        components = (
            Component("HR.MeanOB", Modality.HR, MS_PER_MINUTE / m - b_hr),
            Component("HR.Variability", Modality.HR, np.abs(diffs)),
        )
        aux = {
            "hr_signs": np.sign(diffs),
            "hr_anchor_rr_ms": float(rr[0] - m),
            "rr_floor_ms": self.rr_floor_ms,
        }
        return components, aux

    def decompose_eda(self, x_eda, b_eda: float, sample_rate_hz: float) -> ComponentsAndAux:
        """
        EDA 분해: 토닉 평균 오프셋, 토닉 변화, 위상성(phasic)

        위상성 성분은 입력 - 토닉 잔차이므로 필터 설정과 무관하게 정확히 역변환됩니다.
        """
        x_eda = np.asarray(x_eda, dtype=np.float64)
        tonic = tonic_component(x_eda, sample_rate_hz, self.tonic_median_seconds,
                                self.tonic_cutoff_hz, self.tonic_order)
        tonic_meanob = float(np.mean(tonic - b_eda))
        components = (
            Component("EDA.TonicMeanOB", Modality.EDA, tonic_meanob),
            Component("EDA.TonicChange", Modality.EDA, tonic - b_eda - tonic_meanob),
            Component("EDA.Phasic", Modality.EDA, x_eda - tonic),
        )
        return components, {}

    def decompose_temp(self, x_temp, b_temp: float) -> ComponentsAndAux:
        """TEMP 분해: 평균 오프셋, 상승분, 하강분"""
        x_temp = np.asarray(x_temp, dtype=np.float64)
        meanob = float(np.mean(x_temp - b_temp))
        z = x_temp - b_temp - meanob
        diffs = np.diff(z)
        components = (
            Component("TEMP.MeanOB", Modality.TEMP, meanob),
            Component("TEMP.Rising", Modality.TEMP, np.maximum(diffs, 0.0)),
            Component("TEMP.Falling", Modality.TEMP, np.minimum(diffs, 0.0)),
        )
        return components, {"temp_anchor": float(z[0])}

    def decompose(self, window: MultimodalWindow, baselines: BaselineSet) -> ComponentSet:
        """
        윈도우 전체 분해 (전역 컴포넌트 순서로 연결)

        Args:
            window (MultimodalWindow): 입력 윈도우
            baselines (BaselineSet): 학습 데이터 베이스라인

        Returns:
            ComponentSet: 분해 결과
        """
        components = []
        aux: Dict = {}
        for modality in window.modalities:
            x = window.channel(modality)
            b = baselines[modality]
            if modality == Modality.ACC:
                parts, extra = self.decompose_acc(x, b)
            elif modality == Modality.HR:
                parts, extra = self.decompose_hr(x, b)
            elif modality == Modality.EDA:
                parts, extra = self.decompose_eda(x, b, window.sample_rate_hz)
            else:
                parts, extra = self.decompose_temp(x, b)
            components.extend(parts)
            aux.update(extra)

        logger.debug(f"[{window.window_id}] 분해 완료: {len(components)}개 컴포넌트")
        return ComponentSet(
            components=tuple(components),
            aux=AuxState(**aux),
            baselines=baselines,
            t=window.t,
            sample_rate_hz=window.sample_rate_hz,
            window_id=window.window_id,
            subject_id=window.subject_id,
            label=window.label,
            modalities=window.modalities,
        )

    # ------------------------------------------------------------------
    # 재구성
    # ------------------------------------------------------------------

    def _validate_weights(self, cs: ComponentSet, w) -> np.ndarray:
        w = cs.check_weights(w)
        if not np.all(np.isfinite(w)) or np.any(w < 0.0) or np.any(w > 1.0):
            raise WeightOutOfRangeError(f"[{cs.window_id}] 가중치는 [0, 1] 범위여야 합니다: {w}")
        return w

    def _hr_state(self, cs: ComponentSet, w: np.ndarray) -> Tuple[np.ndarray, float, np.ndarray]:
        """HR 재구성 중간값 (클램프 전 RR, 분모 u, 누적 변동)"""
        i_mean, i_var = cs.index("HR.MeanOB"), cs.index("HR.Variability")
        u = cs.baselines[Modality.HR] + w[i_mean] * cs.components[i_mean].payload
        steps = cs.aux.hr_signs * cs.components[i_var].payload
        cumulative = np.concatenate(([0.0], np.cumsum(steps)))
        rr = MS_PER_MINUTE / u + cs.aux.hr_anchor_rr_ms + w[i_var] * cumulative
        return rr, u, cumulative

    def _modality_channel(self, cs: ComponentSet, w: np.ndarray, modality: Modality) -> np.ndarray:
        b = cs.baselines[modality]
        if modality == Modality.ACC:
            i_m, i_o, i_a = (cs.index(n) for n in ("ACC.MeanOB", "ACC.Outlier", "ACC.Activity"))
            return (b + w[i_m] * cs.components[i_m].payload
                    + w[i_a] * (cs.aux.acc_signs * cs.components[i_a].payload)
                    + w[i_o] * cs.components[i_o].payload)

        if modality == Modality.HR:
            rr, _, _ = self._hr_state(cs, w)
            return MS_PER_MINUTE / np.maximum(rr, cs.aux.rr_floor_ms)

        if modality == Modality.EDA:
            i_tm, i_tc, i_p = (cs.index(n) for n in ("EDA.TonicMeanOB", "EDA.TonicChange", "EDA.Phasic"))
            return (b + w[i_tm] * cs.components[i_tm].payload
                    + w[i_tc] * cs.components[i_tc].payload
                    + w[i_p] * cs.components[i_p].payload)

        i_m, i_r, i_f = (cs.index(n) for n in ("TEMP.MeanOB", "TEMP.Rising", "TEMP.Falling"))
        start = b + w[i_m] * cs.components[i_m].payload + cs.aux.temp_anchor
        rising = np.concatenate(([0.0], np.cumsum(cs.components[i_r].payload)))
        falling = np.concatenate(([0.0], np.cumsum(cs.components[i_f].payload)))
        return start + w[i_r] * rising + w[i_f] * falling

    def reconstruct_array(self, cs: ComponentSet, w) -> np.ndarray:
        """
        가중 재구성을 (t, 채널 수) 배열로 반환 (채널 순서는 cs.modalities)
        """
        w = self._validate_weights(cs, w)
        return np.stack([self._modality_channel(cs, w, m) for m in cs.modalities], axis=1)

    def reconstruct(self, cs: ComponentSet, w) -> MultimodalWindow:
        """
        가중 재구성 F^-1(C_x w)

        Args:
            cs (ComponentSet): 분해 결과
            w: 가중치 벡터 ([0, 1]^d)

        Returns:
            MultimodalWindow: 재구성된 윈도우 (ID/라벨은 원본과 동일)
        """
        array = self.reconstruct_array(cs, w)
        return MultimodalWindow.from_array(array, cs.modalities, cs.sample_rate_hz,
                                           cs.subject_id, cs.window_id, cs.label)

    # ------------------------------------------------------------------
    # 가중치 야코비안-벡터 곱
    # ------------------------------------------------------------------

    def weight_jvp(self, cs: ComponentSet, w, g_x: Union[np.ndarray, Mapping[Modality, np.ndarray]]) -> np.ndarray:
        """
        (dx'/dw)^T g_x 해석적 계산

        Args:
            cs (ComponentSet): 분해 결과
            w: 현재 가중치
            g_x: 재구성 윈도우에 대한 그래디언트 ((t, 채널 수) 배열 또는 모달리티별 벡터)

        Returns:
            np.ndarray: 가중치에 대한 그래디언트 (길이 d)
        """
        w = self._validate_weights(cs, w)
        if isinstance(g_x, Mapping):
            g_x = np.stack([np.asarray(g_x[m], dtype=np.float64) for m in cs.modalities], axis=1)
        g_x = np.asarray(g_x, dtype=np.float64)
        if g_x.shape != (cs.t, len(cs.modalities)):
            raise DimensionMismatchError(
                f"[{cs.window_id}] 그래디언트 형태 {g_x.shape} != {(cs.t, len(cs.modalities))}"
            )

        grad = np.zeros(cs.d)
        for column, modality in enumerate(cs.modalities):
            g = g_x[:, column]
            if modality == Modality.ACC:
                i_m, i_o, i_a = (cs.index(n) for n in ("ACC.MeanOB", "ACC.Outlier", "ACC.Activity"))
                grad[i_m] = cs.components[i_m].payload * np.sum(g)
                grad[i_o] = np.dot(g, cs.components[i_o].payload)
                grad[i_a] = np.dot(g, cs.aux.acc_signs * cs.components[i_a].payload)

            elif modality == Modality.HR:
                i_m, i_v = cs.index("HR.MeanOB"), cs.index("HR.Variability")
                rr, u, cumulative = self._hr_state(cs, w)
                # 클램프된 샘플은 기울기 0
                active = rr > cs.aux.rr_floor_ms
                g_rr = np.where(active, -g * MS_PER_MINUTE / np.where(active, rr, 1.0) ** 2, 0.0)
                grad[i_m] = np.sum(g_rr) * (-MS_PER_MINUTE / u ** 2) * cs.components[i_m].payload
                grad[i_v] = np.dot(g_rr, cumulative)

            elif modality == Modality.EDA:
                i_tm, i_tc, i_p = (cs.index(n) for n in ("EDA.TonicMeanOB", "EDA.TonicChange", "EDA.Phasic"))
                grad[i_tm] = cs.components[i_tm].payload * np.sum(g)
                grad[i_tc] = np.dot(g, cs.components[i_tc].payload)
                grad[i_p] = np.dot(g, cs.components[i_p].payload)

            else:
                i_m, i_r, i_f = (cs.index(n) for n in ("TEMP.MeanOB", "TEMP.Rising", "TEMP.Falling"))
                grad[i_m] = cs.components[i_m].payload * np.sum(g)
                grad[i_r] = np.dot(g, np.concatenate(([0.0], np.cumsum(cs.components[i_r].payload))))
                grad[i_f] = np.dot(g, np.concatenate(([0.0], np.cumsum(cs.components[i_f].payload))))

        return grad


# 전역 분해기 인스턴스
decomposer = ComponentDecomposer()

def decompose(window: MultimodalWindow, baselines: BaselineSet) -> ComponentSet:
    """편의 함수: 윈도우 분해"""
    return decomposer.decompose(window, baselines)

def reconstruct(cs: ComponentSet, w) -> MultimodalWindow:
    """편의 함수: 가중 재구성"""
    return decomposer.reconstruct(cs, w)

def reconstruct_array(cs: ComponentSet, w) -> np.ndarray:
    """편의 함수: 가중 재구성 (배열)"""
    return decomposer.reconstruct_array(cs, w)

def weight_jvp(cs: ComponentSet, w, g_x) -> np.ndarray:
    """편의 함수: 가중치 야코비안-벡터 곱"""
    return decomposer.weight_jvp(cs, w, g_x)

def dump_components(cs: ComponentSet) -> Dict:
    """
    편의 함수: 컴포넌트 덤프 (explain --dump-components)

    Args:
        cs (ComponentSet): 분해 결과

    Returns:
        Dict: {window_id, components, aux, baselines}
    """
    return cs.to_dict()
