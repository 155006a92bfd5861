"""
합성 자율신경 신호 생성 모듈
피험자별 베이스라인 + AR(1) 잡음 위에 클래스 1 신호 특징을 심어 정답 컴포넌트를 알고 있는 데이터셋을 만듭니다.

- state 과제: ACC 없음, HR 평균 +15 bpm, EDA 토닉 +1.5 µS (30초 윈도우)
- seizure 과제: ACC 이상 움직임 구간(위치 무작위), HR 평균 +25 bpm, HR 변동성 증가 (60초 윈도우)
"""

import os
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Tuple

import numpy as np
import pandas as pd
from joblib import Parallel, delayed
from scipy.signal import lfilter
from scipy.stats import ttest_ind

from config import SYNTH_AR_PHI, SYNTH_BURN_IN, SYNTH_EVAL_FRACTION, SYNTH_HR_FLOOR
from signals.data_io import save_dataset
from signals.types import Dataset, Modality, MultimodalWindow, Split
from utils.artifacts import write_json
from utils.exceptions import InvalidConfigError
from utils.logger import setup_logger

logger = setup_logger("synth")

TASKS = ("state", "seizure")
CLASS_NAMES = {
    "state": ("supine", "stepping"),
    "seizure": ("interictal", "ictal"),
}
DEFAULT_NOISE = {"ACC": 0.02, "HR": 2.0, "EDA": 0.1, "TEMP": 0.05}

# 과제별 기본값
TASK_DEFAULTS = {
    "state": {
        "sample_rate_hz": 4.0, "t": 120, "include_acc": False,
        "hr_mean_shift": 15.0, "eda_tonic_shift": 1.5,
        "acc_outlier_rate": 0.0, "hr_var_scale": 0.0, "temp_drift": 0.0,
    },
    "seizure": {
        "sample_rate_hz": 4.0, "t": 240, "include_acc": True,
        "hr_mean_shift": 25.0, "eda_tonic_shift": 0.0,
        "acc_outlier_rate": 0.1, "hr_var_scale": 1.0, "temp_drift": 0.0,
    },
}


@dataclass(frozen=True)
class SynthConfig:
    """
    합성 데이터 설정

    Attributes:
        task: state / seizure
        n_subjects: 피험자 수
        windows_per_class: 피험자별 클래스당 윈도우 수
        t, sample_rate_hz: 윈도우 길이(샘플), 샘플링 주파수
        seed: 전체 데이터셋 시드
        hr_mean_shift: 클래스 1 HR 평균 이동 (bpm)
        eda_tonic_shift: 클래스 1 EDA 토닉 이동 (µS)
        acc_outlier_rate: 클래스 1 윈도우에서 이상 움직임 구간이 차지하는 비율
        hr_var_scale: 클래스 1 HR 잡음 배율 증가분 (std * (1 + scale))
        temp_drift: 클래스 1 TEMP 기울기 (degC/min)
        noise: 모달리티별 AR(1) 잡음 표준편차
        burst_jitter: 이상 움직임 구간 위치를 윈도우마다 무작위로
        include_acc: ACC 채널 포함 여부
        eval_fraction: 평가용 피험자 비율
    """
    task: str = "state"
    n_subjects: int = 10
    windows_per_class: int = 10
    t: int = 120
    sample_rate_hz: float = 4.0
    seed: int = 7
    hr_mean_shift: float = 15.0
    eda_tonic_shift: float = 1.5
    acc_outlier_rate: float = 0.0
    hr_var_scale: float = 0.0
    temp_drift: float = 0.0
    noise: Dict[str, float] = field(default_factory=lambda: dict(DEFAULT_NOISE))
    burst_jitter: bool = True
    include_acc: bool = False
    eval_fraction: float = SYNTH_EVAL_FRACTION

    def __post_init__(self):
        if self.task not in TASKS:
            raise InvalidConfigError(f"알 수 없는 과제: {self.task} (state/seizure)")
        if self.n_subjects < 2:
            raise InvalidConfigError(f"피험자는 최소 2명이어야 합니다 (학습/평가 분리): {self.n_subjects}")
        if self.windows_per_class < 1:
            raise InvalidConfigError(f"windows_per_class는 1 이상이어야 합니다: {self.windows_per_class}")
        if self.t < 2:
            raise InvalidConfigError(f"t는 2 이상이어야 합니다: {self.t}")
        if not self.sample_rate_hz > 0:
            raise InvalidConfigError(f"sample_rate_hz는 양수여야 합니다: {self.sample_rate_hz}")
        for name in ("hr_mean_shift", "eda_tonic_shift", "acc_outlier_rate", "hr_var_scale", "temp_drift"):
            if getattr(self, name) < 0:
                raise InvalidConfigError(f"효과 크기 {name}는 0 이상이어야 합니다: {getattr(self, name)}")
        if self.acc_outlier_rate > 1:
            raise InvalidConfigError(f"acc_outlier_rate는 1 이하여야 합니다: {self.acc_outlier_rate}")
        if set(self.noise) - set(DEFAULT_NOISE) or any(v < 0 for v in self.noise.values()):
            raise InvalidConfigError(f"잡음 설정이 잘못되었습니다: {self.noise}")
        if not 0 < self.eval_fraction < 1:
            raise InvalidConfigError(f"eval_fraction은 (0, 1) 범위여야 합니다: {self.eval_fraction}")
        object.__setattr__(self, "noise", {**DEFAULT_NOISE, **self.noise})

    @classmethod
    def for_task(cls, task: str, **overrides) -> "SynthConfig":
        """과제 기본값에 overrides를 덮어쓴 설정"""
        if task not in TASKS:
            raise InvalidConfigError(f"알 수 없는 과제: {task} (state/seizure)")
        params = {**TASK_DEFAULTS[task], **{k: v for k, v in overrides.items() if v is not None}}
        return cls(task=task, **params)

    @property
    def modalities(self) -> Tuple[Modality, ...]:
        base = (Modality.HR, Modality.EDA, Modality.TEMP)
        return ((Modality.ACC,) + base) if self.include_acc else base

    @property
    def class_names(self) -> Tuple[str, ...]:
        return CLASS_NAMES[self.task]

    def ground_truth(self) -> List[str]:
        """이상적인 설명기가 상위로 꼽아야 할 컴포넌트"""
        planted = []
        if self.include_acc and self.acc_outlier_rate > 0:
            planted.append("ACC.Outlier")
        if self.hr_mean_shift > 0:
            planted.append("HR.MeanOB")
        if self.hr_var_scale > 0:
            planted.append("HR.Variability")
        if self.eda_tonic_shift > 0:
            planted.append("EDA.TonicMeanOB")
        if self.temp_drift > 0:
            planted.append("TEMP.Rising")
        return planted

    def to_dict(self) -> Dict:
        return asdict(self)


# -----------------------------------------------------------------------------
# 신호 생성
# -----------------------------------------------------------------------------

def ar1_noise(rng: np.random.Generator, n: int, sigma: float, phi: float = SYNTH_AR_PHI,
              burn_in: int = SYNTH_BURN_IN) -> np.ndarray:
    """
    정상상태 표준편차가 sigma인 AR(1) 잡음

    x_k = phi * x_{k-1} + e_k,  e_k ~ N(0, sigma^2 (1 - phi^2))
    """
    white = rng.standard_normal(n + burn_in) * sigma * np.sqrt(1.0 - phi ** 2)
    return lfilter([1.0], [1.0, -phi], white)[burn_in:]


def _burst(rng: np.random.Generator, t: int, rate: float, jitter: bool) -> np.ndarray:
    """이상 움직임 구간 (진폭 ~1 g의 진동)"""
    length = max(1, int(round(rate * t)))
    start = int(rng.integers(0, t - length + 1)) if jitter else (t - length) // 2
    burst = np.zeros(t)
    phase = np.arange(length)
    burst[start:start + length] = (0.8 + 0.4 * rng.random()) * np.abs(np.sin(np.pi * phase / 2.0 + 0.5))
    return burst


def _scr_events(rng: np.random.Generator, t: int, rate_hz: float) -> np.ndarray:
    """피부전도 반응 한 번 (빠른 상승, 지수 감쇠)"""
    onset = int(rng.integers(0, t))
    time_s = (np.arange(t) - onset) / rate_hz
    amplitude = 0.1 + 0.2 * rng.random()
    return np.where(time_s >= 0, amplitude * (1 - np.exp(-time_s / 0.75)) * np.exp(-time_s / 4.0), 0.0)


def _subject_windows(cfg: SynthConfig, subject_index: int, seed_seq: np.random.SeedSequence) -> List[MultimodalWindow]:
    """한 피험자의 클래스별 윈도우 (피험자 전용 시드)"""
    rng = np.random.default_rng(seed_seq)
    subject_id = f"S{subject_index:03d}"
    base = {
        "ACC": 1.0 + 0.02 * rng.standard_normal(),
        "HR": 70.0 + 5.0 * rng.standard_normal(),
        "EDA": 2.0 + 0.5 * rng.standard_normal(),
        "TEMP": 33.0 + 0.5 * rng.standard_normal(),
    }
    t, rate = cfg.t, cfg.sample_rate_hz
    minutes = np.arange(t) / rate / 60.0

    windows = []
    for label in (0, 1):
        planted = float(label)
        for k in range(cfg.windows_per_class):
            channels = {}
            if cfg.include_acc:
                acc = base["ACC"] + ar1_noise(rng, t, cfg.noise["ACC"])
                if label and cfg.acc_outlier_rate > 0:
                    acc = acc + _burst(rng, t, cfg.acc_outlier_rate, cfg.burst_jitter)
                channels[Modality.ACC] = np.abs(acc)

            hr_noise = ar1_noise(rng, t, cfg.noise["HR"]) * (1.0 + cfg.hr_var_scale * planted)
            hr = base["HR"] + cfg.hr_mean_shift * planted + hr_noise
            channels[Modality.HR] = np.maximum(hr, SYNTH_HR_FLOOR)

            eda = base["EDA"] + cfg.eda_tonic_shift * planted + ar1_noise(rng, t, cfg.noise["EDA"])
            channels[Modality.EDA] = eda + _scr_events(rng, t, rate)

            temp = base["TEMP"] + cfg.temp_drift * planted * minutes + ar1_noise(rng, t, cfg.noise["TEMP"])
            channels[Modality.TEMP] = temp

            windows.append(MultimodalWindow(
                channels=channels,
                sample_rate_hz=rate,
                subject_id=subject_id,
                window_id=f"{subject_id}_c{label}_w{k:03d}",
                label=label,
            ))
    return windows


class SyntheticGenerator:
    """합성 데이터셋 생성 클래스"""

    def __init__(self, jobs: int = 1):
        self.jobs = jobs

    def split_subjects(self, cfg: SynthConfig) -> Tuple[List[int], List[int]]:
        """피험자 단위 학습/평가 분할"""
        rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, 1]))
        order = rng.permutation(cfg.n_subjects)
        n_eval = min(cfg.n_subjects - 1, max(1, int(round(cfg.n_subjects * cfg.eval_fraction))))
        return sorted(order[n_eval:].tolist()), sorted(order[:n_eval].tolist())

    def generate(self, cfg: SynthConfig) -> Tuple[Dataset, Dataset, List[str]]:
        """
        합성 데이터셋 생성

        Args:
            cfg (SynthConfig): 생성 설정

        Returns:
            (학습 Dataset, 평가 Dataset, 정답 컴포넌트 이름 목록)
        """
        seeds = np.random.SeedSequence([cfg.seed, 0]).spawn(cfg.n_subjects)
        if self.jobs > 1:
            per_subject = Parallel(n_jobs=self.jobs, prefer="threads")(
                delayed(_subject_windows)(cfg, i, seeds[i]) for i in range(cfg.n_subjects)
            )
        else:
            per_subject = [_subject_windows(cfg, i, seeds[i]) for i in range(cfg.n_subjects)]

        train_subjects, eval_subjects = self.split_subjects(cfg)
        train = Dataset([w for i in train_subjects for w in per_subject[i]], Split.TRAIN, cfg.class_names)
        eval_ = Dataset([w for i in eval_subjects for w in per_subject[i]], Split.EVAL, cfg.class_names)
        ground_truth = cfg.ground_truth()

        logger.info(
            f"합성 데이터 생성 완료 [{cfg.task}] - 학습 {len(train)}개 / 평가 {len(eval_)}개 윈도우, "
            f"정답 컴포넌트: {ground_truth}"
        )
        return train, eval_, ground_truth

    def save(self, out_dir: str, cfg: SynthConfig, train: Dataset, eval_: Dataset,
             ground_truth: List[str], fmt: str = "csv") -> List[str]:
        """데이터셋 파일과 ground_truth.json 저장"""
        os.makedirs(out_dir, exist_ok=True)
        written = [
            save_dataset(train, os.path.join(out_dir, f"train.{fmt}"), fmt),
            save_dataset(eval_, os.path.join(out_dir, f"eval.{fmt}"), fmt),
        ]
        written.append(write_json(
            os.path.join(out_dir, "ground_truth.json"),
            {"task": cfg.task, "components": list(ground_truth), "class_names": list(cfg.class_names),
             "config": cfg.to_dict()},
            required_keys=("task", "components", "class_names"),
        ))
        return written


# -----------------------------------------------------------------------------
# 심은 효과 확인
# -----------------------------------------------------------------------------

def _window_statistic(window: MultimodalWindow, component: str) -> float:
    """정답 컴포넌트에 대응하는 윈도우 통계"""
    if component == "ACC.Outlier":
        return float(np.max(window.channel(Modality.ACC)))
    if component == "HR.MeanOB":
        return float(np.mean(window.channel(Modality.HR)))
    if component == "HR.Variability":
        return float(np.std(np.diff(window.channel(Modality.HR))))
    if component == "EDA.TonicMeanOB":
        return float(np.median(window.channel(Modality.EDA)))
    if component == "TEMP.Rising":
        temp = window.channel(Modality.TEMP)
        return float(temp[-1] - temp[0])
    raise InvalidConfigError(f"통계가 정의되지 않은 컴포넌트: {component}")


def planted_effect_check(dataset: Dataset, ground_truth: List[str]) -> pd.DataFrame:
    """
    클래스 간 정답 통계 차이의 두 표본 t-검정

    Returns:
        pd.DataFrame: component, mean_diff, p_value
    """
    labels = dataset.labels
    rows = []
    for component in ground_truth:
        values = np.array([_window_statistic(w, component) for w in dataset.windows])
        positive, negative = values[labels == 1], values[labels == 0]
        _, p_value = ttest_ind(positive, negative, equal_var=False)
        rows.append({"component": component, "mean_diff": float(positive.mean() - negative.mean()),
                     "p_value": float(p_value)})
    return pd.DataFrame(rows, columns=["component", "mean_diff", "p_value"])


# 전역 생성기 인스턴스
synthetic_generator = SyntheticGenerator()

def generate(cfg: SynthConfig) -> Tuple[Dataset, Dataset, List[str]]:
    """편의 함수: 합성 데이터셋 생성"""
    return synthetic_generator.generate(cfg)

def generate_task(task: str, seed: int = 7, **overrides) -> Tuple[Dataset, Dataset, List[str]]:
    """편의 함수: 과제 기본값으로 생성"""
    return synthetic_generator.generate(SynthConfig.for_task(task, seed=seed, **overrides))
