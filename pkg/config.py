"""
IIC 설명 툴킷 설정 파일
"""
import os
from dotenv import load_dotenv

# 환경변수 로드
load_dotenv()

# =============================================================================
# 신호 설정
# =============================================================================

# 모달리티 단위
MODALITY_UNITS = {
    "ACC": "g",
    "HR": "bpm",
    "EDA": "microsiemens",
    "TEMP": "degC",
}

# 모달리티 간 리샘플링 (가장 높은 샘플링 주파수로 선형 보간)
RESAMPLE_KIND = "linear"

# =============================================================================
# 분해(Decomposition) 파라미터
# =============================================================================

ACC_OUTLIER_Z = 3.0          # 이상 움직임 분리용 z-score 임계값
ACC_STD_EPS = 1e-12          # 이 값 이하의 표준편차는 0으로 간주 (상수 입력)
RR_FLOOR_MS = 200.0          # RR 하한 (= 300 bpm), 60000/u 특이점 방지
TONIC_MEDIAN_SECONDS = 4.0   # 토닉 추출: 이동 중앙값 창 길이(초)
TONIC_CUTOFF_HZ = 0.05       # 토닉 추출: 1차 저역통과 차단 주파수
TONIC_FILTER_ORDER = 1

# 전역 컴포넌트 순서 (변경 금지 - 체크포인트/설명 파일이 이 순서를 가정)
COMPONENT_ORDER = (
    "ACC.MeanOB",
    "ACC.Outlier",
    "ACC.Activity",
    "HR.MeanOB",
    "HR.Variability",
    "EDA.TonicMeanOB",
    "EDA.TonicChange",
    "EDA.Phasic",
    "TEMP.MeanOB",
    "TEMP.Rising",
    "TEMP.Falling",
)

# =============================================================================
# IIC 최적화 파라미터
# =============================================================================

IIC_EPOCHS = 200
IIC_LR = 1e-2
IIC_MAX_DEG = 0.01
IIC_PENALTY = 25.0
IIC_THRESHOLD = 0.01
IIC_BETAS = (0.9, 0.999)
IIC_EPS = 1e-8
IIC_DEGRADATION_REDUCTION = "mean"      # "mean" 또는 "max" (클래스 축)
IIC_OUTPUT_REPRESENTATION = "probs"     # "probs" 또는 "logits"

# =============================================================================
# 모델 학습 파라미터
# =============================================================================

MODEL_ARCH = "lstm"          # "fcn", "lstm", "transformer"
HIDDEN_SIZE = 32
LSTM_NUM_LAYERS = 1
TRANSFORMER_NUM_LAYERS = 2
TRANSFORMER_NUM_HEADS = 4
FCN_NUM_LAYERS = 2
MODEL_DROPOUT = 0.0

TRAIN_LR = 1e-3
TRAIN_EPOCHS = 60
TRAIN_BATCH_SIZE = 32
TRAIN_BETAS = (0.9, 0.999)
TRAIN_EPS = 1e-8
TRAIN_PATIENCE = 10          # 평가 손실 기준 조기 종료
TRAIN_RESTARTS = 1           # 논문 설정 재현 시 5
CHECKPOINT_FORMAT = "ckpt_v1"

# =============================================================================
# 비교 방법(Baselines) 파라미터
# =============================================================================

LCBM_L2 = 1e-3               # 로지스틱 회귀 L2 강도 (C = 1 / LCBM_L2)
LCBM_MAX_ITER = 5000
FCSHAP_HIDDEN_SIZE = 32
FCSHAP_EPOCHS = 200
FCSHAP_LR = 1e-2
SHAPLEY_MAX_FEATURES = 20    # 2^F 연합 완전 열거 한계
STAT_FEATURES = ("Mean", "Min", "Max", "Std")

# =============================================================================
# 평가 파라미터
# =============================================================================

FIDELITY_K = (1, 2, 3)
SUFFICIENCY_TAU = {
    "iic": 0.01,
    "lcbm": 0.01,
    "fcshap": 0.02,
}
GLOBAL_TOP_K = 5
RANDOM_MASK_REPEATS = 5
POSITIVE_CLASS = 1           # 분포 요약의 TP/TN 구분 기준 클래스
ITEMSET_MIN_SUPPORT = 0.1
ITEMSET_MAX_SIZE = 3

# =============================================================================
# 합성 데이터 기본값
# =============================================================================

SYNTH_AR_PHI = 0.9           # AR(1) 잡음 계수
SYNTH_HR_FLOOR = 30.0        # 생성 HR 하한 (bpm)
SYNTH_EVAL_FRACTION = 0.25   # 평가용 피험자 비율
SYNTH_BURN_IN = 50           # AR(1) 정상상태 도달용 버림 샘플 수

# =============================================================================
# 실행 설정
# =============================================================================

DEFAULT_SEED = 7
DEFAULT_JOBS = int(os.getenv("IIC_JOBS", "1"))

# 로깅
LOG_LEVEL = os.getenv("LOG_LEVEL", "INFO")
LOG_TO_FILE = os.getenv("LOG_TO_FILE", "true").lower() == "true"

# =============================================================================
# 파일 경로
# =============================================================================

LOGS_DIR = os.getenv("IIC_LOGS_DIR", "logs")
REPORTS_DIR = os.getenv("IIC_REPORTS_DIR", "reports")

MANIFEST_FILE = "manifest.json"
TOOL_VERSION = "1.0.0"
