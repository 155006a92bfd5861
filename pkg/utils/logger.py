"""
로깅 유틸리티
모든 모듈 로거는 패키지 루트 로거("iic_toolkit") 아래에 붙고, 핸들러는 루트에 한 번만 설정합니다.
명령 실행 중에는 출력 디렉토리의 run.log에도 같은 로그를 남깁니다.
"""

import logging
import os
import sys
from datetime import datetime
from typing import Optional

from config import LOG_LEVEL, LOGS_DIR, LOG_TO_FILE

ROOT_LOGGER = "iic_toolkit"
RUN_LOG_FILE = "run.log"

FORMATTER = logging.Formatter(
    '%(asctime)s - %(name)s - %(levelname)s - %(message)s',
    datefmt='%Y-%m-%d %H:%M:%S'
)


def _configure_root(level: str, log_file: Optional[str]) -> logging.Logger:
    """루트 로거 핸들러 설정 (콘솔 + 날짜별 파일, 이미 있으면 유지)"""
    root = logging.getLogger(ROOT_LOGGER)
    if root.handlers:
        return root

    # Windows 콘솔 UTF-8 설정
    if sys.platform == 'win32':
        try:
            sys.stdout.reconfigure(encoding='utf-8')
            sys.stderr.reconfigure(encoding='utf-8')
        except AttributeError:
            pass

    root.setLevel(getattr(logging, level.upper()))

    console_handler = logging.StreamHandler(sys.stdout)
    console_handler.setFormatter(FORMATTER)
    root.addHandler(console_handler)

    if LOG_TO_FILE or log_file is not None:
        if log_file is None:
            os.makedirs(LOGS_DIR, exist_ok=True)
            log_file = os.path.join(LOGS_DIR, f"{ROOT_LOGGER}_{datetime.now().strftime('%Y%m%d')}.log")
        file_handler = logging.FileHandler(log_file, encoding='utf-8')
        file_handler.setFormatter(FORMATTER)
        root.addHandler(file_handler)
    return root


def setup_logger(name, level=LOG_LEVEL, log_file=None):
    """
    모듈 로거 생성

    Args:
        name (str): 모듈 이름 ("iic_toolkit.<name>" 로거가 됨)
        level (str): 로그 레벨
        log_file (str): 루트 로그 파일 경로 (None이면 LOGS_DIR 아래 날짜별 파일, 첫 호출에만 적용)

    Returns:
        logging.Logger: 루트로 전파되는 모듈 로거
    """
    _configure_root(level, log_file)
    logger = logging.getLogger(f"{ROOT_LOGGER}.{name}")
    logger.setLevel(getattr(logging, level.upper()))
    return logger


def attach_run_log(out_dir: str, level=LOG_LEVEL) -> logging.FileHandler:
    """
    출력 디렉토리에 run.log 핸들러 추가 (기존 파일은 덮어씀)

    Returns:
        logging.FileHandler: detach_run_log로 제거할 핸들러
    """
    os.makedirs(out_dir, exist_ok=True)
    handler = logging.FileHandler(os.path.join(out_dir, RUN_LOG_FILE), mode="w", encoding="utf-8")
    handler.setLevel(getattr(logging, level.upper()))
    handler.setFormatter(FORMATTER)
    logging.getLogger(ROOT_LOGGER).addHandler(handler)
    return handler


def detach_run_log(handler: logging.FileHandler):
    """run.log 핸들러 제거 후 닫기"""
    logging.getLogger(ROOT_LOGGER).removeHandler(handler)
    handler.close()

def log_explanation(logger, window_id, method, kept, degradation=None):
    """
    설명 결과 로그 기록

    Args:
        logger: 로거 객체
        window_id (str): 윈도우 ID
        method (str): 설명 방법 (iic/lcbm/fcshap)
        kept (list): 중요하다고 판단된 컴포넌트/특성 이름
        degradation (float): 최종 출력 저하량 (IIC만 해당)
    """
    deg_str = f", degradation: {degradation:.4f}" if degradation is not None else ""
    logger.info(f"EXPLAIN - [{method}] {window_id}: {len(kept)}개 유지 {list(kept)}{deg_str}")

def log_flip_report(logger, criterion, parameter, flip_rate, n_evaluated, n_skipped=0):
    """
    플립률 로그 기록

    Args:
        logger: 로거 객체
        criterion (str): fidelity / sufficiency / random
        parameter: k 또는 임계값
        flip_rate (float): 플립률 (0-1)
        n_evaluated (int): 평가 윈도우 수
        n_skipped (int): 설명이 없어 제외한 윈도우 수
    """
    skipped = f", 제외 {n_skipped}개" if n_skipped else ""
    logger.info(f"FLIP - {criterion}({parameter}): {flip_rate:.2%} (n={n_evaluated}{skipped})")

def log_training_epoch(logger, epoch, train_loss, eval_loss, train_acc, eval_acc):
    """
    학습 에폭 로그 기록

    Args:
        logger: 로거 객체
        epoch (int): 에폭 번호
        train_loss (float): 학습 손실
        eval_loss (float): 평가 손실
        train_acc (float): 학습 정확도
        eval_acc (float): 평가 정확도
    """
    logger.debug(
        f"EPOCH {epoch} - train_loss: {train_loss:.4f}, eval_loss: {eval_loss:.4f}, "
        f"train_acc: {train_acc:.3f}, eval_acc: {eval_acc:.3f}"
    )

def log_error(logger, error, context=None):
    """
    에러 로그 기록

    Args:
        logger: 로거 객체
        error (Exception): 에러 객체
        context (str): 에러 발생 컨텍스트
    """
    if context:
        logger.error(f"ERROR in {context}: {str(error)}", exc_info=True)
    else:
        logger.error(f"ERROR: {str(error)}", exc_info=True)
