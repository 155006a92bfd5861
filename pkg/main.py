#!/usr/bin/env python3
"""
IIC 설명 툴킷 메인 실행 파일

    python main.py generate --task state --seed 7 --out runs/data
    python main.py train    --data runs/data --arch lstm --out runs/model
    python main.py explain  --data runs/data --model runs/model --method iic --out runs/explain
    python main.py evaluate --data runs/data --model runs/model --explanations runs/explain --out runs/eval
    python main.py report   --explanations runs/explain --evaluation runs/eval --out runs/report

종료 코드: 0 정상, 1 실행 오류, 2 잘못된 사용법
"""

import argparse
import os
import sys
from typing import Dict, List, Optional, Tuple

import pandas as pd

# 프로젝트 루트를 Python 경로에 추가
sys.path.append(os.path.dirname(os.path.abspath(__file__)))

from config import (
    DEFAULT_JOBS,
    DEFAULT_SEED,
    FIDELITY_K,
    GLOBAL_TOP_K,
    HIDDEN_SIZE,
    IIC_EPOCHS,
    IIC_LR,
    IIC_MAX_DEG,
    IIC_PENALTY,
    IIC_THRESHOLD,
    MODEL_ARCH,
    RANDOM_MASK_REPEATS,
    SUFFICIENCY_TAU,
    TRAIN_EPOCHS,
    TRAIN_LR,
    TRAIN_RESTARTS,
)
from utils.exceptions import IICToolkitError, InvalidConfigError, MissingInputError
from utils.logger import attach_run_log, detach_run_log, log_error, setup_logger
from utils.settings_manager import RunManifest, load_settings

logger = setup_logger("main")

METHODS = ("iic", "lcbm", "fcshap")
MODEL_FILE = "model.ckpt.json"
LCBM_FILE = "lcbm.joblib"
FCSHAP_FILE = "fcshap.ckpt.json"


# -----------------------------------------------------------------------------
# 입력 헬퍼
# -----------------------------------------------------------------------------

def _dataset_path(data_dir: str, split: str) -> Tuple[str, str]:
    for fmt in ("csv", "json"):
        path = os.path.join(data_dir, f"{split}.{fmt}")
        if os.path.exists(path):
            return path, fmt
    raise MissingInputError(f"{data_dir}에 {split}.csv / {split}.json이 없습니다")


def _load_split(data_dir: str, split: str):
    """데이터 디렉토리에서 분할 로드 (ground_truth.json이 있으면 클래스 이름 사용)"""
    from signals.data_io import load_dataset
    from signals.types import Split
    from utils.artifacts import read_json

    path, fmt = _dataset_path(data_dir, split)
    class_names = None
    truth_path = os.path.join(data_dir, "ground_truth.json")
    if os.path.exists(truth_path):
        class_names = read_json(truth_path).get("class_names")
    return load_dataset(path, fmt, Split.TRAIN if split == "train" else Split.EVAL, class_names), path


def _parse_k_list(text: str) -> List[int]:
    try:
        values = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise InvalidConfigError(f"--fidelity-k는 쉼표로 구분한 정수여야 합니다: {text}")
    if not values or any(k < 0 for k in values):
        raise InvalidConfigError(f"--fidelity-k 값이 잘못되었습니다: {text}")
    return values


# -----------------------------------------------------------------------------
# 서브커맨드
# -----------------------------------------------------------------------------

def cmd_generate(args, manifest: RunManifest) -> int:
    """합성 데이터셋 생성"""
    from synth.generator import SynthConfig, SyntheticGenerator

    cfg = SynthConfig.for_task(args.task, seed=args.seed, n_subjects=args.n_subjects,
                               windows_per_class=args.windows_per_class)
    generator = SyntheticGenerator(jobs=args.jobs)
    train_ds, eval_ds, ground_truth = generator.generate(cfg)
    manifest.config.update(cfg.to_dict())
    manifest.outputs.extend(generator.save(args.out, cfg, train_ds, eval_ds, ground_truth, args.format))
    return 0


def cmd_train(args, manifest: RunManifest) -> int:
    """분류 모델(및 비교 모델) 학습"""
    from evaluation.metrics import classification_metrics
    from explainers.fcshap import FCSHAPModel
    from explainers.lcbm import LCBMModel
    from models.checkpoint import save_checkpoint
    from models.networks import TrainConfig
    from models.trainer import model_spec_for, train
    from signals.preprocessing import compute_baselines
    from utils.artifacts import write_json

    cfg = TrainConfig(lr=args.lr, epochs=args.epochs, restarts=args.restarts, seed=args.seed)
    train_ds, train_path = _load_split(args.data, "train")
    eval_ds, eval_path = _load_split(args.data, "eval")
    manifest.inputs.extend([train_path, eval_path])
    baselines = compute_baselines(train_ds)
    summary: Dict = {"baselines": baselines.to_dict(), "classification": {}}

    methods = METHODS if args.method == "all" else (args.method,)
    if "iic" in methods:
        spec = model_spec_for(train_ds, args.arch, seed=args.seed, hidden_size=args.hidden_size)
        result = train(spec, train_ds, eval_ds, cfg)
        summary["training"] = result.metrics()
        summary["classification"]["iic"] = classification_metrics(result.model, eval_ds)
        manifest.outputs.append(save_checkpoint(
            result.model, os.path.join(args.out, MODEL_FILE),
            {"baselines": baselines.to_dict(), "training": result.metrics()},
        ))
    if "lcbm" in methods:
        lcbm = LCBMModel().fit(train_ds, baselines)
        summary["classification"]["lcbm"] = classification_metrics(lcbm, eval_ds)
        manifest.outputs.append(lcbm.save_model(os.path.join(args.out, LCBM_FILE)))
    if "fcshap" in methods:
        fcshap = FCSHAPModel(seed=args.seed).fit(train_ds, eval_ds)
        summary["classification"]["fcshap"] = classification_metrics(fcshap, eval_ds)
        manifest.outputs.append(fcshap.save_model(os.path.join(args.out, FCSHAP_FILE)))

    manifest.config.update(cfg.to_dict())
    manifest.outputs.append(write_json(os.path.join(args.out, "training.json"), summary,
                                       required_keys=("baselines", "classification")))
    return 0


def cmd_explain(args, manifest: RunManifest) -> int:
    """윈도우별 설명 생성"""
    from decomposition.decomposer import decomposer, dump_components
    from explainers.explanation import save_explanations
    from explainers.fcshap import FCSHAPModel
    from explainers.iic import IICConfig, IICExplainer
    from explainers.lcbm import LCBMModel
    from models.checkpoint import load_checkpoint
    from signals.types import BaselineSet
    from utils.artifacts import write_json

    threshold = args.threshold
    if threshold is None:
        threshold = IIC_THRESHOLD if args.method == "iic" else SUFFICIENCY_TAU[args.method]
    iic_cfg = IICConfig(epochs=args.epochs, lr=args.lr, max_deg=args.max_deg, penalty=args.penalty,
                        threshold=threshold, seed=args.seed)

    dataset, data_path = _load_split(args.data, args.split)
    manifest.inputs.append(data_path)
    if dataset.is_empty:
        logger.warning(f"빈 데이터셋: {data_path} - 빈 설명 파일을 만듭니다")

    if args.method == "iic":
        model, metadata = load_checkpoint(os.path.join(args.model, MODEL_FILE))
        baselines = BaselineSet.from_dict(metadata["baselines"])
        batch = IICExplainer(model, baselines, iic_cfg).batch_explain(dataset, jobs=args.jobs)
        manifest.config.update(iic_cfg.to_dict())
    elif args.method == "lcbm":
        lcbm = LCBMModel.load_model(os.path.join(args.model, LCBM_FILE))
        baselines = lcbm.baselines
        batch = lcbm.explain_dataset(dataset, threshold)
        manifest.config.update({"threshold": threshold})
    else:
        fcshap = FCSHAPModel.load_model(os.path.join(args.model, FCSHAP_FILE))
        baselines = None
        batch = fcshap.explain_dataset(dataset, threshold, jobs=args.jobs)
        manifest.config.update({"threshold": threshold})

    manifest.outputs.append(save_explanations(batch.explanations,
                                              os.path.join(args.out, f"explanations_{args.method}.json")))
    if batch.failures:
        manifest.outputs.append(write_json(os.path.join(args.out, f"failures_{args.method}.json"),
                                           batch.summary(), required_keys=("succeeded", "failed")))
        logger.warning(f"설명 실패 {len(batch.failures)}개: {[f['window_id'] for f in batch.failures]}")

    if args.dump_components:
        if baselines is None:
            from signals.preprocessing import compute_baselines
            train_ds, _ = _load_split(args.data, "train")
            baselines = compute_baselines(train_ds)
        for window in dataset.windows:
            cs = decomposer.decompose(window, baselines)
            manifest.outputs.append(write_json(
                os.path.join(args.out, "components", f"{window.window_id}.json"), dump_components(cs),
                required_keys=("window_id", "components", "aux", "baselines"),
            ))
        # components/ 아래 파일은 이 디렉토리의 manifest.json에 상대 경로로 기록
        manifest.config["components_dir"] = "components"
    return 0


def cmd_evaluate(args, manifest: RunManifest) -> int:
    """분류 지표와 fidelity / sufficiency 계산"""
    from evaluation.faithfulness import ComponentMasker, FaithfulnessEvaluator, FeatureMasker
    from evaluation.metrics import classification_metrics
    from explainers.explanation import load_explanations
    from explainers.fcshap import FCSHAPModel
    from explainers.lcbm import LCBMModel
    from models.checkpoint import load_checkpoint
    from signals.types import BaselineSet
    from utils.artifacts import write_csv, write_json

    ks = _parse_k_list(args.fidelity_k)
    eval_ds, eval_path = _load_split(args.data, "eval")
    manifest.inputs.append(eval_path)

    methods = [m for m in METHODS
               if (args.method in ("all", m)) and os.path.exists(os.path.join(args.explanations, f"explanations_{m}.json"))]
    if not methods:
        raise MissingInputError(f"{args.explanations}에 평가할 설명 파일이 없습니다")

    frames, classification, reports = [], {}, {}
    for method in methods:
        tau = args.sufficiency_tau if args.sufficiency_tau is not None else SUFFICIENCY_TAU[method]
        explanations_path = os.path.join(args.explanations, f"explanations_{method}.json")
        explanations = load_explanations(explanations_path)
        manifest.inputs.append(explanations_path)

        if method == "iic":
            model, metadata = load_checkpoint(os.path.join(args.model, MODEL_FILE))
            masker = ComponentMasker(model, BaselineSet.from_dict(metadata["baselines"]), eval_ds, jobs=args.jobs)
            importances = explanations
            model_like = model
        elif method == "lcbm":
            model_like = LCBMModel.load_model(os.path.join(args.model, LCBM_FILE))
            masker = FeatureMasker(model_like, eval_ds)
            importances = model_like.global_importances()[1]
        else:
            model_like = FCSHAPModel.load_model(os.path.join(args.model, FCSHAP_FILE))
            masker = FeatureMasker(model_like, eval_ds)
            importances = explanations

        classification[method] = classification_metrics(model_like, eval_ds)
        evaluator = FaithfulnessEvaluator(masker, method)
        method_reports = evaluator.evaluate(importances, ks, tau, RANDOM_MASK_REPEATS, args.seed)
        reports[method] = [r.to_dict() for r in method_reports]

        rows = pd.DataFrame([
            {"metric": f"{method}.accuracy", "param": None, "value": classification[method]["accuracy"]},
            {"metric": f"{method}.f1", "param": None, "value": classification[method]["f1"]},
        ], columns=["metric", "param", "value"])
        frames.extend([rows, evaluator.to_frame(method_reports)])

    metrics = pd.concat(frames, ignore_index=True)
    manifest.config.update({"fidelity_k": ks, "sufficiency_tau": args.sufficiency_tau, "methods": methods})
    manifest.outputs.append(write_csv(os.path.join(args.out, "metrics.csv"), metrics, ["metric", "param", "value"]))
    manifest.outputs.append(write_json(os.path.join(args.out, "evaluation.json"),
                                       {"classification": classification, "flip_reports": reports},
                                       required_keys=("classification", "flip_reports")))
    return 0


def cmd_report(args, manifest: RunManifest) -> int:
    """전역 설명 집계와 보고서"""
    from evaluation.global_explanation import aggregate_global, frequent_component_sets, local_explanation_table
    from evaluation.report_generator import ReportGenerator
    from explainers.explanation import load_explanations
    from utils.artifacts import read_json, write_csv

    globals_by_method, itemsets = {}, {}
    for method in METHODS:
        path = os.path.join(args.explanations, f"explanations_{method}.json")
        if not os.path.exists(path):
            continue
        explanations = load_explanations(path)
        manifest.inputs.append(path)
        if not explanations:
            logger.warning(f"[{method}] 설명이 비어 있어 집계하지 않습니다")
            continue
        globals_by_method[method] = aggregate_global(explanations, top_k=args.top_k)
        itemsets[method] = frequent_component_sets(explanations)
        if args.window_id:
            chosen = [e for e in explanations if e.window_id == args.window_id]
            if chosen:
                table = local_explanation_table(chosen[0])
                manifest.outputs.append(write_csv(os.path.join(args.out, f"local_{method}.csv"),
                                                  table, list(table.columns)))
    if not globals_by_method:
        raise MissingInputError(f"{args.explanations}에 집계할 설명이 없습니다")

    metrics = pd.DataFrame(columns=["metric", "param", "value"])
    classification = {}
    if args.evaluation:
        metrics_path = os.path.join(args.evaluation, "metrics.csv")
        if not os.path.exists(metrics_path):
            raise MissingInputError(f"지표 파일을 찾을 수 없음: {metrics_path}")
        metrics = pd.read_csv(metrics_path)
        classification = read_json(os.path.join(args.evaluation, "evaluation.json")).get("classification", {})
        manifest.inputs.append(metrics_path)

    manifest.outputs.extend(ReportGenerator().generate_report(
        metrics, globals_by_method, classification, itemsets,
        context={"task": args.task or "-", "seed": args.seed}, out_dir=args.out,
    ))
    return 0


COMMANDS = {
    "generate": cmd_generate,
    "train": cmd_train,
    "explain": cmd_explain,
    "evaluate": cmd_evaluate,
    "report": cmd_report,
}


# -----------------------------------------------------------------------------
# 인자 파서
# -----------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description="IIC 설명 툴킷 (합성 생성 → 학습 → 설명 → 평가 → 보고서)")
    parser.add_argument("--config", type=str, default=None, help="key=value 설정 파일 (플래그 기본값)")
    subparsers = parser.add_subparsers(dest="command", required=True)

    def common(sub, jobs: bool = True):
        sub.add_argument("--seed", type=int, default=DEFAULT_SEED, help="난수 시드")
        if jobs:
            sub.add_argument("--jobs", type=int, default=DEFAULT_JOBS, help="병렬 스레드 수")
        sub.add_argument("--out", type=str, required=True, help="출력 디렉토리")
        sub.add_argument("--config", type=str, default=None, help=argparse.SUPPRESS)

    sub = subparsers.add_parser("generate", help="합성 데이터셋 생성")
    sub.add_argument("--task", choices=["state", "seizure"], default="state", help="합성 과제")
    sub.add_argument("--n-subjects", type=int, default=10, help="피험자 수")
    sub.add_argument("--windows-per-class", type=int, default=10, help="피험자별 클래스당 윈도우 수")
    sub.add_argument("--format", choices=["csv", "json"], default="csv", help="데이터 파일 형식")
    common(sub)

    sub = subparsers.add_parser("train", help="분류 모델 학습")
    sub.add_argument("--data", type=str, required=True, help="train/eval 데이터 디렉토리")
    sub.add_argument("--method", choices=list(METHODS) + ["all"], default="all", help="학습할 모델")
    sub.add_argument("--arch", choices=["fcn", "lstm", "transformer"], default=MODEL_ARCH, help="신경망 구조")
    sub.add_argument("--epochs", type=int, default=TRAIN_EPOCHS, help="학습 에폭")
    sub.add_argument("--lr", type=float, default=TRAIN_LR, help="학습률")
    sub.add_argument("--restarts", type=int, default=TRAIN_RESTARTS, help="초기화 반복 횟수")
    sub.add_argument("--hidden-size", type=int, default=HIDDEN_SIZE, help="은닉 크기")
    common(sub, jobs=False)

    sub = subparsers.add_parser("explain", help="윈도우별 설명 생성")
    sub.add_argument("--data", type=str, required=True, help="데이터 디렉토리")
    sub.add_argument("--model", type=str, required=True, help="학습 출력 디렉토리")
    sub.add_argument("--method", choices=list(METHODS), default="iic", help="설명 방법")
    sub.add_argument("--split", choices=["train", "eval"], default="eval", help="설명할 분할")
    sub.add_argument("--epochs", type=int, default=IIC_EPOCHS, help="IIC 최적화 에폭")
    sub.add_argument("--lr", type=float, default=IIC_LR, help="IIC 학습률")
    sub.add_argument("--max-deg", type=float, default=IIC_MAX_DEG, help="허용 출력 저하량")
    sub.add_argument("--penalty", type=float, default=IIC_PENALTY, help="저하량 초과 벌점 계수")
    sub.add_argument("--threshold", type=float, default=None,
                     help="이진 중요도 임계값 (기본: iic 0.01, lcbm 0.01, fcshap 0.02)")
    sub.add_argument("--dump-components", action="store_true", help="윈도우별 분해 결과 JSON 저장")
    common(sub)

    sub = subparsers.add_parser("evaluate", help="분류 지표와 충실도 평가")
    sub.add_argument("--data", type=str, required=True, help="데이터 디렉토리")
    sub.add_argument("--model", type=str, required=True, help="학습 출력 디렉토리")
    sub.add_argument("--explanations", type=str, required=True, help="설명 출력 디렉토리")
    sub.add_argument("--method", choices=list(METHODS) + ["all"], default="all", help="평가할 방법")
    sub.add_argument("--fidelity-k", type=str, default=",".join(str(k) for k in FIDELITY_K),
                     help="fidelity k 목록 (쉼표 구분)")
    sub.add_argument("--sufficiency-tau", type=float, default=None,
                     help="sufficiency 임계값 (기본: 방법별 0.01/0.01/0.02)")
    common(sub)

    sub = subparsers.add_parser("report", help="전역 설명 집계와 보고서")
    sub.add_argument("--explanations", type=str, required=True, help="설명 출력 디렉토리")
    sub.add_argument("--evaluation", type=str, default=None, help="평가 출력 디렉토리")
    sub.add_argument("--top-k", type=int, default=GLOBAL_TOP_K, help="전역 순위표 행 수")
    sub.add_argument("--task", type=str, default=None, help="보고서 표시용 과제 이름")
    sub.add_argument("--window-id", type=str, default=None, help="로컬 설명표를 만들 윈도우 ID")
    common(sub, jobs=False)
    return parser


def _apply_config_defaults(parser: argparse.ArgumentParser, argv: List[str]):
    """--config 파일 값을 서브커맨드 플래그 기본값으로 적용"""
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config", type=str, default=None)
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return None
    settings = load_settings(known.config)
    for action in parser._subparsers._group_actions:
        for sub in action.choices.values():
            dests = {a.dest for a in sub._actions}
            sub.set_defaults(**{k: v for k, v in settings.items() if k in dests})
    return known.config


def main(argv: Optional[List[str]] = None) -> int:
    """메인 실행 함수"""
    argv = sys.argv[1:] if argv is None else argv
    parser = build_parser()
    try:
        config_path = _apply_config_defaults(parser, argv)
    except IICToolkitError as e:
        parser.error(str(e))
    args = parser.parse_args(argv)
    if getattr(args, "jobs", 1) < 1:
        parser.error("--jobs는 1 이상이어야 합니다")

    logger.info(f"IIC 툴킷 시작 - 명령: {args.command}")
    manifest = RunManifest(command=args.command, seed=args.seed,
                           config={k: v for k, v in vars(args).items() if k != "config"})
    if config_path:
        manifest.inputs.append(config_path)

    run_log = None
    try:
        run_log = attach_run_log(args.out)
        code = COMMANDS[args.command](args, manifest)
        manifest.write(args.out)
        return code
    except InvalidConfigError as e:
        # 플래그 값 검증 실패는 사용법 오류
        parser.error(str(e))
    except KeyboardInterrupt:
        logger.info("사용자에 의해 중단됨")
        return 1
    except Exception as e:
        log_error(logger, e, f"{args.command} 실행")
        return 1
    finally:
        logger.info(f"IIC 툴킷 종료 - 명령: {args.command}")
        if run_log is not None:
            detach_run_log(run_log)


if __name__ == "__main__":
    sys.exit(main())
