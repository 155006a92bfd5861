"""
설명 평가 보고서 생성 모듈
지표 CSV, 전역 설명 JSON, 분포 CSV와 HTML 요약을 만듭니다. (그래프는 그리지 않고 plot-ready CSV만 출력)
"""

import os
from typing import Dict, List, Optional

import jinja2
import pandas as pd

from config import REPORTS_DIR
from evaluation.global_explanation import DISTRIBUTION_COLUMNS, GlobalExplanation
from utils.artifacts import write_csv, write_json, write_text
from utils.logger import setup_logger

logger = setup_logger("report_generator")

METRICS_COLUMNS = ["metric", "param", "value"]
RANKING_COLUMNS = ["name", "importance", "normalized", "rank"]
ITEMSET_COLUMNS = ["itemset", "size", "support"]

HTML_TEMPLATE = """<!DOCTYPE html>
<html lang="ko">
<head>
    <meta charset="UTF-8">
    <title>IIC 설명 평가 보고서</title>
    <style>
        body { font-family: Arial, sans-serif; margin: 20px; }
        .section { margin-bottom: 30px; }
        table { border-collapse: collapse; margin-top: 10px; }
        th, td { padding: 6px 10px; text-align: left; border-bottom: 1px solid #ddd; }
        th { background-color: #f2f2f2; }
    </style>
</head>
<body>
    <h1>IIC 설명 평가 보고서</h1>
    <p>과제: {{ task }} | 시드: {{ seed }}</p>

    <div class="section">
        <h2>1. 분류 성능</h2>
        <table>
            <tr><th>방법</th><th>Accuracy</th><th>F1</th><th>n</th></tr>
            {% for method, m in classification.items() %}
            <tr><td>{{ method }}</td><td>{{ m.accuracy | percent }}</td><td>{{ m.f1 | decimal }}</td><td>{{ m.n }}</td></tr>
            {% endfor %}
        </table>
    </div>

    <div class="section">
        <h2>2. 충실도 (플립률)</h2>
        <table>
            <tr><th>지표</th><th>k / τ</th><th>플립률</th></tr>
            {% for row in metrics %}
            <tr><td>{{ row.metric }}</td><td>{{ row.param if row.param is not none else "-" }}</td><td>{{ row.value | percent }}</td></tr>
            {% endfor %}
        </table>
    </div>

    <div class="section">
        <h2>3. 전역 중요 컴포넌트 (상위 {{ top_k }})</h2>
        {% for method, g in globals.items() %}
        <h3>{{ method }} (n={{ g.n_explanations }})</h3>
        <table>
            <tr><th>순위</th><th>이름</th><th>정규화 중요도</th></tr>
            {% for row in g.ranking %}
            <tr><td>{{ row.rank }}</td><td>{{ row.name }}</td><td>{{ row.normalized | decimal }}</td></tr>
            {% endfor %}
        </table>
        {% endfor %}
    </div>

    {% if itemsets %}
    <div class="section">
        <h2>4. 자주 함께 유지되는 컴포넌트</h2>
        {% for method, rows in itemsets.items() %}
        <h3>{{ method }}</h3>
        <table>
            <tr><th>조합</th><th>지지도</th></tr>
            {% for row in rows %}
            <tr><td>{{ row.itemset }}</td><td>{{ row.support | percent }}</td></tr>
            {% endfor %}
        </table>
        {% endfor %}
    </div>
    {% endif %}
</body>
</html>
"""


class ReportGenerator:
    """설명 평가 보고서 생성 클래스"""

    def __init__(self, reports_dir: str = REPORTS_DIR):
        self.reports_dir = reports_dir

    def generate_report(self, metrics: pd.DataFrame, globals_by_method: Dict[str, GlobalExplanation],
                        classification: Optional[Dict[str, Dict]] = None,
                        itemsets: Optional[Dict[str, pd.DataFrame]] = None,
                        context: Optional[Dict] = None, out_dir: Optional[str] = None) -> List[str]:
        """
        보고서 생성

        Args:
            metrics: metric, param, value 열의 충실도 지표
            globals_by_method: {방법: GlobalExplanation}
            classification: {방법: 분류 지표}
            itemsets: {방법: 빈발 조합표}
            context: task, seed 등 표시용 정보
            out_dir: 출력 디렉토리 (None이면 reports_dir)

        Returns:
            List[str]: 생성된 파일 경로
        """
        out_dir = out_dir or self.reports_dir
        os.makedirs(out_dir, exist_ok=True)
        classification = classification or {}
        itemsets = itemsets or {}
        context = context or {}
        logger.info(f"보고서 생성 시작: {out_dir}")

        metrics = metrics[METRICS_COLUMNS]
        # 분류 지표 행은 param이 비어 있음 (JSON에는 null)
        records = metrics.astype(object).where(metrics.notna(), None).to_dict(orient="records")
        written = [write_csv(os.path.join(out_dir, "metrics.csv"), metrics, METRICS_COLUMNS)]
        written.extend(self._export_csv_data(out_dir, globals_by_method, itemsets))

        payload = {
            "context": context,
            "classification": classification,
            "metrics": records,
            "global": {method: g.to_dict() for method, g in globals_by_method.items()},
        }
        written.append(write_json(os.path.join(out_dir, "report.json"), payload,
                                  required_keys=("context", "classification", "metrics", "global")))
        written.append(self._generate_html_report(out_dir, records, globals_by_method,
                                                   classification, itemsets, context))
        logger.info(f"보고서 생성 완료: 파일 {len(written)}개")
        return written

    def _export_csv_data(self, out_dir: str, globals_by_method: Dict[str, GlobalExplanation],
                         itemsets: Dict[str, pd.DataFrame]) -> List[str]:
        """방법별 순위표/분포/빈발 조합 CSV"""
        written = []
        for method, g in globals_by_method.items():
            written.append(write_csv(os.path.join(out_dir, f"global_{method}.csv"),
                                     g.ranking[RANKING_COLUMNS], RANKING_COLUMNS))
            written.append(write_csv(os.path.join(out_dir, f"distributions_{method}.csv"),
                                     g.distributions[DISTRIBUTION_COLUMNS], DISTRIBUTION_COLUMNS))
        for method, table in itemsets.items():
            written.append(write_csv(os.path.join(out_dir, f"itemsets_{method}.csv"),
                                     table[ITEMSET_COLUMNS], ITEMSET_COLUMNS))
        return written

    def _generate_html_report(self, out_dir: str, metrics: List[Dict],
                              globals_by_method: Dict[str, GlobalExplanation],
                              classification: Dict[str, Dict], itemsets: Dict[str, pd.DataFrame],
                              context: Dict) -> str:
        """HTML 보고서 생성 (시각 정보 없이 재실행 시 같은 내용)"""
        template_data = {
            "task": context.get("task", "-"),
            "seed": context.get("seed", "-"),
            "top_k": max((len(g.ranking) for g in globals_by_method.values()), default=0),
            "classification": classification,
            "metrics": metrics,
            "globals": {
                method: {"n_explanations": g.n_explanations, "ranking": g.ranking.to_dict(orient="records")}
                for method, g in globals_by_method.items()
            },
            "itemsets": {method: table.head(10).to_dict(orient="records") for method, table in itemsets.items()},
        }

        # 커스텀 필터 정의
        def percent_filter(value):
            return f"{value:.1%}"

        def decimal_filter(value):
            return f"{value:.3f}"

        env = jinja2.Environment(autoescape=True)
        env.filters["percent"] = percent_filter
        env.filters["decimal"] = decimal_filter

        html_content = env.from_string(HTML_TEMPLATE).render(**template_data)
        return write_text(os.path.join(out_dir, "report.html"), html_content)


# 전역 보고서 생성기 인스턴스
report_generator = ReportGenerator()

def generate_report(metrics: pd.DataFrame, globals_by_method: Dict[str, GlobalExplanation],
                    classification: Optional[Dict[str, Dict]] = None,
                    itemsets: Optional[Dict[str, pd.DataFrame]] = None,
                    context: Optional[Dict] = None, out_dir: Optional[str] = None) -> List[str]:
    """
    편의 함수: 설명 평가 보고서 생성

    Returns:
        List[str]: 생성된 파일 경로
    """
    return report_generator.generate_report(metrics, globals_by_method, classification, itemsets, context, out_dir)
