"""
Confusion matrix, per-class precision/recall/F1/support, accuracy and
macro/weighted averages, rendered as text, CSV, JSON and an SVG heatmap.

Undefined precision or recall (empty column or row) is reported as 0.0 and
flagged rather than dropped, so macro averages always run over the whole
label set.
"""
import csv
import io
import json
import logging
from decimal import ROUND_HALF_UP, Decimal
from enum import Enum
from typing import FrozenSet, List, Optional, Sequence, Tuple

import numpy as np
from jinja2 import Template
from pydantic import BaseModel, ConfigDict
from sklearn.metrics import confusion_matrix as sk_confusion_matrix

from ..errors import EmptyEvaluation, LengthMismatch, UnknownLabel
from .taxonomy import LabelSet

logger = logging.getLogger(__name__)


class ZeroDivisionFlag(str, Enum):
    PRECISION_UNDEFINED = "PrecisionUndefined"
    RECALL_UNDEFINED = "RecallUndefined"


class ReportFormat(str, Enum):
    TEXT = "text"
    CSV = "csv"
    JSON = "json"


class ConfusionMatrix(BaseModel):
    model_config = ConfigDict(frozen=True)

    labels: LabelSet
    counts: Tuple[Tuple[int, ...], ...]

    @property
    def array(self) -> np.ndarray:
        return np.array(self.counts, dtype=np.int64).reshape(len(self.labels), len(self.labels))

    @property
    def total(self) -> int:
        return int(self.array.sum())


class ClassMetrics(BaseModel):
    model_config = ConfigDict(frozen=True)

    precision: float
    recall: float
    f1: float
    support: int
    zero_division_flags: FrozenSet[ZeroDivisionFlag] = frozenset()

    @staticmethod
    def f1_from(precision: float, recall: float) -> float:
        if precision + recall > 0:
            return 2 * precision * recall / (precision + recall)
        return 0.0

    @classmethod
    def from_scores(cls, precision: float, recall: float, support: int) -> "ClassMetrics":
        """Metrics from published precision/recall/support values"""
        return cls(precision=precision, recall=recall, f1=cls.f1_from(precision, recall), support=support)


class AverageMetrics(BaseModel):
    model_config = ConfigDict(frozen=True)

    precision: float
    recall: float
    f1: float


class Aggregates(BaseModel):
    model_config = ConfigDict(frozen=True)

    accuracy: float
    macro_avg: AverageMetrics
    weighted_avg: AverageMetrics
    total_support: int


class EvaluationReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    labels: LabelSet
    per_class: Tuple[ClassMetrics, ...]
    accuracy: float
    macro_avg: AverageMetrics
    weighted_avg: AverageMetrics
    total_support: int

    def for_label(self, gics_name: str) -> ClassMetrics:
        return self.per_class[self.labels.index_of(gics_name)]


def confusion_matrix(gold: Sequence[str], pred: Sequence[str], labels: LabelSet) -> ConfusionMatrix:
    if len(gold) != len(pred):
        raise LengthMismatch(len(gold), len(pred))
    if not gold:
        raise EmptyEvaluation()
    known = set(labels.gics_names)
    for name in list(gold) + list(pred):
        if name not in known:
            raise UnknownLabel(name)

    counts = sk_confusion_matrix(list(gold), list(pred), labels=labels.gics_names)
    return ConfusionMatrix(labels=labels, counts=tuple(tuple(int(c) for c in row) for row in counts))


def class_metrics(cm: ConfusionMatrix) -> List[ClassMetrics]:
    counts = cm.array
    tp = counts.diagonal()
    predicted = counts.sum(axis=0)
    support = counts.sum(axis=1)

    metrics = []
    for j in range(len(cm.labels)):
        flags = set()
        if predicted[j] > 0:
            precision = float(tp[j]) / float(predicted[j])
        else:
            precision = 0.0
            flags.add(ZeroDivisionFlag.PRECISION_UNDEFINED)
        if support[j] > 0:
            recall = float(tp[j]) / float(support[j])
        else:
            recall = 0.0
            flags.add(ZeroDivisionFlag.RECALL_UNDEFINED)
        metrics.append(ClassMetrics(
            precision=precision,
            recall=recall,
            f1=ClassMetrics.f1_from(precision, recall),
            support=int(support[j]),
            zero_division_flags=frozenset(flags),
        ))
    return metrics


def aggregate_metrics(per_class: Sequence[ClassMetrics], cm: Optional[ConfusionMatrix] = None) -> Aggregates:
    """Accuracy plus macro and support-weighted averages.

    Without a confusion matrix, accuracy is the support-weighted recall,
    which equals trace/total for single-label data.
    """
    total = sum(m.support for m in per_class)
    if total == 0:
        raise EmptyEvaluation()

    values = np.array([[m.precision, m.recall, m.f1] for m in per_class], dtype=float)
    supports = np.array([m.support for m in per_class], dtype=float)
    macro = values.mean(axis=0)
    weighted = (values * supports[:, None]).sum(axis=0) / total

    if cm is not None:
        accuracy = float(np.trace(cm.array)) / total
    else:
        accuracy = float(weighted[1])

    return Aggregates(
        accuracy=accuracy,
        macro_avg=AverageMetrics(precision=float(macro[0]), recall=float(macro[1]), f1=float(macro[2])),
        weighted_avg=AverageMetrics(precision=float(weighted[0]), recall=float(weighted[1]), f1=float(weighted[2])),
        total_support=total,
    )


def build_report(cm: ConfusionMatrix) -> EvaluationReport:
    per_class = class_metrics(cm)
    aggregates = aggregate_metrics(per_class, cm)
    return EvaluationReport(labels=cm.labels, per_class=tuple(per_class), **aggregates.model_dump())


def evaluate(gold: Sequence[str], pred: Sequence[str], labels: LabelSet) -> Tuple[ConfusionMatrix, EvaluationReport]:
    cm = confusion_matrix(gold, pred, labels)
    report = build_report(cm)
    logger.info(
        f"Evaluated {report.total_support} documents: accuracy {report.accuracy:.4f}, "
        f"weighted F1 {report.weighted_avg.f1:.4f}"
    )
    return cm, report


def round_display(value: float) -> str:
    """Two decimals, halves rounded away from zero"""
    return str(Decimal(repr(value)).quantize(Decimal("0.01"), rounding=ROUND_HALF_UP))


def _flags_text(metrics: ClassMetrics) -> str:
    return "|".join(sorted(flag.value for flag in metrics.zero_division_flags))


def _render_text(report: EvaluationReport) -> str:
    names = report.labels.display_names
    width = max([len("weighted avg")] + [len(name) for name in names])
    columns = ("precision", "recall", "f1-score", "support")

    def row(name: str, *cells: str) -> str:
        return f"{name:<{width}}" + "".join(f"  {cell:>9}" for cell in cells)

    lines = [row("", *columns)]
    for name, m in zip(names, report.per_class):
        lines.append(row(name, round_display(m.precision), round_display(m.recall), round_display(m.f1), str(m.support)))
    lines.append("")
    lines.append(row("accuracy", "", "", round_display(report.accuracy), str(report.total_support)))
    for name, avg in (("macro avg", report.macro_avg), ("weighted avg", report.weighted_avg)):
        lines.append(row(name, round_display(avg.precision), round_display(avg.recall),
                         round_display(avg.f1), str(report.total_support)))
    return "\n".join(lines) + "\n"


REPORT_CSV_COLUMNS = [
    "label", "precision", "recall", "f1", "support",
    "precision_display", "recall_display", "f1_display", "flags",
]


def _render_csv(report: EvaluationReport) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(REPORT_CSV_COLUMNS)
    for name, m in zip(report.labels.display_names, report.per_class):
        writer.writerow([
            name, repr(m.precision), repr(m.recall), repr(m.f1), m.support,
            round_display(m.precision), round_display(m.recall), round_display(m.f1), _flags_text(m),
        ])
    writer.writerow(["accuracy", "", "", repr(report.accuracy), report.total_support,
                     "", "", round_display(report.accuracy), ""])
    for name, avg in (("macro avg", report.macro_avg), ("weighted avg", report.weighted_avg)):
        writer.writerow([
            name, repr(avg.precision), repr(avg.recall), repr(avg.f1), report.total_support,
            round_display(avg.precision), round_display(avg.recall), round_display(avg.f1), "",
        ])
    return buffer.getvalue()


def _average_json(avg: AverageMetrics) -> dict:
    return {
        "precision": avg.precision,
        "recall": avg.recall,
        "f1": avg.f1,
        "display": {
            "precision": round_display(avg.precision),
            "recall": round_display(avg.recall),
            "f1": round_display(avg.f1),
        },
    }


def _render_json(report: EvaluationReport) -> str:
    per_class = []
    for label, m in zip(report.labels.labels, report.per_class):
        per_class.append({
            "label": label.display_name,
            "gics_name": label.gics_name,
            "precision": m.precision,
            "recall": m.recall,
            "f1": m.f1,
            "support": m.support,
            "display": {
                "precision": round_display(m.precision),
                "recall": round_display(m.recall),
                "f1": round_display(m.f1),
            },
            "flags": sorted(flag.value for flag in m.zero_division_flags),
        })
    document = {
        "per_class": per_class,
        "accuracy": report.accuracy,
        "accuracy_display": round_display(report.accuracy),
        "macro_avg": _average_json(report.macro_avg),
        "weighted_avg": _average_json(report.weighted_avg),
        "total_support": report.total_support,
    }
    return json.dumps(document, indent=2, ensure_ascii=False) + "\n"


def render_report(report: EvaluationReport, fmt: ReportFormat = ReportFormat.TEXT) -> str:
    fmt = ReportFormat(fmt)
    if fmt == ReportFormat.TEXT:
        return _render_text(report)
    if fmt == ReportFormat.CSV:
        return _render_csv(report)
    return _render_json(report)


CELL_SIZE = 64
LABEL_MARGIN = 420
EDGE_MARGIN = 16
# Fill runs linearly from white (count 0) to this colour (max count)
DARKEST_RGB = (8, 48, 107)

HEATMAP_TEMPLATE = Template(
    """<?xml version="1.0" encoding="UTF-8" standalone="no"?>
<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{{ size }}" height="{{ size }}" viewBox="0 0 {{ size }} {{ size }}">
<rect x="0" y="0" width="{{ size }}" height="{{ size }}" fill="#ffffff"/>
<g font-family="Helvetica, Arial, sans-serif" font-size="10">
{%- for label in row_labels %}
<text x="{{ label.x }}" y="{{ label.y }}" text-anchor="end" dominant-baseline="middle">{{ label.text }}</text>
{%- endfor %}
{%- for label in col_labels %}
<text x="{{ label.x }}" y="{{ label.y }}" text-anchor="start" dominant-baseline="middle" transform="rotate(-90 {{ label.x }} {{ label.y }})">{{ label.text }}</text>
{%- endfor %}
</g>
<g font-family="Helvetica, Arial, sans-serif" font-size="14" text-anchor="middle" dominant-baseline="middle">
{%- for cell in cells %}
<rect x="{{ cell.x }}" y="{{ cell.y }}" width="{{ cell_size }}" height="{{ cell_size }}" fill="{{ cell.fill }}" stroke="#d0d0d0" stroke-width="1"/>
<text x="{{ cell.cx }}" y="{{ cell.cy }}" fill="{{ cell.ink }}">{{ cell.count }}</text>
{%- endfor %}
</g>
</svg>
""",
    autoescape=True,
)


def _fill(count: int, max_count: int) -> Tuple[str, str]:
    t = count / max_count if max_count > 0 else 0.0
    rgb = [round(255 + (dark - 255) * t) for dark in DARKEST_RGB]
    ink = "#ffffff" if t > 0.5 else "#000000"
    return "#{:02x}{:02x}{:02x}".format(*rgb), ink


def render_heatmap(cm: ConfusionMatrix) -> str:
    """Standalone SVG 1.1 heatmap; rows are gold labels, columns predictions"""
    counts = cm.array
    k = len(cm.labels)
    max_count = int(counts.max()) if counts.size else 0
    size = CELL_SIZE * k + LABEL_MARGIN + EDGE_MARGIN
    half = CELL_SIZE // 2

    cells = []
    for i in range(k):
        for j in range(k):
            fill, ink = _fill(int(counts[i, j]), max_count)
            x = LABEL_MARGIN + j * CELL_SIZE
            y = LABEL_MARGIN + i * CELL_SIZE
            cells.append({
                "x": x, "y": y, "cx": x + half, "cy": y + half,
                "fill": fill, "ink": ink, "count": int(counts[i, j]),
            })
    row_labels = [
        {"x": LABEL_MARGIN - 8, "y": LABEL_MARGIN + i * CELL_SIZE + half, "text": name}
        for i, name in enumerate(cm.labels.display_names)
    ]
    col_labels = [
        {"x": LABEL_MARGIN + j * CELL_SIZE + half, "y": LABEL_MARGIN - 8, "text": name}
        for j, name in enumerate(cm.labels.display_names)
    ]
    return HEATMAP_TEMPLATE.render(
        size=size, cell_size=CELL_SIZE, cells=cells, row_labels=row_labels, col_labels=col_labels,
    )
