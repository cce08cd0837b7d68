"""Statistics relating metric scores to human judgment.

Pearson r, Spearman rho (average ranks under ties), Kendall tau-b
(tie-corrected, suited to the heavy ties of 2- and 3-point rating scales),
Cohen's kappa for inter-annotator agreement, plus per-criterion aggregation
and tabular report output.
"""

import csv
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import math

import numpy as np

from .core import AnnotationRecord, annotations_by_instance
from .errors import UndefinedStatisticError, ValidationError

CRITERIA = ("grammaticality", "answerability", "relevance")


def _paired_arrays(x: Sequence[float], y: Sequence[float], min_n: int = 3) -> tuple[np.ndarray, np.ndarray]:
    xa = np.asarray(x, dtype=float)
    ya = np.asarray(y, dtype=float)
    if xa.ndim != 1 or ya.ndim != 1 or xa.size != ya.size:
        raise ValueError("inputs must be 1-d sequences of equal length")
    if xa.size < min_n:
        raise ValueError(f"need at least {min_n} paired observations, got {xa.size}")
    return xa, ya


def _clip_coefficient(value: float) -> float:
    return float(min(1.0, max(-1.0, value)))


def pearson(x: Sequence[float], y: Sequence[float]) -> float:
    """Product-moment correlation; undefined when either input is constant."""
    xa, ya = _paired_arrays(x, y)
    dx = xa - xa.mean()
    dy = ya - ya.mean()
    denom = np.sqrt((dx * dx).sum() * (dy * dy).sum())
    if denom == 0:
        raise UndefinedStatisticError("pearson is undefined for constant input")
    return _clip_coefficient((dx * dy).sum() / denom)


def average_ranks(values: Sequence[float]) -> np.ndarray:
    """1-based ranks with ties assigned the mean of their rank run."""
    arr = np.asarray(values, dtype=float)
    order = np.argsort(arr, kind="stable")
    ranks = np.empty(arr.size, dtype=float)
    i = 0
    while i < arr.size:
        j = i
        while j + 1 < arr.size and arr[order[j + 1]] == arr[order[i]]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def spearman(x: Sequence[float], y: Sequence[float]) -> float:
    """Pearson correlation of average ranks; exact by construction."""
    xa, ya = _paired_arrays(x, y)
    return pearson(average_ranks(xa), average_ranks(ya))


def _merge_count_inversions(values: list[float]) -> int:
    """Count inversions while merge-sorting ``values`` in place."""
    if len(values) < 2:
        return 0
    mid = len(values) // 2
    left = values[:mid]
    right = values[mid:]
    inversions = _merge_count_inversions(left) + _merge_count_inversions(right)
    i = j = k = 0
    while i < len(left) and j < len(right):
        if left[i] <= right[j]:
            values[k] = left[i]
            i += 1
        else:
            values[k] = right[j]
            j += 1
            inversions += len(left) - i
        k += 1
    while i < len(left):
        values[k] = left[i]
        i += 1
        k += 1
    while j < len(right):
        values[k] = right[j]
        j += 1
        k += 1
    return inversions


def _tie_pair_count(values: Iterable) -> int:
    runs: dict = {}
    for value in values:
        runs[value] = runs.get(value, 0) + 1
    return sum(t * (t - 1) // 2 for t in runs.values())


def kendall(x: Sequence[float], y: Sequence[float]) -> float:
    """Kendall tau-b over all pairs, with tie correction in both arguments.

    Uses the merge-sort discordance count, so the pair counts stay exact
    integers and the tau of small untied inputs comes out to the exact
    rational (e.g. a single adjacent swap of three items is exactly 1/3).
    """
    xa, ya = _paired_arrays(x, y)
    if np.all(xa == xa[0]) or np.all(ya == ya[0]):
        raise UndefinedStatisticError("kendall is undefined for constant input")
    n = int(xa.size)
    pairs = sorted(zip(xa.tolist(), ya.tolist()))
    discordant = _merge_count_inversions([b for _, b in pairs])
    total = n * (n - 1) // 2
    ties_x = _tie_pair_count(a for a, _ in pairs)
    ties_y = _tie_pair_count(b for _, b in pairs)
    ties_both = _tie_pair_count(pairs)
    concordant_minus_discordant = total - ties_x - ties_y + ties_both - 2 * discordant
    denominator = math.sqrt((total - ties_x) * (total - ties_y))
    return _clip_coefficient(concordant_minus_discordant / denominator)


def cohens_kappa(a: Sequence, b: Sequence) -> float:
    """Chance-corrected agreement (p_o - p_e) / (1 - p_e) over a shared label space."""
    if len(a) != len(b) or len(a) < 1:
        raise ValueError("label sequences must be nonempty and of equal length")
    n = len(a)
    observed = sum(1 for la, lb in zip(a, b) if la == lb) / n
    counts_a: dict = {}
    counts_b: dict = {}
    for la, lb in zip(a, b):
        counts_a[la] = counts_a.get(la, 0) + 1
        counts_b[lb] = counts_b.get(lb, 0) + 1
    expected = sum(
        counts_a[label] * counts_b.get(label, 0) for label in counts_a
    ) / (n * n)
    if expected == 1.0:
        raise UndefinedStatisticError("cohens_kappa is undefined when chance agreement is 1")
    return (observed - expected) / (1.0 - expected)


@dataclass(frozen=True, slots=True)
class CorrelationReport:
    """Correlation of one metric with one human criterion over n instances."""

    metric_name: str
    criterion: str
    pearson: float
    spearman: float
    kendall: float
    n: int
    excluded_ids: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if self.criterion not in CRITERIA:
            raise ValidationError(f"criterion must be one of {CRITERIA}, got {self.criterion!r}")
        if self.n < 3:
            raise ValidationError(f"need at least 3 paired instances, got n={self.n}")
        for name in ("pearson", "spearman", "kendall"):
            value = getattr(self, name)
            if not -1.0 <= value <= 1.0:
                raise ValidationError(f"{name}={value} outside [-1, 1]")


def mean_criterion_by_instance(
    annotations: Iterable[AnnotationRecord], criterion: str
) -> dict[str, float]:
    """Per-instance human score: mean over annotators of the chosen criterion."""
    if criterion not in CRITERIA:
        raise ValueError(f"criterion must be one of {CRITERIA}, got {criterion!r}")
    means: dict[str, float] = {}
    for instance_id, records in annotations_by_instance(annotations).items():
        means[instance_id] = sum(getattr(r, criterion) for r in records) / len(records)
    return means


def correlate_with_human(
    scores: Mapping[str, float],
    annotations: Iterable[AnnotationRecord],
    criterion: str,
    *,
    metric_name: str = "metric",
    aggregation: str = "mean",
) -> CorrelationReport:
    """Correlate per-instance metric scores against averaged human ratings.

    Instances without any annotation are excluded (never imputed) and listed
    on the report.
    """
    if aggregation != "mean":
        raise ValueError(f"unsupported aggregation {aggregation!r}")
    human = mean_criterion_by_instance(annotations, criterion)
    paired_ids = [iid for iid in scores if iid in human]
    excluded = tuple(iid for iid in scores if iid not in human)
    metric_values = [scores[iid] for iid in paired_ids]
    human_values = [human[iid] for iid in paired_ids]
    if len(paired_ids) < 3:
        raise ValueError(f"need at least 3 annotated instances, got {len(paired_ids)}")
    return CorrelationReport(
        metric_name=metric_name,
        criterion=criterion,
        pearson=pearson(metric_values, human_values),
        spearman=spearman(metric_values, human_values),
        kendall=kendall(metric_values, human_values),
        n=len(paired_ids),
        excluded_ids=excluded,
    )


def pairwise_annotator_kappa(
    annotations: Iterable[AnnotationRecord],
) -> dict[tuple[str, str], float]:
    """Cohen's kappa between each annotator pair on shared instances.

    Labels are the per-question sums of the three criteria, treated as
    nominal categories.
    """
    by_annotator: dict[str, dict[str, int]] = {}
    for record in annotations:
        total = record.grammaticality + record.answerability + record.relevance
        by_annotator.setdefault(record.annotator_id, {})[record.instance_id] = total
    names = sorted(by_annotator)
    agreement: dict[tuple[str, str], float] = {}
    for i, first in enumerate(names):
        for second in names[i + 1 :]:
            shared = sorted(set(by_annotator[first]) & set(by_annotator[second]))
            if not shared:
                continue
            a = [by_annotator[first][iid] for iid in shared]
            b = [by_annotator[second][iid] for iid in shared]
            agreement[(first, second)] = cohens_kappa(a, b)
    return agreement


# -- report output --


def correlation_table(reports: Sequence[CorrelationReport]) -> dict:
    """Nested dict: metric -> criterion -> {pearson, spearman, kendall, n}."""
    table: dict[str, dict[str, dict]] = {}
    for report in reports:
        table.setdefault(report.metric_name, {})[report.criterion] = {
            "pearson": report.pearson,
            "spearman": report.spearman,
            "kendall": report.kendall,
            "n": report.n,
        }
    return table


def write_correlation_json(reports: Sequence[CorrelationReport], path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = {
        "table": correlation_table(reports),
        "excluded_ids": sorted({iid for r in reports for iid in r.excluded_ids}),
    }
    path.write_text(json.dumps(payload, ensure_ascii=False, indent=2) + "\n", encoding="utf-8")
    return path


def write_correlation_csv(reports: Sequence[CorrelationReport], path: str | Path) -> Path:
    """Rows are metrics; column groups are criteria x (pearson, spearman, kendall)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    table = correlation_table(reports)
    header = ["metric"]
    for criterion in CRITERIA:
        header += [f"{criterion}_pearson", f"{criterion}_spearman", f"{criterion}_kendall"]
    with path.open("w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(header)
        for metric_name in sorted(table):
            row: list = [metric_name]
            for criterion in CRITERIA:
                cell = table[metric_name].get(criterion)
                if cell is None:
                    row += ["", "", ""]
                else:
                    row += [f"{cell['pearson']:.6f}", f"{cell['spearman']:.6f}", f"{cell['kendall']:.6f}"]
            writer.writerow(row)
    return path
