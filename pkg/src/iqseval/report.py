"""Reporting: ranking tables, annotator agreement, cross-task averages.

Human-readable renderings (tsv, markdown) round floats to 4 decimals; the
json_doc rendering keeps full precision for machine consumption.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from itertools import combinations
from typing import Any, Sequence

from .errors import DataError, UsageError
from .sweep import SweepStats
from .types import (
    AttributionSign,
    MethodScorecard,
    TaskKind,
    TaskSpec,
)

RENDER_FORMATS = ("tsv", "markdown", "json_doc")

ROW_SUM_TOL = 1e-9


@dataclass(frozen=True)
class TableDoc:
    """A rendered-format-agnostic table: title, column names, cell rows."""

    title: str
    columns: tuple[str, ...]
    rows: tuple[tuple[Any, ...], ...]


@dataclass(frozen=True)
class RankingRow:
    """One method's weighted term contributions; they must sum to the composite."""

    rank: int
    method_id: str
    weighted_plausibility: float
    weighted_simplicity: float
    weighted_reproducibility: float
    iqs: float

    def __post_init__(self) -> None:
        total = (
            self.weighted_plausibility
            + self.weighted_simplicity
            + self.weighted_reproducibility
        )
        if abs(total - self.iqs) > ROW_SUM_TOL:
            raise DataError(
                f"ranking row for {self.method_id!r}: contributions sum to {total!r}, "
                f"composite is {self.iqs!r}"
            )


@dataclass(frozen=True)
class RankingTable:
    task_id: str
    weights: tuple[float, float, float]
    rows: tuple[RankingRow, ...]

    def to_dict(self) -> dict[str, Any]:
        return {
            "task_id": self.task_id,
            "weights": list(self.weights),
            "rows": [
                {
                    "rank": r.rank,
                    "method_id": r.method_id,
                    "weighted_plausibility": r.weighted_plausibility,
                    "weighted_simplicity": r.weighted_simplicity,
                    "weighted_reproducibility": r.weighted_reproducibility,
                    "iqs": r.iqs,
                }
                for r in self.rows
            ],
        }

    def to_table(self) -> TableDoc:
        return TableDoc(
            title=f"method ranking for task {self.task_id}",
            columns=(
                "rank",
                "method",
                "plausibility",
                "simplicity",
                "reproducibility",
                "iqs",
            ),
            rows=tuple(
                (
                    r.rank,
                    r.method_id,
                    r.weighted_plausibility,
                    r.weighted_simplicity,
                    r.weighted_reproducibility,
                    r.iqs,
                )
                for r in self.rows
            ),
        )


def rank_methods(scorecards: Sequence[MethodScorecard]) -> RankingTable:
    """Order scorecards by composite score, ties broken by method id.

    All scorecards must share one task and one weight triple.
    """
    if not scorecards:
        raise UsageError("no scorecards to rank")
    task_ids = {c.task_id for c in scorecards}
    if len(task_ids) != 1:
        raise UsageError(f"cannot rank across tasks: {sorted(task_ids)}")
    weight_tuples = {c.weights.as_tuple() for c in scorecards}
    if len(weight_tuples) != 1:
        raise UsageError("cannot rank scorecards computed under different weights")
    methods = {c.method_id for c in scorecards}
    if len(methods) != len(scorecards):
        raise UsageError("duplicate method in ranking input")
    ordered = sorted(scorecards, key=lambda c: (-c.iqs, c.method_id))
    rows = tuple(
        RankingRow(
            rank=i + 1,
            method_id=c.method_id,
            weighted_plausibility=c.weights.alpha1 * c.plausibility,
            weighted_simplicity=c.weights.alpha2 * c.simplicity,
            weighted_reproducibility=c.weights.alpha3 * c.reproducibility,
            iqs=c.iqs,
        )
        for i, c in enumerate(ordered)
    )
    return RankingTable(
        task_id=scorecards[0].task_id,
        weights=scorecards[0].weights.as_tuple(),
        rows=rows,
    )


@dataclass(frozen=True)
class AgreementReport:
    """How often annotators gave the same answer for the same item.

    A group is one (sample, method) pair; groups with fewer than two
    responses cannot agree or disagree and are listed as excluded.
    """

    task_id: str
    n_groups: int
    unanimous_agreement: float
    pairwise_agreement: float
    excluded: tuple[tuple[str, str], ...]

    def to_dict(self) -> dict[str, Any]:
        return {
            "task_id": self.task_id,
            "n_groups": self.n_groups,
            "unanimous_agreement": self.unanimous_agreement,
            "pairwise_agreement": self.pairwise_agreement,
            "excluded": [list(pair) for pair in self.excluded],
        }

    def to_table(self) -> TableDoc:
        return TableDoc(
            title=f"annotator agreement for task {self.task_id}",
            columns=("groups", "unanimous_agreement", "pairwise_agreement", "excluded"),
            rows=(
                (
                    self.n_groups,
                    self.unanimous_agreement,
                    self.pairwise_agreement,
                    len(self.excluded),
                ),
            ),
        )


def agreement_rate(annotations: Sequence, task: TaskSpec) -> AgreementReport:
    """Label agreement over (sample, method) groups.

    Regression answers are binarized at the task threshold so that agreement
    means the same thing for both task kinds.
    """
    if task.kind is TaskKind.REGRESSION and task.threshold is None:
        raise UsageError(
            f"task {task.task_id!r}: agreement on regression answers needs a threshold"
        )

    def label(answer: str | float) -> str:
        if isinstance(answer, str):
            return answer
        if task.kind is TaskKind.BINARY_CLASSIFICATION:
            raise DataError("classification answers must be class names")
        assert task.threshold is not None
        sign = (
            AttributionSign.POSITIVE
            if float(answer) >= task.threshold
            else AttributionSign.NEGATIVE
        )
        return task.class_for_sign(sign)

    groups: dict[tuple[str, str], list[str]] = {}
    for record in annotations:
        groups.setdefault((record.sample_id, record.method_id), []).append(
            label(record.q1_answer)
        )

    excluded = tuple(sorted(pair for pair, labels in groups.items() if len(labels) < 2))
    usable = {pair: labels for pair, labels in groups.items() if len(labels) >= 2}
    if not usable:
        raise UsageError("no (sample, method) group has two or more annotations")
    unanimous = [1.0 if len(set(labels)) == 1 else 0.0 for _, labels in sorted(usable.items())]
    pairwise = []
    for _, labels in sorted(usable.items()):
        pairs = list(combinations(labels, 2))
        pairwise.append(sum(1.0 for a, b in pairs if a == b) / len(pairs))
    return AgreementReport(
        task_id=task.task_id,
        n_groups=len(usable),
        unanimous_agreement=sum(unanimous) / len(unanimous),
        pairwise_agreement=sum(pairwise) / len(pairwise),
        excluded=excluded,
    )


@dataclass(frozen=True)
class CriterionRow:
    method_id: str
    plausibility: float
    simplicity: float
    reproducibility: float
    iqs: float
    n_tasks: int


@dataclass(frozen=True)
class CriterionAverages:
    """Per-method means of each unscaled term across a common task set."""

    task_ids: tuple[str, ...]
    rows: tuple[CriterionRow, ...]

    def to_dict(self) -> dict[str, Any]:
        return {
            "task_ids": list(self.task_ids),
            "rows": [
                {
                    "method_id": r.method_id,
                    "plausibility": r.plausibility,
                    "simplicity": r.simplicity,
                    "reproducibility": r.reproducibility,
                    "iqs": r.iqs,
                    "n_tasks": r.n_tasks,
                }
                for r in self.rows
            ],
        }

    def to_table(self) -> TableDoc:
        return TableDoc(
            title=f"per-criterion averages over tasks: {', '.join(self.task_ids)}",
            columns=(
                "method",
                "plausibility",
                "simplicity",
                "reproducibility",
                "iqs",
                "tasks",
            ),
            rows=tuple(
                (r.method_id, r.plausibility, r.simplicity, r.reproducibility, r.iqs, r.n_tasks)
                for r in self.rows
            ),
        )


def per_criterion_averages(scorecards: Sequence[MethodScorecard]) -> CriterionAverages:
    """Average each term per method across tasks.

    Every method must have a scorecard for the same set of tasks, otherwise
    the averages would not be comparable.
    """
    if not scorecards:
        raise UsageError("no scorecards to average")
    by_method: dict[str, dict[str, MethodScorecard]] = {}
    for card in scorecards:
        per_task = by_method.setdefault(card.method_id, {})
        if card.task_id in per_task:
            raise UsageError(
                f"duplicate scorecard for method {card.method_id!r}, task {card.task_id!r}"
            )
        per_task[card.task_id] = card
    task_sets = {frozenset(per_task) for per_task in by_method.values()}
    if len(task_sets) != 1:
        raise UsageError("methods cover different task sets; averages would not be comparable")
    task_ids = tuple(sorted(next(iter(task_sets))))
    rows = []
    for method_id in sorted(by_method):
        cards = [by_method[method_id][tid] for tid in task_ids]
        n = len(cards)
        rows.append(
            CriterionRow(
                method_id=method_id,
                plausibility=sum(c.plausibility for c in cards) / n,
                simplicity=sum(c.simplicity for c in cards) / n,
                reproducibility=sum(c.reproducibility for c in cards) / n,
                iqs=sum(c.iqs for c in cards) / n,
                n_tasks=n,
            )
        )
    rows.sort(key=lambda r: (-r.iqs, r.method_id))
    return CriterionAverages(task_ids=task_ids, rows=tuple(rows))


@dataclass(frozen=True)
class SweepTable:
    """Weight-sensitivity summaries for several methods on one task."""

    task_id: str
    step: float
    rows: tuple[SweepStats, ...]

    def to_dict(self) -> dict[str, Any]:
        return {
            "task_id": self.task_id,
            "step": self.step,
            "rows": [r.to_dict() for r in self.rows],
        }

    def to_table(self) -> TableDoc:
        return TableDoc(
            title=f"weight sweep for task {self.task_id} (step {self.step})",
            columns=("method", "mean", "std_population", "std_sample", "combos"),
            rows=tuple(
                (r.method_id, r.mean, r.std_population, r.std_sample, r.n_combos)
                for r in self.rows
            ),
        )


def _cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return str(value)
    if isinstance(value, float):
        return f"{value:.4f}"
    return str(value)


def render(obj: Any, fmt: str = "tsv") -> str:
    """Serialize a report object to tsv, markdown, or full-precision JSON."""
    if fmt not in RENDER_FORMATS:
        raise UsageError(f"unknown format {fmt!r}; choose one of {RENDER_FORMATS}")
    if fmt == "json_doc":
        if not hasattr(obj, "to_dict"):
            raise UsageError(f"{type(obj).__name__} does not support json_doc")
        return json.dumps(obj.to_dict(), ensure_ascii=False, indent=2, sort_keys=True) + "\n"
    table = obj if isinstance(obj, TableDoc) else obj.to_table()
    if fmt == "tsv":
        lines = ["\t".join(table.columns)]
        lines.extend("\t".join(_cell(v) for v in row) for row in table.rows)
        return "\n".join(lines) + "\n"
    lines = [f"## {table.title}", ""]
    lines.append("| " + " | ".join(table.columns) + " |")
    lines.append("| " + " | ".join("---" for _ in table.columns) + " |")
    lines.extend("| " + " | ".join(_cell(v) for v in row) + " |" for row in table.rows)
    return "\n".join(lines) + "\n"
