"""The three score terms, their composition, and per-method aggregation.

All aggregation arithmetic uses plain ``sum()`` over lists in a fixed sorted
order, so two independent implementations that follow the same order produce
bitwise-identical floats.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Iterable, Mapping, Sequence
from enum import Enum

from .errors import (
    AnnotationConflictError,
    ConfigError,
    CoverageError,
    DataError,
    UsageError,
)
from .extraction import ExtractionPolicy, count_chunks, extract_feature_sets
from .types import (
    AnnotationRecord,
    AttributionExplanation,
    IQSWeights,
    LossKind,
    MethodScorecard,
    Sample,
    SignedFeatureSets,
    SimplicityConfig,
    TaskKind,
    TaskSpec,
)

logger = logging.getLogger(__name__)

# Probabilities are clamped away from {0, 1} so log loss stays finite.
CLAMP_EPS = 1e-12


class AggregationMode(str, Enum):
    # Average per-sample annotator means, then 1/(L+1) per annotator.
    PER_ANNOTATOR = "per_annotator"
    # Pool every (sample, annotator) pair into one flat mean / one loss.
    POOLED = "pooled"


def jaccard(a: frozenset[int] | set[int], b: frozenset[int] | set[int]) -> float:
    """Set overlap in [0, 1]; two empty sets agree perfectly and score 1."""
    if not a and not b:
        return 1.0
    return len(a & b) / len(a | b)


def derive_human_sets(
    method_sets: SignedFeatureSets,
    annotation: AnnotationRecord,
    task: TaskSpec,
    *,
    n_tokens: int | None = None,
) -> SignedFeatureSets:
    """Apply an annotator's edits to the method's sets: (M \\ removals) | additions.

    Removals must reference highlighted indices and additions unhighlighted
    ones; an addition that lands in two classes at once is a conflict.
    """
    where = (
        f"annotation ({annotation.sample_id!r}, {annotation.method_id!r}, "
        f"{annotation.annotator_id!r})"
    )
    classes = task.feature_classes
    for name, edits in (("removals", annotation.removals), ("additions", annotation.additions)):
        for cls in edits:
            if cls not in classes:
                raise DataError(f"{where}: {name} reference unknown class {cls!r}")
    highlighted = method_sets.all_indices
    result: dict[str, set[int]] = {}
    for cls in classes:
        base = set(method_sets.get(cls))
        removals = annotation.removals.get(cls, frozenset())
        additions = annotation.additions.get(cls, frozenset())
        stray = removals - base
        if stray:
            raise DataError(
                f"{where}: removals for class {cls!r} include indices not highlighted for "
                f"that class: {sorted(stray)}"
            )
        overlap = additions & highlighted
        if overlap:
            raise DataError(
                f"{where}: additions for class {cls!r} include already highlighted "
                f"indices: {sorted(overlap)}"
            )
        if n_tokens is not None:
            out = [i for i in additions if i >= n_tokens]
            if out:
                raise DataError(
                    f"{where}: additions for class {cls!r} are out of range for "
                    f"{n_tokens} tokens: {sorted(out)}"
                )
        result[cls] = (base - removals) | additions
    try:
        return SignedFeatureSets({cls: frozenset(idxs) for cls, idxs in result.items()})
    except DataError as exc:
        # The same token added under both classes is an annotation conflict,
        # not a malformed input record.
        raise AnnotationConflictError(f"{where}: {exc}") from None


def plausibility(human_sets: SignedFeatureSets, method_sets: SignedFeatureSets, task: TaskSpec) -> float:
    """Mean per-class Jaccard overlap between human and method sets."""
    classes = task.feature_classes
    if not classes:
        raise ConfigError(f"task {task.task_id!r}: no feature classes to compare")
    return sum(jaccard(human_sets.get(c), method_sets.get(c)) for c in classes) / len(classes)


def simplicity(n_chunks: int, config: SimplicityConfig = SimplicityConfig()) -> float:
    """1 for small explanations, then a slow log decay as chunks grow.

    Counts up to beta + 1 score 1 exactly; beyond that the score is
    1 / (ln(n - beta) + 1), which stays in (0, 1) for any finite n.
    """
    if not isinstance(n_chunks, int) or isinstance(n_chunks, bool) or n_chunks < 0:
        raise UsageError(f"chunk count must be a nonnegative integer, got {n_chunks!r}")
    if n_chunks <= config.beta + 1:
        return 1.0
    return 1.0 / (math.log(n_chunks - config.beta) + 1.0)


def log_loss(y: int, p: float) -> float:
    """Binary cross entropy of one prediction; p is clamped to stay finite."""
    if y not in (0, 1):
        raise UsageError(f"log loss target must be 0 or 1, got {y!r}")
    p = min(max(float(p), CLAMP_EPS), 1.0 - CLAMP_EPS)
    return -(y * math.log(p) + (1 - y) * math.log(1.0 - p))


def reproducibility(loss_value: float) -> float:
    """Map a nonnegative loss into (0, 1]; zero loss gives 1."""
    if isinstance(loss_value, bool) or not isinstance(loss_value, (int, float)):
        raise UsageError(f"loss must be a number, got {loss_value!r}")
    if not math.isfinite(loss_value) or loss_value < 0:
        raise UsageError(f"loss must be finite and nonnegative, got {loss_value!r}")
    return 1.0 / (loss_value + 1.0)


def compose_iqs(
    plaus: float, simp: float, repro: float, weights: IQSWeights
) -> float:
    """Weighted sum of the three terms."""
    return weights.alpha1 * plaus + weights.alpha2 * simp + weights.alpha3 * repro


def _annotation_losses(
    annotation: AnnotationRecord,
    explanation: AttributionExplanation,
    task: TaskSpec,
) -> float:
    """Per-annotation prediction loss for the task's loss kind."""
    if task.loss is LossKind.LOG_LOSS:
        y = task.binary_target(annotation.q1_answer)
        return log_loss(y, explanation.model_output)
    answer = annotation.q1_answer
    if isinstance(answer, str):
        raise DataError(
            f"annotation ({annotation.sample_id!r}, {annotation.method_id!r}, "
            f"{annotation.annotator_id!r}): regression answers must be numeric"
        )
    return abs(float(answer) - explanation.model_output)


def _clamped_answer(annotation: AnnotationRecord, task: TaskSpec) -> AnnotationRecord:
    """Clamp out-of-range regression answers to the score range, warning once."""
    if task.kind is not TaskKind.REGRESSION or isinstance(annotation.q1_answer, str):
        return annotation
    assert task.score_range is not None
    lo, hi = task.score_range
    v = float(annotation.q1_answer)
    if lo <= v <= hi:
        return annotation
    clamped = min(max(v, lo), hi)
    logger.warning(
        "annotation (%r, %r, %r): answer %s outside score range [%s, %s], clamped to %s",
        annotation.sample_id,
        annotation.method_id,
        annotation.annotator_id,
        v,
        lo,
        hi,
        clamped,
    )
    return AnnotationRecord(
        sample_id=annotation.sample_id,
        method_id=annotation.method_id,
        annotator_id=annotation.annotator_id,
        q1_answer=clamped,
        removals=annotation.removals,
        additions=annotation.additions,
        duration_secs=annotation.duration_secs,
    )


def score_method(
    task: TaskSpec,
    samples: Mapping[str, Sample] | Iterable[Sample],
    explanations: Sequence[AttributionExplanation],
    annotations: Sequence[AnnotationRecord],
    *,
    policy: ExtractionPolicy | None = None,
    simplicity_config: SimplicityConfig = SimplicityConfig(),
    weights: IQSWeights | None = None,
    aggregation: AggregationMode = AggregationMode.PER_ANNOTATOR,
) -> MethodScorecard:
    """Aggregate one method's annotations into a scorecard.

    Every explanation must cover a known sample, every sample with an
    explanation must carry at least one annotation, and each annotator may
    respond at most once per sample. Iteration order is sorted by sample id
    and annotator id so results are independent of input order.
    """
    from .extraction import DEFAULT_POLICY
    from .types import EQUAL_WEIGHTS

    policy = policy if policy is not None else DEFAULT_POLICY
    weights = weights if weights is not None else EQUAL_WEIGHTS
    aggregation = AggregationMode(aggregation)

    if isinstance(samples, Mapping):
        sample_map = dict(samples)
    else:
        sample_map = {s.sample_id: s for s in samples}
    if not explanations:
        raise UsageError("at least one explanation is required")
    method_ids = {e.method_id for e in explanations}
    if len(method_ids) != 1:
        raise UsageError(f"explanations span multiple methods: {sorted(method_ids)}")
    method_id = explanations[0].method_id

    expl_by_sample: dict[str, AttributionExplanation] = {}
    for e in explanations:
        if e.sample_id not in sample_map:
            raise DataError(f"explanation references unknown sample {e.sample_id!r}")
        if e.sample_id in expl_by_sample:
            raise DataError(f"duplicate explanation for sample {e.sample_id!r}")
        expl_by_sample[e.sample_id] = e

    ann_by_sample: dict[str, dict[str, AnnotationRecord]] = {}
    for a in annotations:
        if a.method_id != method_id:
            raise UsageError(
                f"annotation for method {a.method_id!r} mixed into scoring of {method_id!r}"
            )
        if a.sample_id not in expl_by_sample:
            raise DataError(
                f"annotation ({a.sample_id!r}, {a.method_id!r}, {a.annotator_id!r}) "
                "references a sample with no explanation"
            )
        per_sample = ann_by_sample.setdefault(a.sample_id, {})
        if a.annotator_id in per_sample:
            raise UsageError(
                f"annotator {a.annotator_id!r} responded twice for sample {a.sample_id!r}"
            )
        per_sample[a.annotator_id] = _clamped_answer(a, task)

    uncovered = sorted(set(expl_by_sample) - set(ann_by_sample))
    if uncovered:
        raise CoverageError(
            f"method {method_id!r}: samples without annotations: {uncovered}", uncovered
        )

    sample_ids = sorted(expl_by_sample)
    plaus_per_sample: list[float] = []
    simp_per_sample: list[float] = []
    losses_by_annotator: dict[str, list[float]] = {}
    pooled_losses: list[float] = []
    pooled_plaus: list[float] = []
    annotator_ids: set[str] = set()

    for sid in sample_ids:
        sample = sample_map[sid]
        expl = expl_by_sample[sid]
        method_sets = extract_feature_sets(expl, task, policy, n_tokens=sample.n_tokens)
        simp_per_sample.append(simplicity(count_chunks(method_sets), simplicity_config))
        per_annotator_plaus: list[float] = []
        for annotator_id in sorted(ann_by_sample[sid]):
            annotator_ids.add(annotator_id)
            record = ann_by_sample[sid][annotator_id]
            human_sets = derive_human_sets(
                method_sets, record, task, n_tokens=sample.n_tokens
            )
            p = plausibility(human_sets, method_sets, task)
            per_annotator_plaus.append(p)
            pooled_plaus.append(p)
            loss_value = _annotation_losses(record, expl, task)
            losses_by_annotator.setdefault(annotator_id, []).append(loss_value)
            pooled_losses.append(loss_value)
        plaus_per_sample.append(sum(per_annotator_plaus) / len(per_annotator_plaus))

    simp = sum(simp_per_sample) / len(simp_per_sample)
    if aggregation is AggregationMode.PER_ANNOTATOR:
        plaus = sum(plaus_per_sample) / len(plaus_per_sample)
        repro_per_annotator = [
            reproducibility(sum(losses) / len(losses))
            for _, losses in sorted(losses_by_annotator.items())
        ]
        repro = sum(repro_per_annotator) / len(repro_per_annotator)
    else:
        plaus = sum(pooled_plaus) / len(pooled_plaus)
        repro = reproducibility(sum(pooled_losses) / len(pooled_losses))

    return MethodScorecard(
        method_id=method_id,
        task_id=task.task_id,
        plausibility=plaus,
        simplicity=simp,
        reproducibility=repro,
        iqs=compose_iqs(plaus, simp, repro, weights),
        weights=weights,
        n_samples=len(sample_ids),
        n_annotators=len(annotator_ids),
    )
