"""Core domain types: samples, explanations, task specs, weights, scorecards.

Every type here is an immutable value after construction and validates its
own invariants in ``__post_init__``. Cross-record invariants (an annotation
against its explanation, an explanation against its sample) are enforced by
the bundle loader and the collection service, which can see both sides.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any

from .errors import ConfigError, DataError

WEIGHT_SUM_TOL = 1e-9
COMPOSITION_TOL = 1e-9
# Slack for float roundoff when checking that aggregated terms stay in [0, 1].
_RANGE_SLACK = 1e-12


class TaskKind(str, Enum):
    BINARY_CLASSIFICATION = "binary_classification"
    REGRESSION = "regression"


class LossKind(str, Enum):
    LOG_LOSS = "log_loss"
    MEAN_ABSOLUTE_ERROR = "mean_absolute_error"


class AttributionSign(str, Enum):
    POSITIVE = "positive_attribution"
    NEGATIVE = "negative_attribution"


def _finite_number(value: Any) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool) and math.isfinite(value)


@dataclass(frozen=True)
class Sample:
    """One evaluation unit: ordered token segments plus an optional gold label.

    Token identity is the index into the flattened token sequence, so repeated
    words in a sentence stay distinct and one attribution vector can cover
    sentence pairs.
    """

    sample_id: str
    task_id: str
    segments: tuple[tuple[str, ...], ...]
    gold_label: str | float | None = None

    def __post_init__(self) -> None:
        if not isinstance(self.sample_id, str) or not self.sample_id:
            raise DataError("sample_id must be a nonempty string")
        if not isinstance(self.task_id, str) or not self.task_id:
            raise DataError(f"sample {self.sample_id!r}: task_id must be a nonempty string")
        segments = tuple(tuple(seg) for seg in self.segments)
        if not segments:
            raise DataError(f"sample {self.sample_id!r}: at least one segment is required")
        for pos, seg in enumerate(segments):
            if not seg:
                raise DataError(f"sample {self.sample_id!r}: segment {pos} is empty")
            for tok in seg:
                if not isinstance(tok, str) or not tok:
                    raise DataError(
                        f"sample {self.sample_id!r}: segment {pos} contains a token "
                        "that is not a nonempty string"
                    )
        object.__setattr__(self, "segments", segments)

    @property
    def tokens(self) -> tuple[str, ...]:
        return tuple(tok for seg in self.segments for tok in seg)

    @property
    def n_tokens(self) -> int:
        return sum(len(seg) for seg in self.segments)


@dataclass(frozen=True)
class AttributionExplanation:
    """Per-token signed attribution scores plus the model's raw output.

    ``model_output`` is the model's pre-threshold output: for binary
    classification tasks it is the probability of the task's second class,
    for regression it is the predicted score.
    """

    sample_id: str
    method_id: str
    attributions: tuple[float, ...]
    model_output: float
    model_label: str | None = None

    def __post_init__(self) -> None:
        if not isinstance(self.sample_id, str) or not self.sample_id:
            raise DataError("explanation: sample_id must be a nonempty string")
        if not isinstance(self.method_id, str) or not self.method_id:
            raise DataError(f"explanation for sample {self.sample_id!r}: method_id must be nonempty")
        where = f"explanation ({self.sample_id!r}, {self.method_id!r})"
        attrs = tuple(self.attributions)
        for pos, a in enumerate(attrs):
            if not _finite_number(a):
                raise DataError(f"{where}: attribution {pos} is not a finite number")
        object.__setattr__(self, "attributions", tuple(float(a) for a in attrs))
        if not _finite_number(self.model_output):
            raise DataError(f"{where}: model_output must be a finite number")
        object.__setattr__(self, "model_output", float(self.model_output))
        if self.model_label is not None and (
            not isinstance(self.model_label, str) or not self.model_label
        ):
            raise DataError(f"{where}: model_label must be a nonempty string when present")


@dataclass(frozen=True)
class TaskSpec:
    """Static description of the prediction task under evaluation.

    For binary classification ``classes`` is ordered low-output-first: the
    second class is the one whose probability ``model_output`` reports, and
    outputs at or above ``threshold`` classify as ``classes[1]``.

    For regression the keys of ``class_sign_map`` define the two
    pseudo-classes (tokens pushing the score up vs. down); ``threshold`` is
    optional and only used to binarize answers for agreement statistics.
    """

    task_id: str
    kind: TaskKind
    loss: LossKind
    class_sign_map: dict[str, AttributionSign]
    classes: tuple[str, ...] | None = None
    threshold: float | None = None
    score_range: tuple[float, float] | None = None

    def __post_init__(self) -> None:
        if not isinstance(self.task_id, str) or not self.task_id:
            raise ConfigError("task_id must be a nonempty string")
        try:
            kind = TaskKind(self.kind)
            loss = LossKind(self.loss)
        except ValueError as exc:
            raise ConfigError(f"task {self.task_id!r}: {exc}") from None
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "loss", loss)

        try:
            sign_map = {str(k): AttributionSign(v) for k, v in self.class_sign_map.items()}
        except ValueError as exc:
            raise ConfigError(f"task {self.task_id!r}: class_sign_map: {exc}") from None
        object.__setattr__(self, "class_sign_map", sign_map)
        signs = sorted(s.value for s in sign_map.values())
        if signs != [AttributionSign.NEGATIVE.value, AttributionSign.POSITIVE.value]:
            raise ConfigError(
                f"task {self.task_id!r}: class_sign_map must map exactly one class to each "
                "attribution sign"
            )

        if kind is TaskKind.BINARY_CLASSIFICATION:
            if loss is not LossKind.LOG_LOSS:
                raise ConfigError(f"task {self.task_id!r}: binary_classification requires log_loss")
            if self.classes is None:
                raise ConfigError(f"task {self.task_id!r}: classes are required for classification")
            classes = tuple(str(c) for c in self.classes)
            if len(classes) != 2 or len(set(classes)) != 2 or not all(classes):
                raise ConfigError(
                    f"task {self.task_id!r}: classes must be two distinct nonempty names"
                )
            object.__setattr__(self, "classes", classes)
            if self.score_range is not None:
                raise ConfigError(f"task {self.task_id!r}: score_range is regression-only")
            if self.threshold is None or not _finite_number(self.threshold):
                raise ConfigError(f"task {self.task_id!r}: a finite threshold is required")
            if not 0.0 <= float(self.threshold) <= 1.0:
                raise ConfigError(
                    f"task {self.task_id!r}: threshold must lie in [0, 1], the model-output range"
                )
            object.__setattr__(self, "threshold", float(self.threshold))
            if set(sign_map) != set(classes):
                raise ConfigError(
                    f"task {self.task_id!r}: class_sign_map keys must equal the class set"
                )
        else:
            if loss is not LossKind.MEAN_ABSOLUTE_ERROR:
                raise ConfigError(f"task {self.task_id!r}: regression requires mean_absolute_error")
            if self.classes is not None:
                raise ConfigError(f"task {self.task_id!r}: classes are classification-only")
            if self.score_range is None:
                raise ConfigError(f"task {self.task_id!r}: score_range is required for regression")
            lo, hi = (float(v) for v in self.score_range)
            if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
                raise ConfigError(f"task {self.task_id!r}: score_range must be finite with lo < hi")
            object.__setattr__(self, "score_range", (lo, hi))
            if self.threshold is not None:
                if not _finite_number(self.threshold) or not lo <= float(self.threshold) <= hi:
                    raise ConfigError(
                        f"task {self.task_id!r}: threshold must lie within score_range"
                    )
                object.__setattr__(self, "threshold", float(self.threshold))
            if len(sign_map) != 2:
                raise ConfigError(
                    f"task {self.task_id!r}: regression class_sign_map needs exactly two "
                    "pseudo-classes"
                )

    @property
    def feature_classes(self) -> tuple[str, ...]:
        """The class set C used for feature sets, in deterministic order."""
        if self.kind is TaskKind.BINARY_CLASSIFICATION:
            assert self.classes is not None
            return self.classes
        return tuple(sorted(self.class_sign_map))

    def class_for_sign(self, sign: AttributionSign) -> str:
        for cls, s in self.class_sign_map.items():
            if s is sign:
                return cls
        raise ConfigError(f"task {self.task_id!r}: no class mapped to {sign.value}")

    def classify(self, model_output: float) -> str:
        """Threshold a classification model output into a class name."""
        if self.kind is not TaskKind.BINARY_CLASSIFICATION:
            raise ConfigError(f"task {self.task_id!r}: classify() applies to classification only")
        assert self.classes is not None and self.threshold is not None
        return self.classes[1] if model_output >= self.threshold else self.classes[0]

    def binary_target(self, label: str | int | float) -> int:
        """Map a human answer to 0/1 for log loss; 1 means ``classes[1]``."""
        assert self.classes is not None
        if isinstance(label, str):
            if label not in self.classes:
                raise DataError(f"label {label!r} is not one of {list(self.classes)}")
            return self.classes.index(label)
        if _finite_number(label) and float(label) in (0.0, 1.0):
            return int(label)
        raise DataError(f"label {label!r} is not a class name or a 0/1 indicator")


@dataclass(frozen=True)
class SignedFeatureSets:
    """Token indices grouped by the class they support.

    Classes never share an index; violating that at construction raises.
    """

    sets: dict[str, frozenset[int]]

    def __post_init__(self) -> None:
        norm: dict[str, frozenset[int]] = {}
        owner: dict[int, str] = {}
        for cls, idxs in self.sets.items():
            cls = str(cls)
            frozen = frozenset(idxs)
            for i in frozen:
                if not isinstance(i, int) or isinstance(i, bool) or i < 0:
                    raise DataError(f"class {cls!r}: token indices must be nonnegative integers")
                if i in owner:
                    raise DataError(
                        f"token index {i} is assigned to both {owner[i]!r} and {cls!r}"
                    )
                owner[i] = cls
            norm[cls] = frozen
        object.__setattr__(self, "sets", norm)

    def __getitem__(self, cls: str) -> frozenset[int]:
        return self.sets[cls]

    def get(self, cls: str) -> frozenset[int]:
        return self.sets.get(cls, frozenset())

    @property
    def classes(self) -> tuple[str, ...]:
        return tuple(self.sets)

    @property
    def all_indices(self) -> frozenset[int]:
        merged: set[int] = set()
        for idxs in self.sets.values():
            merged |= idxs
        return frozenset(merged)

    def check_bounds(self, n_tokens: int) -> None:
        for cls, idxs in self.sets.items():
            for i in idxs:
                if i >= n_tokens:
                    raise DataError(
                        f"class {cls!r}: token index {i} out of range for {n_tokens} tokens"
                    )


@dataclass(frozen=True)
class AnnotationRecord:
    """One annotator's full response for one (sample, method) pair.

    ``q1_answer`` is the annotator's reproduction of the model output: a class
    name for classification, a score for regression. ``removals`` are
    highlighted token indices the annotator rejects per class, ``additions``
    are unhighlighted indices the annotator would add.
    """

    sample_id: str
    method_id: str
    annotator_id: str
    q1_answer: str | float
    removals: dict[str, frozenset[int]] = field(default_factory=dict)
    additions: dict[str, frozenset[int]] = field(default_factory=dict)
    duration_secs: float | None = None

    def __post_init__(self) -> None:
        for name in ("sample_id", "method_id", "annotator_id"):
            value = getattr(self, name)
            if not isinstance(value, str) or not value:
                raise DataError(f"annotation: {name} must be a nonempty string")
        where = f"annotation ({self.sample_id!r}, {self.method_id!r}, {self.annotator_id!r})"
        if isinstance(self.q1_answer, str):
            if not self.q1_answer:
                raise DataError(f"{where}: q1_answer must not be empty")
        elif _finite_number(self.q1_answer):
            object.__setattr__(self, "q1_answer", float(self.q1_answer))
        else:
            raise DataError(f"{where}: q1_answer must be a class name or a finite number")
        for name in ("removals", "additions"):
            edits = getattr(self, name)
            norm: dict[str, frozenset[int]] = {}
            for cls, idxs in edits.items():
                frozen = frozenset(idxs)
                for i in frozen:
                    if not isinstance(i, int) or isinstance(i, bool) or i < 0:
                        raise DataError(
                            f"{where}: {name}[{cls!r}] must hold nonnegative integer indices"
                        )
                norm[str(cls)] = frozen
            object.__setattr__(self, name, norm)
        if self.duration_secs is not None:
            if not _finite_number(self.duration_secs) or float(self.duration_secs) < 0:
                raise DataError(f"{where}: duration_secs must be a nonnegative number")
            object.__setattr__(self, "duration_secs", float(self.duration_secs))


@dataclass(frozen=True)
class IQSWeights:
    """Convex weights over the three score terms; must sum to 1."""

    alpha1: float
    alpha2: float
    alpha3: float

    def __post_init__(self) -> None:
        values = (self.alpha1, self.alpha2, self.alpha3)
        for v in values:
            if not _finite_number(v) or not 0.0 <= float(v) <= 1.0:
                raise ConfigError(f"weights must lie in [0, 1], got {v!r}")
        if abs(math.fsum(float(v) for v in values) - 1.0) > WEIGHT_SUM_TOL:
            raise ConfigError(f"weights must sum to 1 within {WEIGHT_SUM_TOL}, got {values!r}")
        object.__setattr__(self, "alpha1", float(self.alpha1))
        object.__setattr__(self, "alpha2", float(self.alpha2))
        object.__setattr__(self, "alpha3", float(self.alpha3))

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.alpha1, self.alpha2, self.alpha3)

    def label(self) -> str:
        """Deterministic 4-decimal form used in output file names."""
        return "-".join(f"{v:.4f}" for v in self.as_tuple())


EQUAL_WEIGHTS = IQSWeights(1 / 3, 1 / 3, 1 / 3)


@dataclass(frozen=True)
class SimplicityConfig:
    """Tuning for the chunk-count penalty; counts up to ``beta + 1`` score 1."""

    beta: float = 9.0

    def __post_init__(self) -> None:
        if not _finite_number(self.beta) or float(self.beta) < 0:
            raise ConfigError(f"beta must be a finite nonnegative number, got {self.beta!r}")
        object.__setattr__(self, "beta", float(self.beta))


@dataclass(frozen=True)
class TermTriple:
    """Unscaled plausibility, simplicity, and reproducibility values."""

    plausibility: float
    simplicity: float
    reproducibility: float

    def __post_init__(self) -> None:
        for name in ("plausibility", "simplicity", "reproducibility"):
            v = getattr(self, name)
            if not _finite_number(v) or not -_RANGE_SLACK <= float(v) <= 1.0 + _RANGE_SLACK:
                raise DataError(f"{name} must lie in [0, 1], got {v!r}")
            object.__setattr__(self, name, float(v))

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.plausibility, self.simplicity, self.reproducibility)


@dataclass(frozen=True)
class MethodScorecard:
    """Aggregated terms and composite score for one method on one task."""

    method_id: str
    task_id: str
    plausibility: float
    simplicity: float
    reproducibility: float
    iqs: float
    weights: IQSWeights
    n_samples: int
    n_annotators: int

    def __post_init__(self) -> None:
        terms = TermTriple(self.plausibility, self.simplicity, self.reproducibility)
        expected = (
            self.weights.alpha1 * terms.plausibility
            + self.weights.alpha2 * terms.simplicity
            + self.weights.alpha3 * terms.reproducibility
        )
        if not _finite_number(self.iqs) or abs(self.iqs - expected) > COMPOSITION_TOL:
            raise DataError(
                f"scorecard ({self.method_id!r}, {self.task_id!r}): iqs {self.iqs!r} does not "
                f"match the weighted term sum {expected!r}"
            )
        if self.n_samples < 1 or self.n_annotators < 1:
            raise DataError(
                f"scorecard ({self.method_id!r}, {self.task_id!r}): sample and annotator "
                "counts must be at least 1"
            )

    @property
    def terms(self) -> TermTriple:
        return TermTriple(self.plausibility, self.simplicity, self.reproducibility)

    def to_dict(self) -> dict[str, Any]:
        return {
            "method_id": self.method_id,
            "task_id": self.task_id,
            "plausibility": self.plausibility,
            "simplicity": self.simplicity,
            "reproducibility": self.reproducibility,
            "iqs": self.iqs,
            "weights": list(self.weights.as_tuple()),
            "n_samples": self.n_samples,
            "n_annotators": self.n_annotators,
        }

    @classmethod
    def from_dict(cls, obj: dict[str, Any]) -> "MethodScorecard":
        weights = obj["weights"]
        return cls(
            method_id=obj["method_id"],
            task_id=obj["task_id"],
            plausibility=obj["plausibility"],
            simplicity=obj["simplicity"],
            reproducibility=obj["reproducibility"],
            iqs=obj["iqs"],
            weights=IQSWeights(*weights),
            n_samples=obj["n_samples"],
            n_annotators=obj["n_annotators"],
        )
