"""Load, validate, save, and synthesize evaluation bundles.

A bundle is everything one scoring run needs: the task config, the samples,
one explanation per (sample, method) pair, and the collected annotations.
Loading is strict and total: every referential and consistency check runs up
front, so a loaded bundle scores without further data errors.

File formats:

* samples.json: JSON array of ``{sample_id, task_id, segments, gold_label?}``.
* explanations.json: JSON array of ``{sample_id, method_id, attributions,
  model_output, tokens_checksum, model_label?}``. The checksum ties the
  attribution vector to the exact token segmentation it was computed over.
* annotations.jsonl: one JSON object per line, ``{sample_id, method_id,
  annotator_id, q1_answer, removals, additions, duration_secs?}``.
* task_config.json: ``{task_id, kind, classes?, loss, threshold?,
  score_range?, class_sign_map, extraction_policy, beta, weights?,
  annotators_per_sample}``.
"""

from __future__ import annotations

import hashlib
import json
import logging
import random
from collections.abc import Sequence
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .errors import (
    ConsistencyError,
    DataError,
    ParseError,
    ReferentialError,
)
from .extraction import DEFAULT_POLICY, ExtractionPolicy, extract_feature_sets
from .metrics import derive_human_sets
from .types import (
    EQUAL_WEIGHTS,
    AnnotationRecord,
    AttributionExplanation,
    AttributionSign,
    IQSWeights,
    Sample,
    SignedFeatureSets,
    SimplicityConfig,
    TaskKind,
    TaskSpec,
)

logger = logging.getLogger(__name__)


def tokens_checksum(segments: Sequence[Sequence[str]]) -> str:
    """sha256 over the compact JSON form of the segment lists."""
    canonical = json.dumps(
        [list(seg) for seg in segments], ensure_ascii=False, separators=(",", ":")
    )
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class TaskConfig:
    """Task spec plus the run-level knobs that travel with the data."""

    task: TaskSpec
    policy: ExtractionPolicy = DEFAULT_POLICY
    simplicity: SimplicityConfig = SimplicityConfig()
    weights: IQSWeights = EQUAL_WEIGHTS
    annotators_per_sample: int = 3

    def __post_init__(self) -> None:
        if not isinstance(self.annotators_per_sample, int) or self.annotators_per_sample < 1:
            raise ParseError(
                f"annotators_per_sample must be an integer >= 1, got "
                f"{self.annotators_per_sample!r}"
            )

    @classmethod
    def from_dict(cls, obj: dict[str, Any], *, where: str = "task config") -> "TaskConfig":
        if not isinstance(obj, dict):
            raise ParseError(f"{where}: expected a JSON object")
        for key in ("task_id", "kind", "loss", "class_sign_map", "extraction_policy"):
            if key not in obj:
                raise ParseError(f"{where}: missing required field {key!r}")
        try:
            task = TaskSpec(
                task_id=obj["task_id"],
                kind=obj["kind"],
                loss=obj["loss"],
                class_sign_map=dict(obj["class_sign_map"]),
                classes=tuple(obj["classes"]) if obj.get("classes") is not None else None,
                threshold=obj.get("threshold"),
                score_range=(
                    tuple(obj["score_range"]) if obj.get("score_range") is not None else None
                ),
            )
        except (TypeError, AttributeError) as exc:
            raise ParseError(f"{where}: malformed task fields: {exc}") from None
        policy_obj = obj["extraction_policy"]
        if isinstance(policy_obj, str):
            policy = ExtractionPolicy.parse(policy_obj)
        elif isinstance(policy_obj, dict) and {"mode", "value"} <= set(policy_obj):
            policy = ExtractionPolicy(policy_obj["mode"], policy_obj["value"])
        else:
            raise ParseError(
                f"{where}: extraction_policy must be {{mode, value}} or 'mode:value'"
            )
        weights = EQUAL_WEIGHTS
        if obj.get("weights") is not None:
            raw = obj["weights"]
            if not isinstance(raw, (list, tuple)) or len(raw) != 3:
                raise ParseError(f"{where}: weights must be a list of three numbers")
            weights = IQSWeights(*raw)
        return cls(
            task=task,
            policy=policy,
            simplicity=SimplicityConfig(beta=obj.get("beta", 9.0)),
            weights=weights,
            annotators_per_sample=obj.get("annotators_per_sample", 3),
        )

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {
            "task_id": self.task.task_id,
            "kind": self.task.kind.value,
            "loss": self.task.loss.value,
            "class_sign_map": {c: s.value for c, s in sorted(self.task.class_sign_map.items())},
            "extraction_policy": {"mode": self.policy.mode.value, "value": self.policy.value},
            "beta": self.simplicity.beta,
            "weights": list(self.weights.as_tuple()),
            "annotators_per_sample": self.annotators_per_sample,
        }
        if self.task.classes is not None:
            out["classes"] = list(self.task.classes)
        if self.task.threshold is not None:
            out["threshold"] = self.task.threshold
        if self.task.score_range is not None:
            out["score_range"] = list(self.task.score_range)
        return out


@dataclass(frozen=True)
class EvaluationBundle:
    """One task's worth of loaded, cross-validated evaluation data."""

    config: TaskConfig
    samples: dict[str, Sample]
    explanations: dict[tuple[str, str], AttributionExplanation]
    annotations: tuple[AnnotationRecord, ...]

    @property
    def task(self) -> TaskSpec:
        return self.config.task

    @property
    def method_ids(self) -> tuple[str, ...]:
        return tuple(sorted({mid for _, mid in self.explanations}))

    @property
    def annotator_ids(self) -> tuple[str, ...]:
        return tuple(sorted({a.annotator_id for a in self.annotations}))

    def explanations_for(self, method_id: str) -> list[AttributionExplanation]:
        return [
            e
            for (sid, mid), e in sorted(self.explanations.items())
            if mid == method_id
        ]

    def annotations_for(self, method_id: str) -> list[AnnotationRecord]:
        return [a for a in self.annotations if a.method_id == method_id]


@dataclass(frozen=True)
class CoverageReport:
    """Which (sample, method) pairs still lack their required annotations."""

    required: int
    counts: dict[tuple[str, str], int] = field(default_factory=dict)

    @property
    def deficiencies(self) -> dict[tuple[str, str], int]:
        return {pair: n for pair, n in sorted(self.counts.items()) if n < self.required}

    @property
    def ok(self) -> bool:
        return not self.deficiencies


def _read_json(path: Path, *, expect: type) -> Any:
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"{path}: {exc}") from None
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON: {exc}") from None
    if not isinstance(obj, expect):
        raise ParseError(f"{path}: expected top-level {expect.__name__}")
    return obj


def load_task_config(path: Path | str) -> TaskConfig:
    path = Path(path)
    return TaskConfig.from_dict(_read_json(path, expect=dict), where=str(path))


def _load_samples(path: Path, task: TaskSpec) -> dict[str, Sample]:
    samples: dict[str, Sample] = {}
    for idx, obj in enumerate(_read_json(path, expect=list)):
        where = f"{path}[{idx}]"
        if not isinstance(obj, dict):
            raise ParseError(f"{where}: expected an object")
        for key in ("sample_id", "task_id", "segments"):
            if key not in obj:
                raise ParseError(f"{where}: missing required field {key!r}")
        try:
            sample = Sample(
                sample_id=obj["sample_id"],
                task_id=obj["task_id"],
                segments=tuple(tuple(seg) for seg in obj["segments"]),
                gold_label=obj.get("gold_label"),
            )
        except (DataError, TypeError) as exc:
            raise ParseError(f"{where}: {exc}") from None
        if sample.task_id != task.task_id:
            raise ConsistencyError(
                f"{where}: sample {sample.sample_id!r} belongs to task "
                f"{sample.task_id!r}, config is for {task.task_id!r}"
            )
        if sample.sample_id in samples:
            raise ConsistencyError(f"{where}: duplicate sample_id {sample.sample_id!r}")
        samples[sample.sample_id] = sample
    if not samples:
        raise ParseError(f"{path}: no samples")
    return samples


def _load_explanations(
    paths: Sequence[Path], samples: dict[str, Sample]
) -> dict[tuple[str, str], AttributionExplanation]:
    explanations: dict[tuple[str, str], AttributionExplanation] = {}
    for path in paths:
        for idx, obj in enumerate(_read_json(path, expect=list)):
            where = f"{path}[{idx}]"
            if not isinstance(obj, dict):
                raise ParseError(f"{where}: expected an object")
            for key in ("sample_id", "method_id", "attributions", "model_output", "tokens_checksum"):
                if key not in obj:
                    raise ParseError(f"{where}: missing required field {key!r}")
            try:
                expl = AttributionExplanation(
                    sample_id=obj["sample_id"],
                    method_id=obj["method_id"],
                    attributions=tuple(obj["attributions"]),
                    model_output=obj["model_output"],
                    model_label=obj.get("model_label"),
                )
            except (DataError, TypeError) as exc:
                raise ParseError(f"{where}: {exc}") from None
            sample = samples.get(expl.sample_id)
            if sample is None:
                raise ReferentialError(
                    f"{where}: explanation references unknown sample {expl.sample_id!r}"
                )
            if len(expl.attributions) != sample.n_tokens:
                raise ConsistencyError(
                    f"{where}: {len(expl.attributions)} attributions for sample "
                    f"{expl.sample_id!r} with {sample.n_tokens} tokens"
                )
            expected = tokens_checksum(sample.segments)
            if obj["tokens_checksum"] != expected:
                raise ConsistencyError(
                    f"{where}: tokens_checksum {obj['tokens_checksum']!r} does not match "
                    f"sample {expl.sample_id!r} (expected {expected!r}); the explanation "
                    "was computed over a different tokenization"
                )
            key = (expl.sample_id, expl.method_id)
            if key in explanations:
                raise ConsistencyError(
                    f"{where}: duplicate explanation for sample {expl.sample_id!r}, "
                    f"method {expl.method_id!r}"
                )
            explanations[key] = expl
    if not explanations:
        raise ParseError(f"{', '.join(str(p) for p in paths)}: no explanations")
    return explanations


def annotation_record_from_dict(obj: dict[str, Any], *, where: str = "annotation") -> AnnotationRecord:
    """Build a validated record from one decoded JSONL object."""
    if not isinstance(obj, dict):
        raise ParseError(f"{where}: expected an object")
    for key in ("sample_id", "method_id", "annotator_id", "q1_answer"):
        if key not in obj:
            raise ParseError(f"{where}: missing required field {key!r}")

    def edits(name: str) -> dict[str, frozenset[int]]:
        raw = obj.get(name, {})
        if not isinstance(raw, dict):
            raise ParseError(f"{where}: {name} must be an object of class -> index list")
        out: dict[str, frozenset[int]] = {}
        for cls, idxs in raw.items():
            if not isinstance(idxs, (list, tuple)):
                raise ParseError(f"{where}: {name}[{cls!r}] must be a list of indices")
            out[cls] = frozenset(idxs)
        return out

    try:
        return AnnotationRecord(
            sample_id=obj["sample_id"],
            method_id=obj["method_id"],
            annotator_id=obj["annotator_id"],
            q1_answer=obj["q1_answer"],
            removals=edits("removals"),
            additions=edits("additions"),
            duration_secs=obj.get("duration_secs"),
        )
    except DataError as exc:
        raise ParseError(f"{where}: {exc}") from None


def annotation_to_json_line(record: AnnotationRecord) -> str:
    """Compact, key-sorted JSONL form; index lists are sorted."""
    obj = {
        "sample_id": record.sample_id,
        "method_id": record.method_id,
        "annotator_id": record.annotator_id,
        "q1_answer": record.q1_answer,
        "removals": {cls: sorted(idxs) for cls, idxs in sorted(record.removals.items())},
        "additions": {cls: sorted(idxs) for cls, idxs in sorted(record.additions.items())},
        "duration_secs": record.duration_secs,
    }
    return json.dumps(obj, ensure_ascii=False, sort_keys=True, separators=(",", ":"))


def validate_annotation(
    record: AnnotationRecord,
    sample: Sample,
    explanation: AttributionExplanation,
    task: TaskSpec,
    policy: ExtractionPolicy,
    *,
    require_in_range: bool = False,
) -> SignedFeatureSets:
    """Check one annotation against its sample and explanation.

    Returns the derived human sets on success. With ``require_in_range`` a
    regression answer outside the score range is an error rather than a value
    to clamp later.
    """
    where = (
        f"annotation ({record.sample_id!r}, {record.method_id!r}, {record.annotator_id!r})"
    )
    if task.kind is TaskKind.BINARY_CLASSIFICATION:
        if not isinstance(record.q1_answer, str):
            raise DataError(f"{where}: classification answers must be a class name")
        task.binary_target(record.q1_answer)
    else:
        if isinstance(record.q1_answer, str):
            raise DataError(f"{where}: regression answers must be numeric")
        if require_in_range:
            assert task.score_range is not None
            lo, hi = task.score_range
            if not lo <= float(record.q1_answer) <= hi:
                raise DataError(
                    f"{where}: answer {record.q1_answer} outside score range [{lo}, {hi}]"
                )
    method_sets = extract_feature_sets(explanation, task, policy, n_tokens=sample.n_tokens)
    return derive_human_sets(method_sets, record, task, n_tokens=sample.n_tokens)


def _load_annotations(
    paths: Sequence[Path],
    samples: dict[str, Sample],
    explanations: dict[tuple[str, str], AttributionExplanation],
    config: TaskConfig,
) -> tuple[AnnotationRecord, ...]:
    kept: dict[tuple[str, str, str], AnnotationRecord] = {}
    order: list[tuple[str, str, str]] = []
    for path in paths:
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as exc:
            raise ParseError(f"{path}: {exc}") from None
        for lineno, line in enumerate(text.splitlines(), start=1):
            if not line.strip():
                continue
            where = f"{path}:{lineno}"
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"{where}: invalid JSON: {exc}") from None
            record = annotation_record_from_dict(obj, where=where)
            pair = (record.sample_id, record.method_id)
            if record.sample_id not in samples:
                raise ReferentialError(
                    f"{where}: annotation references unknown sample {record.sample_id!r}"
                )
            if pair not in explanations:
                raise ReferentialError(
                    f"{where}: annotation references missing explanation "
                    f"({record.sample_id!r}, {record.method_id!r})"
                )
            key = (record.sample_id, record.method_id, record.annotator_id)
            if key in kept:
                logger.warning("%s: duplicate annotation %r, keeping the first", where, key)
                continue
            # Dry-run the derivation now so scoring later cannot hit data errors.
            validate_annotation(
                record, samples[record.sample_id], explanations[pair], config.task, config.policy
            )
            kept[key] = record
            order.append(key)
    return tuple(kept[k] for k in order)


def load_bundle(
    samples_path: Path | str,
    explanation_paths: Sequence[Path | str],
    annotation_paths: Sequence[Path | str],
    task_config: TaskConfig | Path | str,
) -> EvaluationBundle:
    """Read and cross-validate all bundle files.

    Raises ParseError for malformed files, ReferentialError for dangling ids,
    ConsistencyError for checksum, length, and duplication violations, and
    the annotation errors for invalid edits. Duplicate annotations for the
    same (sample, method, annotator) keep the first occurrence with a warning.
    """
    config = (
        task_config
        if isinstance(task_config, TaskConfig)
        else load_task_config(task_config)
    )
    samples = _load_samples(Path(samples_path), config.task)
    explanations = _load_explanations([Path(p) for p in explanation_paths], samples)
    annotations = _load_annotations(
        [Path(p) for p in annotation_paths], samples, explanations, config
    )
    return EvaluationBundle(
        config=config, samples=samples, explanations=explanations, annotations=annotations
    )


def validate_bundle(bundle: EvaluationBundle) -> CoverageReport:
    """Count annotators per (sample, method) pair against the configured need."""
    annotators: dict[tuple[str, str], set[str]] = {pair: set() for pair in bundle.explanations}
    for record in bundle.annotations:
        annotators[(record.sample_id, record.method_id)].add(record.annotator_id)
    return CoverageReport(
        required=bundle.config.annotators_per_sample,
        counts={pair: len(ids) for pair, ids in annotators.items()},
    )


def save_bundle(bundle: EvaluationBundle, out_dir: Path | str) -> dict[str, Path]:
    """Write the four bundle files under ``out_dir``; round-trips exactly."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "task_config": out / "task_config.json",
        "samples": out / "samples.json",
        "explanations": out / "explanations.json",
        "annotations": out / "annotations.jsonl",
    }
    paths["task_config"].write_text(
        json.dumps(bundle.config.to_dict(), ensure_ascii=False, indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )
    sample_objs = []
    for sid in sorted(bundle.samples):
        s = bundle.samples[sid]
        obj: dict[str, Any] = {
            "sample_id": s.sample_id,
            "task_id": s.task_id,
            "segments": [list(seg) for seg in s.segments],
        }
        if s.gold_label is not None:
            obj["gold_label"] = s.gold_label
        sample_objs.append(obj)
    paths["samples"].write_text(
        json.dumps(sample_objs, ensure_ascii=False, indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )
    expl_objs = []
    for (sid, mid) in sorted(bundle.explanations):
        e = bundle.explanations[(sid, mid)]
        obj = {
            "sample_id": e.sample_id,
            "method_id": e.method_id,
            "attributions": list(e.attributions),
            "model_output": e.model_output,
            "tokens_checksum": tokens_checksum(bundle.samples[sid].segments),
        }
        if e.model_label is not None:
            obj["model_label"] = e.model_label
        expl_objs.append(obj)
    paths["explanations"].write_text(
        json.dumps(expl_objs, ensure_ascii=False, indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )
    lines = [annotation_to_json_line(a) for a in bundle.annotations]
    paths["annotations"].write_text(
        "".join(line + "\n" for line in lines), encoding="utf-8"
    )
    return paths


_WORDS = (
    "the movie was a quiet triumph of small moments and steady craft "
    "plot characters dialogue pacing score ending felt fresh warm dull flat "
    "sharp tender honest hollow bright grim lively stale crisp"
).split()


def generate_synthetic_bundle(
    seed: int = 0,
    n_samples: int = 12,
    n_methods: int = 3,
    n_annotators: int = 3,
    noise: float = 0.0,
    *,
    kind: TaskKind = TaskKind.REGRESSION,
) -> EvaluationBundle:
    """Deterministic synthetic bundle for tests and demos.

    At ``noise == 0`` annotators echo the model output exactly and leave the
    highlighted sets untouched, so every method scores 1.0. That exactness
    needs a regression task (zero absolute error is reachable, zero log loss
    is not), hence the regression default. Token counts stay at or below 10
    so the chunk penalty never engages.
    """
    if isinstance(noise, bool) or not isinstance(noise, (int, float)) or not 0 <= noise <= 1:
        raise DataError(f"noise must lie in [0, 1], got {noise!r}")
    rng = random.Random(seed)
    kind = TaskKind(kind)
    if kind is TaskKind.REGRESSION:
        task = TaskSpec(
            task_id="synthetic_regression",
            kind=TaskKind.REGRESSION,
            loss="mean_absolute_error",
            class_sign_map={
                "raises_score": AttributionSign.POSITIVE,
                "lowers_score": AttributionSign.NEGATIVE,
            },
            threshold=2.5,
            score_range=(0.0, 5.0),
        )
    else:
        task = TaskSpec(
            task_id="synthetic_classification",
            kind=TaskKind.BINARY_CLASSIFICATION,
            loss="log_loss",
            classes=("negative", "positive"),
            threshold=0.5,
            class_sign_map={
                "positive": AttributionSign.POSITIVE,
                "negative": AttributionSign.NEGATIVE,
            },
        )
    config = TaskConfig(task=task, annotators_per_sample=n_annotators)

    samples: dict[str, Sample] = {}
    model_outputs: dict[str, float] = {}
    for i in range(n_samples):
        sid = f"s{i:04d}"
        total = rng.randint(5, 10)
        words = [rng.choice(_WORDS) for _ in range(total)]
        if kind is TaskKind.REGRESSION:
            split = rng.randint(2, total - 2)
            segments: tuple[tuple[str, ...], ...] = (
                tuple(words[:split]),
                tuple(words[split:]),
            )
            model_outputs[sid] = round(rng.uniform(0.0, 5.0), 4)
        else:
            segments = (tuple(words),)
            model_outputs[sid] = round(rng.uniform(0.05, 0.95), 4)
        samples[sid] = Sample(sample_id=sid, task_id=task.task_id, segments=segments)

    explanations: dict[tuple[str, str], AttributionExplanation] = {}
    for j in range(n_methods):
        mid = f"method{j:02d}"
        for sid in sorted(samples):
            n = samples[sid].n_tokens
            attrs = []
            for t in range(n):
                if t > 0 and rng.random() < 0.2:
                    attrs.append(0.0)
                else:
                    a = 0.0
                    while a == 0.0:
                        a = rng.uniform(-1.0, 1.0)
                    attrs.append(round(a, 6))
            explanations[(sid, mid)] = AttributionExplanation(
                sample_id=sid,
                method_id=mid,
                attributions=tuple(attrs),
                model_output=model_outputs[sid],
            )

    annotations: list[AnnotationRecord] = []
    for sid in sorted(samples):
        sample = samples[sid]
        for mid in sorted({m for _, m in explanations}):
            expl = explanations[(sid, mid)]
            method_sets = extract_feature_sets(
                expl, task, config.policy, n_tokens=sample.n_tokens
            )
            unhighlighted = sorted(set(range(sample.n_tokens)) - method_sets.all_indices)
            for t in range(n_annotators):
                aid = f"a{t:02d}"
                removals: dict[str, frozenset[int]] = {}
                additions: dict[str, frozenset[int]] = {}
                if noise > 0:
                    for cls in task.feature_classes:
                        drop = frozenset(
                            i for i in method_sets.get(cls) if rng.random() < noise * 0.5
                        )
                        if drop:
                            removals[cls] = drop
                    grabs = [i for i in unhighlighted if rng.random() < noise * 0.25]
                    if grabs:
                        by_class: dict[str, set[int]] = {}
                        for i in grabs:
                            by_class.setdefault(rng.choice(task.feature_classes), set()).add(i)
                        additions = {cls: frozenset(v) for cls, v in by_class.items()}
                if kind is TaskKind.REGRESSION:
                    assert task.score_range is not None
                    lo, hi = task.score_range
                    answer: str | float = expl.model_output
                    if noise > 0:
                        answer = min(
                            max(expl.model_output + rng.gauss(0.0, noise * (hi - lo) * 0.2), lo),
                            hi,
                        )
                else:
                    answer = task.classify(expl.model_output)
                    if noise > 0 and rng.random() < noise * 0.3:
                        assert task.classes is not None
                        answer = task.classes[0] if answer == task.classes[1] else task.classes[1]
                annotations.append(
                    AnnotationRecord(
                        sample_id=sid,
                        method_id=mid,
                        annotator_id=aid,
                        q1_answer=answer,
                        removals=removals,
                        additions=additions,
                        duration_secs=round(rng.uniform(5.0, 120.0), 1),
                    )
                )

    return EvaluationBundle(
        config=config,
        samples=samples,
        explanations=explanations,
        annotations=tuple(annotations),
    )
