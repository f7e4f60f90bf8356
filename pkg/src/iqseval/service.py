"""Annotation collection: slot assignment, leases, durable response storage.

Each (sample, method) pair exposes ``annotators_per_sample`` slots. An
annotator leases the next open slot, fills in the questionnaire, and submits;
responses append to a JSONL file with flush and fsync before the slot is
marked complete, so a crash never loses an acknowledged response. Restarting
the service over the same output file resumes where collection left off.
"""

from __future__ import annotations

import logging
import os
import threading
import time
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Any, Callable

from .bundle import (
    EvaluationBundle,
    annotation_record_from_dict,
    annotation_to_json_line,
    validate_annotation,
)
from .errors import LeaseConflictError, RegistrationError, UsageError
from .extraction import extract_feature_sets
from .types import AttributionSign, TaskKind

logger = logging.getLogger(__name__)

DEFAULT_LEASE_TIMEOUT = 1800.0


class SlotState(str, Enum):
    OPEN = "open"
    LEASED = "leased"
    COMPLETED = "completed"


@dataclass
class _Slot:
    sample_id: str
    method_id: str
    index: int
    state: SlotState = SlotState.OPEN
    annotator_id: str | None = None
    lease_expiry: float | None = None

    @property
    def pair(self) -> tuple[str, str]:
        return (self.sample_id, self.method_id)


class AnnotationService:
    """Hands out annotation work and persists the responses.

    ``clock`` is injectable so lease expiry is testable without sleeping;
    it must be monotonic in real deployments.
    """

    def __init__(
        self,
        bundle: EvaluationBundle,
        output_path: Path | str,
        *,
        lease_timeout: float = DEFAULT_LEASE_TIMEOUT,
        clock: Callable[[], float] = time.monotonic,
        annotators: list[str] | None = None,
    ) -> None:
        if bundle.annotations:
            raise UsageError(
                "bundle already contains annotations; collection runs on unannotated data"
            )
        if lease_timeout <= 0:
            raise UsageError(f"lease_timeout must be positive, got {lease_timeout!r}")
        self._bundle = bundle
        self._output_path = Path(output_path)
        self._lease_timeout = float(lease_timeout)
        self._clock = clock
        self._allowed = frozenset(annotators) if annotators is not None else None
        self._lock = threading.Lock()
        self._slots: list[_Slot] = [
            _Slot(sample_id=sid, method_id=mid, index=i)
            for (sid, mid) in sorted(bundle.explanations)
            for i in range(1, bundle.config.annotators_per_sample + 1)
        ]
        self._done: set[tuple[str, str, str]] = set()
        self._resume()

    def _resume(self) -> None:
        if not self._output_path.exists():
            self._output_path.parent.mkdir(parents=True, exist_ok=True)
            return
        text = self._output_path.read_text(encoding="utf-8")
        import json

        for lineno, line in enumerate(text.splitlines(), start=1):
            if not line.strip():
                continue
            where = f"{self._output_path}:{lineno}"
            record = annotation_record_from_dict(json.loads(line), where=where)
            key = (record.sample_id, record.method_id, record.annotator_id)
            if key in self._done:
                logger.warning("%s: duplicate response %r ignored on resume", where, key)
                continue
            slot = self._first_open_slot(record.sample_id, record.method_id)
            if slot is None:
                logger.warning(
                    "%s: more responses than slots for (%r, %r)",
                    where,
                    record.sample_id,
                    record.method_id,
                )
                continue
            slot.state = SlotState.COMPLETED
            slot.annotator_id = record.annotator_id
            self._done.add(key)

    def _first_open_slot(self, sample_id: str, method_id: str) -> _Slot | None:
        for slot in self._slots:
            if slot.pair == (sample_id, method_id) and slot.state is SlotState.OPEN:
                return slot
        return None

    def _reap(self) -> None:
        now = self._clock()
        for slot in self._slots:
            if slot.state is SlotState.LEASED and slot.lease_expiry is not None:
                if now >= slot.lease_expiry:
                    logger.info(
                        "lease on (%r, %r) slot %d by %r expired",
                        slot.sample_id,
                        slot.method_id,
                        slot.index,
                        slot.annotator_id,
                    )
                    slot.state = SlotState.OPEN
                    slot.annotator_id = None
                    slot.lease_expiry = None

    def _check_registration(self, annotator_id: str) -> None:
        if not annotator_id:
            raise RegistrationError("annotator id must not be empty")
        if self._allowed is not None and annotator_id not in self._allowed:
            raise RegistrationError(f"annotator {annotator_id!r} is not registered")

    def _pair_touched_by(self, annotator_id: str, pair: tuple[str, str]) -> bool:
        if any(key[:2] == pair and key[2] == annotator_id for key in self._done):
            return True
        return any(
            slot.pair == pair
            and slot.state is SlotState.LEASED
            and slot.annotator_id == annotator_id
            for slot in self._slots
        )

    def next_task(self, annotator_id: str) -> dict[str, Any] | None:
        """Lease the next open slot for this annotator; None when drained.

        Calling again while a lease is active returns the same task, so a
        reloaded client cannot hoard slots.
        """
        with self._lock:
            self._check_registration(annotator_id)
            self._reap()
            for slot in self._slots:
                if slot.state is SlotState.LEASED and slot.annotator_id == annotator_id:
                    return self._payload(slot)
            for slot in self._slots:
                if slot.state is not SlotState.OPEN:
                    continue
                if self._pair_touched_by(annotator_id, slot.pair):
                    continue
                slot.state = SlotState.LEASED
                slot.annotator_id = annotator_id
                slot.lease_expiry = self._clock() + self._lease_timeout
                return self._payload(slot)
            return None

    def _payload(self, slot: _Slot) -> dict[str, Any]:
        task = self._bundle.task
        sample = self._bundle.samples[slot.sample_id]
        expl = self._bundle.explanations[slot.pair]
        sets = extract_feature_sets(
            expl, task, self._bundle.config.policy, n_tokens=sample.n_tokens
        )
        positive_class = task.class_for_sign(AttributionSign.POSITIVE)
        negative_class = task.class_for_sign(AttributionSign.NEGATIVE)
        peak = max((abs(a) for a in expl.attributions), default=0.0)
        tokens = []
        flat_index = 0
        for seg_no, seg in enumerate(sample.segments):
            for text in seg:
                a = expl.attributions[flat_index]
                if flat_index in sets.get(positive_class):
                    cls, sign = positive_class, AttributionSign.POSITIVE.value
                elif flat_index in sets.get(negative_class):
                    cls, sign = negative_class, AttributionSign.NEGATIVE.value
                else:
                    cls, sign = None, None
                tokens.append(
                    {
                        "index": flat_index,
                        "segment": seg_no,
                        "text": text,
                        "class": cls,
                        "sign": sign,
                        "intensity": abs(a) / peak if peak > 0 else 0.0,
                    }
                )
                flat_index += 1
        if task.kind is TaskKind.BINARY_CLASSIFICATION:
            assert task.classes is not None
            q1_spec: dict[str, Any] = {"type": "choice", "options": list(task.classes)}
        else:
            assert task.score_range is not None
            lo, hi = task.score_range
            q1_spec = {"type": "numeric", "min": lo, "max": hi, "step": 0.1}
        questions = [
            {
                "id": "q1",
                "text": "What do you think the model predicted for this text?",
                "answer_spec": q1_spec,
            },
            {
                "id": "q2",
                "text": "Toggle off any green highlighted words you disagree with.",
                "answer_spec": {"type": "token_toggle", "action": "remove", "class": positive_class},
            },
            {
                "id": "q3",
                "text": "Toggle off any red highlighted words you disagree with.",
                "answer_spec": {"type": "token_toggle", "action": "remove", "class": negative_class},
            },
            {
                "id": "q4",
                "text": "Toggle on any unhighlighted words that should be green.",
                "answer_spec": {"type": "token_toggle", "action": "add", "class": positive_class},
            },
            {
                "id": "q5",
                "text": "Toggle on any unhighlighted words that should be red.",
                "answer_spec": {"type": "token_toggle", "action": "add", "class": negative_class},
            },
        ]
        assert slot.lease_expiry is not None
        return {
            "sample_id": slot.sample_id,
            "method_id": slot.method_id,
            "slot": slot.index,
            "annotator_id": slot.annotator_id,
            "lease_expires_in": slot.lease_expiry - self._clock(),
            "task": {
                "task_id": task.task_id,
                "kind": task.kind.value,
                "classes": list(task.feature_classes),
                "positive_class": positive_class,
                "negative_class": negative_class,
                "threshold": task.threshold,
                "score_range": list(task.score_range) if task.score_range else None,
            },
            "segments": [list(seg) for seg in sample.segments],
            "tokens": tokens,
            "questions": questions,
        }

    def submit(self, body: dict[str, Any]) -> dict[str, Any]:
        """Validate and durably store one response, then complete the slot."""
        with self._lock:
            record = annotation_record_from_dict(body, where="response")
            self._check_registration(record.annotator_id)
            self._reap()
            key = (record.sample_id, record.method_id, record.annotator_id)
            if key in self._done:
                raise LeaseConflictError(
                    f"annotator {record.annotator_id!r} already responded for "
                    f"({record.sample_id!r}, {record.method_id!r})"
                )
            slot = next(
                (
                    s
                    for s in self._slots
                    if s.pair == (record.sample_id, record.method_id)
                    and s.state is SlotState.LEASED
                    and s.annotator_id == record.annotator_id
                ),
                None,
            )
            if slot is None:
                raise LeaseConflictError(
                    f"annotator {record.annotator_id!r} holds no active lease for "
                    f"({record.sample_id!r}, {record.method_id!r})"
                )
            validate_annotation(
                record,
                self._bundle.samples[record.sample_id],
                self._bundle.explanations[slot.pair],
                self._bundle.task,
                self._bundle.config.policy,
                require_in_range=True,
            )
            line = annotation_to_json_line(record)
            with open(self._output_path, "a", encoding="utf-8") as fh:
                fh.write(line + "\n")
                fh.flush()
                os.fsync(fh.fileno())
            slot.state = SlotState.COMPLETED
            slot.lease_expiry = None
            self._done.add(key)
            return {"status": "stored", "slot": slot.index, **self._counts()}

    def _counts(self) -> dict[str, int]:
        completed = sum(1 for s in self._slots if s.state is SlotState.COMPLETED)
        leased = sum(1 for s in self._slots if s.state is SlotState.LEASED)
        return {
            "total": len(self._slots),
            "completed": completed,
            "leased": leased,
            "open": len(self._slots) - completed - leased,
        }

    def progress(self) -> dict[str, Any]:
        with self._lock:
            self._reap()
            by_annotator: dict[str, int] = {}
            for _, _, annotator_id in self._done:
                by_annotator[annotator_id] = by_annotator.get(annotator_id, 0) + 1
            return {
                **self._counts(),
                "by_annotator": dict(sorted(by_annotator.items())),
            }

    def export(self) -> str:
        """The raw stored JSONL, byte for byte."""
        with self._lock:
            if not self._output_path.exists():
                return ""
            return self._output_path.read_text(encoding="utf-8")


def create_app(service: AnnotationService):
    """HTTP facade over a service instance."""
    from fastapi import FastAPI, HTTPException, Query, Response

    from .errors import DataError, ParseError

    app = FastAPI(title="annotation collection service")

    @app.get("/tasks/next")
    def tasks_next(annotator: str = Query(...)) -> Any:
        try:
            payload = service.next_task(annotator)
        except RegistrationError as exc:
            raise HTTPException(status_code=403, detail=str(exc)) from None
        if payload is None:
            return Response(status_code=204)
        return payload

    @app.post("/responses")
    def responses(body: dict[str, Any]) -> Any:
        try:
            return service.submit(body)
        except RegistrationError as exc:
            raise HTTPException(status_code=403, detail=str(exc)) from None
        except LeaseConflictError as exc:
            raise HTTPException(status_code=409, detail=str(exc)) from None
        except (ParseError, DataError) as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from None

    @app.get("/progress")
    def progress() -> Any:
        return service.progress()

    @app.get("/export")
    def export() -> Any:
        return Response(content=service.export(), media_type="application/x-ndjson")

    return app
