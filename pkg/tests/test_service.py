import json
import threading

import pytest

from iqseval import (
    DataError,
    EvaluationBundle,
    LeaseConflictError,
    RegistrationError,
    UsageError,
    generate_synthetic_bundle,
    load_bundle,
    save_bundle,
)
from iqseval.service import AnnotationService, create_app


def unannotated(seed=0, n_samples=2, n_methods=2, n_annotators=3, **kw):
    full = generate_synthetic_bundle(
        seed=seed, n_samples=n_samples, n_methods=n_methods, n_annotators=n_annotators, **kw
    )
    return EvaluationBundle(
        config=full.config,
        samples=full.samples,
        explanations=full.explanations,
        annotations=(),
    )


class Clock:
    def __init__(self):
        self.now = 0.0

    def __call__(self):
        return self.now


@pytest.fixture
def clock():
    return Clock()


@pytest.fixture
def service(tmp_path, clock):
    return AnnotationService(
        unannotated(), tmp_path / "responses.jsonl", lease_timeout=60.0, clock=clock
    )


def respond(task, answer=2.0, **edits):
    return {
        "sample_id": task["sample_id"],
        "method_id": task["method_id"],
        "annotator_id": task["annotator_id"],
        "q1_answer": answer,
        "removals": edits.get("removals", {}),
        "additions": edits.get("additions", {}),
        "duration_secs": 12.0,
    }


class TestAssignment:
    def test_rejects_annotated_bundle(self, tmp_path):
        full = generate_synthetic_bundle(seed=0, n_samples=2)
        with pytest.raises(UsageError):
            AnnotationService(full, tmp_path / "r.jsonl")

    def test_slots_are_pairs_times_annotators(self, service):
        progress = service.progress()
        assert progress["total"] == 2 * 2 * 3
        assert progress["open"] == progress["total"]

    def test_first_assignment_is_lexicographic(self, service):
        task = service.next_task("ann1")
        assert (task["sample_id"], task["method_id"], task["slot"]) == (
            "s0000",
            "method00",
            1,
        )

    def test_next_is_idempotent_while_leased(self, service):
        a = service.next_task("ann1")
        b = service.next_task("ann1")
        assert (a["sample_id"], a["method_id"], a["slot"]) == (
            b["sample_id"],
            b["method_id"],
            b["slot"],
        )

    def test_two_annotators_get_different_slots(self, service):
        a = service.next_task("ann1")
        b = service.next_task("ann2")
        assert (a["sample_id"], a["method_id"], a["slot"]) != (
            b["sample_id"],
            b["method_id"],
            b["slot"],
        )

    def test_annotator_never_sees_a_pair_twice(self, service):
        seen = set()
        while True:
            task = service.next_task("ann1")
            if task is None:
                break
            pair = (task["sample_id"], task["method_id"])
            assert pair not in seen
            seen.add(pair)
            service.submit(respond(task))
        # one slot per pair for a single annotator
        assert len(seen) == 4

    def test_drained_returns_none(self, tmp_path, clock):
        svc = AnnotationService(
            unannotated(n_samples=1, n_methods=1, n_annotators=1),
            tmp_path / "r.jsonl",
            clock=clock,
        )
        task = svc.next_task("ann1")
        svc.submit(respond(task))
        assert svc.next_task("ann1") is None
        assert svc.next_task("ann2") is None


class TestLeases:
    def test_expired_lease_returns_to_pool(self, service, clock):
        a = service.next_task("ann1")
        clock.now = 60.0
        b = service.next_task("ann2")
        assert (a["sample_id"], a["method_id"], a["slot"]) == (
            b["sample_id"],
            b["method_id"],
            b["slot"],
        )

    def test_submit_after_expiry_is_conflict(self, service, clock):
        task = service.next_task("ann1")
        clock.now = 61.0
        with pytest.raises(LeaseConflictError):
            service.submit(respond(task))

    def test_submit_without_lease_is_conflict(self, service):
        with pytest.raises(LeaseConflictError):
            service.submit(
                {
                    "sample_id": "s0000",
                    "method_id": "method00",
                    "annotator_id": "ann1",
                    "q1_answer": 2.0,
                }
            )

    def test_double_submit_is_conflict(self, service):
        task = service.next_task("ann1")
        service.submit(respond(task))
        with pytest.raises(LeaseConflictError):
            service.submit(respond(task))

    def test_lease_expiry_visible_in_payload(self, service):
        task = service.next_task("ann1")
        assert task["lease_expires_in"] == 60.0


class TestRegistration:
    def test_allowlist_enforced(self, tmp_path, clock):
        svc = AnnotationService(
            unannotated(),
            tmp_path / "r.jsonl",
            clock=clock,
            annotators=["ann1", "ann2"],
        )
        svc.next_task("ann1")
        with pytest.raises(RegistrationError):
            svc.next_task("outsider")

    def test_empty_annotator_rejected(self, service):
        with pytest.raises(RegistrationError):
            service.next_task("")


class TestSubmissionValidation:
    def test_answer_out_of_range_rejected(self, service):
        task = service.next_task("ann1")
        with pytest.raises(DataError):
            service.submit(respond(task, answer=99.0))

    def test_bad_removal_rejected(self, service):
        task = service.next_task("ann1")
        unhighlighted = [t["index"] for t in task["tokens"] if t["class"] is None]
        body = respond(task, removals={"raises_score": [unhighlighted[0]]})
        with pytest.raises(DataError):
            service.submit(body)

    def test_valid_edits_accepted(self, service):
        task = service.next_task("ann1")
        highlighted_up = [t["index"] for t in task["tokens"] if t["class"] == "raises_score"]
        unhighlighted = [t["index"] for t in task["tokens"] if t["class"] is None]
        body = respond(task)
        if highlighted_up:
            body["removals"] = {"raises_score": [highlighted_up[0]]}
        if unhighlighted:
            body["additions"] = {"lowers_score": [unhighlighted[0]]}
        out = service.submit(body)
        assert out["status"] == "stored"
        assert out["completed"] == 1


class TestPersistence:
    def test_responses_land_on_disk_immediately(self, service, tmp_path):
        task = service.next_task("ann1")
        service.submit(respond(task))
        lines = (tmp_path / "responses.jsonl").read_text().splitlines()
        assert len(lines) == 1
        stored = json.loads(lines[0])
        assert stored["sample_id"] == task["sample_id"]
        assert stored["annotator_id"] == "ann1"

    def test_resume_restores_progress_and_skips_done_pairs(self, tmp_path, clock):
        path = tmp_path / "r.jsonl"
        svc = AnnotationService(unannotated(), path, clock=clock)
        task = svc.next_task("ann1")
        svc.submit(respond(task))

        again = AnnotationService(unannotated(), path, clock=clock)
        assert again.progress()["completed"] == 1
        nxt = again.next_task("ann1")
        assert (nxt["sample_id"], nxt["method_id"]) != (
            task["sample_id"],
            task["method_id"],
        )
        with pytest.raises(LeaseConflictError):
            again.submit(respond(task))

    def test_export_matches_file_bytes(self, service, tmp_path):
        task = service.next_task("ann1")
        service.submit(respond(task))
        assert service.export() == (tmp_path / "responses.jsonl").read_text()

    def test_export_reloads_as_valid_bundle(self, tmp_path, clock):
        # drive a full collection, then feed the export back into the loader
        bundle = unannotated(n_samples=2, n_methods=1, n_annotators=2)
        svc = AnnotationService(bundle, tmp_path / "r.jsonl", clock=clock)
        for annotator in ("ann1", "ann2"):
            while True:
                task = svc.next_task(annotator)
                if task is None:
                    break
                svc.submit(respond(task, answer=3.5))
        data_dir = tmp_path / "bundle"
        paths = save_bundle(bundle, data_dir)
        export_path = tmp_path / "exported.jsonl"
        export_path.write_text(svc.export())
        loaded = load_bundle(
            paths["samples"], [paths["explanations"]], [export_path], bundle.config
        )
        assert len(loaded.annotations) == 2 * 1 * 2
        assert {a.annotator_id for a in loaded.annotations} == {"ann1", "ann2"}


class TestPayload:
    def test_token_fields(self, service):
        task = service.next_task("ann1")
        sample_tokens = task["tokens"]
        assert [t["index"] for t in sample_tokens] == list(range(len(sample_tokens)))
        peak = max(abs(t["intensity"]) for t in sample_tokens)
        assert peak == 1.0  # normalized to the largest attribution
        for t in sample_tokens:
            assert 0.0 <= t["intensity"] <= 1.0
            assert t["segment"] in (0, 1)
            if t["class"] is not None:
                assert t["sign"] in ("positive_attribution", "negative_attribution")

    def test_questions_cover_answer_and_toggles(self, service):
        task = service.next_task("ann1")
        ids = [q["id"] for q in task["questions"]]
        assert ids == ["q1", "q2", "q3", "q4", "q5"]
        q1 = task["questions"][0]["answer_spec"]
        assert q1 == {"type": "numeric", "min": 0.0, "max": 5.0, "step": 0.1}
        toggles = [q["answer_spec"] for q in task["questions"][1:]]
        assert {(t["action"], t["class"]) for t in toggles} == {
            ("remove", "raises_score"),
            ("remove", "lowers_score"),
            ("add", "raises_score"),
            ("add", "lowers_score"),
        }

    def test_classification_q1_is_choice(self, tmp_path, clock):
        from iqseval import TaskKind

        svc = AnnotationService(
            unannotated(kind=TaskKind.BINARY_CLASSIFICATION),
            tmp_path / "r.jsonl",
            clock=clock,
        )
        task = svc.next_task("ann1")
        assert task["questions"][0]["answer_spec"] == {
            "type": "choice",
            "options": ["negative", "positive"],
        }


class TestConcurrency:
    def test_at_most_one_lease_per_slot(self, tmp_path):
        svc = AnnotationService(
            unannotated(n_samples=4, n_methods=2, n_annotators=3),
            tmp_path / "r.jsonl",
            lease_timeout=600.0,
        )
        leases = []
        errors = []
        barrier = threading.Barrier(12)

        def grab(annotator):
            try:
                barrier.wait()
                task = svc.next_task(annotator)
                if task is not None:
                    leases.append((task["sample_id"], task["method_id"], task["slot"]))
            except Exception as exc:  # pragma: no cover
                errors.append(exc)

        threads = [threading.Thread(target=grab, args=(f"ann{i}",)) for i in range(12)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        assert not errors
        assert len(leases) == 12
        assert len(set(leases)) == 12

    def test_concurrent_full_collection(self, tmp_path):
        svc = AnnotationService(
            unannotated(n_samples=2, n_methods=2, n_annotators=3),
            tmp_path / "r.jsonl",
            lease_timeout=600.0,
        )
        errors = []

        def work(annotator):
            try:
                while True:
                    task = svc.next_task(annotator)
                    if task is None:
                        return
                    svc.submit(respond(task))
            except Exception as exc:  # pragma: no cover
                errors.append(exc)

        threads = [threading.Thread(target=work, args=(f"ann{i}",)) for i in range(3)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        assert not errors
        progress = svc.progress()
        assert progress["completed"] == progress["total"] == 12
        assert sum(progress["by_annotator"].values()) == 12


class TestHttp:
    @pytest.fixture
    def client(self, tmp_path, clock):
        from fastapi.testclient import TestClient

        svc = AnnotationService(
            unannotated(n_samples=1, n_methods=1, n_annotators=2),
            tmp_path / "r.jsonl",
            clock=clock,
            annotators=["ann1", "ann2"],
        )
        return TestClient(create_app(svc))

    def test_next_then_submit_then_progress(self, client):
        r = client.get("/tasks/next", params={"annotator": "ann1"})
        assert r.status_code == 200
        task = r.json()
        r = client.post("/responses", json=respond(task))
        assert r.status_code == 200
        assert r.json()["completed"] == 1
        r = client.get("/progress")
        assert r.json()["completed"] == 1

    def test_drained_is_204(self, client):
        task = client.get("/tasks/next", params={"annotator": "ann1"}).json()
        client.post("/responses", json=respond(task))
        assert client.get("/tasks/next", params={"annotator": "ann1"}).status_code == 204

    def test_unregistered_is_403(self, client):
        assert (
            client.get("/tasks/next", params={"annotator": "ghost"}).status_code == 403
        )

    def test_no_lease_is_409(self, client):
        body = {
            "sample_id": "s0000",
            "method_id": "method00",
            "annotator_id": "ann1",
            "q1_answer": 2.0,
        }
        assert client.post("/responses", json=body).status_code == 409

    def test_invalid_body_is_422(self, client):
        task = client.get("/tasks/next", params={"annotator": "ann1"}).json()
        bad = respond(task, answer=99.0)
        assert client.post("/responses", json=bad).status_code == 422

    def test_export_is_ndjson(self, client):
        task = client.get("/tasks/next", params={"annotator": "ann1"}).json()
        client.post("/responses", json=respond(task))
        r = client.get("/export")
        assert r.status_code == 200
        assert r.headers["content-type"].startswith("application/x-ndjson")
        assert len(r.text.splitlines()) == 1
