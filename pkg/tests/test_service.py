import pytest
from fastapi.testclient import TestClient

from slp.annotation import AnnotationJournal
from slp.patterns import ACCEPTED, REJECTED, UNLABELED, SdpPattern, queue_to_json
from slp.service import QueueStore, create_app


@pytest.fixture
def service(tmp_path):
    patterns = [
        SdpPattern("per:spouse", f"P{i:03d}", pos_count=10 - i % 5, neg_count=i % 3, confidence=10.0 - i / 10)
        for i in range(20)
    ]
    qpath = tmp_path / "patterns_per_spouse.json"
    queue_to_json(patterns, qpath)
    store = QueueStore({"per:spouse": qpath})
    journal = AnnotationJournal(tmp_path / "journal.jsonl")
    fake_now = {"t": 1000.0}
    app = create_app(store, journal, clock=lambda: fake_now["t"])
    return TestClient(app), journal, fake_now


def test_relations_listing(service):
    client, _, _ = service
    response = client.get("/relations")
    assert response.status_code == 200
    assert response.json() == {"relations": ["per:spouse"]}


def test_queue_order_and_top_k(service):
    client, _, _ = service
    response = client.get("/queue/per:spouse", params={"top_k": 5})
    assert response.status_code == 200
    rows = response.json()["patterns"]
    assert len(rows) == 5
    assert [r["rank"] for r in rows] == [1, 2, 3, 4, 5]
    assert all(r["verdict"] == UNLABELED for r in rows)


def test_unknown_relation_404(service):
    client, _, _ = service
    assert client.get("/queue/nope").status_code == 404
    assert client.get("/progress/nope").status_code == 404


def test_post_verdict_read_your_write(service):
    client, _, _ = service
    body = {
        "relation": "per:spouse",
        "sdp": "P000",
        "verdict": ACCEPTED,
        "annotator_id": "expert",
        "session_id": "s1",
    }
    response = client.post("/verdict", json=body)
    assert response.status_code == 200
    assert response.json()["verdict"] == ACCEPTED
    rows = client.get("/queue/per:spouse").json()["patterns"]
    assert next(r for r in rows if r["sdp"] == "P000")["verdict"] == ACCEPTED


def test_post_same_verdict_twice_two_journal_lines(service):
    client, journal, _ = service
    body = {
        "relation": "per:spouse",
        "sdp": "P001",
        "verdict": REJECTED,
        "annotator_id": "expert",
        "session_id": "s1",
    }
    assert client.post("/verdict", json=body).status_code == 200
    assert client.post("/verdict", json=body).status_code == 200
    assert len(journal.events()) == 2
    assert journal.state.effective_verdicts("per:spouse")["P001"] == REJECTED


def test_post_verdict_validation(service):
    client, _, _ = service
    base = {"relation": "per:spouse", "sdp": "P000", "annotator_id": "a", "session_id": "s"}
    assert client.post("/verdict", json={**base, "verdict": "MAYBE"}).status_code == 400
    assert client.post("/verdict", json={**base, "sdp": "UNKNOWN", "verdict": ACCEPTED}).status_code == 400
    assert (
        client.post("/verdict", json={**base, "relation": "nope", "verdict": ACCEPTED}).status_code == 404
    )


def test_progress_counts_and_elapsed(service):
    client, _, fake_now = service
    for i, verdict in enumerate([ACCEPTED, REJECTED, ACCEPTED]):
        fake_now["t"] = 1000.0 + i * 30
        client.post(
            "/verdict",
            json={
                "relation": "per:spouse",
                "sdp": f"P00{i}",
                "verdict": verdict,
                "annotator_id": "expert",
                "session_id": "s1",
            },
        )
    fake_now["t"] = 1090.0
    progress = client.get("/progress/per:spouse").json()
    assert progress["total"] == 20
    assert progress["labeled"] == 3
    assert progress["accepted"] == 2
    assert progress["rejected"] == 1
    assert progress["session_elapsed"] == pytest.approx(90.0)


def test_agreement_endpoint(service):
    client, _, _ = service
    verdicts_a = [ACCEPTED, ACCEPTED, REJECTED, REJECTED]
    verdicts_b = [ACCEPTED, REJECTED, ACCEPTED, REJECTED]
    for i, (va, vb) in enumerate(zip(verdicts_a, verdicts_b)):
        for annotator, verdict in (("a", va), ("b", vb)):
            client.post(
                "/verdict",
                json={
                    "relation": "per:spouse",
                    "sdp": f"P00{i}",
                    "verdict": verdict,
                    "annotator_id": annotator,
                    "session_id": "s1",
                },
            )
    result = client.get("/agreement/per:spouse", params={"a": "a", "b": "b"}).json()
    assert result["items"] == 4
    assert result["kappa"] == 0.0
    assert client.get("/agreement/per:spouse", params={"a": "a", "b": "nobody"}).status_code == 400


def test_journal_failure_no_partial_state(service, tmp_path):
    client, journal, _ = service
    journal.path = tmp_path / "missing-dir" / "j.jsonl"  # unwritable target
    response = client.post(
        "/verdict",
        json={
            "relation": "per:spouse",
            "sdp": "P002",
            "verdict": ACCEPTED,
            "annotator_id": "expert",
            "session_id": "s1",
        },
    )
    assert response.status_code == 500
    assert "P002" not in journal.state.effective_verdicts("per:spouse")
