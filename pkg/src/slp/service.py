"""HTTP annotation service.

Serves the confidence-ranked pattern queues to the browser UI, records
verdicts in the append-only journal, and reports progress and annotator
agreement.  Queue files come from the `rank` stage; the journal path can
be overridden with the SLP_JOURNAL environment variable.
"""

from __future__ import annotations

import time
from pathlib import Path

from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel

from .annotation import AnnotationEvent, AnnotationJournal, cohen_kappa
from .patterns import ACCEPTED, REJECTED, UNLABELED, SdpPattern, queue_from_json


class VerdictRequest(BaseModel):
    relation: str
    sdp: str
    verdict: str
    annotator_id: str
    session_id: str = ""


class QueueStore:
    """Ranked pattern queues, one JSON file per relation."""

    def __init__(self, queue_files: dict[str, str | Path]):
        self.queues: dict[str, list[SdpPattern]] = {
            relation: queue_from_json(path) for relation, path in queue_files.items()
        }

    @classmethod
    def from_rank_dir(cls, rank_dir: str | Path, relations: list[str]) -> "QueueStore":
        files = {
            relation: Path(rank_dir) / f"patterns_{relation.replace(':', '_')}.json"
            for relation in relations
        }
        return cls({r: p for r, p in files.items() if p.exists()})

    def relations(self) -> list[str]:
        return sorted(self.queues)

    def queue(self, relation: str) -> list[SdpPattern]:
        if relation not in self.queues:
            raise KeyError(relation)
        return self.queues[relation]

    def known_sdps(self, relation: str) -> set[str]:
        return {p.sdp for p in self.queue(relation)}


def create_app(
    store: QueueStore,
    journal: AnnotationJournal,
    primary_annotator: str | None = None,
    clock=time.time,
) -> FastAPI:
    app = FastAPI(title="slp annotation service")
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )

    def queue_payload(relation: str, top_k: int | None) -> list[dict]:
        try:
            queue = store.queue(relation)
        except KeyError:
            raise HTTPException(status_code=404, detail=f"unknown relation {relation!r}") from None
        verdicts = journal.state.effective_verdicts(relation, primary_annotator)
        rows = []
        for rank, pattern in enumerate(queue[: top_k if top_k else len(queue)], start=1):
            row = pattern.to_dict()
            row["rank"] = rank
            row["verdict"] = verdicts.get(pattern.sdp, UNLABELED)
            rows.append(row)
        return rows

    @app.get("/relations")
    def relations():
        return {"relations": store.relations()}

    @app.get("/queue/{relation}")
    def get_queue(relation: str, top_k: int | None = None):
        return {"relation": relation, "patterns": queue_payload(relation, top_k)}

    @app.post("/verdict")
    def post_verdict(request: VerdictRequest):
        if request.verdict not in (ACCEPTED, REJECTED):
            raise HTTPException(status_code=400, detail=f"invalid verdict {request.verdict!r}")
        try:
            known = store.known_sdps(request.relation)
        except KeyError:
            raise HTTPException(status_code=404, detail=f"unknown relation {request.relation!r}") from None
        if request.sdp not in known:
            raise HTTPException(status_code=400, detail="pattern is not in the queue for this relation")
        event = AnnotationEvent(
            relation=request.relation,
            sdp=request.sdp,
            verdict=request.verdict,
            annotator_id=request.annotator_id,
            timestamp=clock(),
            session_id=request.session_id,
        )
        try:
            journal.append(event)
        except OSError as exc:
            raise HTTPException(status_code=500, detail=f"journal write failed: {exc}") from None
        verdicts = journal.state.effective_verdicts(request.relation, primary_annotator)
        return {
            "relation": request.relation,
            "sdp": request.sdp,
            "verdict": verdicts.get(request.sdp, UNLABELED),
        }

    @app.get("/progress/{relation}")
    def progress(relation: str):
        try:
            queue = store.queue(relation)
        except KeyError:
            raise HTTPException(status_code=404, detail=f"unknown relation {relation!r}") from None
        verdicts = journal.state.effective_verdicts(relation, primary_annotator)
        known = {p.sdp for p in queue}
        labeled = {s: v for s, v in verdicts.items() if s in known}
        sessions: dict[str, dict] = {}
        for event in journal.events():
            if event.relation != relation:
                continue
            info = sessions.setdefault(
                event.session_id, {"started": event.timestamp, "last": event.timestamp, "events": 0}
            )
            info["started"] = min(info["started"], event.timestamp)
            info["last"] = max(info["last"], event.timestamp)
            info["events"] += 1
        latest = max(sessions.values(), key=lambda s: s["last"], default=None)
        return {
            "relation": relation,
            "total": len(queue),
            "labeled": len(labeled),
            "accepted": sum(1 for v in labeled.values() if v == ACCEPTED),
            "rejected": sum(1 for v in labeled.values() if v == REJECTED),
            "sessions": sessions,
            "session_elapsed": (clock() - latest["started"]) if latest else 0.0,
        }

    @app.get("/agreement/{relation}")
    def agreement(relation: str, a: str, b: str):
        try:
            store.queue(relation)
        except KeyError:
            raise HTTPException(status_code=404, detail=f"unknown relation {relation!r}") from None
        map_a = journal.state.annotator_verdicts(relation, a)
        map_b = journal.state.annotator_verdicts(relation, b)
        common = sorted(set(map_a) & set(map_b))
        if not common:
            raise HTTPException(status_code=400, detail="annotators share no labeled patterns")
        kappa = cohen_kappa({s: map_a[s] for s in common}, {s: map_b[s] for s in common})
        return {"relation": relation, "a": a, "b": b, "items": len(common), "kappa": kappa}

    return app


def serve(
    rank_dir: str | Path,
    relations: list[str],
    journal_path: str | Path | None = None,
    host: str = "127.0.0.1",
    port: int = 8571,
    primary_annotator: str | None = None,
) -> None:
    """Run the annotation service until interrupted."""
    import uvicorn

    store = QueueStore.from_rank_dir(rank_dir, relations)
    journal = AnnotationJournal(journal_path)
    app = create_app(store, journal, primary_annotator=primary_annotator)
    uvicorn.run(app, host=host, port=port, log_level="warning")
