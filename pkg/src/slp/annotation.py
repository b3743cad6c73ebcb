"""Annotation verdicts: append-only journal, agreement, and filtering.

Every verdict is an event appended to a JSON-lines journal; replaying the
journal reproduces the verdict state exactly.  Per (relation, sdp,
annotator) the latest event wins; across annotators a designated primary
annotator takes precedence, otherwise the latest event overall.
"""

from __future__ import annotations

import json
import os
import threading
from dataclasses import dataclass, field
from pathlib import Path

from .instances import DISCARDED, KEPT, NEGATIVE, POSITIVE, UNTOUCHED, RelationInstance
from .patterns import ACCEPTED, REJECTED

JOURNAL_ENV_VAR = "SLP_JOURNAL"


class VerdictError(ValueError):
    """Malformed verdict or unknown pattern."""


@dataclass(frozen=True)
class AnnotationEvent:
    relation: str
    sdp: str
    verdict: str  # ACCEPTED or REJECTED
    annotator_id: str
    timestamp: float
    session_id: str

    def to_dict(self) -> dict:
        return {
            "relation": self.relation,
            "sdp": self.sdp,
            "verdict": self.verdict,
            "annotator_id": self.annotator_id,
            "timestamp": self.timestamp,
            "session_id": self.session_id,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "AnnotationEvent":
        return cls(
            relation=d["relation"],
            sdp=d["sdp"],
            verdict=d["verdict"],
            annotator_id=d["annotator_id"],
            timestamp=float(d["timestamp"]),
            session_id=d.get("session_id", ""),
        )


@dataclass
class VerdictState:
    """Verdicts reconstructed from a journal, queryable per annotator."""

    # (relation, sdp, annotator_id) -> latest event
    latest: dict[tuple[str, str, str], AnnotationEvent] = field(default_factory=dict)
    order: int = 0
    _sequence: dict[tuple[str, str, str], int] = field(default_factory=dict)

    def apply(self, event: AnnotationEvent) -> None:
        if event.verdict not in (ACCEPTED, REJECTED):
            raise VerdictError(f"verdict must be ACCEPTED or REJECTED, got {event.verdict!r}")
        key = (event.relation, event.sdp, event.annotator_id)
        self.order += 1
        self.latest[key] = event
        self._sequence[key] = self.order

    def annotator_verdicts(self, relation: str, annotator_id: str) -> dict[str, str]:
        return {
            sdp: ev.verdict
            for (rel, sdp, ann), ev in self.latest.items()
            if rel == relation and ann == annotator_id
        }

    def annotators(self, relation: str | None = None) -> list[str]:
        return sorted(
            {ann for (rel, _, ann) in self.latest if relation is None or rel == relation}
        )

    def effective_verdicts(self, relation: str, primary_annotator: str | None = None) -> dict[str, str]:
        """Verdict per pattern: the primary annotator's if present, else the
        most recent event across annotators."""
        result: dict[str, str] = {}
        winner_seq: dict[str, int] = {}
        for (rel, sdp, ann), ev in self.latest.items():
            if rel != relation:
                continue
            seq = self._sequence[(rel, sdp, ann)]
            if winner_seq.get(sdp, -1) < seq:
                result[sdp] = ev.verdict
                winner_seq[sdp] = seq
        if primary_annotator is not None:
            for (rel, sdp, ann), ev in self.latest.items():
                if rel == relation and ann == primary_annotator:
                    result[sdp] = ev.verdict
        return result


class AnnotationJournal:
    """Append-only JSON-lines event log backing the verdict state."""

    def __init__(self, path: str | Path | None = None):
        if path is None:
            path = os.environ.get(JOURNAL_ENV_VAR, "annotation_journal.jsonl")
        self.path = Path(path)
        self.state = VerdictState()
        self._write_lock = threading.Lock()
        if self.path.exists():
            self._replay()

    def _replay(self) -> None:
        with open(self.path, encoding="utf-8") as handle:
            for line in handle:
                if line.strip():
                    self.state.apply(AnnotationEvent.from_dict(json.loads(line)))

    def append(self, event: AnnotationEvent) -> None:
        """Persist the event, then apply it; on write failure, state is
        untouched.  Writers are serialized so concurrent service requests
        cannot interleave journal lines."""
        if event.verdict not in (ACCEPTED, REJECTED):
            raise VerdictError(f"verdict must be ACCEPTED or REJECTED, got {event.verdict!r}")
        line = json.dumps(event.to_dict(), ensure_ascii=False, sort_keys=True) + "\n"
        with self._write_lock:
            with open(self.path, "a", encoding="utf-8") as handle:
                handle.write(line)
                handle.flush()
                os.fsync(handle.fileno())
            self.state.apply(event)

    def events(self) -> list[AnnotationEvent]:
        if not self.path.exists():
            return []
        out = []
        with open(self.path, encoding="utf-8") as handle:
            for line in handle:
                if line.strip():
                    out.append(AnnotationEvent.from_dict(json.loads(line)))
        return out


@dataclass
class ImportResult:
    events: int
    accepted: int
    warnings: int


def import_tsv(
    journal: AnnotationJournal,
    path: str | Path,
    annotator_id: str,
    relation: str,
    known_sdps: set[str] | None = None,
    session_id: str = "tsv-import",
    timestamp: float = 0.0,
) -> ImportResult:
    """Import a filled queue spreadsheet: ``x`` in the verdict column means
    ACCEPTED, blank means REJECTED.  Rows with unknown patterns are skipped
    and counted as warnings."""
    events = 0
    accepted = 0
    warnings = 0
    with open(path, encoding="utf-8") as handle:
        header = handle.readline().rstrip("\n").split("\t")
        try:
            sdp_col = header.index("sdp")
            verdict_col = header.index("verdict")
        except ValueError:
            raise VerdictError(f"{path}: missing 'sdp'/'verdict' columns in header") from None
        for line in handle:
            line = line.rstrip("\n")
            if not line.strip():
                continue
            cols = line.split("\t")
            sdp = cols[sdp_col]
            if known_sdps is not None and sdp not in known_sdps:
                warnings += 1
                continue
            mark = cols[verdict_col].strip().lower() if len(cols) > verdict_col else ""
            verdict = ACCEPTED if mark == "x" else REJECTED
            journal.append(
                AnnotationEvent(
                    relation=relation,
                    sdp=sdp,
                    verdict=verdict,
                    annotator_id=annotator_id,
                    timestamp=timestamp,
                    session_id=session_id,
                )
            )
            events += 1
            if verdict == ACCEPTED:
                accepted += 1
    return ImportResult(events=events, accepted=accepted, warnings=warnings)


def cohen_kappa(annotator_a: dict[str, str], annotator_b: dict[str, str]) -> float:
    """Chance-corrected agreement between two verdict maps over the same
    pattern set."""
    if set(annotator_a) != set(annotator_b):
        raise ValueError("annotator maps must cover the same pattern set")
    items = sorted(annotator_a)
    if not items:
        raise ValueError("cannot compute agreement over an empty pattern set")
    n = len(items)
    observed = sum(1 for k in items if annotator_a[k] == annotator_b[k]) / n
    labels = set(annotator_a.values()) | set(annotator_b.values())
    expected = 0.0
    for label in labels:
        fa = sum(1 for k in items if annotator_a[k] == label) / n
        fb = sum(1 for k in items if annotator_b[k] == label) / n
        expected += fa * fb
    if expected == 1.0:
        return 1.0
    return (observed - expected) / (1.0 - expected)


def filter_instances(
    instances: list[RelationInstance],
    verdicts: dict[str, str],
) -> list[RelationInstance]:
    """Partition positives by pattern verdict: ACCEPTED pattern -> KEPT,
    anything else -> DISCARDED.  Negatives pass through UNTOUCHED."""
    for inst in instances:
        if inst.ds_label == NEGATIVE:
            inst.stage_label = UNTOUCHED
            continue
        key = inst.pattern_key
        if key is not None and verdicts.get(key) == ACCEPTED:
            inst.stage_label = KEPT
        else:
            inst.stage_label = DISCARDED
    return instances
