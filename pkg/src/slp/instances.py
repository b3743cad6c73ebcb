"""Relation instances and their JSON-lines serialization.

The instance file is the handoff artifact between pipeline stages: each
stage reads it, fills in its fields (SDP, features, stage label) and
writes it back.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator

from .corpus import EntityMention

POSITIVE = "POSITIVE"
NEGATIVE = "NEGATIVE"

UNTOUCHED = "UNTOUCHED"
KEPT = "KEPT"
DISCARDED = "DISCARDED"
PROPAGATED = "PROPAGATED"

DS_LABELS = (POSITIVE, NEGATIVE)
STAGE_LABELS = (UNTOUCHED, KEPT, DISCARDED, PROPAGATED)


@dataclass
class RelationInstance:
    relation: str
    subject: EntityMention
    object: EntityMention
    doc_id: str
    sentence_id: int
    ds_label: str
    stage_label: str = UNTOUCHED
    sdp: str | None = None
    pattern_key: str | None = None  # == sdp, or the between-words key for verb-less paths
    no_verb: bool = False
    features: list[str] = field(default_factory=list)

    @property
    def instance_id(self) -> str:
        return "|".join(
            (
                self.relation,
                self.doc_id,
                str(self.sentence_id),
                f"{self.subject.first}-{self.subject.last}",
                f"{self.object.first}-{self.object.last}",
            )
        )

    @property
    def sort_key(self) -> tuple:
        return (
            self.doc_id,
            self.sentence_id,
            self.subject.first,
            self.subject.last,
            self.object.first,
            self.object.last,
            self.subject.kb_id or "",
            self.object.kb_id or "",
        )


def _mention_to_dict(m: EntityMention) -> dict:
    return {
        "first": m.first,
        "last": m.last,
        "head_token": m.head_token,
        "entity_type": m.entity_type,
        "surface": m.surface,
        "kb_id": m.kb_id,
    }


def _mention_from_dict(d: dict, doc_id: str, sentence_id: int) -> EntityMention:
    return EntityMention(
        doc_id=doc_id,
        sentence_id=sentence_id,
        first=d["first"],
        last=d["last"],
        head_token=d["head_token"],
        entity_type=d["entity_type"],
        surface=d["surface"],
        kb_id=d.get("kb_id"),
    )


def instance_to_dict(inst: RelationInstance) -> dict:
    return {
        "relation": inst.relation,
        "doc_id": inst.doc_id,
        "sentence_id": inst.sentence_id,
        "subject": _mention_to_dict(inst.subject),
        "object": _mention_to_dict(inst.object),
        "ds_label": inst.ds_label,
        "stage_label": inst.stage_label,
        "sdp": inst.sdp,
        "pattern_key": inst.pattern_key,
        "no_verb": inst.no_verb,
        "features": inst.features,
    }


def instance_from_dict(d: dict) -> RelationInstance:
    return RelationInstance(
        relation=d["relation"],
        doc_id=d["doc_id"],
        sentence_id=d["sentence_id"],
        subject=_mention_from_dict(d["subject"], d["doc_id"], d["sentence_id"]),
        object=_mention_from_dict(d["object"], d["doc_id"], d["sentence_id"]),
        ds_label=d["ds_label"],
        stage_label=d.get("stage_label", UNTOUCHED),
        sdp=d.get("sdp"),
        pattern_key=d.get("pattern_key"),
        no_verb=d.get("no_verb", False),
        features=list(d.get("features", [])),
    )


def write_instances(instances: Iterable[RelationInstance], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        for inst in instances:
            handle.write(json.dumps(instance_to_dict(inst), ensure_ascii=False, sort_keys=True))
            handle.write("\n")


def read_instances(path: str | Path) -> list[RelationInstance]:
    out = []
    with open(path, encoding="utf-8") as handle:
        for line in handle:
            if line.strip():
                out.append(instance_from_dict(json.loads(line)))
    return out
