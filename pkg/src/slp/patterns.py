"""Pattern statistics, smoothed confidence and the ranked annotation queue.

Confidence of a pattern is the smoothed odds of it occurring among the
positive rather than the negative distantly supervised instances:
(pos + alpha) / (neg + alpha).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .corpus import ParsedSentence
from .instances import POSITIVE, RelationInstance

UNLABELED = "UNLABELED"
ACCEPTED = "ACCEPTED"
REJECTED = "REJECTED"

VERDICTS = (UNLABELED, ACCEPTED, REJECTED)

DEFAULT_ALPHA = 1.0
DEFAULT_SAMPLE_COUNT = 5


@dataclass
class SampleSentence:
    doc_id: str
    sentence_id: int
    text: str
    subject_span: tuple[int, int]
    object_span: tuple[int, int]

    def to_dict(self) -> dict:
        return {
            "doc_id": self.doc_id,
            "sentence_id": self.sentence_id,
            "text": self.text,
            "subject_span": list(self.subject_span),
            "object_span": list(self.object_span),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SampleSentence":
        return cls(
            doc_id=d["doc_id"],
            sentence_id=d["sentence_id"],
            text=d["text"],
            subject_span=tuple(d["subject_span"]),
            object_span=tuple(d["object_span"]),
        )


@dataclass
class SdpPattern:
    relation: str
    sdp: str
    pos_count: int = 0
    neg_count: int = 0
    confidence: float = 0.0
    verdict: str = UNLABELED
    sample_sentences: list[SampleSentence] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "relation": self.relation,
            "sdp": self.sdp,
            "pos_count": self.pos_count,
            "neg_count": self.neg_count,
            "confidence": self.confidence,
            "verdict": self.verdict,
            "sample_sentences": [s.to_dict() for s in self.sample_sentences],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SdpPattern":
        return cls(
            relation=d["relation"],
            sdp=d["sdp"],
            pos_count=d["pos_count"],
            neg_count=d["neg_count"],
            confidence=d["confidence"],
            verdict=d.get("verdict", UNLABELED),
            sample_sentences=[SampleSentence.from_dict(s) for s in d.get("sample_sentences", [])],
        )


def confidence(pos_count: int, neg_count: int, alpha: float = DEFAULT_ALPHA) -> float:
    """Smoothed positive/negative occurrence odds for a pattern."""
    if alpha <= 0:
        raise ValueError("alpha must be > 0")
    return (pos_count + alpha) / (neg_count + alpha)


def aggregate_patterns(
    instances: list[RelationInstance],
    relation: str,
    alpha: float = DEFAULT_ALPHA,
    sample_count: int = DEFAULT_SAMPLE_COUNT,
    sentences: dict[tuple[str, int], ParsedSentence] | None = None,
) -> list[SdpPattern]:
    """Group instances of one relation by pattern key and count labels.

    sample_sentences holds the first ``sample_count`` positive occurrences
    in canonical order.  Instances without an extracted pattern are
    ignored.
    """
    relevant = sorted(
        (i for i in instances if i.relation == relation and i.pattern_key),
        key=lambda i: i.sort_key,
    )
    by_key: dict[str, SdpPattern] = {}
    for inst in relevant:
        pattern = by_key.get(inst.pattern_key)
        if pattern is None:
            pattern = SdpPattern(relation=relation, sdp=inst.pattern_key)
            by_key[inst.pattern_key] = pattern
        if inst.ds_label == POSITIVE:
            pattern.pos_count += 1
            if len(pattern.sample_sentences) < sample_count:
                text = inst.instance_id
                if sentences is not None:
                    sent = sentences.get((inst.doc_id, inst.sentence_id))
                    if sent is not None:
                        text = sent.surface_text()
                pattern.sample_sentences.append(
                    SampleSentence(
                        doc_id=inst.doc_id,
                        sentence_id=inst.sentence_id,
                        text=text,
                        subject_span=inst.subject.span(),
                        object_span=inst.object.span(),
                    )
                )
        else:
            pattern.neg_count += 1
    patterns = list(by_key.values())
    for pattern in patterns:
        pattern.confidence = confidence(pattern.pos_count, pattern.neg_count, alpha)
    patterns.sort(key=lambda p: p.sdp)
    return patterns


def rank_key(pattern: SdpPattern) -> tuple:
    return (-pattern.confidence, -pattern.pos_count, pattern.sdp)


def ranked_queue(patterns: list[SdpPattern], top_k: int | None = None) -> list[SdpPattern]:
    """Patterns by descending confidence; ties by pos_count then pattern
    string.  Truncated to ``top_k`` when given."""
    ordered = sorted(patterns, key=rank_key)
    if top_k is not None:
        ordered = ordered[:top_k]
    return ordered


def queue_to_tsv(queue: list[SdpPattern], path: str | Path, sample_count: int = DEFAULT_SAMPLE_COUNT) -> None:
    """Spreadsheet export: one pattern per row, verdict column last.

    An ``x`` in the verdict column means ACCEPTED; blank means REJECTED
    (matching the checkbox import convention).
    """
    headers = ["rank", "confidence", "pos_count", "neg_count", "sdp"]
    headers += [f"sample_{i + 1}" for i in range(sample_count)]
    headers += ["verdict"]
    with open(path, "w", encoding="utf-8") as handle:
        handle.write("\t".join(headers) + "\n")
        for rank, pattern in enumerate(queue, start=1):
            samples = [s.text for s in pattern.sample_sentences[:sample_count]]
            samples += [""] * (sample_count - len(samples))
            verdict = "x" if pattern.verdict == ACCEPTED else ""
            row = [str(rank), f"{pattern.confidence:.6g}", str(pattern.pos_count), str(pattern.neg_count), pattern.sdp]
            row += samples + [verdict]
            handle.write("\t".join(row) + "\n")


def queue_to_json(queue: list[SdpPattern], path: str | Path) -> None:
    payload = [p.to_dict() for p in queue]
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(payload, handle, ensure_ascii=False, sort_keys=True, indent=0)
        handle.write("\n")


def queue_from_json(path: str | Path) -> list[SdpPattern]:
    with open(path, encoding="utf-8") as handle:
        return [SdpPattern.from_dict(d) for d in json.load(handle)]
