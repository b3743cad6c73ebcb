"""Distantly supervised alignment of KB facts with detected mentions.

Positives: one instance per (fact, sentence, mention pair) where both
linked mentions co-occur, capped per subject entity.  Negatives: seeded
uniform sample from co-occurring type-compatible pairs that are not facts
for the relation.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from .corpus import AliasTable, EntityMention, KbFact, ParsedSentence, RelationSchema, detect_mentions
from .instances import NEGATIVE, POSITIVE, RelationInstance


@dataclass(frozen=True)
class AlignmentConfig:
    per_subject_cap: int = 100
    negative_ratio: float = 1.0
    rng_seed: int = 13

    def __post_init__(self):
        if self.per_subject_cap < 1:
            raise ValueError("per_subject_cap must be >= 1")
        if self.negative_ratio <= 0:
            raise ValueError("negative_ratio must be > 0")


def _type_compatible(
    subject: EntityMention, obj: EntityMention, relation: str, schema: RelationSchema
) -> bool:
    return (
        subject.entity_type == schema.subject_type(relation)
        and obj.entity_type == schema.object_type(relation)
    )


def _mention_pairs(mentions: list[EntityMention]):
    for subject in mentions:
        for obj in mentions:
            if subject is obj or subject.overlaps(obj):
                continue
            yield subject, obj


DetectedCorpus = list[tuple[ParsedSentence, list[EntityMention]]]


def detect_corpus_mentions(corpus: list[ParsedSentence], aliases: AliasTable) -> DetectedCorpus:
    """Mention detection over the whole corpus (shared by both aligners)."""
    out: DetectedCorpus = []
    for sentence in corpus:
        mentions = detect_mentions(sentence, aliases)
        if mentions:
            out.append((sentence, mentions))
    return out


def generate_positives(
    corpus: list[ParsedSentence],
    facts: list[KbFact],
    aliases: AliasTable,
    schema: RelationSchema,
    config: AlignmentConfig,
    detected: DetectedCorpus | None = None,
) -> list[RelationInstance]:
    """One POSITIVE instance per fact/sentence/mention-pair co-occurrence.

    Per (relation, subject kb_id) at most ``per_subject_cap`` instances are
    retained, keeping the earliest in canonical corpus order.
    """
    pair_relations: dict[tuple[str, str], list[str]] = {}
    for f in facts:
        rels = pair_relations.setdefault((f.subject_id, f.object_id), [])
        if f.relation not in rels:
            rels.append(f.relation)
    for rels in pair_relations.values():
        rels.sort()
    if detected is None:
        detected = detect_corpus_mentions(corpus, aliases)
    candidates: list[RelationInstance] = []
    for sentence, mentions in detected:
        for subject, obj in _mention_pairs(mentions):
            if subject.kb_id is None or obj.kb_id is None:
                continue
            for relation in pair_relations.get((subject.kb_id, obj.kb_id), ()):
                if not _type_compatible(subject, obj, relation, schema):
                    continue
                candidates.append(
                    RelationInstance(
                        relation=relation,
                        subject=subject,
                        object=obj,
                        doc_id=sentence.doc_id,
                        sentence_id=sentence.sentence_id,
                        ds_label=POSITIVE,
                    )
                )
    candidates.sort(key=lambda i: (i.relation,) + i.sort_key)
    kept: list[RelationInstance] = []
    per_subject: dict[tuple[str, str], int] = {}
    for inst in candidates:
        key = (inst.relation, inst.subject.kb_id or "")
        if per_subject.get(key, 0) >= config.per_subject_cap:
            continue
        per_subject[key] = per_subject.get(key, 0) + 1
        kept.append(inst)
    return kept


def enumerate_candidates(
    corpus: list[ParsedSentence],
    aliases: AliasTable,
    schema: RelationSchema,
    relation: str,
    detected: DetectedCorpus | None = None,
) -> list[RelationInstance]:
    """All co-occurring type-compatible linked pairs for one relation,
    irrespective of the fact table (used to build labeled eval sets)."""
    if detected is None:
        detected = detect_corpus_mentions(corpus, aliases)
    out: list[RelationInstance] = []
    for sentence, mentions in detected:
        for subject, obj in _mention_pairs(mentions):
            if subject.kb_id is None or obj.kb_id is None:
                continue
            if not _type_compatible(subject, obj, relation, schema):
                continue
            out.append(
                RelationInstance(
                    relation=relation,
                    subject=subject,
                    object=obj,
                    doc_id=sentence.doc_id,
                    sentence_id=sentence.sentence_id,
                    ds_label=NEGATIVE,
                )
            )
    out.sort(key=lambda i: i.sort_key)
    return out


def sample_negatives(
    corpus: list[ParsedSentence],
    facts: list[KbFact],
    aliases: AliasTable,
    schema: RelationSchema,
    config: AlignmentConfig,
    positives: list[RelationInstance] | None = None,
    detected: DetectedCorpus | None = None,
) -> list[RelationInstance]:
    """Seeded uniform sample of non-fact co-occurring pairs, per relation.

    The sample size is round(negative_ratio * positive count) for each
    relation, or every available candidate when fewer exist.
    """
    if detected is None:
        detected = detect_corpus_mentions(corpus, aliases)
    if positives is None:
        positives = generate_positives(corpus, facts, aliases, schema, config, detected=detected)
    pos_counts: dict[str, int] = {}
    for inst in positives:
        pos_counts[inst.relation] = pos_counts.get(inst.relation, 0) + 1

    fact_pairs: dict[str, set[tuple[str, str]]] = {}
    for f in facts:
        fact_pairs.setdefault(f.relation, set()).add((f.subject_id, f.object_id))

    pools: dict[str, list[RelationInstance]] = {r: [] for r in schema.relations}
    for sentence, mentions in detected:
        for subject, obj in _mention_pairs(mentions):
            if subject.kb_id is None or obj.kb_id is None:
                continue
            for relation in schema.relations:
                if not _type_compatible(subject, obj, relation, schema):
                    continue
                if (subject.kb_id, obj.kb_id) in fact_pairs.get(relation, set()):
                    continue
                pools[relation].append(
                    RelationInstance(
                        relation=relation,
                        subject=subject,
                        object=obj,
                        doc_id=sentence.doc_id,
                        sentence_id=sentence.sentence_id,
                        ds_label=NEGATIVE,
                    )
                )

    sampled: list[RelationInstance] = []
    for relation in schema.relations:
        pool = sorted(pools[relation], key=lambda i: i.sort_key)
        want = round(config.negative_ratio * pos_counts.get(relation, 0))
        rng = random.Random(f"{config.rng_seed}:{relation}")
        if want >= len(pool):
            chosen = pool
        else:
            chosen = rng.sample(pool, want)
        sampled.extend(sorted(chosen, key=lambda i: i.sort_key))
    return sampled
