"""Semantic label propagation over the filtered training set.

Accepted-pattern vectors are averaged into a centroid (Rocchio style);
the remaining patterns are ranked by cosine to it, and discarded
instances re-enter the training set in ranking order until the schedule
size N_k is reached.  N_k interpolates geometrically between the filtered
and the full DS set size over K steps.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import semantic
from .features import pattern_words
from .instances import DISCARDED, KEPT, PROPAGATED, RelationInstance
from .patterns import ACCEPTED, SdpPattern
from .semantic import BOW, EMBEDDING, SVD, EmbeddingTable, PatternVector, cosine


class PropagationUnavailable(RuntimeError):
    """No usable accepted-pattern vectors; stage degrades to pure filtering."""


@dataclass(frozen=True)
class Schedule:
    n_filtered: int
    n_ds: int
    total_steps: int  # K
    step: int         # k

    def __post_init__(self):
        if not (1 <= self.n_filtered <= self.n_ds):
            raise ValueError("need 1 <= n_filtered <= n_ds")
        if self.total_steps < 1:
            raise ValueError("K must be >= 1")
        if not (0 <= self.step <= self.total_steps):
            raise ValueError("k must be in [0, K]")


def schedule_size(schedule: Schedule) -> int:
    """N_k = n_filtered * (n_ds / n_filtered)^(k/K), rounded half-up."""
    ratio = schedule.n_ds / schedule.n_filtered
    exact = schedule.n_filtered * ratio ** (schedule.step / schedule.total_steps)
    return int(np.floor(exact + 0.5))


def centroid(accepted_vectors: list[PatternVector]) -> PatternVector:
    """Arithmetic mean of the non-empty accepted-pattern vectors."""
    usable = [v for v in accepted_vectors if not v.empty_flag]
    if not usable:
        raise PropagationUnavailable("no accepted pattern has a usable vector")
    stacked = np.stack([v.vector for v in usable])
    mean = stacked.mean(axis=0)
    words = [w for v in usable for w in v.contributing_words]
    return PatternVector(vector=mean, contributing_words=words)


@dataclass(frozen=True)
class RankedPattern:
    sdp: str
    similarity: float
    instance_count: int


@dataclass
class PatternVectors:
    """Per-pattern vectors under one representation choice."""

    representation: str
    vectors: dict[str, PatternVector]

    def get(self, sdp: str) -> PatternVector | None:
        return self.vectors.get(sdp)


def build_pattern_vectors(
    patterns: list[SdpPattern],
    representation: str,
    table: EmbeddingTable | None = None,
    svd_rank: int = semantic.DEFAULT_SVD_RANK,
) -> PatternVectors:
    """Vectors for every pattern under the chosen representation.

    BOW vocabulary and the SVD projection are fitted on the complete
    pattern set passed in.
    """
    words = {p.sdp: pattern_words(p.sdp) for p in patterns}
    if representation == EMBEDDING:
        if table is None:
            raise ValueError("embedding representation requires an EmbeddingTable")
        vecs = {sdp: semantic.compose_sdp(w, table) for sdp, w in words.items()}
    elif representation in (BOW, SVD):
        vocab = semantic.build_vocabulary([words[p.sdp] for p in patterns])
        vecs = {sdp: semantic.bow_vector(w, vocab) for sdp, w in words.items()}
        if representation == SVD:
            order = [p.sdp for p in patterns]
            matrix = np.stack([vecs[sdp].vector for sdp in order]) if order else np.zeros((0, max(len(vocab), 1)))
            rank = min(svd_rank, min(matrix.shape)) if matrix.size else 1
            model = semantic.svd_reduce(matrix, rank) if matrix.size else None
            reduced = {}
            for i, sdp in enumerate(order):
                base = vecs[sdp]
                vec = model.row_vectors[i] if model is not None else np.zeros(1)
                reduced[sdp] = PatternVector(
                    vector=vec,
                    contributing_words=base.contributing_words,
                    empty_flag=base.empty_flag,
                )
            vecs = reduced
    else:
        raise ValueError(f"unknown representation {representation!r}")
    return PatternVectors(representation=representation, vectors=vecs)


def rank_candidates(
    center: PatternVector,
    patterns: list[SdpPattern],
    vectors: PatternVectors,
) -> list[RankedPattern]:
    """Non-accepted patterns by descending cosine to the centroid.

    Ties break by instance count (descending) then pattern string.
    Patterns without a usable vector are not rankable and are excluded.
    """
    if float(np.linalg.norm(center.vector)) == 0.0:
        raise PropagationUnavailable("degenerate (zero) centroid")
    rows: list[RankedPattern] = []
    for pattern in patterns:
        if pattern.verdict == ACCEPTED:
            continue
        vec = vectors.get(pattern.sdp)
        if vec is None or vec.empty_flag:
            continue
        rows.append(
            RankedPattern(
                sdp=pattern.sdp,
                similarity=cosine(center, vec),
                instance_count=pattern.pos_count,
            )
        )
    rows.sort(key=lambda r: (-r.similarity, -r.instance_count, r.sdp))
    return rows


def assemble_training_set(
    kept: list[RelationInstance],
    discarded: list[RelationInstance],
    ranking: list[RankedPattern],
    schedule: Schedule,
) -> list[RelationInstance]:
    """Positive training set of size N_k: KEPT plus ranked re-additions.

    The ranking is walked pattern by pattern, taking each pattern's
    instances in canonical order, cutting mid-pattern when N_k is reached.
    Unrankable patterns join only at k = K, which restores the full DS
    positive set.
    """
    target = schedule_size(schedule)
    if target < len(kept):
        raise ValueError("schedule size smaller than the kept set")
    result = list(kept)
    chosen: list[RelationInstance] = []
    by_pattern: dict[str, list[RelationInstance]] = {}
    for inst in sorted(discarded, key=lambda i: i.sort_key):
        by_pattern.setdefault(inst.pattern_key or "", []).append(inst)
    for row in ranking:
        if len(result) + len(chosen) >= target:
            break
        room = target - len(result) - len(chosen)
        chosen.extend(by_pattern.get(row.sdp, [])[:room])
    if schedule.step == schedule.total_steps:
        ranked_keys = {r.sdp for r in ranking}
        leftovers = [
            inst
            for key, insts in sorted(by_pattern.items())
            if key not in ranked_keys
            for inst in insts
        ]
        room = target - len(result) - len(chosen)
        chosen.extend(leftovers[:room])
    for inst in chosen:
        inst.stage_label = PROPAGATED
    result.extend(chosen)
    return result
