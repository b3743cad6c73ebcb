"""Shortest dependency paths and the per-instance feature bag.

The dependency graph is treated as undirected for path search; the
serialized path keeps the original edge directions, with ``A->label->B``
meaning A governs B and ``A<-label<-B`` meaning B governs A.  Mention
endpoints are replaced by entity-type placeholders; interior nodes are
lowercased surfaces.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .corpus import EntityMention, ParsedSentence

NUM_PLACEHOLDER = "⟨NUM⟩"    # ⟨NUM⟩
DATE_PLACEHOLDER = "⟨DATE⟩"  # ⟨DATE⟩

# Short forms used when both endpoints carry the same placeholder type.
_SHARED_TYPE_ABBREV = {"PERSON": "PER", "ORGANIZATION": "ORG", "LOCATION": "LOC"}


class PathExtractionError(ValueError):
    """The two mention heads are not connected in the dependency graph."""


@dataclass(frozen=True)
class Edge:
    neighbor: int
    deprel: str
    downward: bool  # True when the edge goes governor -> neighbor


class DependencyGraph:
    """Undirected adjacency view of a sentence's head/deprel fields."""

    def __init__(self, sentence: ParsedSentence):
        self.sentence = sentence
        adj: dict[int, list[Edge]] = {tok.index: [] for tok in sentence.tokens}
        for tok in sentence.tokens:
            if tok.head == 0:
                continue
            # tok.head governs tok
            adj[tok.head].append(Edge(neighbor=tok.index, deprel=tok.deprel, downward=True))
            adj[tok.index].append(Edge(neighbor=tok.head, deprel=tok.deprel, downward=False))
        for edges in adj.values():
            edges.sort(key=lambda e: e.neighbor)
        self.adjacency = adj

    def shortest_path(self, source: int, target: int) -> list[int]:
        """BFS shortest path; ties prefer the lexicographically smallest
        interior token-index sequence."""
        if source == target:
            return [source]
        dist = {target: 0}
        queue = deque([target])
        while queue:
            node = queue.popleft()
            for edge in self.adjacency[node]:
                if edge.neighbor not in dist:
                    dist[edge.neighbor] = dist[node] + 1
                    queue.append(edge.neighbor)
        if source not in dist:
            raise PathExtractionError(
                f"tokens {source} and {target} are disconnected in "
                f"{self.sentence.doc_id}:{self.sentence.sentence_id}"
            )
        # Greedy walk toward the target, always taking the smallest admissible
        # neighbor: on equal-length paths this realizes lexicographic order.
        path = [source]
        node = source
        while node != target:
            node = min(
                e.neighbor for e in self.adjacency[node] if dist.get(e.neighbor, -1) == dist[node] - 1
            )
            path.append(node)
        return path

    def edge_between(self, u: int, v: int) -> Edge:
        for edge in self.adjacency[u]:
            if edge.neighbor == v:
                return edge
        raise KeyError((u, v))


def type_placeholder(entity_type: str) -> str:
    """Collapse location subtypes; other tags are used verbatim."""
    if entity_type.startswith("LOCATION"):
        return "LOCATION"
    return entity_type


def endpoint_placeholders(subject_type: str, object_type: str) -> tuple[str, str]:
    subj = type_placeholder(subject_type)
    obj = type_placeholder(object_type)
    if subj == obj:
        abbrev = _SHARED_TYPE_ABBREV.get(subj, subj)
        return f"{abbrev}-1", f"{abbrev}-2"
    return subj, obj


def _node_word(sentence: ParsedSentence, index: int, collapse: bool) -> str:
    tok = sentence.token(index)
    if collapse and tok.entity_tag == "NUMBER":
        return NUM_PLACEHOLDER
    if collapse and tok.entity_tag == "DATE":
        return DATE_PLACEHOLDER
    return tok.surface.lower()


@dataclass(frozen=True)
class SdpResult:
    sdp: str
    node_indices: tuple[int, ...]   # full path, endpoints included
    interior_words: tuple[str, ...]
    no_verb: bool                   # no interior token with POS starting V


def shortest_dependency_path(
    subject: EntityMention,
    obj: EntityMention,
    graph: DependencyGraph,
    collapse: bool = True,
) -> SdpResult:
    """Serialize the shortest path between the two mention head tokens."""
    sentence = graph.sentence
    path = graph.shortest_path(subject.head_token, obj.head_token)
    subj_ph, obj_ph = endpoint_placeholders(subject.entity_type, obj.entity_type)

    parts = [subj_ph]
    for u, v in zip(path, path[1:]):
        edge = graph.edge_between(u, v)
        arrow = "->" if edge.downward else "<-"
        word = obj_ph if v == path[-1] else _node_word(sentence, v, collapse)
        parts.append(f"{arrow}{edge.deprel}{arrow}{word}")
    interior = path[1:-1]
    no_verb = not any(sentence.token(i).pos_tag.startswith("V") for i in interior)
    return SdpResult(
        sdp="".join(parts),
        node_indices=tuple(path),
        interior_words=tuple(_node_word(sentence, i, collapse) for i in interior),
        no_verb=no_verb,
    )


def between_range(subject: EntityMention, obj: EntityMention) -> tuple[int, int]:
    """Token index range strictly between the two mentions (may be empty)."""
    if subject.last < obj.first:
        return (subject.last + 1, obj.first - 1)
    return (obj.last + 1, subject.first - 1)


def between_words(
    subject: EntityMention,
    obj: EntityMention,
    sentence: ParsedSentence,
    collapse: bool = True,
) -> list[str]:
    lo, hi = between_range(subject, obj)
    return [_node_word(sentence, i, collapse) for i in range(lo, hi + 1)]


def no_verb_pattern(
    subject: EntityMention,
    obj: EntityMention,
    sentence: ParsedSentence,
    collapse: bool = True,
) -> str:
    """Annotation key for verb-less paths: the full between-token sequence."""
    subj_ph, obj_ph = endpoint_placeholders(subject.entity_type, obj.entity_type)
    words = between_words(subject, obj, sentence, collapse)
    return f"{subj_ph}[{' '.join(words)}]{obj_ph}"


def pattern_words(pattern: str) -> list[str]:
    """Content words of a serialized pattern (for embedding composition).

    Arrow-form patterns yield their interior node words; bracket-form
    (no-verb) patterns yield the words between the entities.  Entity-type
    placeholders, edge labels and number/date placeholders are excluded.
    """
    markers = [m for m in (pattern.find("<-"), pattern.find("->"), pattern.find("[")) if m >= 0]
    bracket_form = bool(markers) and min(markers) == pattern.find("[")
    if bracket_form:
        inner = pattern[pattern.index("[") + 1 : pattern.rindex("]")]
        words = inner.split(" ") if inner else []
    else:
        segments: list[str] = []
        buf = pattern
        while True:
            la = buf.find("<-")
            ra = buf.find("->")
            cut = min(x for x in (la, ra) if x >= 0) if (la >= 0 or ra >= 0) else -1
            if cut < 0:
                segments.append(buf)
                break
            segments.append(buf[:cut])
            buf = buf[cut + 2 :]
        # segments alternate node, label, node, label, ... node
        words = [segments[i] for i in range(2, len(segments) - 2, 2)]
    return [w for w in words if w and w not in (NUM_PLACEHOLDER, DATE_PLACEHOLDER)]


def load_title_lexicon(path: str | Path | None = None) -> frozenset[str]:
    """Title words used by the ``title_between`` feature (lowercased)."""
    if path is None:
        text = resources.files("slp.data").joinpath("titles.txt").read_text(encoding="utf-8")
    else:
        text = Path(path).read_text(encoding="utf-8")
    return frozenset(w.strip().lower() for w in text.splitlines() if w.strip())


_PUNCT_POS = frozenset({",", ".", ":", "``", "''", "-LRB-", "-RRB-", "HYPH", "SYM", "$", "#"})


def _effective_governor(sentence: ParsedSentence, index: int) -> int:
    """Governor of a token, treating apposition edges as transparent."""
    seen = set()
    node = index
    while True:
        tok = sentence.token(node)
        if tok.head == 0:
            return 0
        if tok.deprel != "appos":
            return tok.head
        if tok.head in seen:
            return tok.head
        seen.add(node)
        node = tok.head


def _appositive_partner(sentence: ParsedSentence, index: int) -> int | None:
    """Token joined to ``index`` by an apposition edge, either direction."""
    tok = sentence.token(index)
    if tok.deprel == "appos":
        return tok.head
    for other in sentence.tokens:
        if other.head == index and other.deprel == "appos":
            return other.index
    return None


def extract_features(
    subject: EntityMention,
    obj: EntityMention,
    sentence: ParsedSentence,
    sdp: SdpResult,
    titles: frozenset[str],
    collapse: bool = True,
) -> list[str]:
    """The full feature bag for one relation instance.

    Every feature is a namespaced string; missing context positions yield
    the literal value ``nil``.
    """
    def tok_surface(i: int) -> str:
        if 1 <= i <= len(sentence.tokens):
            return sentence.token(i).surface
        return "nil"

    feats: list[str] = [f"sdp={sdp.sdp}"]

    e1_head = _effective_governor(sentence, subject.head_token)
    e2_head = _effective_governor(sentence, obj.head_token)
    feats.append(f"e1_head={tok_surface(e1_head) if e1_head else 'nil'}")
    feats.append(f"e2_head={tok_surface(e2_head) if e2_head else 'nil'}")
    feats.append(f"heads_equal={'true' if e1_head == e2_head else 'false'}")

    e1_dep = _appositive_partner(sentence, subject.head_token)
    e2_dep = _appositive_partner(sentence, obj.head_token)
    feats.append(f"e1_dep={tok_surface(e1_dep) if e1_dep else 'nil'}")
    feats.append(f"e2_dep={tok_surface(e2_dep) if e2_dep else 'nil'}")

    def mid_word(i: int) -> str:
        tag = sentence.token(i).entity_tag
        if collapse and tag in ("NUMBER", "DATE"):
            return _node_word(sentence, i, collapse)
        return tok_surface(i)

    lo, hi = between_range(subject, obj)
    between = list(range(lo, hi + 1))
    feats.append(f'mid_seq="{" ".join(mid_word(i) for i in between)}"')
    feats.append(f"n_between={len(between)}")
    feats.append(f"first_between={tok_surface(between[0]) if between else 'nil'}")
    feats.append(f"last_between={tok_surface(between[-1]) if between else 'nil'}")
    for word in sorted({tok_surface(i) for i in between[1:-1]}):
        feats.append(f"tok_between={word}")

    feats.append(f"before1_e1={tok_surface(subject.first - 1)}")
    feats.append(f"before2_e1={tok_surface(subject.first - 2)}")
    feats.append(f"after1_e2={tok_surface(obj.last + 1)}")
    feats.append(f"after2_e2={tok_surface(obj.last + 2)}")

    e1_str = "_".join(t.surface for t in sentence.tokens[subject.first - 1 : subject.last])
    e2_str = "_".join(t.surface for t in sentence.tokens[obj.first - 1 : obj.last])
    feats.append(f"e1_str={e1_str}")
    feats.append(f"e2_str={e2_str}")
    feats.append(f"e1e2={e1_str}--{e2_str}")
    et1 = type_placeholder(subject.entity_type)
    et2 = type_placeholder(obj.entity_type)
    feats.append(f"et1={et1}")
    feats.append(f"et2={et2}")
    feats.append(f"et1et2={et1}--{et2}")

    title_between = any(tok_surface(i).lower() in titles for i in between)
    feats.append(f"title_between={'true' if title_between else 'false'}")
    feats.append(f"order={1 if subject.first < obj.first else 2}")

    pos_parts = [sentence.token(subject.head_token).pos_tag]
    pos_parts += [
        sentence.token(i).pos_tag
        for i in between
        if sentence.token(i).pos_tag not in _PUNCT_POS
    ]
    pos_parts.append(sentence.token(obj.head_token).pos_tag)
    feats.append(f"pos_path={'->'.join(pos_parts)}")
    return feats
