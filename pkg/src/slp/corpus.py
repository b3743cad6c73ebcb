"""Corpus and knowledge-base input layer.

Reads pre-parsed sentences (CoNLL-style, one token per line), the fact
table, alias table and relation schema, and finds entity mentions by
string matching against the alias table.  Everything loaded here is
immutable and shared by the downstream pipeline stages.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Iterator

ENTITY_TAGS = frozenset(
    {
        "PERSON",
        "ORGANIZATION",
        "LOCATION-CITY",
        "LOCATION-STATE",
        "LOCATION-COUNTRY",
        "TITLE",
        "CRIMINAL-CHARGE",
        "DATE",
        "NUMBER",
        "NONE",
    }
)

CONLL_COLUMNS = ("INDEX", "SURFACE", "LEMMA", "POS", "NER", "HEAD", "DEPREL")


class CorpusFormatError(ValueError):
    """A corpus line could not be parsed (message carries line/column)."""


class CorpusStructureError(ValueError):
    """A sentence violates structural invariants (bad head index etc.)."""


class SchemaError(ValueError):
    """A KB fact references a relation missing from the schema."""


@dataclass(frozen=True)
class Token:
    index: int          # 1-based position in the sentence
    surface: str
    lemma: str
    pos_tag: str
    entity_tag: str     # one of ENTITY_TAGS
    head: int           # 0 for root
    deprel: str         # empty only when head == 0


@dataclass(frozen=True)
class ParsedSentence:
    doc_id: str
    sentence_id: int
    tokens: tuple[Token, ...]

    def token(self, index: int) -> Token:
        return self.tokens[index - 1]

    def surface_text(self) -> str:
        return " ".join(t.surface for t in self.tokens)

    @property
    def key(self) -> tuple[str, int]:
        return (self.doc_id, self.sentence_id)


@dataclass(frozen=True)
class EntityMention:
    doc_id: str
    sentence_id: int
    first: int          # inclusive 1-based token range
    last: int
    head_token: int     # index within [first, last]
    entity_type: str    # never NONE
    surface: str        # original surfaces, single-space joined
    kb_id: str | None = None

    def overlaps(self, other: "EntityMention") -> bool:
        return self.first <= other.last and other.first <= self.last

    def span(self) -> tuple[int, int]:
        return (self.first, self.last)


@dataclass(frozen=True)
class KbFact:
    relation: str
    subject_id: str
    object_id: str


@dataclass(frozen=True)
class RelationSchema:
    """relation name -> (subject entity type, object entity type)."""

    types: dict[str, tuple[str, str]]

    def __contains__(self, relation: str) -> bool:
        return relation in self.types

    def subject_type(self, relation: str) -> str:
        return self.types[relation][0]

    def object_type(self, relation: str) -> str:
        return self.types[relation][1]

    @property
    def relations(self) -> list[str]:
        return sorted(self.types)


@dataclass
class AliasTable:
    """kb_id -> set of surface aliases, with a case-folded reverse index."""

    aliases: dict[str, set[str]] = field(default_factory=dict)

    def add(self, kb_id: str, alias: str) -> None:
        self.aliases.setdefault(kb_id, set()).add(alias)
        self._index = None

    def __contains__(self, kb_id: str) -> bool:
        return kb_id in self.aliases

    _index: dict[tuple[str, ...], list[str]] | None = None

    def folded_index(self) -> dict[tuple[str, ...], list[str]]:
        """Map case-folded alias word tuples to the kb_ids carrying them."""
        if self._index is None:
            index: dict[tuple[str, ...], list[str]] = {}
            for kb_id in sorted(self.aliases):
                for alias in sorted(self.aliases[kb_id]):
                    words = tuple(w.lower() for w in alias.split(" ") if w)
                    if not words:
                        continue
                    ids = index.setdefault(words, [])
                    if kb_id not in ids:
                        ids.append(kb_id)
            self._index = index
        return self._index


def _parse_token(line: str, lineno: int) -> Token:
    cols = line.split("\t")
    if len(cols) != len(CONLL_COLUMNS):
        raise CorpusFormatError(
            f"line {lineno}: expected {len(CONLL_COLUMNS)} tab-separated columns, got {len(cols)}"
        )
    try:
        index = int(cols[0])
    except ValueError:
        raise CorpusFormatError(f"line {lineno}, column 1: token index {cols[0]!r} is not an integer") from None
    try:
        head = int(cols[5])
    except ValueError:
        raise CorpusFormatError(f"line {lineno}, column 6: head {cols[5]!r} is not an integer") from None
    if index < 1:
        raise CorpusFormatError(f"line {lineno}, column 1: token index must be >= 1, got {index}")
    if head < 0:
        raise CorpusFormatError(f"line {lineno}, column 6: head must be >= 0, got {head}")
    if head == index:
        raise CorpusStructureError(f"line {lineno}: token {index} is its own head")
    if cols[4] not in ENTITY_TAGS:
        raise CorpusFormatError(f"line {lineno}, column 5: unknown entity tag {cols[4]!r}")
    deprel = cols[6]
    if head != 0 and not deprel:
        raise CorpusFormatError(f"line {lineno}, column 7: empty deprel for non-root token {index}")
    return Token(
        index=index,
        surface=cols[1],
        lemma=cols[2],
        pos_tag=cols[3],
        entity_tag=cols[4],
        head=head,
        deprel=deprel,
    )


def _finish_sentence(
    doc_id: str | None,
    sentence_id: int | None,
    tokens: list[Token],
    first_lineno: int,
) -> ParsedSentence:
    if doc_id is None or sentence_id is None:
        raise CorpusFormatError(
            f"line {first_lineno}: sentence block lacks '# doc_id =' / '# sent_id =' comments"
        )
    n = len(tokens)
    roots = 0
    for pos, tok in enumerate(tokens, start=1):
        if tok.index != pos:
            raise CorpusStructureError(
                f"line {first_lineno + pos - 1}: token index {tok.index} out of order (expected {pos})"
            )
        if tok.head > n:
            raise CorpusStructureError(
                f"line {first_lineno + pos - 1}: head {tok.head} dangles beyond sentence of {n} tokens"
            )
        if tok.head == 0:
            roots += 1
    if roots == 0:
        raise CorpusStructureError(f"line {first_lineno}: sentence has no root token (head=0)")
    return ParsedSentence(doc_id=doc_id, sentence_id=sentence_id, tokens=tuple(tokens))


def load_corpus(path: str | Path) -> list[ParsedSentence]:
    """Load a CoNLL-style corpus file, validating every invariant.

    Blank lines terminate sentences; `# doc_id = X` / `# sent_id = N`
    comments precede each sentence block.  Raises with the line number of
    the first violation.
    """
    sentences: list[ParsedSentence] = []
    doc_id: str | None = None
    sentence_id: int | None = None
    tokens: list[Token] = []
    first_token_line = 0
    with open(path, encoding="utf-8") as handle:
        for lineno, raw in enumerate(handle, start=1):
            line = raw.rstrip("\n")
            if not line.strip():
                if tokens:
                    sentences.append(_finish_sentence(doc_id, sentence_id, tokens, first_token_line))
                    tokens = []
                    doc_id = None
                    sentence_id = None
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if "=" in body:
                    key, _, value = body.partition("=")
                    key = key.strip()
                    value = value.strip()
                    if key == "doc_id":
                        doc_id = value
                    elif key == "sent_id":
                        try:
                            sentence_id = int(value)
                        except ValueError:
                            raise CorpusFormatError(
                                f"line {lineno}: sent_id {value!r} is not an integer"
                            ) from None
                continue
            if not tokens:
                first_token_line = lineno
            tokens.append(_parse_token(line, lineno))
    if tokens:
        sentences.append(_finish_sentence(doc_id, sentence_id, tokens, first_token_line))
    return sentences


def dump_corpus(sentences: Iterable[ParsedSentence], path: str | Path) -> None:
    """Serialize sentences back to the input format (round-trip safe)."""
    with open(path, "w", encoding="utf-8") as handle:
        for sent in sentences:
            handle.write(f"# doc_id = {sent.doc_id}\n")
            handle.write(f"# sent_id = {sent.sentence_id}\n")
            for tok in sent.tokens:
                handle.write(
                    "\t".join(
                        (
                            str(tok.index),
                            tok.surface,
                            tok.lemma,
                            tok.pos_tag,
                            tok.entity_tag,
                            str(tok.head),
                            tok.deprel,
                        )
                    )
                    + "\n"
                )
            handle.write("\n")


def load_kb(
    facts_path: str | Path,
    aliases_path: str | Path,
    schema_path: str | Path,
) -> tuple[list[KbFact], AliasTable, RelationSchema]:
    """Load facts, aliases and the relation schema (tab-separated files).

    Facts are validated against the schema and deduplicated; every kb_id
    referenced by a fact must carry at least one alias.
    """
    types: dict[str, tuple[str, str]] = {}
    with open(schema_path, encoding="utf-8") as handle:
        for lineno, raw in enumerate(handle, start=1):
            line = raw.rstrip("\n")
            if not line.strip() or line.startswith("#"):
                continue
            cols = line.split("\t")
            if len(cols) != 3:
                raise SchemaError(f"{schema_path}: line {lineno}: expected 'relation<TAB>subj_type<TAB>obj_type'")
            relation, subj_type, obj_type = cols
            for etype in (subj_type, obj_type):
                if etype not in ENTITY_TAGS or etype == "NONE":
                    raise SchemaError(f"{schema_path}: line {lineno}: unknown entity type {etype!r}")
            types[relation] = (subj_type, obj_type)
    schema = RelationSchema(types=types)

    table = AliasTable()
    with open(aliases_path, encoding="utf-8") as handle:
        for lineno, raw in enumerate(handle, start=1):
            line = raw.rstrip("\n")
            if not line.strip():
                continue
            cols = line.split("\t")
            if len(cols) != 2:
                raise CorpusFormatError(f"{aliases_path}: line {lineno}: expected 'kb_id<TAB>alias'")
            table.add(cols[0], cols[1])

    seen: set[KbFact] = set()
    facts: list[KbFact] = []
    with open(facts_path, encoding="utf-8") as handle:
        for lineno, raw in enumerate(handle, start=1):
            line = raw.rstrip("\n")
            if not line.strip():
                continue
            cols = line.split("\t")
            if len(cols) != 3:
                raise CorpusFormatError(f"{facts_path}: line {lineno}: expected 'relation<TAB>subject<TAB>object'")
            relation, subject_id, object_id = cols
            if relation not in schema:
                raise SchemaError(f"{facts_path}: line {lineno}: relation {relation!r} not in schema")
            if not subject_id or not object_id:
                raise CorpusFormatError(f"{facts_path}: line {lineno}: empty entity id")
            fact = KbFact(relation=relation, subject_id=subject_id, object_id=object_id)
            if fact in seen:
                continue
            seen.add(fact)
            facts.append(fact)

    for fact in facts:
        for kb_id in (fact.subject_id, fact.object_id):
            if kb_id not in table:
                raise SchemaError(f"kb_id {kb_id!r} referenced by a fact has no alias")
    return facts, table, schema


def _span_head(sentence: ParsedSentence, first: int, last: int) -> int:
    """Head token of a span: the unique token whose head exits the span.

    Falls back to the last token when no (or no unique) such token exists.
    """
    exits = [
        tok.index
        for tok in sentence.tokens[first - 1 : last]
        if tok.head == 0 or not (first <= tok.head <= last)
    ]
    if len(exits) == 1:
        return exits[0]
    return last


def detect_mentions(sentence: ParsedSentence, aliases: AliasTable) -> list[EntityMention]:
    """Find entity mentions by case-insensitive alias matching.

    A mention covers a maximal token span whose single-space-joined surface
    equals an alias and whose tokens all carry a non-NONE entity tag.
    Spans strictly contained in another matching span are dropped.
    """
    index = aliases.folded_index()
    if not index:
        return []
    max_len = max(len(words) for words in index)
    folded = [tok.surface.lower() for tok in sentence.tokens]
    taggable = [tok.entity_tag != "NONE" for tok in sentence.tokens]
    n = len(folded)

    candidates: list[tuple[int, int, str]] = []  # (first, last, kb_id)
    for start in range(n):
        if not taggable[start]:
            continue
        for length in range(1, min(max_len, n - start) + 1):
            end = start + length - 1
            if not taggable[end]:
                break
            words = tuple(folded[start : end + 1])
            for kb_id in index.get(words, ()):
                candidates.append((start + 1, end + 1, kb_id))

    mentions: list[EntityMention] = []
    for first, last, kb_id in candidates:
        contained = any(
            (of <= first and last <= ol) and (of, ol) != (first, last)
            for of, ol, _ in candidates
        )
        if contained:
            continue
        head = _span_head(sentence, first, last)
        head_tag = sentence.token(head).entity_tag
        mentions.append(
            EntityMention(
                doc_id=sentence.doc_id,
                sentence_id=sentence.sentence_id,
                first=first,
                last=last,
                head_token=head,
                entity_type=head_tag,
                surface=" ".join(t.surface for t in sentence.tokens[first - 1 : last]),
                kb_id=kb_id,
            )
        )
    mentions.sort(key=lambda m: (m.first, m.last, m.kb_id or ""))
    return mentions


def corpus_index(sentences: Iterable[ParsedSentence]) -> dict[tuple[str, int], ParsedSentence]:
    return {sent.key: sent for sent in sentences}
