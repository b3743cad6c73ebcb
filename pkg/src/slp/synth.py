"""Synthetic corpus generator for desk-scale experiments.

Sentences are instantiated from hand-parsed templates, so dependency
structures are correct by construction.  Each relation lists true
patterns and confusable noise patterns; the generator allocates them to
match a requested true-positive fraction exactly, emits the fact/alias
tables, per-instance gold labels, and an embedding file in which words of
true patterns share an axis (high mutual cosine) while noise words live
on other axes.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from pathlib import Path

from .corpus import ParsedSentence, Token, dump_corpus

SPLITS = ("train", "dev", "test")


class SynthSpecError(ValueError):
    """Infeasible or malformed generator specification."""


@dataclass(frozen=True)
class PatternSpec:
    template: str                 # verb_prep | verb_obj | verb_mid | appos_noun | paren
    weight: int = 1               # share of the fact-pair (positive) pool
    neg_weight: int = -1          # share of the non-fact pool; -1 = weight for noise, 0 for true
    verb: str = ""
    prep: str = ""
    noun: str = ""

    @property
    def content_words(self) -> list[str]:
        return [w for w in (self.verb, self.noun) if w]

    @property
    def key(self) -> str:
        return f"{self.template}:{self.verb}:{self.noun}:{self.prep}"


@dataclass
class RelationSpec:
    relation: str
    subject_type: str
    object_type: str
    true_patterns: list[PatternSpec]
    noise_patterns: list[PatternSpec]
    subjects: int = 30
    objects: int = 20
    facts: int = 25
    true_fraction: float = 0.5
    sentences: dict[str, int] = field(default_factory=lambda: {"train": 400, "dev": 100, "test": 100})
    fact_share: float = 0.5
    eval_true_fraction: float = 0.5


@dataclass
class SynthSpec:
    seed: int
    relations: list[RelationSpec]
    embedding_dim_extra: int = 2


@dataclass
class GoldRecord:
    relation: str
    doc_id: str
    sentence_id: int
    split: str
    instance_id: str
    gold: bool
    pattern: str  # template key, for diagnostics

    def to_dict(self) -> dict:
        return {
            "relation": self.relation,
            "doc_id": self.doc_id,
            "sentence_id": self.sentence_id,
            "split": self.split,
            "instance_id": self.instance_id,
            "gold": self.gold,
            "pattern": self.pattern,
        }


@dataclass
class SynthResult:
    sentences: list[ParsedSentence]
    facts: list[tuple[str, str, str]]
    aliases: list[tuple[str, str]]
    schema: list[tuple[str, str, str]]
    gold: list[GoldRecord]
    embeddings: list[tuple[str, list[float]]]


def load_synth_spec(path: str | Path) -> SynthSpec:
    with open(path, encoding="utf-8") as handle:
        raw = json.load(handle)
    relations = []
    for r in raw["relations"]:
        relations.append(
            RelationSpec(
                relation=r["relation"],
                subject_type=r["subject_type"],
                object_type=r["object_type"],
                true_patterns=[PatternSpec(**p) for p in r.get("true_patterns", [])],
                noise_patterns=[PatternSpec(**p) for p in r.get("noise_patterns", [])],
                subjects=r.get("subjects", 30),
                objects=r.get("objects", 20),
                facts=r.get("facts", 25),
                true_fraction=r.get("true_fraction", 0.5),
                sentences=r.get("sentences", {"train": 400, "dev": 100, "test": 100}),
                fact_share=r.get("fact_share", 0.5),
                eval_true_fraction=r.get("eval_true_fraction", 0.5),
            )
        )
    return SynthSpec(seed=raw.get("seed", 7), relations=relations)


# --- entity name pools ------------------------------------------------------

_FIRST = (
    "Amara Bastian Corin Delia Emrys Farah Gideon Hala Idris Jonas Keira Liora "
    "Marek Nadia Orin Petra Quentin Rafael Selma Tobias Una Viktor Wanda Ximena "
    "Yusuf Zelda Anouk Boris Csilla Davor Elif Fintan"
).split()
_LAST = (
    "Okafor Reyes Lindqvist Abano Kowalski Mehta Fontaine Drummond Ishikawa Novak "
    "Petrov Salgado Thorne Ueda Vance Whitaker Yilmaz Zappa Brennan Castell Duarte "
    "Eklund Farkas Grieco Hollis Iverson Jansouk Keller Lombardi Moreau Nilsen Oyelaran"
).split()
_ORG_STEM = (
    "Varda Helix Quorum Zenith Ardent Cobalt Drift Ember Fathom Garnet Hearth "
    "Inlet Juniper Krona Lattice Meridian Nimbus Opaline Pinnacle Quill"
).split()
_ORG_SUFFIX = "Group Systems Corp Labs Industries Holdings Partners Dynamics".split()
_LOC_A = "Bel Dor Fen Gal Har Ist Jor Kel Lor Mar Nor Ost Pel Quar Ris Sel Tor Ul Ver Wex Yor Zan Bruk Cald".split()
_LOC_B = "mont wick stad ford haven berg dale moor port shore field crest".split()


def _suffix(i: int, cap: int) -> str:
    return "" if i < cap else str(i // cap + 1)


def _person_name(i: int) -> str:
    cap = len(_FIRST) * len(_LAST)
    return f"{_FIRST[i % len(_FIRST)]} {_LAST[(i // len(_FIRST) + i) % len(_LAST)]}{_suffix(i, cap)}"


def _org_name(i: int) -> str:
    cap = len(_ORG_STEM) * len(_ORG_SUFFIX)
    return f"{_ORG_STEM[i % len(_ORG_STEM)]} {_ORG_SUFFIX[(i // len(_ORG_STEM) + i) % len(_ORG_SUFFIX)]}{_suffix(i, cap)}"


def _loc_name(i: int) -> str:
    cap = len(_LOC_A) * len(_LOC_B)
    return f"{_LOC_A[i % len(_LOC_A)]}{_LOC_B[(i // len(_LOC_A) + i) % len(_LOC_B)]}{_suffix(i, cap)}"


def _entity_names(entity_type: str, count: int, offset: int) -> list[str]:
    maker = {
        "PERSON": _person_name,
        "ORGANIZATION": _org_name,
    }.get(entity_type, _loc_name)
    names: list[str] = []
    seen: set[str] = set()
    i = offset
    while len(names) < count:
        if i - offset > 100_000:
            raise SynthSpecError(f"entity pool for {entity_type} exhausted (asked for {count})")
        name = maker(i)
        if name not in seen:
            seen.add(name)
            names.append(name)
        i += 1
    return names


# --- sentence templates -----------------------------------------------------

@dataclass
class _Slot:
    surface: str
    pos: str
    ner: str = "NONE"
    head: int = 0      # slot-level head (0 = root), resolved after expansion
    deprel: str = ""
    is_subject: bool = False
    is_object: bool = False


def _template_slots(p: PatternSpec) -> list[_Slot]:
    S = _Slot("", "NNP", is_subject=True)
    O = _Slot("", "NNP", is_object=True)
    if p.template == "verb_prep":
        # SUBJ verb prep OBJ .
        slots = [S, _Slot(p.verb, "VBZ"), _Slot(p.prep, "IN"), O, _Slot(".", ".")]
        heads = [(1, 2, "nsubj"), (2, 0, "root"), (3, 4, "case"), (4, 2, f"prep_{p.prep}"), (5, 2, "punct")]
    elif p.template == "verb_obj":
        # SUBJ verb OBJ .
        slots = [S, _Slot(p.verb, "VBD"), O, _Slot(".", ".")]
        heads = [(1, 2, "nsubj"), (2, 0, "root"), (3, 2, "dobj"), (4, 2, "punct")]
    elif p.template == "verb_mid":
        # SUBJ verb the noun prep OBJ .
        slots = [S, _Slot(p.verb, "VBZ"), _Slot("the", "DT"), _Slot(p.noun, "NN"), _Slot(p.prep, "IN"), O, _Slot(".", ".")]
        heads = [
            (1, 2, "nsubj"), (2, 0, "root"), (3, 4, "det"), (4, 2, "dobj"),
            (5, 6, "case"), (6, 4, f"prep_{p.prep}"), (7, 2, "punct"),
        ]
    elif p.template == "appos_noun":
        # SUBJ , noun prep OBJ , spoke .
        slots = [
            S, _Slot(",", ","), _Slot(p.noun, "NN"), _Slot(p.prep, "IN"), O,
            _Slot(",", ","), _Slot("spoke", "VBD"), _Slot(".", "."),
        ]
        heads = [
            (1, 7, "nsubj"), (2, 1, "punct"), (3, 1, "appos"), (4, 5, "case"),
            (5, 3, f"prep_{p.prep}"), (6, 1, "punct"), (7, 0, "root"), (8, 7, "punct"),
        ]
    elif p.template == "paren":
        # SUBJ ( OBJ )
        slots = [S, _Slot("(", "-LRB-"), O, _Slot(")", "-RRB-")]
        heads = [(1, 0, "root"), (2, 3, "punct"), (3, 1, "appos"), (4, 3, "punct")]
    else:
        raise SynthSpecError(f"unknown template {p.template!r}")
    for idx, head, deprel in heads:
        slots[idx - 1].head = head
        slots[idx - 1].deprel = deprel
    return slots


def _expand(
    p: PatternSpec,
    subject_surface: str,
    object_surface: str,
    subject_type: str,
    object_type: str,
) -> tuple[list[Token], tuple[int, int], tuple[int, int]]:
    """Instantiate a template: multi-token names attach internal tokens to
    their last token via nn; the last token takes the slot's role."""
    slots = _template_slots(p)
    widths = []
    for slot in slots:
        if slot.is_subject:
            widths.append(len(subject_surface.split()))
        elif slot.is_object:
            widths.append(len(object_surface.split()))
        else:
            widths.append(1)
    starts = []
    pos = 1
    for width in widths:
        starts.append(pos)
        pos += width
    def anchor(slot_no: int) -> int:  # 1-based token index of a slot's syntactic anchor
        return starts[slot_no - 1] + widths[slot_no - 1] - 1

    tokens: list[Token] = []
    subj_span = obj_span = (0, 0)
    for slot_no, slot in enumerate(slots, start=1):
        head = 0 if slot.head == 0 else anchor(slot.head)
        if slot.is_subject or slot.is_object:
            surface = subject_surface if slot.is_subject else object_surface
            ner = subject_type if slot.is_subject else object_type
            words = surface.split()
            first = starts[slot_no - 1]
            last = first + len(words) - 1
            if slot.is_subject:
                subj_span = (first, last)
            else:
                obj_span = (first, last)
            for offset, word in enumerate(words):
                index = first + offset
                if index == last:
                    tokens.append(Token(index, word, word.lower(), slot.pos, ner, head, slot.deprel))
                else:
                    tokens.append(Token(index, word, word.lower(), "NNP", ner, last, "nn"))
        else:
            index = starts[slot_no - 1]
            tokens.append(Token(index, slot.surface, slot.surface.lower(), slot.pos, slot.ner, head, slot.deprel))
    return tokens, subj_span, obj_span


# --- allocation helpers -----------------------------------------------------

def _proportional_counts(total: int, weights: list[int]) -> list[int]:
    """Largest-remainder allocation of ``total`` over ``weights``."""
    if total and not weights:
        raise SynthSpecError("no patterns available for a nonzero allocation")
    if not weights:
        return []
    wsum = sum(weights)
    raw = [total * w / wsum for w in weights]
    counts = [int(x) for x in raw]
    rest = total - sum(counts)
    order = sorted(range(len(raw)), key=lambda i: (-(raw[i] - counts[i]), i))
    for i in order[:rest]:
        counts[i] += 1
    return counts


def _pattern_plan(n: int, true_fraction: float, spec: RelationSpec) -> list[tuple[PatternSpec, bool]]:
    n_true = round(n * true_fraction)
    n_noise = n - n_true
    if n_true and not spec.true_patterns:
        raise SynthSpecError(f"{spec.relation}: true_fraction {true_fraction} needs true patterns")
    if n_noise and not spec.noise_patterns:
        raise SynthSpecError(f"{spec.relation}: true_fraction {true_fraction} needs noise patterns")
    plan: list[tuple[PatternSpec, bool]] = []
    for pattern, count in zip(spec.true_patterns, _proportional_counts(n_true, [p.weight for p in spec.true_patterns])):
        plan.extend([(pattern, True)] * count)
    for pattern, count in zip(spec.noise_patterns, _proportional_counts(n_noise, [p.weight for p in spec.noise_patterns])):
        plan.extend([(pattern, False)] * count)
    return plan


def _nonfact_plan(n: int, spec: RelationSpec) -> list[tuple[PatternSpec, bool]]:
    """Sentences over non-fact pairs, allocated by each pattern's negative
    pool weight.  True templates here model KB incompleteness: the sentence
    expresses the relation but the pair is missing from the fact table."""
    entries: list[tuple[PatternSpec, bool]] = [(p, True) for p in spec.true_patterns]
    entries += [(p, False) for p in spec.noise_patterns]
    weights = [
        (p.neg_weight if p.neg_weight >= 0 else (0 if is_true else p.weight))
        for p, is_true in entries
    ]
    if n and sum(weights) == 0:
        raise SynthSpecError(f"{spec.relation}: no pattern has weight in the non-fact pool")
    plan: list[tuple[PatternSpec, bool]] = []
    for (pattern, is_true), count in zip(entries, _proportional_counts(n, weights)):
        plan.extend([(pattern, is_true)] * count)
    return plan


# --- embeddings -------------------------------------------------------------

def _build_embeddings(spec: SynthSpec, rng: random.Random) -> list[tuple[str, list[float]]]:
    """One axis per (relation, role); words on the same axis are near-1 in
    cosine to each other and near-0 to words on other axes."""
    axes: dict[tuple[str, str], int] = {}
    for rel in spec.relations:
        for role in ("true", "noise"):
            axes[(rel.relation, role)] = len(axes)
    dim = len(axes) + spec.embedding_dim_extra
    rows: list[tuple[str, list[float]]] = []
    seen: set[str] = set()
    for rel in spec.relations:
        for role, patterns in (("true", rel.true_patterns), ("noise", rel.noise_patterns)):
            axis = axes[(rel.relation, role)]
            for pattern in patterns:
                for word in pattern.content_words:
                    if word in seen:
                        continue
                    seen.add(word)
                    vec = [0.0] * dim
                    vec[axis] = 1.0
                    for j in range(spec.embedding_dim_extra):
                        vec[len(axes) + j] = round(rng.uniform(-0.12, 0.12), 4)
                    rows.append((word, vec))
    rows.sort(key=lambda r: r[0])
    return rows


# --- generator --------------------------------------------------------------

def generate(spec: SynthSpec) -> SynthResult:
    rng = random.Random(spec.seed)
    sentences: list[ParsedSentence] = []
    facts: list[tuple[str, str, str]] = []
    aliases: list[tuple[str, str]] = []
    schema: list[tuple[str, str, str]] = []
    gold: list[GoldRecord] = []

    name_offsets: dict[str, int] = {}
    for ri, rel in enumerate(spec.relations):
        schema.append((rel.relation, rel.subject_type, rel.object_type))

        subj_names = _entity_names(rel.subject_type, rel.subjects, name_offsets.get(rel.subject_type, 0))
        name_offsets[rel.subject_type] = name_offsets.get(rel.subject_type, 0) + rel.subjects * 2
        obj_names = _entity_names(rel.object_type, rel.objects, name_offsets.get(rel.object_type, 0))
        name_offsets[rel.object_type] = name_offsets.get(rel.object_type, 0) + rel.objects * 2

        subj_ids = [f"R{ri}S{i}" for i in range(rel.subjects)]
        obj_ids = [f"R{ri}O{i}" for i in range(rel.objects)]
        aliases.extend(zip(subj_ids, subj_names))
        aliases.extend(zip(obj_ids, obj_names))

        all_pairs = [(si, oj) for si in range(rel.subjects) for oj in range(rel.objects)]
        if rel.facts > len(all_pairs):
            raise SynthSpecError(f"{rel.relation}: more facts than available entity pairs")
        fact_pairs = rng.sample(all_pairs, rel.facts)
        fact_set = set(fact_pairs)
        nonfact_pairs = [p for p in all_pairs if p not in fact_set]
        if not nonfact_pairs:
            raise SynthSpecError(f"{rel.relation}: no non-fact pairs left for negatives")
        for si, oj in sorted(fact_pairs):
            facts.append((rel.relation, subj_ids[si], obj_ids[oj]))

        for split in SPLITS:
            n = rel.sentences.get(split, 0)
            if not n:
                continue
            if split == "train":
                n_fact = round(n * rel.fact_share)
                plan = [(p, g, True) for p, g in _pattern_plan(n_fact, rel.true_fraction, rel)]
                plan += [(p, g, False) for p, g in _nonfact_plan(n - n_fact, rel)]
            else:
                # evaluation splits: any pair, gold set by the template
                plan = [(p, g, None) for p, g in _pattern_plan(n, rel.eval_true_fraction, rel)]
            rng.shuffle(plan)
            for counter, (pattern, is_true, use_fact) in enumerate(plan, start=1):
                if use_fact is True:
                    si, oj = fact_pairs[(counter - 1) % len(fact_pairs)]
                elif use_fact is False:
                    si, oj = nonfact_pairs[(counter - 1) % len(nonfact_pairs)]
                else:
                    si, oj = all_pairs[rng.randrange(len(all_pairs))]
                tokens, subj_span, obj_span = _expand(
                    pattern, subj_names[si], obj_names[oj], rel.subject_type, rel.object_type
                )
                doc_id = f"{split}-{ri}-{counter:05d}"
                sentence = ParsedSentence(doc_id=doc_id, sentence_id=1, tokens=tokens)
                sentences.append(sentence)
                instance_id = "|".join(
                    (
                        rel.relation,
                        doc_id,
                        "1",
                        f"{subj_span[0]}-{subj_span[1]}",
                        f"{obj_span[0]}-{obj_span[1]}",
                    )
                )
                gold.append(
                    GoldRecord(
                        relation=rel.relation,
                        doc_id=doc_id,
                        sentence_id=1,
                        split=split,
                        instance_id=instance_id,
                        gold=is_true,
                        pattern=pattern.key,
                    )
                )

    sentences.sort(key=lambda s: (s.doc_id, s.sentence_id))
    gold.sort(key=lambda g: (g.doc_id, g.sentence_id))
    embeddings = _build_embeddings(spec, random.Random(spec.seed + 1))
    return SynthResult(
        sentences=sentences,
        facts=sorted(set(facts)),
        aliases=sorted(set(aliases)),
        schema=schema,
        gold=gold,
        embeddings=embeddings,
    )


def write_synth(result: SynthResult, outdir: str | Path) -> dict[str, str]:
    """Write all generator outputs; returns the path map."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    paths = {
        "corpus": str(outdir / "corpus.conllu"),
        "facts": str(outdir / "facts.tsv"),
        "aliases": str(outdir / "aliases.tsv"),
        "schema": str(outdir / "schema.tsv"),
        "gold": str(outdir / "gold.jsonl"),
        "embeddings": str(outdir / "embeddings.txt"),
    }
    dump_corpus(result.sentences, paths["corpus"])
    with open(paths["facts"], "w", encoding="utf-8") as handle:
        for relation, s, o in result.facts:
            handle.write(f"{relation}\t{s}\t{o}\n")
    with open(paths["aliases"], "w", encoding="utf-8") as handle:
        for kb_id, alias in result.aliases:
            handle.write(f"{kb_id}\t{alias}\n")
    with open(paths["schema"], "w", encoding="utf-8") as handle:
        for relation, st, ot in result.schema:
            handle.write(f"{relation}\t{st}\t{ot}\n")
    with open(paths["gold"], "w", encoding="utf-8") as handle:
        for record in result.gold:
            handle.write(json.dumps(record.to_dict(), ensure_ascii=False, sort_keys=True) + "\n")
    with open(paths["embeddings"], "w", encoding="utf-8") as handle:
        for word, vec in result.embeddings:
            handle.write(word + " " + " ".join(f"{v:g}" for v in vec) + "\n")
    return paths


def default_spec(seed: int = 7) -> SynthSpec:
    """Bundled demo fixture: one residence relation with a frequent true
    pattern, near-synonym true patterns, and confusable noise patterns
    whose words sit on a different embedding axis."""
    residence = RelationSpec(
        relation="per:cities_of_residence",
        subject_type="PERSON",
        object_type="LOCATION-CITY",
        true_patterns=[
            PatternSpec(template="verb_prep", verb="lives", prep="in", weight=3),
            PatternSpec(template="verb_prep", verb="resides", prep="in", weight=2),
            PatternSpec(template="appos_noun", noun="resident", prep="of", weight=1, neg_weight=2),
        ],
        noise_patterns=[
            PatternSpec(template="verb_obj", verb="visited", weight=3, neg_weight=1),
            PatternSpec(template="verb_prep", verb="works", prep="near", weight=2, neg_weight=2),
            PatternSpec(template="paren", weight=1, neg_weight=1),
        ],
        subjects=36,
        objects=20,
        facts=30,
        true_fraction=0.5,
        fact_share=0.8,
        sentences={"train": 600, "dev": 240, "test": 240},
        eval_true_fraction=0.5,
    )
    return SynthSpec(seed=seed, relations=[residence])


def load_gold(path: str | Path) -> list[GoldRecord]:
    out = []
    with open(path, encoding="utf-8") as handle:
        for line in handle:
            if line.strip():
                d = json.loads(line)
                out.append(
                    GoldRecord(
                        relation=d["relation"],
                        doc_id=d["doc_id"],
                        sentence_id=d["sentence_id"],
                        split=d["split"],
                        instance_id=d["instance_id"],
                        gold=d["gold"],
                        pattern=d.get("pattern", ""),
                    )
                )
    return out
