"""Stage orchestration: ingest -> align -> features -> rank -> import ->
filter -> propagate -> train -> eval / sweep.

Each stage writes its artifacts plus a manifest.json recording the sha256
of inputs and outputs into its own workdir subdirectory.  All stage
output is deterministic given the config seeds, so re-running a stage
with unchanged inputs reproduces identical bytes.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import align, annotation, classifier, corpus, evaluation, features, patterns, propagation, semantic
from .annotation import AnnotationJournal
from .instances import (
    DISCARDED,
    KEPT,
    NEGATIVE,
    POSITIVE,
    RelationInstance,
    read_instances,
    write_instances,
)
from .propagation import Schedule
from .synth import load_gold

log = logging.getLogger("slp")

STAGES = (
    "ingest",
    "align",
    "features",
    "rank",
    "import",
    "filter",
    "propagate",
    "train",
    "eval",
    "sweep",
)


class StageError(RuntimeError):
    """A prerequisite artifact is missing; the message names the stage to
    run first."""


class ConfigError(ValueError):
    pass


@dataclass
class PipelineConfig:
    corpus: str
    facts: str
    aliases: str
    schema: str
    workdir: str
    embeddings: str | None = None
    stopwords: str | None = None
    titles: str | None = None
    gold: str | None = None
    journal: str | None = None
    splits: dict[str, str] = field(default_factory=lambda: {"train": "train-", "dev": "dev-", "test": "test-"})
    per_subject_cap: int = 100
    negative_ratio: float = 1.0
    align_seed: int = 13
    alpha: float = 1.0
    top_k: int = 250
    sample_count: int = 5
    collapse: bool = True
    case_fold: bool = True
    total_steps: int = 10
    step: int = 10
    representation: str = semantic.EMBEDDING
    representations: list[str] = field(default_factory=lambda: list(semantic.REPRESENTATIONS))
    svd_rank: int = 100
    clf_step: float = 0.1
    clf_epochs: int = 500
    clf_l2: float = 1e-3
    neg_weight_grid: list[float] = field(default_factory=lambda: list(classifier.DEFAULT_NEG_WEIGHT_GRID))
    resamples: int = 5
    seed: int = 17
    primary_annotator: str | None = None
    min_similarity: float | None = None

    @classmethod
    def from_file(cls, path: str | Path, overrides: dict | None = None) -> "PipelineConfig":
        with open(path, encoding="utf-8") as handle:
            raw = json.load(handle)
        raw.update(overrides or {})
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(raw) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        missing = [k for k in ("corpus", "facts", "aliases", "schema", "workdir") if k not in raw]
        if missing:
            raise ConfigError(f"config missing required keys: {missing}")
        return cls(**raw)

    def journal_path(self) -> Path:
        env = os.environ.get(annotation.JOURNAL_ENV_VAR)
        if env:
            return Path(env)
        if self.journal:
            return Path(self.journal)
        return Path(self.workdir) / "journal.jsonl"

    def stage_dir(self, stage: str) -> Path:
        return Path(self.workdir) / stage

    def train_config(self, neg_weight: float = 1.0) -> classifier.TrainConfig:
        return classifier.TrainConfig(
            step=self.clf_step,
            epochs=self.clf_epochs,
            l2_lambda=self.clf_l2,
            neg_weight=neg_weight,
            seed=self.seed,
        )


def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for chunk in iter(lambda: handle.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _write_manifest(stage_dir: Path, stage: str, inputs: list[Path], outputs: list[Path]) -> None:
    manifest = {
        "stage": stage,
        "inputs": {str(p): _sha256(Path(p)) for p in inputs if Path(p).exists()},
        "outputs": {p.name: _sha256(p) for p in outputs},
    }
    with open(stage_dir / "manifest.json", "w", encoding="utf-8") as handle:
        json.dump(manifest, handle, ensure_ascii=False, sort_keys=True, indent=1)
        handle.write("\n")


def _require(path: Path, producer: str) -> Path:
    if not path.exists():
        raise StageError(f"missing artifact {path}; run the '{producer}' stage first")
    return path


def _split_corpus(sentences: list[corpus.ParsedSentence], prefix: str) -> list[corpus.ParsedSentence]:
    return [s for s in sentences if s.doc_id.startswith(prefix)]


# --- stages -----------------------------------------------------------------

def stage_ingest(config: PipelineConfig) -> list[Path]:
    out = config.stage_dir("ingest")
    out.mkdir(parents=True, exist_ok=True)
    sentences = corpus.load_corpus(config.corpus)
    facts, aliases, schema = corpus.load_kb(config.facts, config.aliases, config.schema)
    corpus.dump_corpus(sentences, out / "corpus.conllu")
    kb_payload = {
        "facts": [[f.relation, f.subject_id, f.object_id] for f in facts],
        "aliases": {k: sorted(v) for k, v in sorted(aliases.aliases.items())},
        "schema": {r: list(schema.types[r]) for r in schema.relations},
        "counts": {"sentences": len(sentences), "facts": len(facts)},
    }
    with open(out / "kb.json", "w", encoding="utf-8") as handle:
        json.dump(kb_payload, handle, ensure_ascii=False, sort_keys=True, indent=1)
        handle.write("\n")
    outputs = [out / "corpus.conllu", out / "kb.json"]
    _write_manifest(out, "ingest", [Path(config.corpus), Path(config.facts), Path(config.aliases), Path(config.schema)], outputs)
    return outputs


def _load_ingested(config: PipelineConfig):
    ingest_dir = config.stage_dir("ingest")
    _require(ingest_dir / "corpus.conllu", "ingest")
    sentences = corpus.load_corpus(ingest_dir / "corpus.conllu")
    facts, aliases, schema = corpus.load_kb(config.facts, config.aliases, config.schema)
    return sentences, facts, aliases, schema


def stage_align(config: PipelineConfig) -> list[Path]:
    out = config.stage_dir("align")
    out.mkdir(parents=True, exist_ok=True)
    sentences, facts, aliases, schema = _load_ingested(config)
    train_sents = _split_corpus(sentences, config.splits["train"])
    cfg = align.AlignmentConfig(
        per_subject_cap=config.per_subject_cap,
        negative_ratio=config.negative_ratio,
        rng_seed=config.align_seed,
    )
    detected = align.detect_corpus_mentions(train_sents, aliases)
    positives = align.generate_positives(train_sents, facts, aliases, schema, cfg, detected=detected)
    negatives = align.sample_negatives(
        train_sents, facts, aliases, schema, cfg, positives=positives, detected=detected
    )
    instances = positives + negatives
    write_instances(instances, out / "instances.jsonl")
    _write_manifest(out, "align", [config.stage_dir("ingest") / "corpus.conllu"], [out / "instances.jsonl"])
    return [out / "instances.jsonl"]


def _extract_for(
    instances: list[RelationInstance],
    sentence_map,
    titles: frozenset[str],
    collapse: bool,
) -> tuple[list[RelationInstance], int]:
    """Fill sdp/pattern_key/features in place; Drop disconnected instances."""
    kept: list[RelationInstance] = []
    dropped = 0
    graphs: dict[tuple[str, int], features.DependencyGraph] = {}
    for inst in instances:
        sent = sentence_map[(inst.doc_id, inst.sentence_id)]
        graph = graphs.get(sent.key)
        if graph is None:
            graph = features.DependencyGraph(sent)
            graphs[sent.key] = graph
        try:
            sdp = features.shortest_dependency_path(inst.subject, inst.object, graph, collapse=collapse)
        except features.PathExtractionError as exc:
            log.warning("dropping instance %s: %s", inst.instance_id, exc)
            dropped += 1
            continue
        inst.sdp = sdp.sdp
        inst.no_verb = sdp.no_verb
        if sdp.no_verb:
            inst.pattern_key = features.no_verb_pattern(inst.subject, inst.object, sent, collapse=collapse)
        else:
            inst.pattern_key = sdp.sdp
        inst.features = features.extract_features(inst.subject, inst.object, sent, sdp, titles, collapse=collapse)
        kept.append(inst)
    return kept, dropped


def stage_features(config: PipelineConfig) -> list[Path]:
    out = config.stage_dir("features")
    out.mkdir(parents=True, exist_ok=True)
    align_file = _require(config.stage_dir("align") / "instances.jsonl", "align")
    sentences, facts, aliases, schema = _load_ingested(config)
    sentence_map = corpus.corpus_index(sentences)
    titles = features.load_title_lexicon(config.titles)

    instances = read_instances(align_file)
    featured, dropped = _extract_for(instances, sentence_map, titles, config.collapse)
    if dropped:
        log.warning("features: dropped %d disconnected instances", dropped)
    write_instances(featured, out / "instances.jsonl")

    outputs = [out / "instances.jsonl"]
    for split in ("dev", "test"):
        prefix = config.splits.get(split)
        split_sents = _split_corpus(sentences, prefix) if prefix else []
        candidates: list[RelationInstance] = []
        if split_sents:
            detected = align.detect_corpus_mentions(split_sents, aliases)
            for relation in schema.relations:
                candidates.extend(
                    align.enumerate_candidates(split_sents, aliases, schema, relation, detected=detected)
                )
        featured_split, _ = _extract_for(candidates, sentence_map, titles, config.collapse)
        path = out / f"{split}_instances.jsonl"
        write_instances(featured_split, path)
        outputs.append(path)
    _write_manifest(out, "features", [align_file], outputs)
    return outputs


def stage_rank(config: PipelineConfig) -> list[Path]:
    out = config.stage_dir("rank")
    out.mkdir(parents=True, exist_ok=True)
    feat_file = _require(config.stage_dir("features") / "instances.jsonl", "features")
    instances = read_instances(feat_file)
    sentences = corpus.load_corpus(config.stage_dir("ingest") / "corpus.conllu")
    sentence_map = corpus.corpus_index(sentences)
    relations = sorted({i.relation for i in instances})
    outputs = []
    for relation in relations:
        pats = patterns.aggregate_patterns(
            instances, relation, alpha=config.alpha, sample_count=config.sample_count, sentences=sentence_map
        )
        full = patterns.ranked_queue(pats, top_k=None)
        queue = full[: config.top_k]
        tsv = out / f"queue_{relation.replace(':', '_')}.tsv"
        pjson = out / f"patterns_{relation.replace(':', '_')}.json"
        patterns.queue_to_tsv(queue, tsv, sample_count=config.sample_count)
        patterns.queue_to_json(full, pjson)
        outputs += [tsv, pjson]
    _write_manifest(out, "rank", [feat_file], outputs)
    return outputs


def _relation_file(config: PipelineConfig, stage: str, prefix: str, relation: str, suffix: str) -> Path:
    return config.stage_dir(stage) / f"{prefix}{relation.replace(':', '_')}{suffix}"


def stage_import(config: PipelineConfig, tsv_path: str, relation: str, annotator_id: str) -> annotation.ImportResult:
    pjson = _require(_relation_file(config, "rank", "patterns_", relation, ".json"), "rank")
    known = {p.sdp for p in patterns.queue_from_json(pjson)}
    journal = AnnotationJournal(config.journal_path())
    result = annotation.import_tsv(journal, tsv_path, annotator_id, relation, known_sdps=known)
    if result.warnings:
        log.warning("import: skipped %d rows with unknown patterns", result.warnings)
    return result


def stage_filter(config: PipelineConfig) -> list[Path]:
    out = config.stage_dir("filter")
    out.mkdir(parents=True, exist_ok=True)
    feat_file = _require(config.stage_dir("features") / "instances.jsonl", "features")
    instances = read_instances(feat_file)
    journal_path = config.journal_path()
    journal = AnnotationJournal(journal_path) if journal_path.exists() else None
    relations = sorted({i.relation for i in instances})
    any_accepted = False
    for relation in relations:
        verdicts = (
            journal.state.effective_verdicts(relation, config.primary_annotator) if journal else {}
        )
        if any(v == patterns.ACCEPTED for v in verdicts.values()):
            any_accepted = True
        annotation.filter_instances([i for i in instances if i.relation == relation], verdicts)
    if not any_accepted:
        log.warning("filter: no accepted patterns; every positive instance was discarded")
    write_instances(instances, out / "instances.jsonl")
    inputs = [feat_file] + ([journal_path] if journal_path.exists() else [])
    _write_manifest(out, "filter", inputs, [out / "instances.jsonl"])
    return [out / "instances.jsonl"]


def _propagation_inputs(config: PipelineConfig, instances: list[RelationInstance], relation: str):
    kept = [i for i in instances if i.relation == relation and i.stage_label == KEPT]
    discarded = [i for i in instances if i.relation == relation and i.stage_label == DISCARDED]
    negatives = [i for i in instances if i.relation == relation and i.ds_label == NEGATIVE]
    pjson = _require(_relation_file(config, "rank", "patterns_", relation, ".json"), "rank")
    pats = patterns.queue_from_json(pjson)
    return kept, discarded, negatives, pats


def _apply_verdicts(pats: list[patterns.SdpPattern], verdicts: dict[str, str]) -> None:
    for p in pats:
        p.verdict = verdicts.get(p.sdp, patterns.UNLABELED)


def _build_rankings(
    config: PipelineConfig,
    kept: list[RelationInstance],
    pats: list[patterns.SdpPattern],
    table: semantic.EmbeddingTable | None,
) -> dict[str, list[propagation.RankedPattern]]:
    accepted_keys = sorted({i.pattern_key for i in kept if i.pattern_key})
    rankings: dict[str, list[propagation.RankedPattern]] = {}
    for representation in config.representations:
        if representation == semantic.EMBEDDING and table is None:
            continue
        vectors = propagation.build_pattern_vectors(
            pats, representation, table=table, svd_rank=config.svd_rank
        )
        accepted_vecs = [vectors.get(key) for key in accepted_keys]
        accepted_vecs = [v for v in accepted_vecs if v is not None]
        try:
            center = propagation.centroid(accepted_vecs)
            ranking = propagation.rank_candidates(center, pats, vectors)
        except propagation.PropagationUnavailable as exc:
            log.warning("propagation unavailable under %s: %s", representation, exc)
            ranking = []
        if config.min_similarity is not None:
            ranking = [r for r in ranking if r.similarity >= config.min_similarity]
        rankings[representation] = ranking
    return rankings


def stage_propagate(config: PipelineConfig) -> list[Path]:
    out = config.stage_dir("propagate")
    out.mkdir(parents=True, exist_ok=True)
    filt_file = _require(config.stage_dir("filter") / "instances.jsonl", "filter")
    instances = read_instances(filt_file)
    table = None
    if config.embeddings:
        table = semantic.load_embeddings(config.embeddings, config.stopwords, case_fold=config.case_fold)
    journal_path = config.journal_path()
    journal = AnnotationJournal(journal_path) if journal_path.exists() else None
    relations = sorted({i.relation for i in instances})
    outputs = []
    for relation in relations:
        kept, discarded, negatives, pats = _propagation_inputs(config, instances, relation)
        verdicts = journal.state.effective_verdicts(relation, config.primary_annotator) if journal else {}
        _apply_verdicts(pats, verdicts)
        if not kept:
            log.warning("propagate: relation %s has an empty filtered set; skipping", relation)
            continue
        rankings = _build_rankings(config, kept, pats, table)
        rank_path = _relation_file(config, "propagate", "ranking_", relation, ".json")
        with open(rank_path, "w", encoding="utf-8") as handle:
            payload = {
                representation: [
                    {"sdp": r.sdp, "similarity": r.similarity, "instance_count": r.instance_count}
                    for r in ranking
                ]
                for representation, ranking in rankings.items()
            }
            json.dump(payload, handle, ensure_ascii=False, sort_keys=True, indent=1)
            handle.write("\n")
        outputs.append(rank_path)
        ranking = rankings.get(config.representation, [])
        n_ds = len(kept) + len(discarded)
        for k in range(config.total_steps + 1):
            schedule = Schedule(
                n_filtered=len(kept), n_ds=n_ds, total_steps=config.total_steps, step=k
            )
            assembled = propagation.assemble_training_set(kept, list(discarded), ranking, schedule)
            manifest_path = _relation_file(config, "propagate", f"manifest_k{k}_", relation, ".jsonl")
            with open(manifest_path, "w", encoding="utf-8") as handle:
                for inst in assembled:
                    handle.write(
                        json.dumps(
                            {"instance_id": inst.instance_id, "stage_label": inst.stage_label},
                            sort_keys=True,
                        )
                        + "\n"
                    )
            outputs.append(manifest_path)
            # stage labels are per-k; reset the propagated marks
            for inst in discarded:
                inst.stage_label = DISCARDED
    _write_manifest(out, "propagate", [filt_file], outputs)
    return outputs


def _load_labeled_split(config: PipelineConfig, split: str, relation: str):
    path = _require(config.stage_dir("features") / f"{split}_instances.jsonl", "features")
    if config.gold is None:
        raise ConfigError("config.gold is required for evaluation stages")
    gold = {
        (g.relation, g.instance_id): g.gold for g in load_gold(config.gold)
    }
    instances = [i for i in read_instances(path) if i.relation == relation]
    known = [i for i in instances if (relation, i.instance_id) in gold]
    labels = np.array([1.0 if gold[(relation, i.instance_id)] else 0.0 for i in known])
    skipped = len(instances) - len(known)
    if skipped:
        log.warning("%s split: %d candidates without gold labels skipped", split, skipped)
    return known, labels


def _training_instances(
    config: PipelineConfig, instances: list[RelationInstance], relation: str, k: int
) -> list[RelationInstance]:
    manifest_path = _require(
        _relation_file(config, "propagate", f"manifest_k{k}_", relation, ".jsonl"), "propagate"
    )
    wanted: set[str] = set()
    with open(manifest_path, encoding="utf-8") as handle:
        for line in handle:
            if line.strip():
                wanted.add(json.loads(line)["instance_id"])
    positives = [i for i in instances if i.relation == relation and i.instance_id in wanted]
    negatives = [i for i in instances if i.relation == relation and i.ds_label == NEGATIVE]
    return positives + negatives


def stage_train(config: PipelineConfig) -> list[Path]:
    out = config.stage_dir("train")
    out.mkdir(parents=True, exist_ok=True)
    filt_file = _require(config.stage_dir("filter") / "instances.jsonl", "filter")
    instances = read_instances(filt_file)
    relations = sorted({i.relation for i in instances})
    outputs = []
    chosen = {}
    for relation in relations:
        train_set = _training_instances(config, instances, relation, config.step)
        dev_instances, dev_labels = _load_labeled_split(config, "dev", relation)
        if not dev_instances:
            log.warning("train: relation %s has no labeled dev instances; using neg_weight=1", relation)
            model = classifier.train(train_set, relation, config.train_config(1.0))
            neg_weight = 1.0
        else:
            choice = classifier.tune_neg_weight(
                train_set,
                dev_instances,
                dev_labels,
                relation,
                config.train_config(),
                grid=tuple(config.neg_weight_grid),
            )
            model = choice.model
            neg_weight = choice.neg_weight
        chosen[relation] = neg_weight
        model_path = _relation_file(config, "train", "model_", relation, ".json")
        classifier.save_model(model, model_path)
        outputs.append(model_path)
    with open(out / "hyperparameters.json", "w", encoding="utf-8") as handle:
        json.dump(
            {"k": config.step, "representation": config.representation, "neg_weight": chosen},
            handle,
            sort_keys=True,
            indent=1,
        )
        handle.write("\n")
    outputs.append(out / "hyperparameters.json")
    _write_manifest(out, "train", [filt_file], outputs)
    return outputs


def stage_eval(config: PipelineConfig, split: str = "test") -> list[Path]:
    out = config.stage_dir("eval")
    out.mkdir(parents=True, exist_ok=True)
    filt_file = _require(config.stage_dir("filter") / "instances.jsonl", "filter")
    relations = sorted({i.relation for i in read_instances(filt_file)})
    predictions: list[tuple[str, str, bool]] = []
    gold_map: dict[tuple[str, str], bool] = {}
    outputs = []
    for relation in relations:
        model_path = _require(_relation_file(config, "train", "model_", relation, ".json"), "train")
        model = classifier.load_model(model_path)
        instances, labels = _load_labeled_split(config, split, relation)
        if not instances:
            continue
        scores = classifier.predict_many(model, instances)
        for inst, score, label in zip(instances, scores, labels):
            predictions.append((relation, inst.instance_id, bool(score >= 0.5)))
            gold_map[(relation, inst.instance_id)] = bool(label)
        points = evaluation.pr_curve(scores, labels)
        csv_path = _relation_file(config, "eval", "pr_", relation, ".csv")
        svg_path = _relation_file(config, "eval", "pr_", relation, ".svg")
        evaluation.pr_curve_csv(points, csv_path)
        evaluation.pr_curve_svg(points, svg_path, title=relation)
        outputs += [csv_path, svg_path]
    records, micro = evaluation.evaluate(predictions, gold_map)
    eval_path = out / "eval.tsv"
    with open(eval_path, "w", encoding="utf-8") as handle:
        handle.write("relation\ttp\tfp\tfn\tprecision\trecall\tf1\n")
        for relation in sorted(records):
            rec = records[relation]
            handle.write(
                f"{relation}\t{rec.tp}\t{rec.fp}\t{rec.fn}\t{rec.precision:.6f}\t{rec.recall:.6f}\t{rec.f1:.6f}\n"
            )
        handle.write(
            f"micro\t{micro.tp}\t{micro.fp}\t{micro.fn}\t{micro.precision:.6f}\t{micro.recall:.6f}\t{micro.f1:.6f}\n"
        )
    outputs.append(eval_path)
    _write_manifest(out, "eval", [filt_file], outputs)
    return outputs


def stage_sweep(config: PipelineConfig) -> list[Path]:
    out = config.stage_dir("sweep")
    out.mkdir(parents=True, exist_ok=True)
    filt_file = _require(config.stage_dir("filter") / "instances.jsonl", "filter")
    instances = read_instances(filt_file)
    table = None
    if config.embeddings:
        table = semantic.load_embeddings(config.embeddings, config.stopwords, case_fold=config.case_fold)
    journal_path = config.journal_path()
    journal = AnnotationJournal(journal_path) if journal_path.exists() else None
    relations = sorted({i.relation for i in instances})
    selection = {}
    outputs = []
    for relation in relations:
        kept, discarded, negatives, pats = _propagation_inputs(config, instances, relation)
        if not kept:
            log.warning("sweep: relation %s has an empty filtered set; skipping", relation)
            continue
        verdicts = journal.state.effective_verdicts(relation, config.primary_annotator) if journal else {}
        _apply_verdicts(pats, verdicts)
        rankings = _build_rankings(config, kept, pats, table)
        dev_instances, dev_labels = _load_labeled_split(config, "dev", relation)
        representations = [r for r in config.representations if r in rankings]
        result = evaluation.k_sweep(
            relation=relation,
            total_steps=config.total_steps,
            representations=representations,
            kept=kept,
            discarded=discarded,
            rankings=rankings,
            negatives=negatives,
            dev_instances=dev_instances,
            dev_labels=dev_labels,
            config=config.train_config(),
            resamples=config.resamples,
            negative_ratio=config.negative_ratio,
            seed=config.seed,
        )
        sweep_path = _relation_file(config, "sweep", "sweep_", relation, ".tsv")
        evaluation.sweep_to_tsv(result, sweep_path)
        outputs.append(sweep_path)
        best = result.cell(result.best_k, result.best_representation)
        selection[relation] = {
            "k": result.best_k,
            "representation": result.best_representation,
            "mean_f1": best.mean_f1,
        }
    sel_path = out / "selection.json"
    with open(sel_path, "w", encoding="utf-8") as handle:
        json.dump(selection, handle, ensure_ascii=False, sort_keys=True, indent=1)
        handle.write("\n")
    outputs.append(sel_path)
    _write_manifest(out, "sweep", [filt_file], outputs)
    return outputs


def run_stage(stage: str, config: PipelineConfig, **kwargs):
    if stage not in STAGES:
        raise ConfigError(f"unknown stage {stage!r}; expected one of {STAGES}")
    dispatch = {
        "ingest": stage_ingest,
        "align": stage_align,
        "features": stage_features,
        "rank": stage_rank,
        "filter": stage_filter,
        "propagate": stage_propagate,
        "train": stage_train,
        "eval": stage_eval,
        "sweep": stage_sweep,
    }
    if stage == "import":
        return stage_import(config, **kwargs)
    return dispatch[stage](config, **kwargs)
