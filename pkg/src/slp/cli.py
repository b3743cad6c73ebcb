"""Command-line entry point: slp <stage> [options].

Exit codes: 0 success, 2 validation/input error, 1 internal error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import pipeline, synth
from .corpus import CorpusFormatError, CorpusStructureError, SchemaError
from .pipeline import ConfigError, PipelineConfig, StageError
from .synth import SynthSpecError

BATCH_STAGES = ("ingest", "align", "features", "rank", "filter", "propagate", "train", "eval", "sweep")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="slp", description=__doc__)
    parser.add_argument("--config", help="pipeline config JSON", default=None)
    parser.add_argument("--workdir", help="override workdir from config", default=None)
    parser.add_argument("--seed", type=int, help="override master seed", default=None)
    sub = parser.add_subparsers(dest="command", required=True)

    for stage in BATCH_STAGES:
        p = sub.add_parser(stage, help=f"run the {stage} stage")
        if stage == "features":
            p.add_argument("--no-collapse", action="store_true", help="disable number/date collapsing")
        if stage == "propagate":
            p.add_argument("--k", type=int, default=None, help="schedule step for the train stage")
            p.add_argument("--K", dest="total_steps", type=int, default=None)
            p.add_argument("--repr", dest="representation", choices=("embedding", "bow", "svd"), default=None)
            p.add_argument("--min-sim", dest="min_similarity", type=float, default=None)
        if stage == "train":
            p.add_argument("--k", type=int, default=None)
            p.add_argument("--repr", dest="representation", choices=("embedding", "bow", "svd"), default=None)
        if stage == "eval":
            p.add_argument("--split", choices=("dev", "test"), default="test")

    p = sub.add_parser("import", help="import a filled queue spreadsheet")
    p.add_argument("--tsv", required=True)
    p.add_argument("--relation", required=True)
    p.add_argument("--annotator", required=True)

    p = sub.add_parser("serve", help="run the annotation HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8571)

    p = sub.add_parser("synth", help="generate a synthetic corpus")
    p.add_argument("--spec", help="generator spec JSON (omit for the bundled demo spec)")
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("run", help="run every batch stage in order")
    p.add_argument("--skip", nargs="*", default=(), help="stages to skip")
    return parser


def _load_config(args) -> PipelineConfig:
    if not args.config:
        raise ConfigError("--config is required for this command")
    overrides = {}
    if args.workdir:
        overrides["workdir"] = args.workdir
    if args.seed is not None:
        overrides["seed"] = args.seed
    config = PipelineConfig.from_file(args.config, overrides)
    for key in ("k", "total_steps", "representation", "min_similarity"):
        value = getattr(args, key if key != "k" else "k", None)
        if value is not None:
            setattr(config, {"k": "step"}.get(key, key), value)
    if getattr(args, "no_collapse", False):
        config.collapse = False
    return config


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "synth":
            if args.spec:
                spec = synth.load_synth_spec(args.spec)
            else:
                spec = synth.default_spec()
            result = synth.generate(spec)
            paths = synth.write_synth(result, args.out)
            print(json.dumps(paths, indent=1, sort_keys=True))
            return 0
        config = _load_config(args)
        if args.command == "serve":
            from .service import serve

            relations = _known_relations(config)
            serve(
                config.stage_dir("rank"),
                relations,
                journal_path=config.journal_path(),
                host=args.host,
                port=args.port,
                primary_annotator=config.primary_annotator,
            )
            return 0
        if args.command == "import":
            result = pipeline.stage_import(config, args.tsv, args.relation, args.annotator)
            print(f"imported {result.events} events ({result.accepted} accepted, {result.warnings} warnings)")
            return 0
        if args.command == "run":
            for stage in BATCH_STAGES:
                if stage in args.skip:
                    continue
                if stage == "filter" and not config.journal_path().exists():
                    print(
                        "no annotation journal yet: annotate the ranked queues "
                        "(slp serve, or fill the queue TSVs and slp import), "
                        "then re-run from the filter stage"
                    )
                    return 0
                pipeline.run_stage(stage, config)
                print(f"stage {stage}: done")
            return 0
        kwargs = {}
        if args.command == "eval":
            kwargs["split"] = args.split
        pipeline.run_stage(args.command, config, **kwargs)
        print(f"stage {args.command}: done")
        return 0
    except (ConfigError, StageError, SynthSpecError, SchemaError, CorpusFormatError, CorpusStructureError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # internal failure
        logging.getLogger("slp").exception("internal error")
        print(f"internal error: {exc}", file=sys.stderr)
        return 1


def _known_relations(config: PipelineConfig) -> list[str]:
    rank_dir = config.stage_dir("rank")
    relations = []
    for path in sorted(rank_dir.glob("patterns_*.json")):
        with open(path, encoding="utf-8") as handle:
            rows = json.load(handle)
        if rows:
            relations.append(rows[0]["relation"])
    if not relations:
        raise StageError(f"no pattern queues in {rank_dir}; run the 'rank' stage first")
    return relations


if __name__ == "__main__":
    sys.exit(main())
