"""Start the annotation service with a generated fixture queue.

Used by the frontend integration tests: builds a 100-pattern queue for
one relation in a temp directory and serves it on the requested port.
"""

import argparse
import tempfile
from pathlib import Path

import uvicorn

from slp.annotation import AnnotationJournal
from slp.patterns import SampleSentence, SdpPattern, queue_to_json
from slp.service import QueueStore, create_app

RELATION = "per:test_relation"


def build_queue(count: int, outdir: Path) -> Path:
    patterns = []
    for i in range(count):
        pattern = SdpPattern(
            relation=RELATION,
            sdp=f"PERSON<-nsubj<-verb{i:03d}->prep_in->LOCATION",
            pos_count=count - i,
            neg_count=i % 7,
            confidence=float(count - i),
        )
        pattern.sample_sentences = [
            SampleSentence(
                doc_id=f"doc{i:03d}",
                sentence_id=1,
                text=f"Alice Kober verb{i:03d} in Belmont .",
                subject_span=(1, 2),
                object_span=(5, 5),
            )
        ]
        patterns.append(pattern)
    path = outdir / f"patterns_{RELATION.replace(':', '_')}.json"
    queue_to_json(patterns, path)
    return path


def main() -> None:
    parser = argparse.ArgumentParser()
    parser.add_argument("--port", type=int, default=8763)
    parser.add_argument("--patterns", type=int, default=100)
    parser.add_argument("--journal", default=None)
    args = parser.parse_args()
    tmp = Path(tempfile.mkdtemp(prefix="slp-ui-fixture-"))
    queue_path = build_queue(args.patterns, tmp)
    journal = AnnotationJournal(args.journal or tmp / "journal.jsonl")
    app = create_app(QueueStore({RELATION: queue_path}), journal)
    uvicorn.run(app, host="127.0.0.1", port=args.port, log_level="warning")


if __name__ == "__main__":
    main()
