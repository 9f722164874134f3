"""Command-line front end.

Exit codes: 0 success, 1 contract violation (bad records, duplicate
prediction ids, empty training pool, ...), 2 usage or configuration error.
Set STQA_LOG_LEVEL (e.g. DEBUG) to change log verbosity.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from .config import Config, ConfigError
from .events import (
    ClipManifest,
    EventTuple,
    broadcast_sparse_labels,
    emit_annotations,
    ingest_annotations,
    segment_clips,
)
from .metrics import SampleScore, aggregate_report, evaluate
from .qagen import dumps_record, emit_dataset, generate_dataset, load_dataset, prepare_clip, retrieve_icl_exemplar
from .templates import load_registry
from .vocab import Vocabulary

log = logging.getLogger("stqa")

OK, VIOLATION, USAGE = 0, 1, 2

TUPLES_FILE = "tuples.jsonl"
CLIPS_FILE = "clips.jsonl"
DATASET_FILE = "dataset.jsonl"
SHORTFALL_FILE = "shortfall.jsonl"
EXEMPLARS_FILE = "exemplars.jsonl"
SCORES_FILE = "scores.jsonl"
REPORT_FILE = "report.json"
TABLE_FILE = "table.tsv"


class Violation(Exception):
    """A contract violation; maps to exit code 1."""


def _write_lines(path: Path, lines) -> int:
    n = 0
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for line in lines:
            fh.write(line + "\n")
            n += 1
    return n


def _read_jsonl(path: Path) -> list[dict]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                out.append(json.loads(line))
            except json.JSONDecodeError as exc:
                raise Violation(f"{path}:{lineno}: malformed record: {exc.msg}") from None
    return out


def _vocab(cfg: Config) -> Vocabulary:
    return Vocabulary.load(cfg.vocab)


def _durations(cfg: Config) -> dict[str, float]:
    if not cfg.durations:
        return {}
    return {str(r["video_id"]): float(r["duration_s"]) for r in _read_jsonl(Path(cfg.durations))}


def cmd_ingest(cfg: Config, out: Path, annotations: str | None = None) -> int:
    path = annotations or cfg.annotations
    if not path:
        raise ConfigError("no annotation file given (--annotations or config 'annotations')")
    vocab = _vocab(cfg)
    with open(path, encoding="utf-8") as fh:
        result = ingest_annotations(fh, vocab, cfg.source_fps)
    for err in result.rejected:
        print(f"{path}:{err.line}: {err.reason}", file=sys.stderr)
    durations = _durations(cfg)
    dense: dict[str, list[EventTuple]] = {}
    clips: list[ClipManifest] = []
    for video_id in sorted(result.videos):
        tuples = broadcast_sparse_labels(result.videos[video_id], cfg.fps, cfg.half_window_s)
        dense[video_id] = tuples
        # without an explicit duration the last label is taken to cover one source period
        duration = durations.get(video_id, max(e.fn for e in result.videos[video_id]) + 1.0 / cfg.source_fps)
        clips.extend(segment_clips(duration, cfg.clip_max_s, cfg.clip_min_s, video_id, cfg.fps))
    out.mkdir(parents=True, exist_ok=True)
    n_tuples = _write_lines(out / TUPLES_FILE, emit_annotations(dense))
    _write_lines(out / CLIPS_FILE, (json.dumps(c.to_record(), sort_keys=True) for c in clips))
    print(f"records={result.n_records} accepted={result.n_accepted} rejected={len(result.rejected)} "
          f"videos={len(dense)} tuples={n_tuples} clips={len(clips)}")
    if result.reject_rate > cfg.max_reject_rate:
        print(f"reject rate {result.reject_rate:.4f} exceeds limit {cfg.max_reject_rate:.4f}", file=sys.stderr)
        return VIOLATION
    return OK


def load_store(store: Path) -> tuple[dict[str, list[EventTuple]], list[ClipManifest]]:
    videos: dict[str, list[EventTuple]] = {}
    for rec in _read_jsonl(store / TUPLES_FILE):
        videos.setdefault(rec["video_id"], []).append(EventTuple.from_record(rec))
    clips = [ClipManifest.from_record(r) for r in _read_jsonl(store / CLIPS_FILE)]
    return videos, clips


def cmd_generate(cfg: Config, out: Path, store: Path, workers: int | None = None) -> int:
    videos, manifests = load_store(store)
    gen = cfg.gen_config()
    clips = [prepare_clip(m, videos.get(m.source_video_id, []), gen.gate) for m in manifests]
    registry = load_registry(cfg.templates)
    samples, notes = generate_dataset(clips, registry, cfg.seed, _vocab(cfg), gen, workers or cfg.workers)
    out.mkdir(parents=True, exist_ok=True)
    n = emit_dataset(samples, out / DATASET_FILE)
    _write_lines(out / SHORTFALL_FILE, (dumps_record(note) for note in notes))
    for note in notes:
        log.info("shortfall %s %s: %d of %d", note["clip_id"], note["template_id"], note["produced"],
                 note["requested"])
    print(f"clips={len(clips)} samples={n} shortfalls={len(notes)}")
    return OK


def cmd_exemplars(cfg: Config, out: Path, dataset: Path, split: Path) -> int:
    samples = load_dataset(dataset)
    split_ids = json.loads(Path(split).read_text())
    train_ids, test_ids = set(split_ids.get("train", [])), set(split_ids.get("test", []))
    train = [s for s in samples if s.source_video_id in train_ids]
    test = [s for s in samples if s.source_video_id in test_ids]
    if not train:
        raise Violation("training pool is empty")
    lines = []
    fallbacks = 0
    for s in sorted(test, key=lambda s: s.sample_id):
        try:
            ex, level = retrieve_icl_exemplar(s, train, cfg.seed)
        except LookupError as exc:
            raise Violation(f"{s.sample_id}: {exc}") from None
        fallbacks += level != "subtask"
        lines.append(dumps_record({"test_id": s.sample_id, "exemplar_id": ex.sample_id, "level": level}))
    out.mkdir(parents=True, exist_ok=True)
    _write_lines(out / EXEMPLARS_FILE, lines)
    print(f"test={len(lines)} train={len(train)} core_task_fallbacks={fallbacks}")
    return OK


def _load_predictions(path: Path, known: set[str]) -> dict[str, str]:
    preds: dict[str, str] = {}
    for rec in _read_jsonl(path):
        sid = rec.get("sample_id")
        if sid is None or "output" not in rec:
            raise Violation(f"prediction record without sample_id/output: {rec!r}")
        if sid in preds:
            raise Violation(f"duplicate prediction id {sid!r}")
        if sid not in known:
            raise Violation(f"prediction id {sid!r} not in dataset")
        preds[sid] = "" if rec["output"] is None else str(rec["output"])
    return preds


def _write_report(out: Path, report, label: str) -> str:
    (out / REPORT_FILE).write_text(json.dumps(report.to_dict(), sort_keys=True, indent=2) + "\n")
    table = report.to_table(label)
    (out / TABLE_FILE).write_text(table)
    return table


def cmd_evaluate(cfg: Config, out: Path, dataset: Path, predictions: Path) -> int:
    samples = load_dataset(dataset)
    preds = _load_predictions(predictions, {s.sample_id for s in samples})
    scores, report = evaluate(samples, preds, _vocab(cfg), cfg.weights())
    out.mkdir(parents=True, exist_ok=True)
    _write_lines(out / SCORES_FILE, (dumps_record(s.to_record()) for s in scores))
    table = _write_report(out, report, predictions.stem)
    missing = len(samples) - len(preds)
    print(f"samples={len(samples)} predictions={len(preds)} missing={missing}")
    print(table, end="")
    return OK


def cmd_report(cfg: Config, out: Path | None, scores_path: Path, label: str = "model") -> int:
    scores = [SampleScore.from_record(r) for r in _read_jsonl(scores_path)]
    report = aggregate_report(scores)
    table = report.to_table(label)
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        _write_report(out, report, label)
    print(table, end="")
    return OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="stqa", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, out_required=True):
        p.add_argument("--config", help="YAML configuration file")
        p.add_argument("--seed", type=int, help="master seed (overrides the config)")
        p.add_argument("--out", required=out_required, help="output directory")

    p = sub.add_parser("ingest", help="validate, densify and clip annotation records")
    common(p)
    p.add_argument("--annotations", help="annotation file (overrides the config)")

    p = sub.add_parser("generate", help="generate the QA dataset from an ingested store")
    common(p)
    p.add_argument("--store", required=True, help="directory written by 'ingest'")
    p.add_argument("--workers", type=int, help="parallel clip workers")

    p = sub.add_parser("exemplars", help="pick one in-context exemplar per test sample")
    common(p)
    p.add_argument("--dataset", required=True)
    p.add_argument("--split", required=True, help='JSON file {"train": [video ids], "test": [video ids]}')

    p = sub.add_parser("evaluate", help="score free-text predictions against the dataset")
    common(p)
    p.add_argument("--dataset", required=True)
    p.add_argument("--predictions", required=True, help="records {sample_id, output}")

    p = sub.add_parser("report", help="print the task table for a score file")
    common(p, out_required=False)
    p.add_argument("--scores", required=True)
    p.add_argument("--label", default="model")
    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=os.environ.get("STQA_LOG_LEVEL", "WARNING").upper(),
                        format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = Config.load(args.config)
        if args.seed is not None:
            if args.seed < 0:
                raise ConfigError("seed must be non-negative")
            cfg.seed = args.seed
        out = Path(args.out) if args.out else None
        if args.command == "ingest":
            return cmd_ingest(cfg, out, args.annotations)
        if args.command == "generate":
            return cmd_generate(cfg, out, Path(args.store), args.workers)
        if args.command == "exemplars":
            return cmd_exemplars(cfg, out, Path(args.dataset), Path(args.split))
        if args.command == "evaluate":
            return cmd_evaluate(cfg, out, Path(args.dataset), Path(args.predictions))
        return cmd_report(cfg, out, Path(args.scores), args.label)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE
    except (Violation, OSError, KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return VIOLATION


if __name__ == "__main__":
    sys.exit(main())
