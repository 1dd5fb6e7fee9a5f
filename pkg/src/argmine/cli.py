"""Command-line entry points.

Subcommands cover the whole pipeline: ``ingest`` (HTML to corpus),
``synth`` (generate a synthetic corpus), ``train``, ``eval``, ``predict``
(checkpoint to dense per-document probabilities), and ``decode`` (dense
probabilities to argument structures).
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from pathlib import Path

from . import documents, synth
from .documents import Document, read_corpus, write_corpus
from .evaluation import evaluate, write_report
from .ingest import IngestConfig, parse_html
from .labels import DecodeThresholds, decode_structure
from .model import ModelConfig, SegmentModel
from .training import DivergedError, TrainConfig, fit

log = logging.getLogger(__name__)


def _parse_bool(value: str) -> bool:
    lowered = value.strip().lower()
    if lowered in ("true", "1", "yes"):
        return True
    if lowered in ("false", "0", "no"):
        return False
    raise argparse.ArgumentTypeError(f"expected true or false, got {value!r}")


# -- ingest ------------------------------------------------------------------


def _cmd_ingest(args: argparse.Namespace) -> int:
    config = IngestConfig(max_segments=args.max_segments)
    source = Path(args.input)
    docs: list[Document] = []
    if source.suffix == ".jsonl":
        with source.open("r", encoding="utf-8") as fh:
            for line_no, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                record = json.loads(line)
                try:
                    docs.append(parse_html(record["html"], str(record["doc_id"]), config))
                except ValueError as exc:
                    log.warning("line %d skipped: %s", line_no, exc)
    else:
        docs.append(parse_html(source.read_text(encoding="utf-8"), source.stem, config))
    write_corpus(docs, args.out)
    flagged = sum(1 for d in docs if d.warnings)
    print(f"ingested {len(docs)} documents to {args.out} ({flagged} with warnings)")
    return 0


# -- synth -------------------------------------------------------------------


def _cmd_synth(args: argparse.Namespace) -> int:
    priors = dataclasses.replace(
        synth.GeneratorPriors(), signal=args.signal, interleave=args.interleave
    )
    docs = synth.generate(args.docs, priors, seed=args.seed)
    write_corpus(docs, args.out)
    print(f"wrote {len(docs)} synthetic documents to {args.out}")
    return 0


# -- train -------------------------------------------------------------------


def _cmd_train(args: argparse.Namespace) -> int:
    train_docs = read_corpus(args.corpus)
    if args.val_corpus:
        val_docs = read_corpus(args.val_corpus)
    else:
        # Hold out a trailing slice for best-checkpoint selection.
        held = max(1, len(train_docs) // 10)
        if len(train_docs) <= held:
            raise SystemExit("corpus too small to hold out validation documents; pass --val-corpus")
        train_docs, val_docs = train_docs[:-held], train_docs[-held:]
        log.info("held out last %d documents for validation", held)

    model_config = ModelConfig(
        d=args.d,
        encoder_kind=args.encoder,
        relation_head=args.rel_head,
        use_html=args.use_html,
    )
    train_config = TrainConfig(
        epochs=args.epochs,
        batch_size=args.batch_size,
        lr_max=args.lr_max,
        seed=args.seed,
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    try:
        result = fit(
            train_docs,
            val_docs,
            model_config,
            train_config,
            checkpoint_dir=out / "best",
            log_path=out / "metrics.jsonl",
        )
    except DivergedError as exc:
        print(f"training diverged: {exc}; best checkpoint so far kept at {out / 'best'}")
        return 1
    print(
        f"trained {args.epochs} epochs on {len(train_docs)} documents; "
        f"best epoch {result.best_epoch} (weighted component F1 {result.best_score:.4f}); "
        f"checkpoint at {out / 'best'}"
    )
    return 0


# -- eval --------------------------------------------------------------------


def _cmd_eval(args: argparse.Namespace) -> int:
    model = SegmentModel.load(args.ckpt)
    docs = read_corpus(args.corpus)
    report = evaluate(model, docs, include_decoded=args.decoded)
    write_report(report, args.report)
    print(report.to_text())
    print(f"report written to {args.report}")
    return 0


# -- predict -----------------------------------------------------------------


def _cmd_predict(args: argparse.Namespace) -> int:
    model = SegmentModel.load(args.ckpt)
    count = 0
    with Path(args.out).open("w", encoding="utf-8") as fh:
        for doc in documents.iter_corpus(args.corpus):
            preds = model.predict(doc)
            record = {
                "doc_id": doc.doc_id,
                "component": preds.comp_probs.tolist(),
                "major": preds.major_conf.tolist(),
                "relation": preds.rel_probs.tolist(),
            }
            fh.write(json.dumps(record) + "\n")
            count += 1
    print(f"wrote predictions for {count} documents to {args.out}")
    return 0


# -- decode ------------------------------------------------------------------


def _cmd_decode(args: argparse.Namespace) -> int:
    import numpy as np

    thresholds = DecodeThresholds(
        tau_occ=args.tau_occ, tau_aff=args.tau_aff, tau_claim=args.tau_claim
    )
    count = 0
    with Path(args.pred).open("r", encoding="utf-8") as src, Path(args.out).open(
        "w", encoding="utf-8"
    ) as dst:
        for line in src:
            line = line.strip()
            if not line:
                continue
            record = json.loads(line)
            structure = decode_structure(
                np.asarray(record["component"], dtype=np.float64),
                np.asarray(record["major"], dtype=np.float64),
                np.asarray(record["relation"], dtype=np.float64),
                thresholds,
            )
            out = {
                "doc_id": record["doc_id"],
                "components": [
                    {
                        "id": c.id,
                        "kind": c.kind,
                        "segments": list(c.segment_ids),
                        "major": c.is_major,
                    }
                    for c in structure.components
                ],
                "supports": [[pid, cid] for pid, cid in structure.supports],
            }
            if structure.flags:
                out["flags"] = list(structure.flags)
            dst.write(json.dumps(out) + "\n")
            count += 1
    print(f"decoded {count} documents to {args.out}")
    return 0


# -- parser ------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="argmine", description="Argument mining over visually rich documents."
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="log at INFO level")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="parse raw HTML into a JSONL corpus")
    p.add_argument("--in", dest="input", required=True, help="HTML file or JSONL of {doc_id, html}")
    p.add_argument("--out", required=True, help="output corpus JSONL path")
    p.add_argument("--max-segments", type=int, default=documents.DEFAULT_MAX_SEGMENTS)
    p.set_defaults(func=_cmd_ingest)

    p = sub.add_parser("synth", help="generate a synthetic annotated corpus")
    p.add_argument("--docs", type=int, default=1000)
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--signal", type=float, default=0.8)
    p.add_argument("--interleave", type=float, default=0.3)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("train", help="train a segment model")
    p.add_argument("--corpus", required=True, help="annotated training corpus JSONL")
    p.add_argument("--val-corpus", help="validation corpus; defaults to a 10%% holdout")
    p.add_argument("--encoder", choices=("bigru", "transformer", "mlp"), default="bigru")
    p.add_argument("--rel-head", choices=("muladd", "biaffine"), default="muladd")
    p.add_argument("--use-html", type=_parse_bool, default=True, metavar="true|false")
    p.add_argument("--out", required=True, help="run directory for checkpoint and metrics")
    p.add_argument("--d", type=int, default=384, help="model width")
    p.add_argument("--epochs", type=int, default=15)
    p.add_argument("--batch-size", type=int, default=16)
    p.add_argument("--lr-max", type=float, default=1e-4)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("eval", help="score a checkpoint on an annotated corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--ckpt", required=True, help="checkpoint directory")
    p.add_argument("--report", required=True, help="output report JSON path")
    p.add_argument("--decoded", action="store_true", help="also score decoded structures")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("predict", help="write dense per-document probabilities")
    p.add_argument("--corpus", required=True)
    p.add_argument("--ckpt", required=True)
    p.add_argument("--out", required=True, help="output predictions JSONL path")
    p.set_defaults(func=_cmd_predict)

    p = sub.add_parser("decode", help="decode dense probabilities into structures")
    p.add_argument("--pred", required=True, help="predictions JSONL from `predict`")
    p.add_argument("--out", required=True, help="output structures JSONL path")
    p.add_argument("--tau-occ", type=float, default=0.5)
    p.add_argument("--tau-aff", type=float, default=0.3)
    p.add_argument("--tau-claim", type=float, default=0.5)
    p.set_defaults(func=_cmd_decode)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
