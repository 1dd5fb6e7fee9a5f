#!/usr/bin/env python3
"""Train the segment model with and without visual features and tabulate the gap.

Generates (or loads) an annotated corpus, splits it 80/10/10, trains one
model per (seed, use_html) cell, scores each on the held-out test split,
and prints a comparison table plus the per-seed weighted-F1 margins.

Example:
    python3 scripts/run_html_ablation.py --num-docs 1000 --seeds 0 1 2 \
        --out runs/ablation
"""

from __future__ import annotations

import argparse
import json
import time
from pathlib import Path

from argmine.documents import read_corpus
from argmine.evaluation import ablation_table, evaluate, write_report
from argmine.model import ModelConfig
from argmine.synth import GeneratorPriors, generate
from argmine.training import TrainConfig, fit


def parse_args() -> argparse.Namespace:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--corpus", type=Path, default=None,
                        help="annotated JSONL corpus; omitted: generate synthetically")
    parser.add_argument("--num-docs", type=int, default=1000)
    parser.add_argument("--signal", type=float, default=0.7)
    parser.add_argument("--corpus-seed", type=int, default=0)
    parser.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2])
    parser.add_argument("--encoder", default="bigru", choices=["mlp", "bigru", "transformer"])
    parser.add_argument("--relation-head", default="muladd", choices=["muladd", "biaffine"])
    parser.add_argument("--d", type=int, default=384)
    parser.add_argument("--epochs", type=int, default=15)
    parser.add_argument("--batch-size", type=int, default=16)
    parser.add_argument("--lr-max", type=float, default=1e-4)
    parser.add_argument("--out", type=Path, default=None, help="directory for per-run reports")
    return parser.parse_args()


def main() -> int:
    args = parse_args()
    if args.corpus is not None:
        docs = read_corpus(args.corpus)
    else:
        docs = generate(args.num_docs, GeneratorPriors(signal=args.signal), seed=args.corpus_seed)
    n = len(docs)
    train_docs = docs[: int(0.8 * n)]
    val_docs = docs[int(0.8 * n) : int(0.9 * n)]
    test_docs = docs[int(0.9 * n) :]
    print(f"{n} documents: {len(train_docs)} train / {len(val_docs)} val / {len(test_docs)} test")

    if args.out is not None:
        args.out.mkdir(parents=True, exist_ok=True)

    rows = []
    margins = {}
    for seed in args.seeds:
        scores = {}
        for use_html in (True, False):
            model_config = ModelConfig(
                d=args.d,
                encoder_kind=args.encoder,
                relation_head=args.relation_head,
                use_html=use_html,
            )
            train_config = TrainConfig(
                epochs=args.epochs, batch_size=args.batch_size, lr_max=args.lr_max, seed=seed
            )
            tag = f"seed{seed}-{'html' if use_html else 'text'}"
            started = time.time()
            result = fit(train_docs, val_docs, model_config, train_config)
            report = evaluate(result.model, test_docs)
            minutes = (time.time() - started) / 60
            scores[use_html] = report.component.weighted
            rows.append((f"{args.encoder}/s{seed}", "yes" if use_html else "no", report))
            print(f"{tag}: weighted component F1 {report.component.weighted:.4f} "
                  f"(best epoch {result.best_epoch}, {minutes:.1f} min)")
            if args.out is not None:
                write_report(report, args.out / f"{tag}.json")
        margins[seed] = scores[True] - scores[False]

    print()
    print(ablation_table(rows))
    print()
    for seed, margin in margins.items():
        print(f"seed {seed}: html margin {margin:+.4f}")
    if args.out is not None:
        (args.out / "margins.json").write_text(json.dumps(margins, indent=2), encoding="utf-8")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
