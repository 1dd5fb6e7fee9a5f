"""Evaluation metrics and reports for the segment model.

Three families of numbers: F1 summaries (macro / micro / weighted, with
per-class breakdowns) for the component and relation tasks, and the
major-density score that measures how much claim-confidence mass lands on
the gold major claim. Relation scores exclude the Other class; exclusion
drops every pair whose GOLD label is excluded, so errors inside Other
never move the included-class scores.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import TYPE_CHECKING, Sequence

import numpy as np

from .documents import (
    CLAIM,
    COMPONENT_CLASS_NAMES,
    REL_OTHER,
    RELATION_CLASS_NAMES,
    Document,
)
from .labels import DecodeThresholds, decode_structure, derive_labels

if TYPE_CHECKING:
    from .model import DocFeatures, SegmentModel


class EmptyGoldError(ValueError):
    """Raised when no included class has any gold support (score undefined)."""


class ConfigMismatchError(ValueError):
    """Raised when a corpus violates the constraints a model was built with."""


@dataclass(frozen=True)
class ClassScores:
    precision: float
    recall: float
    f1: float
    support: int


@dataclass(frozen=True)
class F1Summary:
    """Macro / micro / weighted F1 plus the per-class numbers behind them.

    Macro averages F1 over the included classes (zero-support classes score
    0); micro pools true/false positive counts; weighted weights per-class
    F1 by gold support.
    """

    macro: float
    micro: float
    weighted: float
    per_class: dict[str, ClassScores]


def _safe_div(num: float, den: float) -> float:
    return num / den if den > 0 else 0.0


def f1_scores(
    pred: np.ndarray,
    gold: np.ndarray,
    classes: Sequence[int],
    names: Sequence[str] | None = None,
    exclude: Sequence[int] = (),
) -> F1Summary:
    """Score predictions against gold labels over the given classes.

    Samples whose gold label is in ``exclude`` are dropped entirely; the
    excluded classes are also left out of every average. With no exclusions
    micro F1 equals plain accuracy.
    """
    pred = np.asarray(pred).ravel()
    gold = np.asarray(gold).ravel()
    if pred.shape != gold.shape:
        raise ValueError(f"prediction count {pred.shape} != gold count {gold.shape}")
    if names is None:
        names = [str(c) for c in classes]
    excluded = set(exclude)
    keep = ~np.isin(gold, list(excluded)) if excluded else np.ones(gold.shape, dtype=bool)
    pred, gold = pred[keep], gold[keep]

    included = [(c, name) for c, name in zip(classes, names) if c not in excluded]
    per_class: dict[str, ClassScores] = {}
    tp_total = fp_total = fn_total = 0
    weighted_sum = 0.0
    support_total = 0
    f1_values = []
    for c, name in included:
        tp = int(np.sum((pred == c) & (gold == c)))
        fp = int(np.sum((pred == c) & (gold != c)))
        fn = int(np.sum((pred != c) & (gold == c)))
        precision = _safe_div(tp, tp + fp)
        recall = _safe_div(tp, tp + fn)
        f1 = _safe_div(2 * precision * recall, precision + recall)
        support = tp + fn
        per_class[name] = ClassScores(precision, recall, f1, support)
        tp_total += tp
        fp_total += fp
        fn_total += fn
        f1_values.append(f1)
        weighted_sum += f1 * support
        support_total += support

    if support_total == 0:
        raise EmptyGoldError("no gold sample belongs to any included class")

    micro_p = _safe_div(tp_total, tp_total + fp_total)
    micro_r = _safe_div(tp_total, tp_total + fn_total)
    return F1Summary(
        macro=float(np.mean(f1_values)),
        micro=_safe_div(2 * micro_p * micro_r, micro_p + micro_r),
        weighted=weighted_sum / support_total,
        per_class=per_class,
    )


def major_density(conf: np.ndarray, component_gold: np.ndarray, major_gold: np.ndarray) -> float:
    """Share of claim-segment confidence mass on gold major-claim segments.

    Confidences on non-claim segments are zeroed; the result is the
    major-segment share of what remains, invariant to positive rescaling.
    """
    conf = np.asarray(conf, dtype=np.float64).ravel()
    claim_mask = np.asarray(component_gold).ravel() == CLAIM
    if not claim_mask.any():
        raise EmptyGoldError("no gold claim segment; major density undefined")
    weights = conf * claim_mask
    denominator = float(weights.sum())
    if denominator <= 0.0:
        raise EmptyGoldError("claim confidences sum to zero; major density undefined")
    numerator = float((weights * (np.asarray(major_gold).ravel() == 1)).sum())
    return numerator / denominator


# ---------------------------------------------------------------------------
# Corpus-level reports
# ---------------------------------------------------------------------------

_CONVENTIONS = {
    "relation_excluded_classes": ["other"],
    "diagonal_pairs_included": True,
    "pooling": "segments and pairs pooled across documents before scoring",
    "argmax_tie_break": "lowest class index",
}


@dataclass
class EvalReport:
    """Aggregated scores over a corpus, serializable as JSON or a text table."""

    component: F1Summary
    relation: F1Summary
    major_density: float
    num_documents: int
    num_segments: int
    num_pairs: int
    conventions: dict = field(default_factory=lambda: dict(_CONVENTIONS))
    decoded: dict | None = None

    def to_json(self) -> dict:
        return asdict(self)

    def to_text(self) -> str:
        def row(label: str, summary: F1Summary) -> str:
            return (
                f"{label:<22}{100 * summary.macro:>8.2f}{100 * summary.micro:>8.2f}"
                f"{100 * summary.weighted:>10.2f}"
            )

        lines = [
            f"{'':<22}{'Macro':>8}{'Micro':>8}{'Weighted':>10}",
            row("Component Detection", self.component),
            row("Relation Prediction", self.relation),
            f"{'Major Density':<22}{100 * self.major_density:>8.2f}",
            f"(documents: {self.num_documents}, segments: {self.num_segments}, pairs: {self.num_pairs})",
        ]
        return "\n".join(lines)


def evaluate_features(
    model: "SegmentModel",
    feats_list: Sequence["DocFeatures"],
    thresholds: DecodeThresholds | None = None,
    include_decoded: bool = False,
) -> EvalReport:
    """Score a model on pre-featurized, labeled documents.

    Component predictions are per-segment argmax; relation predictions are
    per-pair argmax over all ordered pairs, diagonal included. With
    ``include_decoded`` the dense predictions are additionally decoded into
    structures and re-labeled, scoring the end-to-end pipeline.
    """
    comp_pred_parts, comp_gold_parts = [], []
    rel_pred_parts, rel_gold_parts = [], []
    decoded_comp_parts, decoded_rel_parts = [], []
    densities = []
    num_pairs = 0
    for feats in feats_list:
        if feats.labels is None:
            raise ValueError(f"document {feats.doc_id!r} has no labels to evaluate against")
        labels = feats.labels
        predictions = model.forward(feats).to_predictions()
        comp_pred_parts.append(np.argmax(predictions.comp_probs, axis=1))
        comp_gold_parts.append(labels.component)
        rel_pred_parts.append(np.argmax(predictions.rel_probs, axis=-1).ravel())
        rel_gold_parts.append(labels.relations.ravel())
        densities.append(major_density(predictions.major_conf, labels.component, labels.major))
        num_pairs += feats.n * feats.n
        if include_decoded:
            structure = decode_structure(
                predictions.comp_probs,
                predictions.major_conf,
                predictions.rel_probs,
                thresholds or DecodeThresholds(),
            )
            decoded_labels = derive_labels(structure, feats.n)
            decoded_comp_parts.append(decoded_labels.component)
            decoded_rel_parts.append(decoded_labels.relations.ravel())

    comp_pred = np.concatenate(comp_pred_parts)
    comp_gold = np.concatenate(comp_gold_parts)
    rel_pred = np.concatenate(rel_pred_parts)
    rel_gold = np.concatenate(rel_gold_parts)
    report = EvalReport(
        component=f1_scores(comp_pred, comp_gold, (0, 1, 2), COMPONENT_CLASS_NAMES),
        relation=f1_scores(rel_pred, rel_gold, (0, 1, 2, 3), RELATION_CLASS_NAMES, exclude=(REL_OTHER,)),
        major_density=float(np.mean(densities)),
        num_documents=len(feats_list),
        num_segments=int(comp_gold.size),
        num_pairs=num_pairs,
    )
    if include_decoded:
        report.decoded = {
            "component": asdict(
                f1_scores(np.concatenate(decoded_comp_parts), comp_gold, (0, 1, 2), COMPONENT_CLASS_NAMES)
            ),
            "relation": asdict(
                f1_scores(
                    np.concatenate(decoded_rel_parts),
                    rel_gold,
                    (0, 1, 2, 3),
                    RELATION_CLASS_NAMES,
                    exclude=(REL_OTHER,),
                )
            ),
        }
    return report


def evaluate(
    model: "SegmentModel",
    docs: Sequence[Document],
    thresholds: DecodeThresholds | None = None,
    include_decoded: bool = False,
) -> EvalReport:
    """Featurize and score annotated documents, checking model compatibility."""
    bound = model.config.max_positions
    for doc in docs:
        if len(doc.segments) > bound:
            raise ConfigMismatchError(
                f"document {doc.doc_id!r} has {len(doc.segments)} segments; model supports {bound}"
            )
        last = doc.segments[-1]
        if last.paragraph_pos >= bound or last.segment_pos >= bound:
            raise ConfigMismatchError(
                f"document {doc.doc_id!r} has positions up to "
                f"({last.paragraph_pos}, {last.segment_pos}); model supports < {bound}"
            )
        if doc.annotation is None:
            raise ValueError(f"document {doc.doc_id!r} has no annotation to evaluate against")
    feats = [model.featurize(doc) for doc in docs]
    return evaluate_features(model, feats, thresholds, include_decoded)


def ablation_table(rows: Sequence[tuple[str, str, EvalReport]]) -> str:
    """Text table comparing runs; each row is (encoder label, html label, report)."""
    header = (
        f"{'Encoder':<14}{'Using HTML?':<13}"
        f"{'C-Macro':>9}{'C-Micro':>9}{'C-Weighted':>12}"
        f"{'R-Macro':>9}{'R-Micro':>9}{'R-Weighted':>12}{'Major':>8}"
    )
    lines = [header]
    for encoder, html, report in rows:
        lines.append(
            f"{encoder:<14}{html:<13}"
            f"{100 * report.component.macro:>9.2f}{100 * report.component.micro:>9.2f}"
            f"{100 * report.component.weighted:>12.2f}"
            f"{100 * report.relation.macro:>9.2f}{100 * report.relation.micro:>9.2f}"
            f"{100 * report.relation.weighted:>12.2f}{100 * report.major_density:>8.2f}"
        )
    return "\n".join(lines)


def write_report(report: EvalReport, path: str | Path) -> None:
    Path(path).write_text(json.dumps(report.to_json(), indent=2) + "\n", encoding="utf-8")
