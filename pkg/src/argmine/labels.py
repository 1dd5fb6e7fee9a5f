"""Label algebra: gold structures to per-segment targets and back.

``derive_labels`` expands an annotated structure into the three training
targets (component class, major flag, pairwise relation matrix).
``decode_structure`` reconstructs a valid structure from dense predicted
probabilities. The two are exact inverses on noiseless one-hot inputs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .documents import (
    CLAIM,
    MAX_CLAIMS,
    MAX_PREMISES_PER_CLAIM,
    NON_ARGUMENT,
    PREMISE,
    REL_AFFILIATION,
    REL_CO_OCCURRENCE,
    REL_CO_RELEVANCE,
    REL_OTHER,
    ArgumentStructure,
    Component,
)


class IndexOutOfRangeError(ValueError):
    """A component references a segment index outside the document."""


@dataclass(frozen=True, slots=True)
class RelationMatrix:
    """n x n relation labels or n x n x 4 probability rows."""

    n: int
    labels: np.ndarray | None = None
    probs: np.ndarray | None = None

    def validate(self) -> None:
        if self.labels is not None and self.labels.shape != (self.n, self.n):
            raise ValueError(f"label matrix shape {self.labels.shape} != ({self.n}, {self.n})")
        if self.probs is not None:
            if self.probs.shape != (self.n, self.n, 4):
                raise ValueError(
                    f"probability matrix shape {self.probs.shape} != ({self.n}, {self.n}, 4)"
                )
            if np.any(self.probs < 0):
                raise ValueError("relation probabilities must be non-negative")
            sums = self.probs.sum(axis=-1)
            if np.any(np.abs(sums - 1.0) > 1e-6):
                raise ValueError("relation probability rows must sum to 1 within 1e-6")

    @classmethod
    def from_labels(cls, labels: np.ndarray) -> "RelationMatrix":
        m = cls(n=labels.shape[0], labels=np.asarray(labels))
        m.validate()
        return m

    @classmethod
    def from_probs(cls, probs: np.ndarray) -> "RelationMatrix":
        m = cls(n=probs.shape[0], probs=np.asarray(probs))
        m.validate()
        return m


@dataclass(frozen=True, slots=True)
class SegmentLabels:
    """Per-segment training targets derived from a gold structure."""

    component: np.ndarray  # (n,) in {0 non-argument, 1 claim, 2 premise}
    major: np.ndarray  # (n,) in {0, 1}; 1 implies component == claim
    relations: np.ndarray  # (n, n) in {0 other, 1 affiliation, 2 co-occ, 3 co-rel}

    @property
    def n(self) -> int:
        return len(self.component)

    def validate(self) -> None:
        if np.any((self.major == 1) & (self.component != CLAIM)):
            raise ValueError("major flag set on a non-claim segment")
        diag = np.diagonal(self.relations)
        argumentative = self.component != NON_ARGUMENT
        if np.any(diag[argumentative] != REL_CO_OCCURRENCE):
            raise ValueError("argumentative segments must self-co-occur")
        if np.any(diag[~argumentative] != REL_OTHER):
            raise ValueError("non-argument diagonal entries must be Other")


def derive_labels(structure: ArgumentStructure, n: int) -> SegmentLabels:
    """Expand a gold structure into per-segment and pairwise labels.

    Relation precedence per ordered pair (i, j), first match wins:
    co-occurrence when i and j share a component (including i == j for
    argumentative segments); affiliation when i sits in a premise whose
    supported claim contains j (directional, premise to claim only; the
    reverse direction stays Other); co-relevance between siblings (two
    distinct claims, or two distinct premises supporting the same claim);
    otherwise Other.
    """
    component = np.zeros(n, dtype=np.int64)
    major = np.zeros(n, dtype=np.int64)
    comp_of = np.full(n, -1, dtype=np.int64)  # component index per segment

    for idx, comp in enumerate(structure.components):
        for seg in comp.segment_ids:
            if not 0 <= seg < n:
                raise IndexOutOfRangeError(
                    f"component {comp.id} references segment {seg} outside [0, {n})"
                )
            comp_of[seg] = idx
            component[seg] = CLAIM if comp.kind == "claim" else PREMISE
            if comp.is_major:
                major[seg] = 1

    # Per-component metadata for the pairwise rules.
    kinds = [c.kind for c in structure.components]
    target_of = {pid: cid for pid, cid in structure.supports}
    ids = [c.id for c in structure.components]
    index_of = {cid: i for i, cid in enumerate(ids)}
    supported = [
        index_of.get(target_of.get(c.id, ""), -1) if c.kind == "premise" else -1
        for c in structure.components
    ]

    relations = np.full((n, n), REL_OTHER, dtype=np.int64)
    for i in range(n):
        ci = comp_of[i]
        for j in range(n):
            cj = comp_of[j]
            if ci < 0 or cj < 0:
                continue
            if ci == cj:
                relations[i, j] = REL_CO_OCCURRENCE
            elif kinds[ci] == "premise" and supported[ci] == cj:
                relations[i, j] = REL_AFFILIATION
            elif kinds[ci] == "claim" and kinds[cj] == "claim":
                relations[i, j] = REL_CO_RELEVANCE
            elif (
                kinds[ci] == "premise"
                and kinds[cj] == "premise"
                and supported[ci] == supported[cj]
                and supported[ci] >= 0
            ):
                relations[i, j] = REL_CO_RELEVANCE
    return SegmentLabels(component=component, major=major, relations=relations)


@dataclass(frozen=True, slots=True)
class SegmentPredictions:
    """Dense per-segment model outputs for one document."""

    comp_probs: np.ndarray  # (n, 3)
    major_conf: np.ndarray  # (n,)
    rel_probs: np.ndarray  # (n, n, 4)

    @property
    def n(self) -> int:
        return len(self.major_conf)


def one_hot_predictions(labels: SegmentLabels) -> SegmentPredictions:
    """Turn gold labels into noiseless probability predictions."""
    n = labels.n
    comp = np.zeros((n, 3))
    comp[np.arange(n), labels.component] = 1.0
    rel = np.zeros((n, n, 4))
    ii, jj = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    rel[ii, jj, labels.relations] = 1.0
    return SegmentPredictions(
        comp_probs=comp, major_conf=labels.major.astype(float), rel_probs=rel
    )


@dataclass(frozen=True, slots=True)
class DecodeThresholds:
    """Reconstruction thresholds; chosen so the noiseless round trip is exact."""

    tau_occ: float = 0.5
    tau_aff: float = 0.3
    tau_claim: float = 0.5

    def __post_init__(self) -> None:
        for name in ("tau_occ", "tau_aff", "tau_claim"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must be a probability, got {value}")


def _single_linkage(members: list[int], sym_occ: np.ndarray, tau: float) -> list[list[int]]:
    """Cluster ``members`` by union-find over pairs with co-occurrence >= tau."""
    parent = {i: i for i in members}

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for a_idx, i in enumerate(members):
        for j in members[a_idx + 1 :]:
            if sym_occ[i, j] >= tau:
                ri, rj = find(i), find(j)
                if ri != rj:
                    parent[max(ri, rj)] = min(ri, rj)
    clusters: dict[int, list[int]] = {}
    for i in members:
        clusters.setdefault(find(i), []).append(i)
    return [sorted(c) for c in sorted(clusters.values(), key=min)]


def decode_structure(
    comp_probs: np.ndarray,
    major_conf: np.ndarray,
    rel_probs: np.ndarray,
    thresholds: DecodeThresholds = DecodeThresholds(),
) -> ArgumentStructure:
    """Reconstruct a valid argument structure from dense predictions.

    Steps: argmax component classes (ties to the lowest class index);
    single-linkage clustering of argumentative segments on symmetrized
    co-occurrence probability; clusters mixing the two kinds split into a
    claim part and a premise part; premise clusters attach to the claim
    cluster with the highest mean premise-to-claim affiliation probability,
    orphans relabeling to claims when their mean claim probability beats
    ``tau_claim`` (else non-argument); at most 4 premises per claim and 9
    claims overall, excess demoted to non-argument; the major claim is the
    claim cluster with the highest mean major confidence.

    When no segment is classified as a claim, returns the degenerate
    fallback: a single claim holding the highest claim-probability segment,
    flagged "degenerate".
    """
    classes = np.argmax(comp_probs, axis=1)  # np.argmax breaks ties toward index 0

    if not np.any(classes == CLAIM):
        best = int(np.argmax(comp_probs[:, CLAIM]))
        return ArgumentStructure(
            components=(Component(id="c0", kind="claim", segment_ids=(best,), is_major=True),),
            supports=(),
            flags=("degenerate",),
        )

    sym_occ = 0.5 * (rel_probs[:, :, REL_CO_OCCURRENCE] + rel_probs[:, :, REL_CO_OCCURRENCE].T)
    argumentative = sorted(np.flatnonzero(classes != NON_ARGUMENT).tolist())
    raw_clusters = _single_linkage(argumentative, sym_occ, thresholds.tau_occ)

    claim_clusters: list[list[int]] = []
    premise_clusters: list[list[int]] = []
    for cluster in raw_clusters:
        claim_part = [i for i in cluster if classes[i] == CLAIM]
        premise_part = [i for i in cluster if classes[i] == PREMISE]
        if claim_part:
            claim_clusters.append(claim_part)
        if premise_part:
            premise_clusters.append(premise_part)

    # Attach premise clusters to claim clusters by mean affiliation.
    attachments: list[tuple[int, int, float]] = []  # (premise idx, claim idx, score)
    for p_idx, p_cluster in enumerate(premise_clusters):
        scores = [
            float(np.mean(rel_probs[np.ix_(p_cluster, c_cluster)][:, :, REL_AFFILIATION]))
            for c_cluster in claim_clusters
        ]
        best_c = int(np.argmax(scores))
        if scores[best_c] >= thresholds.tau_aff:
            attachments.append((p_idx, best_c, scores[best_c]))
        elif float(np.mean(comp_probs[p_cluster, CLAIM])) >= thresholds.tau_claim:
            claim_clusters.append(p_cluster)  # orphan relabeled as a claim
        # else: orphan demoted to non-argument (left out of the structure)

    # At most 4 premises per claim: keep the highest-scoring attachments.
    by_claim: dict[int, list[tuple[int, int, float]]] = {}
    for att in attachments:
        by_claim.setdefault(att[1], []).append(att)
    kept_attachments: list[tuple[int, int, float]] = []
    for _, atts in sorted(by_claim.items()):
        atts.sort(key=lambda a: (-a[2], a[0]))
        kept_attachments.extend(atts[:MAX_PREMISES_PER_CLAIM])

    # At most 9 claims: demote the lowest-support claims (fewest premises,
    # then lowest mean claim probability) and their premises to non-argument.
    if len(claim_clusters) > MAX_CLAIMS:
        premise_count = {c_idx: 0 for c_idx in range(len(claim_clusters))}
        for _, c_idx, _ in kept_attachments:
            premise_count[c_idx] += 1
        order = sorted(
            range(len(claim_clusters)),
            key=lambda c: (
                -premise_count[c],
                -float(np.mean(comp_probs[claim_clusters[c], CLAIM])),
                min(claim_clusters[c]),
            ),
        )
        keep = sorted(order[:MAX_CLAIMS])
        claim_index_map = {old: new for new, old in enumerate(keep)}
        kept_attachments = [
            (p_idx, claim_index_map[c_idx], score)
            for p_idx, c_idx, score in kept_attachments
            if c_idx in claim_index_map
        ]
        claim_clusters = [claim_clusters[c] for c in keep]

    # Major claim: highest mean major confidence; ties to the earliest cluster.
    major_scores = [float(np.mean(major_conf[c])) for c in claim_clusters]
    major_idx = int(np.argmax(major_scores))

    components: list[Component] = []
    supports: list[tuple[str, str]] = []
    for c_idx, cluster in enumerate(claim_clusters):
        components.append(
            Component(
                id=f"c{c_idx}",
                kind="claim",
                segment_ids=tuple(sorted(cluster)),
                is_major=c_idx == major_idx,
            )
        )
    for k, (p_idx, c_idx, _) in enumerate(sorted(kept_attachments, key=lambda a: min(premise_clusters[a[0]]))):
        components.append(
            Component(id=f"p{k}", kind="premise", segment_ids=tuple(sorted(premise_clusters[p_idx])))
        )
        supports.append((f"p{k}", f"c{c_idx}"))

    return ArgumentStructure(components=tuple(components), supports=tuple(supports))


def structures_equivalent(a: ArgumentStructure, b: ArgumentStructure) -> bool:
    """Compare two structures up to component-id renaming."""

    def canonical(s: ArgumentStructure):
        claim_key = {}
        for c in s.claims():
            claim_key[c.id] = tuple(sorted(c.segment_ids))
        claims = sorted((key, c.is_major) for c in s.claims() for key in [claim_key[c.id]])
        premises = sorted(
            (tuple(sorted(p.segment_ids)), claim_key.get(s.supported_claim_id(p.id) or "", ()))
            for p in s.premises()
        )
        return claims, premises

    return canonical(a) == canonical(b)
