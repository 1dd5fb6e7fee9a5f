"""Document, annotation, and label types shared across the pipeline.

A document is an ordered list of text segments, each carrying six binary
style marks and a (paragraph, segment) position pair. Annotations group
segments into claim/premise components, mark one claim as major, and link
every premise to exactly one claim. All types are immutable after
construction and safe to share across threads.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Iterator

log = logging.getLogger(__name__)

# Component classes for per-segment labels.
NON_ARGUMENT, CLAIM, PREMISE = 0, 1, 2
COMPONENT_CLASS_NAMES = ("non_argument", "claim", "premise")

# Pairwise relation classes.
REL_OTHER, REL_AFFILIATION, REL_CO_OCCURRENCE, REL_CO_RELEVANCE = 0, 1, 2, 3
RELATION_CLASS_NAMES = ("other", "affiliation", "co_occurrence", "co_relevance")

# Annotation bounds: a document carries 1..9 claims, each supported by at
# most 4 premises.
MAX_CLAIMS = 9
MAX_PREMISES_PER_CLAIM = 4

# Position-vocabulary size: paragraph/segment indices must stay below this.
DEFAULT_MAX_SEGMENTS = 400

MARK_NAMES = ("font", "strong", "color", "blockquote", "supertalk", "header")


@dataclass(frozen=True, slots=True)
class StyleMarks:
    """Six binary style indicators attached to a segment.

    Serializes to the fixed-order binary vector
    (font, strong, color, blockquote, supertalk, header).
    """

    font: bool = False
    strong: bool = False
    color: bool = False
    blockquote: bool = False
    supertalk: bool = False
    header: bool = False

    def to_vector(self) -> tuple[int, ...]:
        return tuple(int(getattr(self, name)) for name in MARK_NAMES)

    @classmethod
    def from_vector(cls, vector: Iterable[int]) -> "StyleMarks":
        values = [bool(v) for v in vector]
        if len(values) != len(MARK_NAMES):
            raise ValueError(f"expected {len(MARK_NAMES)} mark flags, got {len(values)}")
        return cls(**dict(zip(MARK_NAMES, values)))

    def __or__(self, other: "StyleMarks") -> "StyleMarks":
        return StyleMarks(
            **{name: getattr(self, name) or getattr(other, name) for name in MARK_NAMES}
        )

    def any(self) -> bool:
        return any(self.to_vector())


@dataclass(frozen=True, slots=True)
class Segment:
    """One sentence-level text unit: the model's atomic prediction unit."""

    text: str
    marks: StyleMarks = StyleMarks()
    paragraph_pos: int = 0
    segment_pos: int = 0

    def __post_init__(self) -> None:
        if not self.text.strip():
            raise ValueError("segment text must be non-empty after whitespace trim")
        if self.paragraph_pos < 0 or self.segment_pos < 0:
            raise ValueError(
                f"positions must be >= 0, got ({self.paragraph_pos}, {self.segment_pos})"
            )


@dataclass(frozen=True, slots=True)
class Component:
    """A claim or premise: a group of (possibly non-adjacent) segments."""

    id: str
    kind: str  # "claim" | "premise"
    segment_ids: tuple[int, ...]
    is_major: bool = False

    def __post_init__(self) -> None:
        if self.kind not in ("claim", "premise"):
            raise ValueError(f"component kind must be 'claim' or 'premise', got {self.kind!r}")
        if not self.segment_ids:
            raise ValueError(f"component {self.id!r} has no segments")


@dataclass(frozen=True, slots=True)
class ArgumentStructure:
    """Gold or decoded argument structure over a document's segments.

    ``supports`` holds (premise_id, claim_id) pairs; every premise appears
    in exactly one pair. ``flags`` carries in-memory diagnostics (e.g. from
    degenerate decoding) and is never serialized.
    """

    components: tuple[Component, ...]
    supports: tuple[tuple[str, str], ...] = ()
    flags: tuple[str, ...] = ()

    def claims(self) -> tuple[Component, ...]:
        return tuple(c for c in self.components if c.kind == "claim")

    def premises(self) -> tuple[Component, ...]:
        return tuple(c for c in self.components if c.kind == "premise")

    def component_by_id(self, component_id: str) -> Component:
        for c in self.components:
            if c.id == component_id:
                return c
        raise KeyError(component_id)

    def major_claim(self) -> Component | None:
        for c in self.components:
            if c.kind == "claim" and c.is_major:
                return c
        return None

    def supported_claim_id(self, premise_id: str) -> str | None:
        for pid, cid in self.supports:
            if pid == premise_id:
                return cid
        return None


@dataclass(frozen=True, slots=True)
class Document:
    """An ingested document: ordered segments plus optional annotation.

    Construction rejects empty documents and enforces that
    (paragraph_pos, segment_pos) pairs are unique and ordered by segment
    sequence. The position-vocabulary bound (n <= N) is enforced at
    ingestion via :func:`truncate_document`, never silently mid-pipeline.
    """

    doc_id: str
    segments: tuple[Segment, ...]
    annotation: ArgumentStructure | None = None
    warnings: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if not self.segments:
            raise ValueError(f"document {self.doc_id!r} has no segments")
        positions = [(s.paragraph_pos, s.segment_pos) for s in self.segments]
        for prev, cur in zip(positions, positions[1:]):
            if cur <= prev:
                raise ValueError(
                    f"document {self.doc_id!r}: positions must be strictly "
                    f"increasing in segment order, got {prev} then {cur}"
                )

    def __len__(self) -> int:
        return len(self.segments)


def validate_structure(doc: Document) -> list[str]:
    """Check every annotation invariant; return one description per violation.

    Violations are data, not failures: an empty list means the annotation is
    valid. Requires ``doc.annotation`` to be present.
    """
    if doc.annotation is None:
        raise ValueError(f"document {doc.doc_id!r} has no annotation to validate")
    structure = doc.annotation
    n = len(doc.segments)
    violations: list[str] = []

    seen_ids: set[str] = set()
    for comp in structure.components:
        if comp.id in seen_ids:
            violations.append(f"duplicate component id {comp.id}")
        seen_ids.add(comp.id)

    claims = structure.claims()
    premises = structure.premises()
    if len(claims) < 1:
        violations.append("claim count 0 < 1")
    if len(claims) > MAX_CLAIMS:
        violations.append(f"claim count {len(claims)} > {MAX_CLAIMS}")

    majors = [c for c in claims if c.is_major]
    if len(majors) != 1:
        violations.append(f"major claim count {len(majors)} != 1")
    for comp in premises:
        if comp.is_major:
            violations.append(f"premise {comp.id} flagged major")

    used_segments: dict[int, str] = {}
    for comp in structure.components:
        for seg_id in comp.segment_ids:
            if not 0 <= seg_id < n:
                violations.append(
                    f"segment id {seg_id} out of range [0, {n}) in component {comp.id}"
                )
            elif seg_id in used_segments:
                violations.append(
                    f"segment {seg_id} shared by components {used_segments[seg_id]} and {comp.id}"
                )
            else:
                used_segments[seg_id] = comp.id

    claim_ids = {c.id for c in claims}
    premise_ids = {p.id for p in premises}
    support_counts: dict[str, int] = {p: 0 for p in premise_ids}
    premises_per_claim: dict[str, int] = {c: 0 for c in claim_ids}
    for pid, cid in structure.supports:
        if pid in claim_ids:
            violations.append(f"claim {pid} appears as a support source")
            continue
        if pid not in premise_ids:
            violations.append(f"support source {pid} is not a known premise")
            continue
        if cid not in claim_ids:
            violations.append(f"support target {cid} is not a known claim")
            continue
        support_counts[pid] += 1
        premises_per_claim[cid] += 1

    for pid, count in sorted(support_counts.items()):
        if count != 1:
            violations.append(f"premise {pid} appears in {count} support links, expected 1")
    for cid, count in sorted(premises_per_claim.items()):
        if count > MAX_PREMISES_PER_CLAIM:
            violations.append(
                f"premise count {count} > {MAX_PREMISES_PER_CLAIM} for claim {cid}"
            )

    return violations


def truncate_document(doc: Document, max_segments: int = DEFAULT_MAX_SEGMENTS) -> Document:
    """Keep the first ``max_segments`` segments, dropping affected annotations.

    Components referencing any dropped segment are removed along with their
    support links (and the premises supporting a dropped claim). If no claim
    survives, the whole annotation is dropped. A truncation warning is
    recorded on the document either way.
    """
    if len(doc.segments) <= max_segments:
        return doc
    segments = doc.segments[:max_segments]
    warning = f"truncated from {len(doc.segments)} to {max_segments} segments"
    annotation = doc.annotation
    if annotation is not None:
        kept = tuple(
            c for c in annotation.components if all(s < max_segments for s in c.segment_ids)
        )
        kept_ids = {c.id for c in kept}
        supports = tuple(
            (pid, cid) for pid, cid in annotation.supports if pid in kept_ids and cid in kept_ids
        )
        # A premise whose claim was dropped dangles; drop it too.
        supported = {pid for pid, _ in supports}
        kept = tuple(c for c in kept if c.kind == "claim" or c.id in supported)
        if any(c.kind == "claim" for c in kept):
            annotation = ArgumentStructure(components=kept, supports=supports)
        else:
            annotation = None
            warning += "; annotation dropped (no claim survived)"
    return Document(
        doc_id=doc.doc_id,
        segments=segments,
        annotation=annotation,
        warnings=doc.warnings + (warning,),
    )


# ---------------------------------------------------------------------------
# JSONL corpus format
# ---------------------------------------------------------------------------

_DOC_FIELDS = {"doc_id", "segments", "annotation"}
_SEGMENT_FIELDS = {"text", "marks", "para", "seg"}
_COMPONENT_FIELDS = {"id", "kind", "segments", "major"}


def document_to_json(doc: Document) -> dict:
    out: dict = {
        "doc_id": doc.doc_id,
        "segments": [
            {
                "text": s.text,
                "marks": dict(zip(MARK_NAMES, s.marks.to_vector())),
                "para": s.paragraph_pos,
                "seg": s.segment_pos,
            }
            for s in doc.segments
        ],
    }
    if doc.annotation is not None:
        out["annotation"] = {
            "components": [
                {
                    "id": c.id,
                    "kind": c.kind,
                    "segments": list(c.segment_ids),
                    "major": c.is_major,
                }
                for c in doc.annotation.components
            ],
            "supports": [[pid, cid] for pid, cid in doc.annotation.supports],
        }
    return out


def _warn_unknown(record: dict, known: set[str], where: str, warnings: list[str]) -> None:
    for key in record:
        if key not in known:
            warnings.append(f"ignored unknown field {key!r} in {where}")


def document_from_json(record: dict) -> Document:
    """Parse one corpus record. Unknown fields are ignored with a warning."""
    warnings: list[str] = []
    _warn_unknown(record, _DOC_FIELDS, "document", warnings)
    segments = []
    for raw in record["segments"]:
        _warn_unknown(raw, _SEGMENT_FIELDS, "segment", warnings)
        marks_raw = raw.get("marks", {})
        marks = StyleMarks(**{name: bool(marks_raw.get(name, 0)) for name in MARK_NAMES})
        for key in marks_raw:
            if key not in MARK_NAMES:
                warnings.append(f"ignored unknown mark {key!r}")
        segments.append(
            Segment(
                text=raw["text"],
                marks=marks,
                paragraph_pos=int(raw["para"]),
                segment_pos=int(raw["seg"]),
            )
        )
    annotation = None
    if record.get("annotation") is not None:
        raw_ann = record["annotation"]
        _warn_unknown(raw_ann, {"components", "supports"}, "annotation", warnings)
        components = []
        for raw in raw_ann.get("components", []):
            _warn_unknown(raw, _COMPONENT_FIELDS, "component", warnings)
            components.append(
                Component(
                    id=str(raw["id"]),
                    kind=str(raw["kind"]).lower(),
                    segment_ids=tuple(int(i) for i in raw["segments"]),
                    is_major=bool(raw.get("major", False)),
                )
            )
        supports = tuple(
            (str(pid), str(cid)) for pid, cid in raw_ann.get("supports", [])
        )
        annotation = ArgumentStructure(components=tuple(components), supports=supports)
    for message in warnings:
        log.warning("%s: %s", record.get("doc_id", "<unknown>"), message)
    return Document(
        doc_id=str(record["doc_id"]),
        segments=tuple(segments),
        annotation=annotation,
        warnings=tuple(warnings),
    )


def write_corpus(docs: Iterable[Document], path: str | Path) -> None:
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        for doc in docs:
            fh.write(json.dumps(document_to_json(doc), ensure_ascii=False) + "\n")


def read_corpus(path: str | Path) -> list[Document]:
    return list(iter_corpus(path))


def iter_corpus(path: str | Path) -> Iterator[Document]:
    path = Path(path)
    with path.open("r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                yield document_from_json(json.loads(line))


def with_annotation(doc: Document, annotation: ArgumentStructure | None) -> Document:
    return replace(doc, annotation=annotation)
