"""Synthetic annotated-corpus generator.

Documents are built constructively: sample a claim/premise forest within
the annotation bounds, give every segment class-correlated pseudo-word
text, scatter component segments with an interleave shuffle, and sample
style marks with elevated font/strong rates on claim segments. The result
is always a valid annotated document, and the global mark frequencies
match the configured priors in expectation (claim boosts are compensated
by analytically derived base rates).

Text is deliberately synthetic: three disjoint pseudo-word pools (claim,
premise, filler). The ``signal`` dial sets the probability that a content
segment draws from its class pool instead of the filler pool, which fixes
how much of the task is solvable from text alone; style marks keep their
class correlation regardless, so visual features carry complementary
signal.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .documents import (
    CLAIM,
    MAX_CLAIMS,
    MAX_PREMISES_PER_CLAIM,
    NON_ARGUMENT,
    PREMISE,
    ArgumentStructure,
    Component,
    Document,
    Segment,
    StyleMarks,
)

_CLAIM_POOL = tuple(f"op{i:03d}" for i in range(160))
_PREMISE_POOL = tuple(f"fa{i:03d}" for i in range(160))
_FILLER_POOL = tuple(f"zz{i:03d}" for i in range(240))
_TERMINALS = ("。", "！", "？")
_TERMINAL_WEIGHTS = (0.8, 0.1, 0.1)

# Sampling caps keep documents inside the position vocabulary (worst case
# 9*6 + 9*4*8 + 16 = 358 segments) without visibly distorting the means.
_MAX_SEGS_PER_CLAIM = 6
_MAX_SEGS_PER_PREMISE = 8
_MAX_NOISE_SEGMENTS = 16
_INTERLEAVE_PASSES = 3


class InvalidPriorsError(ValueError):
    """Raised when generator priors are inconsistent or out of range."""


@dataclass(frozen=True)
class GeneratorPriors:
    """Statistical knobs of the generator.

    Count fields are means of (shifted) Poisson draws; mark fields are the
    target global per-segment frequencies. ``claim_font_rate`` and
    ``claim_strong_rate`` are the elevated rates on claim segments; the
    implied base rates on non-claim segments are derived so the global
    frequencies still match.
    """

    claims_per_doc_mean: float = 2.3
    premises_per_claim_mean: float = 1.2
    segments_per_claim_mean: float = 2.0
    segments_per_premise_mean: float = 3.2
    chars_per_segment_mean: float = 22.5
    noise_segments_mean: float = 3.0
    interleave: float = 0.3
    signal: float = 0.7
    paragraph_break: float = 0.35
    font: float = 0.17
    strong: float = 0.10
    color: float = 0.07
    blockquote: float = 0.01
    supertalk: float = 0.006
    header: float = 0.005
    claim_font_rate: float = 0.35
    claim_strong_rate: float = 0.30

    def __post_init__(self) -> None:
        probabilities = {
            "interleave": self.interleave,
            "signal": self.signal,
            "paragraph_break": self.paragraph_break,
            "font": self.font,
            "strong": self.strong,
            "color": self.color,
            "blockquote": self.blockquote,
            "supertalk": self.supertalk,
            "header": self.header,
            "claim_font_rate": self.claim_font_rate,
            "claim_strong_rate": self.claim_strong_rate,
        }
        for name, value in probabilities.items():
            if not 0.0 <= value <= 1.0:
                raise InvalidPriorsError(f"{name} must be a probability, got {value}")
        means = {
            "claims_per_doc_mean": (self.claims_per_doc_mean, 1.0, MAX_CLAIMS),
            "premises_per_claim_mean": (self.premises_per_claim_mean, 0.0, MAX_PREMISES_PER_CLAIM),
            "segments_per_claim_mean": (self.segments_per_claim_mean, 1.0, _MAX_SEGS_PER_CLAIM),
            "segments_per_premise_mean": (self.segments_per_premise_mean, 1.0, _MAX_SEGS_PER_PREMISE),
            "chars_per_segment_mean": (self.chars_per_segment_mean, 6.0, 120.0),
            "noise_segments_mean": (self.noise_segments_mean, 0.0, _MAX_NOISE_SEGMENTS),
        }
        for name, (value, low, high) in means.items():
            if not low <= value <= high:
                raise InvalidPriorsError(f"{name} must be in [{low}, {high}], got {value}")
        self.base_mark_rates()  # raises when boosts exceed the global target

    def expected_claim_share(self) -> float:
        """Expected fraction of segments that belong to claims."""
        claims = self.claims_per_doc_mean
        claim_segs = claims * self.segments_per_claim_mean
        premise_segs = claims * self.premises_per_claim_mean * self.segments_per_premise_mean
        total = claim_segs + premise_segs + self.noise_segments_mean
        return claim_segs / total

    def base_mark_rates(self) -> dict[str, float]:
        """Non-claim font/strong rates that keep the global frequencies on target."""
        share = self.expected_claim_share()
        rates = {}
        for mark, target, boosted in (
            ("font", self.font, self.claim_font_rate),
            ("strong", self.strong, self.claim_strong_rate),
        ):
            if share >= 1.0:
                rates[mark] = 0.0  # degenerate: no non-claim segments exist
                continue
            base = (target - share * boosted) / (1.0 - share)
            if base < 0.0:
                raise InvalidPriorsError(
                    f"claim {mark} rate {boosted} exceeds what the global target {target} allows"
                )
            rates[mark] = base
        return rates


@dataclass
class _Item:
    """One segment payload before ordering: its owner and class."""

    owner: tuple  # ("c", ci) | ("p", ci, pi) | ("noise", k)
    label: int
    text: str


def _segment_text(rng: np.random.Generator, label: int, priors: GeneratorPriors) -> str:
    if label == CLAIM:
        class_pool: Sequence[str] = _CLAIM_POOL
    elif label == PREMISE:
        class_pool = _PREMISE_POOL
    else:
        class_pool = _FILLER_POOL
    on_topic = label != NON_ARGUMENT and rng.random() < priors.signal
    pool = class_pool if on_topic or label == NON_ARGUMENT else _FILLER_POOL
    count = 1 + int(rng.poisson(max(priors.chars_per_segment_mean / 6.0 - 1.0, 0.0)))
    words = [pool[int(rng.integers(len(pool)))] for _ in range(count)]
    terminal = rng.choice(_TERMINALS, p=_TERMINAL_WEIGHTS)
    return " ".join(words) + str(terminal)


def _sample_items(rng: np.random.Generator, priors: GeneratorPriors) -> tuple[list[_Item], int]:
    """Sample component payload blocks, scatter them, and return the ordered
    items plus the claim count."""
    n_claims = min(1 + int(rng.poisson(priors.claims_per_doc_mean - 1.0)), MAX_CLAIMS)
    blocks: list[list[_Item]] = []
    for ci in range(n_claims):
        n_segs = min(1 + int(rng.poisson(priors.segments_per_claim_mean - 1.0)), _MAX_SEGS_PER_CLAIM)
        blocks.append([_Item(("c", ci), CLAIM, _segment_text(rng, CLAIM, priors)) for _ in range(n_segs)])
        n_premises = min(int(rng.poisson(priors.premises_per_claim_mean)), MAX_PREMISES_PER_CLAIM)
        for pi in range(n_premises):
            n_p = min(1 + int(rng.poisson(priors.segments_per_premise_mean - 1.0)), _MAX_SEGS_PER_PREMISE)
            blocks.append(
                [_Item(("p", ci, pi), PREMISE, _segment_text(rng, PREMISE, priors)) for _ in range(n_p)]
            )

    n_noise = min(int(rng.poisson(priors.noise_segments_mean)), _MAX_NOISE_SEGMENTS)
    for k in range(n_noise):
        # Noise enters at block granularity so interleave=0 keeps components contiguous.
        position = int(rng.integers(len(blocks) + 1))
        blocks.insert(position, [_Item(("noise", k), NON_ARGUMENT, _segment_text(rng, NON_ARGUMENT, priors))])

    items = [item for block in blocks for item in block]
    # Scatter pass: adjacent swaps across component boundaries. Elements of
    # the same component never swap, so within-component order is preserved
    # and interleave=0 leaves every component contiguous.
    for _ in range(_INTERLEAVE_PASSES):
        i = 0
        while i < len(items) - 1:
            if items[i].owner != items[i + 1].owner and rng.random() < priors.interleave:
                items[i], items[i + 1] = items[i + 1], items[i]
                i += 2
            else:
                i += 1
    return items, n_claims


def _sample_marks(
    rng: np.random.Generator, items: list[_Item], paragraph_of: list[int], priors: GeneratorPriors
) -> list[StyleMarks]:
    base = priors.base_mark_rates()
    # Blockquote and header live on whole paragraphs (they are block-level
    # markup), sampled mutually exclusively at the paragraph level.
    paragraph_kind: dict[int, str] = {}
    for para in sorted(set(paragraph_of)):
        draw = rng.random()
        if draw < priors.header:
            paragraph_kind[para] = "header"
        elif draw < priors.header + priors.blockquote:
            paragraph_kind[para] = "blockquote"
        else:
            paragraph_kind[para] = "plain"
    marks = []
    for item, para in zip(items, paragraph_of):
        font_rate = priors.claim_font_rate if item.label == CLAIM else base["font"]
        strong_rate = priors.claim_strong_rate if item.label == CLAIM else base["strong"]
        kind = paragraph_kind[para]
        marks.append(
            StyleMarks(
                font=bool(rng.random() < font_rate),
                strong=bool(rng.random() < strong_rate),
                color=bool(rng.random() < priors.color),
                blockquote=kind == "blockquote",
                supertalk=bool(rng.random() < priors.supertalk),
                header=kind == "header",
            )
        )
    return marks


def _build_document(doc_id: str, rng: np.random.Generator, priors: GeneratorPriors) -> Document:
    items, n_claims = _sample_items(rng, priors)

    paragraph_of = []
    current = 0
    for index in range(len(items)):
        if index > 0 and rng.random() < priors.paragraph_break:
            current += 1
        paragraph_of.append(current)
    marks = _sample_marks(rng, items, paragraph_of, priors)

    segments = tuple(
        Segment(text=item.text, marks=mark, paragraph_pos=para, segment_pos=index)
        for index, (item, para, mark) in enumerate(zip(items, paragraph_of, marks))
    )

    positions: dict[tuple, list[int]] = {}
    for index, item in enumerate(items):
        if item.owner[0] != "noise":
            positions.setdefault(item.owner, []).append(index)

    # The major claim is the one whose first segment comes earliest, a
    # deterministic positional rule the confidence head can learn.
    claim_first = {ci: min(positions[("c", ci)]) for ci in range(n_claims)}
    major_ci = min(claim_first, key=lambda ci: claim_first[ci])

    components: list[Component] = []
    supports: list[tuple[str, str]] = []
    premise_counter = 0
    for ci in range(n_claims):
        components.append(
            Component(
                id=f"c{ci}",
                kind="claim",
                segment_ids=tuple(positions[("c", ci)]),
                is_major=ci == major_ci,
            )
        )
    for ci in range(n_claims):
        pi = 0
        while ("p", ci, pi) in positions:
            pid = f"p{premise_counter}"
            premise_counter += 1
            components.append(
                Component(id=pid, kind="premise", segment_ids=tuple(positions[("p", ci, pi)]))
            )
            supports.append((pid, f"c{ci}"))
            pi += 1

    annotation = ArgumentStructure(components=tuple(components), supports=tuple(supports))
    return Document(doc_id=doc_id, segments=segments, annotation=annotation)


def generate(num_docs: int, priors: GeneratorPriors = GeneratorPriors(), seed: int = 0) -> list[Document]:
    """Generate ``num_docs`` valid annotated documents.

    Each document gets its own seed stream derived from (seed, index), so
    document i is identical regardless of how many documents are requested,
    and disjoint seeds give disjoint doc_ids.
    """
    if num_docs < 1:
        raise ValueError("num_docs must be >= 1")
    docs = []
    for i in range(num_docs):
        rng = np.random.default_rng(np.random.SeedSequence([seed, i]))
        docs.append(_build_document(f"synth-{seed}-{i:05d}", rng, priors))
    return docs


# ---------------------------------------------------------------------------
# HTML rendering (the inverse of ingestion, for parser round-trip tests)
# ---------------------------------------------------------------------------

_COLOR_VALUE = "#b22222"


def _render_segment(segment: Segment) -> str:
    text = segment.text
    if segment.marks.color:
        text = f'<span style="color:{_COLOR_VALUE}">{text}</span>'
    if segment.marks.font:
        text = f"<font>{text}</font>"
    if segment.marks.strong:
        text = f"<strong>{text}</strong>"
    if segment.marks.supertalk:
        text = f'<span class="supertalk">{text}</span>'
    return text


def render_html(doc: Document) -> str:
    """Render a document back to HTML the ingestion parser can re-read.

    Blockquote and header marks must be uniform within each paragraph
    (they render as the paragraph's enclosing block tag); generated
    documents satisfy this by construction.
    """
    paragraphs: dict[int, list[Segment]] = {}
    for segment in doc.segments:
        paragraphs.setdefault(segment.paragraph_pos, []).append(segment)
    parts = []
    for para in sorted(paragraphs):
        group = paragraphs[para]
        headers = {s.marks.header for s in group}
        quotes = {s.marks.blockquote for s in group}
        if len(headers) > 1 or len(quotes) > 1:
            raise ValueError(
                f"document {doc.doc_id!r}: paragraph {para} mixes block-level marks; not renderable"
            )
        inner = "".join(_render_segment(s) for s in group)
        if headers.pop():
            parts.append(f"<h3>{inner}</h3>")
        elif quotes.pop():
            parts.append(f"<blockquote>{inner}</blockquote>")
        else:
            parts.append(f"<p>{inner}</p>")
    return "<div>\n" + "\n".join(parts) + "\n</div>\n"
