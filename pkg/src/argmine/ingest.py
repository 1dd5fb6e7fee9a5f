"""HTML ingestion: segmentation, style-mark extraction, position assignment.

The supported markup is a small subset (p, div, blockquote, h1..h6, font,
strong, b, span, a, body); unknown tags are transparently unwrapped and
contribute no marks. Paragraphs are the deepest block elements: a block
element that directly holds text becomes a paragraph, while blocks that
merely wrap other blocks (a root div, body) are structural containers.
Within a paragraph, text splits into segments at sentence-final
punctuation runs and newlines; each segment's marks are the OR of the
marks of every element covering any of its visible characters.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from html.parser import HTMLParser

from .documents import DEFAULT_MAX_SEGMENTS, Document, Segment, StyleMarks, truncate_document

BLOCK_TAGS = frozenset({"p", "div", "blockquote", "body", "h1", "h2", "h3", "h4", "h5", "h6"})
_HEADER_TAGS = frozenset({"h1", "h2", "h3", "h4", "h5", "h6"})
_WS = re.compile(r"\s+")


@dataclass(frozen=True)
class IngestConfig:
    """Tunables of the ingestion step.

    ``splitters`` are the sentence-final characters; a maximal run of them
    ends a segment (so "?!" stays inside one segment). Newlines always
    split. Documents longer than ``max_segments`` are truncated here, with
    annotations never entering the picture (raw HTML carries none).
    """

    splitters: str = "。！？!?"
    max_segments: int = DEFAULT_MAX_SEGMENTS


def _parse_style(style: str) -> dict[str, str]:
    declarations = {}
    for part in style.split(";"):
        if ":" in part:
            key, value = part.split(":", 1)
            declarations[key.strip().lower()] = value.strip().lower()
    return declarations


def _bold_weight(value: str) -> bool:
    value = value.strip().lower()
    if value in ("bold", "bolder"):
        return True
    try:
        return float(value) >= 700
    except ValueError:
        return False


def mark_of(tag: str, attrs: dict[str, str]) -> StyleMarks:
    """Style-mark contribution of one element.

    Tag rules: font/strong/b/blockquote/h1..h6/supertalk map to their
    marks. Attribute rules apply to any tag: a font-size style sets font, a
    font-weight style at bold or heavier sets strong, and any explicit
    color (attribute or style declaration) sets color regardless of value.
    """
    tag = tag.lower()
    style = _parse_style(attrs.get("style", ""))
    return StyleMarks(
        font=tag == "font" or "font-size" in style,
        strong=tag in ("strong", "b") or _bold_weight(style.get("font-weight", "")),
        color="color" in attrs or "color" in style,
        blockquote=tag == "blockquote",
        supertalk=tag == "supertalk" or "supertalk" in attrs.get("class", ""),
        header=tag in _HEADER_TAGS,
    )


class _Collector(HTMLParser):
    """Streams tags/text into paragraphs of (text run, cumulative marks) pairs."""

    def __init__(self) -> None:
        super().__init__(convert_charrefs=True)
        self.stack: list[tuple[str, StyleMarks]] = [("", StyleMarks())]
        self.paragraphs: list[list[tuple[str, StyleMarks]]] = []
        self.current: list[tuple[str, StyleMarks]] = []
        self.warnings: list[str] = []

    def _flush_paragraph(self) -> None:
        if any(run.strip() for run, _ in self.current):
            self.paragraphs.append(self.current)
        self.current = []

    def handle_starttag(self, tag: str, attrs: list[tuple[str, str | None]]) -> None:
        tag = tag.lower()
        if tag == "br":  # void element: acts as a line break in the text flow
            self.current.append(("\n", self.stack[-1][1]))
            return
        if tag in BLOCK_TAGS:
            # A new block finalizes whatever text the enclosing block held,
            # which makes nested wrappers transparent and the deepest
            # text-holding blocks the paragraphs.
            self._flush_paragraph()
        attr_map = {key: value or "" for key, value in attrs}
        self.stack.append((tag, self.stack[-1][1] | mark_of(tag, attr_map)))

    def handle_startendtag(self, tag: str, attrs: list[tuple[str, str | None]]) -> None:
        if tag.lower() == "br":
            self.current.append(("\n", self.stack[-1][1]))

    def handle_endtag(self, tag: str) -> None:
        tag = tag.lower()
        if tag == "br":
            return
        open_tags = [name for name, _ in self.stack[1:]]
        if tag not in open_tags:
            self.warnings.append(f"ignored end tag </{tag}> with no open element")
            return
        # Recover from mis-nesting by popping everything above the match.
        while self.stack[-1][0] != tag:
            popped = self.stack.pop()
            self.warnings.append(f"auto-closed <{popped[0]}> at </{tag}>")
            if popped[0] in BLOCK_TAGS:
                self._flush_paragraph()
        self.stack.pop()
        if tag in BLOCK_TAGS:
            self._flush_paragraph()

    def handle_data(self, data: str) -> None:
        if data:
            self.current.append((data, self.stack[-1][1]))

    def close(self) -> None:
        super().close()
        unclosed = [name for name, _ in self.stack[1:]]
        if unclosed:
            self.warnings.append(
                "malformed markup: auto-closed unclosed tags " + ", ".join(f"<{t}>" for t in unclosed)
            )
        self._flush_paragraph()
        self.stack = [("", StyleMarks())]


def _split_segments(runs: list[tuple[str, StyleMarks]], splitters: str) -> list[tuple[str, StyleMarks]]:
    """Split a paragraph's text runs into (segment text, OR-ed marks) pairs."""
    chars: list[tuple[str, StyleMarks]] = []
    for run, marks in runs:
        chars.extend((ch, marks) for ch in run)

    segments: list[tuple[str, StyleMarks]] = []
    piece: list[tuple[str, StyleMarks]] = []

    def _close() -> None:
        nonlocal piece
        text = _WS.sub(" ", "".join(ch for ch, _ in piece)).strip()
        if text:
            marks = StyleMarks()
            for ch, mark in piece:
                if not ch.isspace():
                    marks = marks | mark
            segments.append((text, marks))
        piece = []

    for index, (ch, marks) in enumerate(chars):
        if ch == "\n":
            _close()
            continue
        piece.append((ch, marks))
        next_ch = chars[index + 1][0] if index + 1 < len(chars) else None
        if ch in splitters and (next_ch is None or next_ch not in splitters):
            _close()
    _close()
    return segments


def parse_html(source: str, doc_id: str = "doc", config: IngestConfig = IngestConfig()) -> Document:
    """Parse an HTML string into a Document.

    Paragraph positions count only paragraphs that yield at least one
    segment; segment positions are the global 0..n-1 order. Malformed
    markup (unclosed or mis-nested tags) is recovered by auto-closing and
    recorded in the document's warnings. Raises ValueError when the source
    has no visible text.
    """
    collector = _Collector()
    collector.feed(source)
    collector.close()

    segments: list[Segment] = []
    paragraph_index = 0
    for runs in collector.paragraphs:
        pieces = _split_segments(runs, config.splitters)
        if not pieces:
            continue
        for text, marks in pieces:
            segments.append(
                Segment(
                    text=text,
                    marks=marks,
                    paragraph_pos=paragraph_index,
                    segment_pos=len(segments),
                )
            )
        paragraph_index += 1

    if not segments:
        raise ValueError(f"document {doc_id!r} has no visible text")
    doc = Document(
        doc_id=doc_id,
        segments=tuple(segments),
        annotation=None,
        warnings=tuple(collector.warnings),
    )
    return truncate_document(doc, config.max_segments)
