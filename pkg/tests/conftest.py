"""Shared fixtures and hypothesis strategies.

The central strategy builds random valid argument structures (components
within bounds, one major claim, single-attachment supports) so properties
can quantify over the whole annotation space instead of hand-picked cases.
"""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import HealthCheck, settings, strategies as st

from argmine.documents import (
    ArgumentStructure,
    Component,
    Document,
    MAX_CLAIMS,
    MAX_PREMISES_PER_CLAIM,
    Segment,
    StyleMarks,
)

settings.register_profile(
    "argmine",
    deadline=None,
    max_examples=60,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("argmine")


@st.composite
def argument_structures(draw, max_segments: int = 24) -> tuple[ArgumentStructure, int]:
    """A random valid structure plus the segment count n it applies to.

    Sampling is constructive: claims first, then premises attached within
    bounds, then segment ids dealt out disjointly with optional unused
    (non-argument) segments interleaved.
    """
    num_claims = draw(st.integers(1, min(4, MAX_CLAIMS)))
    premise_counts = [
        draw(st.integers(0, min(2, MAX_PREMISES_PER_CLAIM))) for _ in range(num_claims)
    ]
    num_premises = sum(premise_counts)

    # Segment ids per component: every component needs >= 1, sizes small.
    sizes = [draw(st.integers(1, 3)) for _ in range(num_claims + num_premises)]
    total_used = sum(sizes)
    slack = max(0, min(max_segments - total_used, 6))
    n = total_used + draw(st.integers(0, slack))

    ids = list(range(n))
    rng = np.random.default_rng(draw(st.integers(0, 2**32 - 1)))
    rng.shuffle(ids)

    components: list[Component] = []
    supports: list[tuple[str, str]] = []
    cursor = 0
    major_index = draw(st.integers(0, num_claims - 1))
    for c in range(num_claims):
        take = sizes[len(components)]
        segs = tuple(sorted(ids[cursor : cursor + take]))
        cursor += take
        components.append(
            Component(id=f"c{c}", kind="claim", segment_ids=segs, is_major=c == major_index)
        )
    p = 0
    for c in range(num_claims):
        for _ in range(premise_counts[c]):
            take = sizes[len(components)]
            segs = tuple(sorted(ids[cursor : cursor + take]))
            cursor += take
            components.append(Component(id=f"p{p}", kind="premise", segment_ids=segs))
            supports.append((f"p{p}", f"c{c}"))
            p += 1
    return ArgumentStructure(tuple(components), tuple(supports)), n


def structure_to_document(structure: ArgumentStructure, n: int, doc_id: str = "t") -> Document:
    segments = tuple(
        Segment(text=f"seg {i}。", marks=StyleMarks(), paragraph_pos=i, segment_pos=i)
        for i in range(n)
    )
    return Document(doc_id=doc_id, segments=segments, annotation=structure)


@pytest.fixture(scope="session")
def tiny_model_config():
    from argmine.model import ModelConfig

    return ModelConfig(
        d=16, max_positions=32, layers=2, heads=2, predictor_layers=2, hash_dim=8, hash_buckets=128
    )
