"""Corpus generator: validity, determinism, statistics, render round trip."""

import dataclasses

import numpy as np
import pytest

from argmine.documents import (
    CLAIM,
    MAX_CLAIMS,
    MAX_PREMISES_PER_CLAIM,
    ArgumentStructure,
    Component,
    Document,
    Segment,
    StyleMarks,
    document_to_json,
    validate_structure,
)
from argmine.ingest import parse_html
from argmine.synth import (
    GeneratorPriors,
    InvalidPriorsError,
    generate,
    render_html,
)
from argmine.synth import _CLAIM_POOL, _FILLER_POOL, _PREMISE_POOL  # noqa: the pools are the text oracle


def words_of(text: str) -> list[str]:
    return text.rstrip("。！？").split(" ")


class TestValidity:
    DOCS = generate(200, seed=11)

    def test_every_document_validates(self):
        for doc in self.DOCS:
            assert validate_structure(doc) == []

    def test_bounds_hold(self):
        for doc in self.DOCS:
            claims = [c for c in doc.annotation.components if c.kind == "claim"]
            premises = [c for c in doc.annotation.components if c.kind == "premise"]
            assert 1 <= len(claims) <= MAX_CLAIMS
            assert sum(1 for c in claims if c.is_major) == 1
            per_claim: dict = {}
            for pid, cid in doc.annotation.supports:
                per_claim[cid] = per_claim.get(cid, 0) + 1
            assert all(v <= MAX_PREMISES_PER_CLAIM for v in per_claim.values())
            assert len(doc.annotation.supports) == len(premises)

    def test_major_is_earliest_claim(self):
        for doc in self.DOCS:
            claims = [c for c in doc.annotation.components if c.kind == "claim"]
            firsts = {c.id: min(c.segment_ids) for c in claims}
            major = next(c for c in claims if c.is_major)
            assert firsts[major.id] == min(firsts.values())

    def test_positions_are_the_identity_layout(self):
        for doc in self.DOCS[:20]:
            assert [s.segment_pos for s in doc.segments] == list(range(len(doc.segments)))
            paras = [s.paragraph_pos for s in doc.segments]
            assert paras[0] == 0
            assert all(b - a in (0, 1) for a, b in zip(paras, paras[1:]))


class TestDeterminism:
    def test_same_seed_same_corpus(self):
        a = generate(5, seed=3)
        b = generate(5, seed=3)
        assert [document_to_json(d) for d in a] == [document_to_json(d) for d in b]

    def test_prefix_stability(self):
        short = generate(3, seed=3)
        long = generate(6, seed=3)
        assert [document_to_json(d) for d in short] == [document_to_json(d) for d in long[:3]]

    def test_disjoint_seeds_disjoint_ids(self):
        ids_a = {d.doc_id for d in generate(10, seed=1)}
        ids_b = {d.doc_id for d in generate(10, seed=2)}
        assert not ids_a & ids_b

    def test_num_docs_validation(self):
        with pytest.raises(ValueError):
            generate(0)


class TestInterleave:
    def test_zero_interleave_keeps_components_contiguous(self):
        priors = dataclasses.replace(GeneratorPriors(), interleave=0.0)
        for doc in generate(60, priors, seed=5):
            for comp in doc.annotation.components:
                ids = list(comp.segment_ids)
                assert ids == list(range(ids[0], ids[-1] + 1))

    def test_high_interleave_scatters_some_component(self):
        priors = dataclasses.replace(GeneratorPriors(), interleave=0.9)
        scattered = 0
        for doc in generate(40, priors, seed=5):
            for comp in doc.annotation.components:
                ids = list(comp.segment_ids)
                if ids != list(range(ids[0], ids[-1] + 1)):
                    scattered += 1
        assert scattered > 0

    def test_within_component_order_is_preserved(self):
        # segment_ids are stored sorted ascending by construction
        priors = dataclasses.replace(GeneratorPriors(), interleave=0.8)
        for doc in generate(30, priors, seed=9):
            for comp in doc.annotation.components:
                assert list(comp.segment_ids) == sorted(comp.segment_ids)


class TestStatistics:
    DOCS = generate(1000, seed=7)

    def test_claims_per_doc_mean(self):
        counts = [
            sum(1 for c in d.annotation.components if c.kind == "claim") for d in self.DOCS
        ]
        assert np.mean(counts) == pytest.approx(GeneratorPriors().claims_per_doc_mean, rel=0.10)

    def test_segments_per_claim_mean(self):
        sizes = [
            len(c.segment_ids)
            for d in self.DOCS
            for c in d.annotation.components
            if c.kind == "claim"
        ]
        assert np.mean(sizes) == pytest.approx(GeneratorPriors().segments_per_claim_mean, rel=0.10)

    def test_premises_per_claim_mean(self):
        priors = GeneratorPriors()
        n_claims = sum(1 for d in self.DOCS for c in d.annotation.components if c.kind == "claim")
        n_premises = sum(len(d.annotation.supports) for d in self.DOCS)
        assert n_premises / n_claims == pytest.approx(priors.premises_per_claim_mean, rel=0.10)

    def test_global_mark_frequencies_match_priors(self):
        priors = GeneratorPriors()
        marks = np.array([s.marks.to_vector() for d in self.DOCS for s in d.segments], dtype=float)
        freq = marks.mean(axis=0)  # (font, strong, color, blockquote, supertalk, header)
        assert abs(freq[0] - priors.font) < 0.02
        assert abs(freq[1] - priors.strong) < 0.02
        assert abs(freq[2] - priors.color) < 0.02
        assert freq[3] < priors.blockquote + 0.02
        assert freq[4] < priors.supertalk + 0.02
        assert freq[5] < priors.header + 0.02

    def test_claim_segments_get_boosted_marks(self):
        priors = GeneratorPriors()
        claim_font = []
        other_font = []
        for doc in self.DOCS:
            claim_ids = {
                i
                for c in doc.annotation.components
                if c.kind == "claim"
                for i in c.segment_ids
            }
            for i, s in enumerate(doc.segments):
                (claim_font if i in claim_ids else other_font).append(s.marks.font)
        assert np.mean(claim_font) == pytest.approx(priors.claim_font_rate, abs=0.02)
        assert np.mean(claim_font) > np.mean(other_font) + 0.1

    def test_expected_claim_share_formula(self):
        priors = GeneratorPriors()
        claims = priors.claims_per_doc_mean
        expected = (claims * priors.segments_per_claim_mean) / (
            claims * priors.segments_per_claim_mean
            + claims * priors.premises_per_claim_mean * priors.segments_per_premise_mean
            + priors.noise_segments_mean
        )
        assert priors.expected_claim_share() == pytest.approx(expected, rel=1e-12)

    def test_base_rates_recover_global_target(self):
        priors = GeneratorPriors()
        share = priors.expected_claim_share()
        base = priors.base_mark_rates()
        mixed = share * priors.claim_font_rate + (1 - share) * base["font"]
        assert mixed == pytest.approx(priors.font, rel=1e-12)


class TestSignalDial:
    def _class_words(self, signal: float):
        priors = dataclasses.replace(GeneratorPriors(), signal=signal)
        claim_words, premise_words = [], []
        for doc in generate(50, priors, seed=13):
            for comp in doc.annotation.components:
                target = claim_words if comp.kind == "claim" else premise_words
                for sid in comp.segment_ids:
                    target.extend(words_of(doc.segments[sid].text))
        return claim_words, premise_words

    def test_full_signal_draws_from_class_pools(self):
        claim_words, premise_words = self._class_words(1.0)
        assert set(claim_words) <= set(_CLAIM_POOL)
        assert set(premise_words) <= set(_PREMISE_POOL)

    def test_zero_signal_draws_from_filler_only(self):
        claim_words, premise_words = self._class_words(0.0)
        assert set(claim_words) <= set(_FILLER_POOL)
        assert set(premise_words) <= set(_FILLER_POOL)

    def test_pools_are_disjoint(self):
        assert not set(_CLAIM_POOL) & set(_PREMISE_POOL)
        assert not set(_CLAIM_POOL) & set(_FILLER_POOL)
        assert not set(_PREMISE_POOL) & set(_FILLER_POOL)


class TestPriorsValidation:
    @pytest.mark.parametrize(
        "kwargs",
        [
            {"signal": 1.5},
            {"interleave": -0.1},
            {"claims_per_doc_mean": 0.5},
            {"claims_per_doc_mean": 50.0},
            {"chars_per_segment_mean": 500.0},
            {"font": 0.05, "claim_font_rate": 0.9},
        ],
    )
    def test_invalid_priors(self, kwargs):
        with pytest.raises(InvalidPriorsError):
            GeneratorPriors(**kwargs)

    def test_defaults_valid(self):
        GeneratorPriors()


class TestRenderRoundTrip:
    def test_parse_recovers_generated_documents_exactly(self):
        for doc in generate(30, seed=21):
            parsed = parse_html(render_html(doc), doc_id=doc.doc_id)
            assert parsed.warnings == ()
            assert len(parsed.segments) == len(doc.segments)
            for ours, theirs in zip(doc.segments, parsed.segments):
                assert theirs.text == ours.text
                assert theirs.marks == ours.marks
                assert theirs.paragraph_pos == ours.paragraph_pos
                assert theirs.segment_pos == ours.segment_pos

    def test_round_trip_across_signal_settings(self):
        for signal in (0.0, 0.5, 1.0):
            priors = dataclasses.replace(GeneratorPriors(), signal=signal)
            for doc in generate(5, priors, seed=2):
                parsed = parse_html(render_html(doc), doc_id=doc.doc_id)
                assert [s.text for s in parsed.segments] == [s.text for s in doc.segments]

    def test_mixed_block_marks_not_renderable(self):
        segments = (
            Segment(text="a。", marks=StyleMarks(header=True), paragraph_pos=0, segment_pos=0),
            Segment(text="b。", marks=StyleMarks(), paragraph_pos=0, segment_pos=1),
        )
        doc = Document(
            doc_id="bad",
            segments=segments,
            annotation=ArgumentStructure(
                components=(Component(id="c0", kind="claim", segment_ids=(0,), is_major=True),)
            ),
        )
        with pytest.raises(ValueError, match="mixes block-level marks"):
            render_html(doc)
