"""Segment-level and token-level argument-mining models.

The segment model turns a document into three dense predictions: a 3-way
class distribution per segment, a major-claim confidence per segment, and
a 4-way relation distribution per ordered segment pair. Text enters
through frozen hash-bucket embeddings (two views: characters and greedy
bigram words), the views are fused by a cross-gate, visual style marks and
positions modulate the result through a multiplicative gate, a sequence
encoder adds document context, and small feed-forward heads emit the
predictions.

The token model is the lightweight per-segment baseline: trainable token
embeddings, a one-layer transformer, first/last layer averaging, and a
perceptron classifier, with two streams (char/word) ensembled by mean.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Literal

import numpy as np

from . import autodiff as ad
from .autodiff import ParameterStore, ShapeMismatchError, Tensor
from .documents import Document
from .labels import SegmentLabels, SegmentPredictions, derive_labels
from .layers import Linear, Mlp, build_encoder

MASK_TOKEN = "[MASK]"


class PositionOutOfRangeError(ValueError):
    """Raised when a paragraph/segment position exceeds the embedding table."""


@dataclass(frozen=True)
class ModelConfig:
    """Architecture hyperparameters for the segment model.

    ``max_positions`` bounds both position vocabularies, so every document
    must satisfy n <= max_positions with all position indices below it.
    """

    d: int = 384
    max_positions: int = 400
    encoder_kind: Literal["mlp", "bigru", "transformer"] = "bigru"
    relation_head: Literal["muladd", "biaffine"] = "muladd"
    use_html: bool = True
    layers: int = 3
    heads: int = 4
    predictor_layers: int = 3
    relation_input: Literal["contextual", "fused"] = "contextual"
    dropout: float = 0.4
    hash_buckets: int = 65536
    hash_dim: int = 64
    hash_seed: int = 0

    def __post_init__(self) -> None:
        if self.d <= 0 or self.d % 2 != 0:
            raise ValueError(f"d must be a positive even number, got {self.d}")
        if self.encoder_kind not in ("mlp", "bigru", "transformer"):
            raise ValueError(f"unknown encoder kind {self.encoder_kind!r}")
        if self.relation_head not in ("muladd", "biaffine"):
            raise ValueError(f"unknown relation head {self.relation_head!r}")
        if self.relation_input not in ("contextual", "fused"):
            raise ValueError(f"unknown relation input {self.relation_input!r}")
        if self.encoder_kind == "transformer" and self.d % self.heads != 0:
            raise ValueError(f"d={self.d} is not divisible by heads={self.heads}")
        if self.layers < 1 or self.predictor_layers < 1:
            raise ValueError("layers and predictor_layers must be >= 1")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError(f"dropout must be in [0, 1), got {self.dropout}")
        if self.max_positions < 1 or self.hash_buckets < 1 or self.hash_dim < 1:
            raise ValueError("max_positions, hash_buckets, and hash_dim must be >= 1")


def config_hash(config) -> str:
    """Stable short digest of a config dataclass, for checkpoint compatibility."""
    payload = json.dumps(asdict(config), sort_keys=True)
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:16]


# ---------------------------------------------------------------------------
# Tokenization and frozen hash embeddings
# ---------------------------------------------------------------------------


def char_tokens(text: str) -> list[str]:
    """Character view: every non-whitespace character."""
    return [ch for ch in text if not ch.isspace()]


def word_tokens(text: str) -> list[str]:
    """Word view: whitespace runs, with runs longer than 2 characters broken
    into greedy non-overlapping character bigrams (plus a trailing singleton
    when the run length is odd).

    The bigram rule gives unsegmented scripts a word-ish granularity without
    a dictionary: two headline phrases sharing a leading 2-char word share a
    token.
    """
    tokens: list[str] = []
    for run in text.split():
        if len(run) <= 2:
            tokens.append(run)
        else:
            tokens.extend(run[i : i + 2] for i in range(0, len(run), 2))
    return tokens


def token_bucket(token: str, view: str, buckets: int) -> int:
    """Deterministic hash bucket for a token (process-independent)."""
    digest = hashlib.blake2b(token.encode("utf-8"), digest_size=8, person=view.encode("utf-8")[:16])
    return int.from_bytes(digest.digest(), "little") % buckets


class HashEmbedder:
    """Frozen hash-bucket embedding tables for the char and word views.

    The tables are fixed functions of (buckets, dim, seed), so a checkpoint
    only needs the model's learnable parameters; the backbone regenerates
    bit-identically from the config.
    """

    def __init__(self, buckets: int, dim: int, seed: int):
        self.buckets = buckets
        self.dim = dim
        self.tables = {
            view: np.random.default_rng(np.random.SeedSequence([seed, idx])).normal(
                0.0, 0.02, size=(buckets, dim)
            )
            for idx, view in enumerate(("char", "word"))
        }

    def _aggregate(self, tokens: list[str], view: str) -> np.ndarray:
        table = self.tables[view]
        if not tokens:
            return np.zeros(self.dim)
        rows = [token_bucket(token, view, self.buckets) for token in tokens]
        return table[rows].mean(axis=0)

    def embed_text(self, text: str) -> tuple[np.ndarray, np.ndarray]:
        """(char_vector, word_vector) for one segment's text."""
        return (
            self._aggregate(char_tokens(text), "char"),
            self._aggregate(word_tokens(text), "word"),
        )


@dataclass
class DocFeatures:
    """Precomputed per-document model inputs (and targets when annotated).

    Embedding a document is pure and frozen, so training featurizes the
    corpus once up front instead of re-hashing text every epoch.
    """

    doc_id: str
    n: int
    char_vecs: np.ndarray  # (n, hash_dim)
    word_vecs: np.ndarray  # (n, hash_dim)
    marks: np.ndarray  # (n, 6) float
    para: np.ndarray  # (n,) int
    seg: np.ndarray  # (n,) int
    labels: SegmentLabels | None = None


def featurize(doc: Document, embedder: HashEmbedder) -> DocFeatures:
    """Embed a document's text and collect marks/positions/labels."""
    n = len(doc.segments)
    char_vecs = np.empty((n, embedder.dim))
    word_vecs = np.empty((n, embedder.dim))
    for i, segment in enumerate(doc.segments):
        char_vecs[i], word_vecs[i] = embedder.embed_text(segment.text)
    marks = np.array([s.marks.to_vector() for s in doc.segments], dtype=np.float64)
    para = np.array([s.paragraph_pos for s in doc.segments], dtype=np.int64)
    seg = np.array([s.segment_pos for s in doc.segments], dtype=np.int64)
    labels = derive_labels(doc.annotation, n) if doc.annotation is not None else None
    return DocFeatures(doc.doc_id, n, char_vecs, word_vecs, marks, para, seg, labels)


# ---------------------------------------------------------------------------
# Architecture blocks (free functions so tests can drive them with explicit
# parameters)
# ---------------------------------------------------------------------------


def cross_gate_fuse(
    f_c: Tensor, f_w: Tensor, w_c: Tensor, b_c: Tensor, w_w: Tensor, b_w: Tensor, w_o: Tensor, b_o: Tensor
) -> Tensor:
    """Fuse the two text views, each gated by the other.

    g_c = sigmoid(f_c @ w_c + b_c), g_w likewise; the output is an affine
    map of [g_c * f_w ; g_w * f_c].
    """
    if f_c.shape != f_w.shape:
        raise ShapeMismatchError(f"view shapes differ: {f_c.shape} vs {f_w.shape}")
    g_c = ad.sigmoid(ad.add(ad.matmul(f_c, w_c), b_c))
    g_w = ad.sigmoid(ad.add(ad.matmul(f_w, w_w), b_w))
    mixed = ad.concat([ad.mul(g_c, f_w), ad.mul(g_w, f_c)], axis=1)
    return ad.add(ad.matmul(mixed, w_o), b_o)


def encode_style_position(
    marks: np.ndarray, para: np.ndarray, seg: np.ndarray, w_mark: Tensor, e_para: Tensor, e_seg: Tensor
) -> tuple[Tensor, Tensor]:
    """Style vector v = marks @ w_mark and position embedding e = [E_p ; E_s]."""
    limit = e_para.shape[0]
    if para.size and (int(para.max()) >= limit or int(seg.max()) >= e_seg.shape[0]):
        raise PositionOutOfRangeError(
            f"positions (max para {int(para.max())}, max seg {int(seg.max())}) "
            f"exceed the position vocabulary of size {limit}"
        )
    v = ad.matmul(Tensor(marks), w_mark)
    e = ad.concat([ad.getitem(e_para, para), ad.getitem(e_seg, seg)], axis=1)
    return v, e


def style_gate(v: Tensor, f: Tensor, w_g: Tensor, b_g: Tensor) -> Tensor:
    """Amplify features by (1 + sigmoid(w_g @ [v;f] + b_g)), elementwise."""
    if v.shape != f.shape:
        raise ShapeMismatchError(f"style/feature shapes differ: {v.shape} vs {f.shape}")
    gate = ad.sigmoid(ad.add(ad.matmul(ad.concat([v, f], axis=1), w_g), b_g))
    return ad.mul(ad.add(gate, 1.0), f)


def relation_mul_add(f_s: Tensor, f_d: Tensor, w_r: Tensor, b_r: Tensor) -> Tensor:
    """Pairwise 4-way relation distribution from [f_s_i + f_d_j ; f_s_i * f_d_j]."""
    n, d = f_s.shape
    source = ad.reshape(f_s, (n, 1, d))
    target = ad.reshape(f_d, (1, n, d))
    pair = ad.concat([ad.add(source, target), ad.mul(source, target)], axis=2)
    logits = ad.add(ad.matmul(pair, w_r), b_r)
    return ad.softmax(logits, axis=-1)


def relation_biaffine(f_s: Tensor, f_d: Tensor, u: Tensor, b_r: Tensor) -> Tensor:
    """Pairwise 4-way relation distribution via a bilinear form with bias
    features: softmax([f_s_i;1]ᵀ U [f_d_j;1] + b_r)."""
    n, d = f_s.shape
    ones = Tensor(np.ones((n, 1)))
    s1 = ad.concat([f_s, ones], axis=1)  # (n, d+1)
    t1 = ad.concat([f_d, ones], axis=1)
    flat = ad.reshape(u, (d + 1, 4 * (d + 1)))
    partial = ad.reshape(ad.matmul(s1, flat), (n, 4, d + 1))
    scores = ad.matmul(partial, ad.transpose(t1))  # (n, 4, n)
    logits = ad.add(ad.transpose(scores, (0, 2, 1)), b_r)
    return ad.softmax(logits, axis=-1)


@dataclass
class ModelOutputs:
    """Forward-pass tensors: class probs (n,3), major conf (n,), relation probs (n,n,4)."""

    comp_probs: Tensor
    major_conf: Tensor
    rel_probs: Tensor

    def to_predictions(self) -> SegmentPredictions:
        return SegmentPredictions(
            comp_probs=self.comp_probs.data.copy(),
            major_conf=self.major_conf.data.copy(),
            rel_probs=self.rel_probs.data.copy(),
        )


class SegmentModel:
    """The document-level model: fusion, style gate, context encoder, heads."""

    def __init__(self, config: ModelConfig, seed: int | np.random.SeedSequence = 0):
        self.config = config
        self.embedder = HashEmbedder(config.hash_buckets, config.hash_dim, config.hash_seed)
        store = ParameterStore(np.random.default_rng(seed))
        self.store = store
        d, half = config.d, config.d // 2

        self.proj_char = Linear(store, "embed.char_proj", config.hash_dim, d)
        self.proj_word = Linear(store, "embed.word_proj", config.hash_dim, d)

        self.w_c = store.parameter("fuse.w_c", (d, d))
        self.b_c = store.parameter("fuse.b_c", (d,), init="zeros")
        self.w_w = store.parameter("fuse.w_w", (d, d))
        self.b_w = store.parameter("fuse.b_w", (d,), init="zeros")
        self.w_o = store.parameter("fuse.w_o", (2 * d, d))
        self.b_o = store.parameter("fuse.b_o", (d,), init="zeros")

        self.w_mark = store.parameter("style.w_mark", (6, d), init="normal")
        self.e_para = store.parameter("style.e_para", (config.max_positions, half), init="normal")
        self.e_seg = store.parameter("style.e_seg", (config.max_positions, half), init="normal")
        self.w_g = store.parameter("style.w_g", (2 * d, d))
        self.b_g = store.parameter("style.b_g", (d,), init="zeros")

        self.encoder = build_encoder(store, "encoder", config.encoder_kind, d, config.layers, config.heads)

        # Shared predictor trunk; the class/major heads form its last layer.
        self.trunk = Mlp(store, "predictor.trunk", [d] * config.predictor_layers)
        self.head_component = Linear(store, "predictor.component", d, 3)
        self.head_major = Linear(store, "predictor.major", d, 1)

        self.rel_source = Mlp(store, "relation.source", [d, d, d])
        self.rel_target = Mlp(store, "relation.target", [d, d, d])
        if config.relation_head == "muladd":
            self.w_r = store.parameter("relation.w_r", (2 * d, 4))
            self.b_r = store.parameter("relation.b_r", (4,), init="zeros")
        else:
            self.u = store.parameter("relation.u", (d + 1, 4, d + 1))
            self.b_r = store.parameter("relation.b_r", (4,), init="zeros")

    def featurize(self, doc: Document) -> DocFeatures:
        return featurize(doc, self.embedder)

    def forward(
        self, feats: DocFeatures, *, train: bool = False, rng: np.random.Generator | None = None
    ) -> ModelOutputs:
        cfg = self.config
        n = feats.n
        if n > cfg.max_positions:
            raise PositionOutOfRangeError(
                f"document {feats.doc_id!r} has {n} segments, above the model bound {cfg.max_positions}"
            )
        p = cfg.dropout if train else 0.0

        f_c = self.proj_char(Tensor(feats.char_vecs))
        f_w = self.proj_word(Tensor(feats.word_vecs))
        fused = cross_gate_fuse(f_c, f_w, self.w_c, self.b_c, self.w_w, self.b_w, self.w_o, self.b_o)
        if p > 0.0 and rng is not None:
            fused = ad.dropout(fused, p, rng)

        if cfg.use_html:
            v, e = encode_style_position(
                feats.marks, feats.para, feats.seg, self.w_mark, self.e_para, self.e_seg
            )
        else:
            # Ablation: the gates still run, fed all-zero style/position input.
            v = Tensor(np.zeros((n, cfg.d)))
            e = Tensor(np.zeros((n, cfg.d)))
        gated = style_gate(v, fused, self.w_g, self.b_g)

        contextual = self.encoder(ad.add(gated, e), train=train, rng=rng, dropout=cfg.dropout)

        hidden = self.trunk(contextual)
        if self.trunk.layers:
            hidden = ad.relu(hidden)
        comp_probs = ad.softmax(self.head_component(hidden), axis=-1)
        major_conf = ad.reshape(ad.sigmoid(self.head_major(hidden)), (n,))

        rel_in = contextual if cfg.relation_input == "contextual" else fused
        f_s = self.rel_source(rel_in)
        f_d = self.rel_target(rel_in)
        if cfg.relation_head == "muladd":
            rel_probs = relation_mul_add(f_s, f_d, self.w_r, self.b_r)
        else:
            rel_probs = relation_biaffine(f_s, f_d, self.u, self.b_r)
        return ModelOutputs(comp_probs, major_conf, rel_probs)

    def predict(self, doc: Document) -> SegmentPredictions:
        return self.forward(self.featurize(doc)).to_predictions()

    # -- persistence -----------------------------------------------------------

    def save(self, directory: str | Path) -> None:
        metadata = {"config": asdict(self.config), "config_hash": config_hash(self.config)}
        self.store.save(directory, metadata)

    @classmethod
    def load(cls, directory: str | Path) -> "SegmentModel":
        manifest = ParameterStore.read_manifest(directory)
        metadata = manifest.get("metadata", {})
        config = ModelConfig(**metadata["config"])
        expected = metadata.get("config_hash")
        if expected is not None and expected != config_hash(config):
            raise ValueError(
                f"checkpoint config hash {expected} does not match its stored config; refusing to load"
            )
        model = cls(config)
        model.store.load(directory)
        return model


# ---------------------------------------------------------------------------
# Token-level model
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TokenModelConfig:
    """Hyperparameters for the per-segment token baseline."""

    dim: int = 64
    buckets: int = 4096
    heads: int = 4
    predictor_layers: int = 3
    dropout: float = 0.4

    def __post_init__(self) -> None:
        if self.dim % self.heads != 0:
            raise ValueError(f"dim={self.dim} is not divisible by heads={self.heads}")


def augment(
    tokens: list[str],
    rng: np.random.Generator,
    kind: Literal["mask", "swap", "repeat"] = "mask",
    p_aug: float = 0.3,
    ratio: float = 0.15,
) -> list[str]:
    """Randomly perturb a token list for training-time augmentation.

    With probability ``p_aug``, ceil(ratio * len) positions are modified:
    masked, swapped with a uniformly chosen other position, or duplicated
    in place. Otherwise (and always for empty input) the tokens are
    returned unchanged.
    """
    out = list(tokens)
    if not out or rng.random() >= p_aug:
        return out
    count = min(math.ceil(ratio * len(out)), len(out))
    positions = sorted(rng.choice(len(out), size=count, replace=False).tolist())
    if kind == "mask":
        for pos in positions:
            out[pos] = MASK_TOKEN
    elif kind == "swap":
        if len(out) >= 2:
            for pos in positions:
                partner = int(rng.integers(len(out) - 1))
                if partner >= pos:
                    partner += 1  # uniform over the other positions
                out[pos], out[partner] = out[partner], out[pos]
    elif kind == "repeat":
        for pos in reversed(positions):
            out.insert(pos + 1, out[pos])
    else:
        raise ValueError(f"unknown augmentation kind {kind!r}")
    return out


class TokenModel:
    """Per-segment classifier over raw tokens, one stream per text view.

    Each stream embeds tokens with a trainable bucket table, runs a 1-layer
    transformer, averages the first (embedding) and last (encoder) states
    over tokens, and classifies with a small perceptron. The ensemble
    prediction is the arithmetic mean of the two streams' probabilities.
    """

    def __init__(self, config: TokenModelConfig = TokenModelConfig(), seed: int | np.random.SeedSequence = 0):
        self.config = config
        store = ParameterStore(np.random.default_rng(seed))
        self.store = store
        self.tables = {}
        self.encoders = {}
        self.trunks = {}
        self.heads = {}
        for view in ("char", "word"):
            self.tables[view] = store.parameter(f"{view}.table", (config.buckets, config.dim), init="normal")
            self.encoders[view] = build_encoder(store, f"{view}.encoder", "transformer", config.dim, 1, config.heads)
            self.trunks[view] = Mlp(store, f"{view}.trunk", [config.dim] * config.predictor_layers)
            self.heads[view] = Linear(store, f"{view}.head", config.dim, 3)

    def forward_view(
        self,
        tokens: list[str],
        view: str,
        *,
        train: bool = False,
        rng: np.random.Generator | None = None,
    ) -> Tensor:
        """3-way probabilities from one stream; tokens must be non-empty."""
        if not tokens:
            raise ValueError("token model needs at least one token")
        cfg = self.config
        idx = np.array([token_bucket(t, view, cfg.buckets) for t in tokens], dtype=np.int64)
        first = ad.getitem(self.tables[view], idx)  # (T, dim)
        last = self.encoders[view](first, train=train, rng=rng, dropout=cfg.dropout)
        pooled = ad.mean(ad.mul(ad.add(first, last), 0.5), axis=0, keepdims=True)  # (1, dim)
        hidden = self.trunks[view](pooled)
        if self.trunks[view].layers:
            hidden = ad.relu(hidden)
        return ad.reshape(ad.softmax(self.heads[view](hidden), axis=-1), (3,))

    def forward(
        self, text: str, *, train: bool = False, rng: np.random.Generator | None = None
    ) -> Tensor:
        """Ensemble probabilities: mean of the char and word streams."""
        char_probs = self.forward_view(char_tokens(text), "char", train=train, rng=rng)
        word_probs = self.forward_view(word_tokens(text), "word", train=train, rng=rng)
        return ad.mul(ad.add(char_probs, word_probs), 0.5)
