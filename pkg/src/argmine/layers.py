"""Sequence-encoder building blocks over the tensor engine.

Three interchangeable encoders map an (n, d) segment-feature matrix to an
(n, d) context-aware matrix: a per-position feed-forward stack (no mixing
across positions), a bidirectional multi-layer GRU, and a pre-norm
multi-head-attention transformer. All parameters live in a shared
:class:`~argmine.autodiff.ParameterStore` under the layer's name prefix.
"""

from __future__ import annotations

import numpy as np

from . import autodiff as ad
from .autodiff import ParameterStore, Tensor


class Linear:
    """Affine map ``x @ W + b``; W gets fan-in uniform init, b starts at 0."""

    def __init__(self, store: ParameterStore, name: str, d_in: int, d_out: int):
        self.weight = store.parameter(f"{name}.weight", (d_in, d_out))
        self.bias = store.parameter(f"{name}.bias", (d_out,), init="zeros")

    def __call__(self, x: Tensor) -> Tensor:
        return ad.add(ad.matmul(x, self.weight), self.bias)


class Mlp:
    """Stack of ReLU-separated affine layers (no activation after the last)."""

    def __init__(self, store: ParameterStore, name: str, dims: list[int]):
        self.layers = [
            Linear(store, f"{name}.{i}", d_in, d_out)
            for i, (d_in, d_out) in enumerate(zip(dims, dims[1:]))
        ]

    def __call__(self, x: Tensor) -> Tensor:
        for i, layer in enumerate(self.layers):
            x = layer(x)
            if i + 1 < len(self.layers):
                x = ad.relu(x)
        return x


class _FeedForwardBlock:
    """Pre-norm residual feed-forward sub-layer: x + W2 relu(W1 ln(x))."""

    def __init__(self, store: ParameterStore, name: str, d: int, hidden: int):
        self.gain = store.parameter(f"{name}.norm.gain", (d,), init="ones")
        self.shift = store.parameter(f"{name}.norm.shift", (d,), init="zeros")
        self.lin1 = Linear(store, f"{name}.lin1", d, hidden)
        self.lin2 = Linear(store, f"{name}.lin2", hidden, d)

    def __call__(self, x: Tensor, p: float, rng: np.random.Generator | None) -> Tensor:
        h = self.lin2(ad.relu(self.lin1(ad.layer_norm(x, self.gain, self.shift))))
        if p > 0.0 and rng is not None:
            h = ad.dropout(h, p, rng)
        return ad.add(x, h)


class FeedForwardEncoder:
    """Per-position encoder: residual feed-forward blocks, no cross-position flow.

    Output at position i depends only on input position i, which is exactly
    what distinguishes this baseline from the recurrent and attention
    encoders.
    """

    def __init__(self, store: ParameterStore, name: str, d: int, layers: int, ff_mult: int = 2):
        self.blocks = [
            _FeedForwardBlock(store, f"{name}.block{i}", d, ff_mult * d) for i in range(layers)
        ]
        self.out_gain = store.parameter(f"{name}.out_norm.gain", (d,), init="ones")
        self.out_shift = store.parameter(f"{name}.out_norm.shift", (d,), init="zeros")

    def __call__(
        self, x: Tensor, *, train: bool = False, rng: np.random.Generator | None = None, dropout: float = 0.0
    ) -> Tensor:
        p = dropout if train else 0.0
        for block in self.blocks:
            x = block(x, p, rng)
        return ad.layer_norm(x, self.out_gain, self.out_shift)


class TransformerEncoder:
    """Pre-norm transformer: multi-head self-attention + feed-forward layers.

    A final layer norm closes the pre-norm stack, the usual arrangement for
    training stability.
    """

    def __init__(self, store: ParameterStore, name: str, d: int, layers: int, heads: int, ff_mult: int = 2):
        if d % heads != 0:
            raise ad.ShapeMismatchError(f"width {d} is not divisible by {heads} heads")
        self.d = d
        self.heads = heads
        self.layers = []
        for i in range(layers):
            prefix = f"{name}.layer{i}"
            self.layers.append(
                {
                    "gain": store.parameter(f"{prefix}.attn_norm.gain", (d,), init="ones"),
                    "shift": store.parameter(f"{prefix}.attn_norm.shift", (d,), init="zeros"),
                    "wq": Linear(store, f"{prefix}.wq", d, d),
                    "wk": Linear(store, f"{prefix}.wk", d, d),
                    "wv": Linear(store, f"{prefix}.wv", d, d),
                    "wo": Linear(store, f"{prefix}.wo", d, d),
                    "ff": _FeedForwardBlock(store, f"{prefix}.ff", d, ff_mult * d),
                }
            )
        self.out_gain = store.parameter(f"{name}.out_norm.gain", (d,), init="ones")
        self.out_shift = store.parameter(f"{name}.out_norm.shift", (d,), init="zeros")

    def _attention(self, layer: dict, x: Tensor, p: float, rng) -> Tensor:
        n = x.shape[0]
        dh = self.d // self.heads
        a = ad.layer_norm(x, layer["gain"], layer["shift"])
        # (n, d) -> (heads, n, dh) per projection.
        q = ad.transpose(ad.reshape(layer["wq"](a), (n, self.heads, dh)), (1, 0, 2))
        k = ad.transpose(ad.reshape(layer["wk"](a), (n, self.heads, dh)), (1, 2, 0))
        v = ad.transpose(ad.reshape(layer["wv"](a), (n, self.heads, dh)), (1, 0, 2))
        scores = ad.mul(ad.matmul(q, k), 1.0 / np.sqrt(dh))
        weights = ad.softmax(scores, axis=-1)
        ctx = ad.matmul(weights, v)  # (heads, n, dh)
        ctx = ad.reshape(ad.transpose(ctx, (1, 0, 2)), (n, self.d))
        out = layer["wo"](ctx)
        if p > 0.0 and rng is not None:
            out = ad.dropout(out, p, rng)
        return ad.add(x, out)

    def __call__(
        self, x: Tensor, *, train: bool = False, rng: np.random.Generator | None = None, dropout: float = 0.0
    ) -> Tensor:
        p = dropout if train else 0.0
        for layer in self.layers:
            x = self._attention(layer, x, p, rng)
            x = layer["ff"](x, p, rng)
        return ad.layer_norm(x, self.out_gain, self.out_shift)


class _GruDirection:
    """One direction of a GRU layer; gate order is (reset, update, candidate)."""

    def __init__(self, store: ParameterStore, name: str, d_in: int, hidden: int):
        self.hidden = hidden
        self.w_ih = store.parameter(f"{name}.w_ih", (d_in, 3 * hidden))
        self.b_ih = store.parameter(f"{name}.b_ih", (3 * hidden,), init="zeros")
        self.w_hh = store.parameter(f"{name}.w_hh", (hidden, 3 * hidden))
        self.b_hh = store.parameter(f"{name}.b_hh", (3 * hidden,), init="zeros")

    def __call__(self, x: Tensor, reverse: bool) -> Tensor:
        # One matmul projects every step's input; the fused recurrence then
        # only touches (hidden,)-sized state per step.
        gi = ad.add(ad.matmul(x, self.w_ih), self.b_ih)
        if reverse:
            gi = gi[::-1]
        out = ad.gru_sequence(gi, Tensor(np.zeros(self.hidden)), self.w_hh, self.b_hh)
        return out[::-1] if reverse else out


class GruEncoder:
    """Stacked bidirectional GRU; directions are concatenated then projected back to d."""

    def __init__(self, store: ParameterStore, name: str, d: int, layers: int):
        self.layers = []
        for i in range(layers):
            prefix = f"{name}.layer{i}"
            self.layers.append(
                {
                    "fwd": _GruDirection(store, f"{prefix}.fwd", d, d),
                    "bwd": _GruDirection(store, f"{prefix}.bwd", d, d),
                    "proj": Linear(store, f"{prefix}.proj", 2 * d, d),
                }
            )

    def __call__(
        self, x: Tensor, *, train: bool = False, rng: np.random.Generator | None = None, dropout: float = 0.0
    ) -> Tensor:
        p = dropout if train else 0.0
        for i, layer in enumerate(self.layers):
            forward = layer["fwd"](x, reverse=False)
            backward = layer["bwd"](x, reverse=True)
            x = layer["proj"](ad.concat([forward, backward], axis=1))
            if p > 0.0 and rng is not None and i + 1 < len(self.layers):
                x = ad.dropout(x, p, rng)
        return x


def build_encoder(store: ParameterStore, name: str, kind: str, d: int, layers: int, heads: int):
    """Instantiate an encoder by kind name ('mlp', 'bigru', or 'transformer')."""
    if kind == "mlp":
        return FeedForwardEncoder(store, name, d, layers)
    if kind == "bigru":
        return GruEncoder(store, name, d, layers)
    if kind == "transformer":
        return TransformerEncoder(store, name, d, layers, heads)
    raise ValueError(f"unknown encoder kind {kind!r}")
