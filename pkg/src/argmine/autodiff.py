"""Minimal dense-tensor engine with reverse-mode gradients.

Everything runs on numpy float64. A :class:`Tensor` wraps an ndarray and,
when produced by an operation on tensors that require gradients, records a
backward rule. Calling :meth:`Tensor.backward` on a scalar loss walks the
graph in reverse topological order and accumulates gradients into every
participating leaf.

The op set is exactly what the models need: broadcasting add/mul, matmul
(2D and batched), concat/stack/slicing, the usual nonlinearities, softmax,
layer norm, dropout, embedding row lookup, and a fused GRU cell. Each op
has a hand-written backward; all of them are checked against central
finite differences in the test suite.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Callable, Iterator, Sequence

import numpy as np


class ShapeMismatchError(ValueError):
    """Raised when operand shapes are incompatible, naming both shapes."""


class NonScalarLossError(ValueError):
    """Raised when backward() is called on a tensor that is not a scalar."""


def _as_array(value) -> np.ndarray:
    return np.asarray(value, dtype=np.float64)


class Tensor:
    """A float64 array plus an optional backward-graph record.

    ``requires_grad`` marks leaves created by the caller; tensors produced
    by ops require gradients whenever any input does. ``grad`` is allocated
    lazily on first accumulation and always matches ``data`` in shape.
    """

    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward")

    def __init__(self, data, requires_grad: bool = False):
        self.data = _as_array(data)
        self.grad: np.ndarray | None = None
        self.requires_grad = requires_grad
        self._parents: tuple[Tensor, ...] = ()
        self._backward: Callable[[np.ndarray], None] | None = None

    # -- basic introspection -------------------------------------------------

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    def item(self) -> float:
        return float(self.data)

    def detach(self) -> "Tensor":
        """A gradient-isolated view of the same values."""
        return Tensor(self.data, requires_grad=False)

    def __repr__(self) -> str:
        flag = ", requires_grad=True" if self.requires_grad else ""
        return f"Tensor(shape={self.data.shape}{flag})"

    # -- graph plumbing ------------------------------------------------------

    def _accumulate(self, grad: np.ndarray) -> None:
        if not self.requires_grad:
            return
        if self.grad is None:
            self.grad = np.zeros_like(self.data)
        self.grad += grad

    def backward(self, seed: float | np.ndarray | None = None, free_graph: bool = True) -> None:
        """Accumulate d(self)/d(leaf) into every reachable leaf's ``grad``.

        ``self`` must be a scalar. ``seed`` overrides the initial gradient
        (default 1.0); passing e.g. ``1/k`` folds a mean over k losses into
        the per-loss backward calls. Repeated calls keep accumulating, so
        callers batch by summing gradients across documents. With
        ``free_graph`` the node records are dropped afterward so the
        intermediate arrays can be reclaimed.
        """
        if self.data.size != 1:
            raise NonScalarLossError(f"backward() needs a scalar loss, got shape {self.data.shape}")
        if not self.requires_grad:
            return  # nothing reachable requires gradients

        topo: list[Tensor] = []
        seen: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                topo.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for parent in node._parents:
                if parent.requires_grad and id(parent) not in seen:
                    stack.append((parent, False))

        if seed is None:
            initial = np.ones_like(self.data)
        else:
            initial = np.broadcast_to(_as_array(seed), self.data.shape).copy()
        self._accumulate(initial)

        for node in reversed(topo):
            if node._backward is None:
                continue  # leaf: keep its accumulated gradient
            node._backward(node.grad)
            if free_graph:
                node._backward = None
                node._parents = ()
                node.grad = None

    # -- operator sugar ------------------------------------------------------

    def __add__(self, other) -> "Tensor":
        return add(self, other)

    __radd__ = __add__

    def __mul__(self, other) -> "Tensor":
        return mul(self, other)

    __rmul__ = __mul__

    def __neg__(self) -> "Tensor":
        return mul(self, -1.0)

    def __sub__(self, other) -> "Tensor":
        return add(self, mul(other, -1.0) if isinstance(other, Tensor) else -_as_array(other))

    def __rsub__(self, other) -> "Tensor":
        return add(mul(self, -1.0), other)

    def __truediv__(self, other) -> "Tensor":
        if isinstance(other, Tensor):
            raise TypeError("tensor/tensor division is not supported; multiply by a reciprocal")
        return mul(self, 1.0 / float(other))

    def __matmul__(self, other) -> "Tensor":
        return matmul(self, other)

    def __getitem__(self, index) -> "Tensor":
        return getitem(self, index)


def _wrap(value) -> Tensor:
    return value if isinstance(value, Tensor) else Tensor(value)


def _make(data: np.ndarray, parents: tuple[Tensor, ...], backward) -> Tensor:
    out = Tensor(data)
    if any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = parents
        out._backward = backward
    return out


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum ``grad`` down to ``shape``, undoing numpy broadcasting."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, dim in enumerate(shape):
        if dim == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


# -- arithmetic ---------------------------------------------------------------


def add(a, b) -> Tensor:
    a, b = _wrap(a), _wrap(b)
    try:
        data = a.data + b.data
    except ValueError:
        raise ShapeMismatchError(f"cannot add shapes {a.data.shape} and {b.data.shape}") from None

    def backward(g: np.ndarray) -> None:
        a._accumulate(_unbroadcast(g, a.data.shape))
        b._accumulate(_unbroadcast(g, b.data.shape))

    return _make(data, (a, b), backward)


def mul(a, b) -> Tensor:
    a, b = _wrap(a), _wrap(b)
    try:
        data = a.data * b.data
    except ValueError:
        raise ShapeMismatchError(f"cannot multiply shapes {a.data.shape} and {b.data.shape}") from None

    def backward(g: np.ndarray) -> None:
        a._accumulate(_unbroadcast(g * b.data, a.data.shape))
        b._accumulate(_unbroadcast(g * a.data, b.data.shape))

    return _make(data, (a, b), backward)


def matmul(a, b) -> Tensor:
    a, b = _wrap(a), _wrap(b)
    if a.ndim < 2 or b.ndim < 2:
        raise ShapeMismatchError(f"matmul needs 2D+ operands, got {a.data.shape} and {b.data.shape}")
    if a.data.shape[-1] != b.data.shape[-2]:
        raise ShapeMismatchError(f"matmul inner dims differ: {a.data.shape} vs {b.data.shape}")
    data = a.data @ b.data

    def backward(g: np.ndarray) -> None:
        a._accumulate(_unbroadcast(g @ b.data.swapaxes(-1, -2), a.data.shape))
        b._accumulate(_unbroadcast(a.data.swapaxes(-1, -2) @ g, b.data.shape))

    return _make(data, (a, b), backward)


# -- nonlinearities -----------------------------------------------------------


def sigmoid(x) -> Tensor:
    x = _wrap(x)
    # Branch on sign for numerical stability at large |x|.
    positive = x.data >= 0
    z = np.where(positive, -x.data, x.data)
    e = np.exp(z)
    data = np.where(positive, 1.0 / (1.0 + e), e / (1.0 + e))

    def backward(g: np.ndarray) -> None:
        x._accumulate(g * data * (1.0 - data))

    return _make(data, (x,), backward)


def tanh(x) -> Tensor:
    x = _wrap(x)
    data = np.tanh(x.data)

    def backward(g: np.ndarray) -> None:
        x._accumulate(g * (1.0 - data * data))

    return _make(data, (x,), backward)


def relu(x) -> Tensor:
    x = _wrap(x)
    data = np.maximum(x.data, 0.0)

    def backward(g: np.ndarray) -> None:
        x._accumulate(g * (x.data > 0.0))

    return _make(data, (x,), backward)


def exp(x) -> Tensor:
    x = _wrap(x)
    data = np.exp(x.data)

    def backward(g: np.ndarray) -> None:
        x._accumulate(g * data)

    return _make(data, (x,), backward)


def log(x, floor: float | None = None) -> Tensor:
    """Natural log; with ``floor`` the input is clamped from below first.

    The clamp guards cross-entropy terms against log(0); its gradient is
    zero wherever the clamp is active.
    """
    x = _wrap(x)
    if floor is None:
        clamped = x.data
    else:
        clamped = np.maximum(x.data, floor)
    data = np.log(clamped)

    def backward(g: np.ndarray) -> None:
        inner = g / clamped
        if floor is not None:
            inner = inner * (x.data > floor)
        x._accumulate(inner)

    return _make(data, (x,), backward)


def softmax(x, axis: int = -1) -> Tensor:
    x = _wrap(x)
    shifted = x.data - x.data.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    data = e / e.sum(axis=axis, keepdims=True)

    def backward(g: np.ndarray) -> None:
        inner = data * (g - (g * data).sum(axis=axis, keepdims=True))
        x._accumulate(inner)

    return _make(data, (x,), backward)


# -- reductions and shaping ---------------------------------------------------


def _restore_reduced(g: np.ndarray, shape: tuple[int, ...], axis, keepdims: bool) -> np.ndarray:
    if axis is None:
        return np.broadcast_to(g, shape)
    axes = (axis,) if isinstance(axis, int) else tuple(axis)
    if not keepdims:
        for ax in sorted(ax % len(shape) for ax in axes):
            g = np.expand_dims(g, ax)
    return np.broadcast_to(g, shape)


def tensor_sum(x, axis=None, keepdims: bool = False) -> Tensor:
    x = _wrap(x)
    data = x.data.sum(axis=axis, keepdims=keepdims)

    def backward(g: np.ndarray) -> None:
        x._accumulate(_restore_reduced(g, x.data.shape, axis, keepdims).copy())

    return _make(data, (x,), backward)


def mean(x, axis=None, keepdims: bool = False) -> Tensor:
    x = _wrap(x)
    data = x.data.mean(axis=axis, keepdims=keepdims)
    count = x.data.size // data.size if data.size else 1

    def backward(g: np.ndarray) -> None:
        x._accumulate(_restore_reduced(g, x.data.shape, axis, keepdims) / count)

    return _make(data, (x,), backward)


def reshape(x, shape: Sequence[int]) -> Tensor:
    x = _wrap(x)
    data = x.data.reshape(shape)

    def backward(g: np.ndarray) -> None:
        x._accumulate(g.reshape(x.data.shape))

    return _make(data, (x,), backward)


def transpose(x, axes: Sequence[int] | None = None) -> Tensor:
    x = _wrap(x)
    data = np.transpose(x.data, axes)
    inverse = None if axes is None else np.argsort(axes)

    def backward(g: np.ndarray) -> None:
        x._accumulate(np.transpose(g, inverse))

    return _make(data, (x,), backward)


def concat(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    tensors = [_wrap(t) for t in tensors]
    if not tensors:
        raise ShapeMismatchError("concat needs at least one tensor")
    try:
        data = np.concatenate([t.data for t in tensors], axis=axis)
    except ValueError:
        shapes = [t.data.shape for t in tensors]
        raise ShapeMismatchError(f"cannot concatenate shapes {shapes} along axis {axis}") from None
    sizes = [t.data.shape[axis] for t in tensors]
    splits = np.cumsum(sizes)[:-1]

    def backward(g: np.ndarray) -> None:
        for t, piece in zip(tensors, np.split(g, splits, axis=axis)):
            t._accumulate(piece)

    return _make(data, tuple(tensors), backward)


def stack(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    tensors = [_wrap(t) for t in tensors]
    if not tensors:
        raise ShapeMismatchError("stack needs at least one tensor")
    data = np.stack([t.data for t in tensors], axis=axis)

    def backward(g: np.ndarray) -> None:
        for i, t in enumerate(tensors):
            t._accumulate(np.take(g, i, axis=axis))

    return _make(data, tuple(tensors), backward)


def getitem(x, index) -> Tensor:
    """Slice or fancy-index a tensor; also serves as embedding row lookup."""
    x = _wrap(x)
    data = x.data[index]

    if isinstance(index, (int, np.integer)):
        # Row access is the hot path of the recurrent loop: write straight
        # into the parent's gradient buffer instead of allocating a
        # full-size scratch array per step.
        def backward(g: np.ndarray) -> None:
            if x.grad is None:
                x.grad = np.zeros_like(x.data)
            x.grad[index] += g

    else:

        def backward(g: np.ndarray) -> None:
            full = np.zeros_like(x.data)
            np.add.at(full, index, g)
            x._accumulate(full)

    return _make(data, (x,), backward)


def gather_last(x, index: np.ndarray) -> Tensor:
    """Pick one entry along the last axis per leading position.

    ``index`` has the leading shape of ``x``; the output drops the last
    axis. This is the label-selection step of the cross-entropy losses.
    """
    x = _wrap(x)
    idx = np.asarray(index, dtype=np.int64)
    if idx.shape != x.data.shape[:-1]:
        raise ShapeMismatchError(f"gather index shape {idx.shape} does not match leading {x.data.shape}")
    data = np.take_along_axis(x.data, idx[..., None], axis=-1)[..., 0]

    def backward(g: np.ndarray) -> None:
        full = np.zeros_like(x.data)
        np.put_along_axis(full, idx[..., None], g[..., None], axis=-1)
        x._accumulate(full)

    return _make(data, (x,), backward)


# -- regularization and normalization ------------------------------------------


def dropout(x, p: float, rng: np.random.Generator) -> Tensor:
    """Inverted dropout; callers skip the op entirely in eval mode."""
    x = _wrap(x)
    if p <= 0.0:
        return x
    if not 0.0 <= p < 1.0:
        raise ValueError(f"dropout rate must be in [0, 1), got {p}")
    mask = (rng.random(x.data.shape) >= p) / (1.0 - p)
    data = x.data * mask

    def backward(g: np.ndarray) -> None:
        x._accumulate(g * mask)

    return _make(data, (x,), backward)


def layer_norm(x, gain: Tensor, bias: Tensor, eps: float = 1e-5) -> Tensor:
    """Normalize the last axis to zero mean / unit variance, then affine."""
    x, gain, bias = _wrap(x), _wrap(gain), _wrap(bias)
    width = x.data.shape[-1]
    if gain.data.shape != (width,) or bias.data.shape != (width,):
        raise ShapeMismatchError(
            f"layer_norm gain/bias must be ({width},), got {gain.data.shape} and {bias.data.shape}"
        )
    mu = x.data.mean(axis=-1, keepdims=True)
    centered = x.data - mu
    var = (centered * centered).mean(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    normed = centered * inv
    data = normed * gain.data + bias.data

    def backward(g: np.ndarray) -> None:
        lead = tuple(range(g.ndim - 1))
        gain._accumulate((g * normed).sum(axis=lead))
        bias._accumulate(g.sum(axis=lead))
        gn = g * gain.data
        # Standard fused layer-norm input gradient.
        dx = (
            gn - gn.mean(axis=-1, keepdims=True) - normed * (gn * normed).mean(axis=-1, keepdims=True)
        ) * inv
        x._accumulate(dx)

    return _make(data, (x, gain, bias), backward)


# -- fused recurrent cell -------------------------------------------------------


def gru_cell(gi: Tensor, h: Tensor, w_hh: Tensor, b_hh: Tensor) -> Tensor:
    """One GRU step, fused into a single graph node.

    ``gi`` is the precomputed input projection ``x_t @ W_ih + b_ih`` of
    shape (3H,) with gate order (reset, update, candidate); ``h`` is the
    previous hidden state (H,); ``w_hh`` is (H, 3H). Fusing the step keeps
    the graph small enough to run sequence models over long documents at
    acceptable cost.
    """
    hidden = h.data.shape[-1]
    if gi.data.shape[-1] != 3 * hidden or w_hh.data.shape != (hidden, 3 * hidden):
        raise ShapeMismatchError(
            f"gru_cell shapes inconsistent: gi {gi.data.shape}, h {h.data.shape}, w_hh {w_hh.data.shape}"
        )
    gh = h.data @ w_hh.data + b_hh.data
    gi_r, gi_z, gi_n = gi.data[:hidden], gi.data[hidden : 2 * hidden], gi.data[2 * hidden :]
    gh_r, gh_z, gh_n = gh[:hidden], gh[hidden : 2 * hidden], gh[2 * hidden :]

    def _sig(v: np.ndarray) -> np.ndarray:
        positive = v >= 0
        e = np.exp(np.where(positive, -v, v))
        return np.where(positive, 1.0 / (1.0 + e), e / (1.0 + e))

    r = _sig(gi_r + gh_r)
    z = _sig(gi_z + gh_z)
    n = np.tanh(gi_n + r * gh_n)
    data = (1.0 - z) * n + z * h.data

    def backward(g: np.ndarray) -> None:
        dn = g * (1.0 - z)
        dz = g * (h.data - n)
        dn_pre = dn * (1.0 - n * n)
        dr = dn_pre * gh_n
        dz_pre = dz * z * (1.0 - z)
        dr_pre = dr * r * (1.0 - r)
        dgi = np.concatenate([dr_pre, dz_pre, dn_pre])
        dgh = np.concatenate([dr_pre, dz_pre, dn_pre * r])
        gi._accumulate(dgi)
        h._accumulate(g * z + dgh @ w_hh.data.T)
        w_hh._accumulate(np.outer(h.data, dgh))
        b_hh._accumulate(dgh)

    return _make(data, (gi, h, w_hh, b_hh), backward)


def gru_sequence(gi: Tensor, h0: Tensor, w_hh: Tensor, b_hh: Tensor) -> Tensor:
    """Run a GRU over a whole sequence as one graph node.

    ``gi`` holds the precomputed input projections, one (3H,) row per step,
    gate order (reset, update, candidate); ``h0`` is the initial state.
    Semantically identical to folding :func:`gru_cell` over the rows, but
    the backward pass batches the recurrent-weight gradient into a single
    matrix product instead of one outer product per step, which is what
    makes document-scale training affordable.
    """
    hidden = h0.data.shape[-1]
    steps = gi.data.shape[0]
    if gi.data.ndim != 2 or gi.data.shape[1] != 3 * hidden or w_hh.data.shape != (hidden, 3 * hidden):
        raise ShapeMismatchError(
            f"gru_sequence shapes inconsistent: gi {gi.data.shape}, h0 {h0.data.shape}, "
            f"w_hh {w_hh.data.shape}"
        )

    def _sig(v: np.ndarray) -> np.ndarray:
        positive = v >= 0
        e = np.exp(np.where(positive, -v, v))
        return np.where(positive, 1.0 / (1.0 + e), e / (1.0 + e))

    h_prev = np.empty((steps, hidden))
    r_all = np.empty((steps, hidden))
    z_all = np.empty((steps, hidden))
    n_all = np.empty((steps, hidden))
    ghn_all = np.empty((steps, hidden))
    outputs = np.empty((steps, hidden))
    h = h0.data
    w = w_hh.data
    bias = b_hh.data
    for t in range(steps):
        h_prev[t] = h
        gh = h @ w + bias
        git = gi.data[t]
        r = _sig(git[:hidden] + gh[:hidden])
        z = _sig(git[hidden : 2 * hidden] + gh[hidden : 2 * hidden])
        ghn = gh[2 * hidden :]
        n = np.tanh(git[2 * hidden :] + r * ghn)
        h = (1.0 - z) * n + z * h
        r_all[t], z_all[t] = r, z
        n_all[t], ghn_all[t] = n, ghn
        outputs[t] = h

    def backward(g: np.ndarray) -> None:
        dgi = np.empty((steps, 3 * hidden))
        dgh = np.empty((steps, 3 * hidden))
        w_t = w_hh.data.T
        dh = np.zeros(hidden)
        for t in range(steps - 1, -1, -1):
            gt = g[t] + dh
            r, z, n, ghn = r_all[t], z_all[t], n_all[t], ghn_all[t]
            dn_pre = gt * (1.0 - z) * (1.0 - n * n)
            dz_pre = gt * (h_prev[t] - n) * z * (1.0 - z)
            dr_pre = dn_pre * ghn * r * (1.0 - r)
            dgi[t, :hidden] = dr_pre
            dgi[t, hidden : 2 * hidden] = dz_pre
            dgi[t, 2 * hidden :] = dn_pre
            dgh[t, :hidden] = dr_pre
            dgh[t, hidden : 2 * hidden] = dz_pre
            dgh[t, 2 * hidden :] = dn_pre * r
            dh = gt * z + dgh[t] @ w_t
        gi._accumulate(dgi)
        h0._accumulate(dh)
        w_hh._accumulate(h_prev.T @ dgh)
        b_hh._accumulate(dgh.sum(axis=0))

    return _make(outputs, (gi, h0, w_hh, b_hh), backward)


# -- gradient checking ----------------------------------------------------------


def numerical_gradient(fn: Callable[[], Tensor], leaf: Tensor, eps: float = 1e-5) -> np.ndarray:
    """Central-difference gradient of ``fn()`` (a scalar) w.r.t. ``leaf``.

    ``fn`` must recompute the loss from ``leaf.data`` on every call. This
    is the oracle the analytic backward passes are verified against.
    """
    grad = np.zeros_like(leaf.data)
    flat = leaf.data.ravel()
    out = grad.ravel()
    for i in range(flat.size):
        original = flat[i]
        flat[i] = original + eps
        hi = fn().item()
        flat[i] = original - eps
        lo = fn().item()
        flat[i] = original
        out[i] = (hi - lo) / (2.0 * eps)
    return grad


def max_relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    """Infinity-norm relative disagreement between two gradient arrays."""
    diff = float(np.max(np.abs(analytic - numeric))) if analytic.size else 0.0
    scale = max(
        float(np.max(np.abs(analytic))) if analytic.size else 0.0,
        float(np.max(np.abs(numeric))) if numeric.size else 0.0,
        1e-8,
    )
    return diff / scale


# -- parameter store --------------------------------------------------------------

_CHECKPOINT_FORMAT = "argmine-checkpoint-v1"
_PARAMS_FILE = "params.bin"
_MANIFEST_FILE = "manifest.json"


class ParameterStore:
    """Named learnable tensors plus deterministic init and checkpoint I/O.

    Creation order is the serialization order, so a model that builds its
    parameters deterministically gets bit-identical checkpoints for a
    fixed seed. The store owns the RNG used for initialization.
    """

    def __init__(self, rng: np.random.Generator):
        self._params: dict[str, Tensor] = {}
        self._rng = rng

    def parameter(self, name: str, shape: Sequence[int], init: str = "fan_in") -> Tensor:
        """Create and register a learnable tensor.

        ``init`` is one of ``fan_in`` (uniform within +-1/sqrt(shape[0]),
        the convention for weights applied as x @ W), ``normal``
        (N(0, 0.02), the convention for embedding tables), ``zeros``, or
        ``ones``.
        """
        if name in self._params:
            raise ValueError(f"parameter {name!r} already exists")
        shape = tuple(int(s) for s in shape)
        if init == "fan_in":
            limit = 1.0 / np.sqrt(shape[0])
            data = self._rng.uniform(-limit, limit, size=shape)
        elif init == "normal":
            data = self._rng.normal(0.0, 0.02, size=shape)
        elif init == "zeros":
            data = np.zeros(shape)
        elif init == "ones":
            data = np.ones(shape)
        else:
            raise ValueError(f"unknown init {init!r}")
        tensor = Tensor(data, requires_grad=True)
        self._params[name] = tensor
        return tensor

    def __getitem__(self, name: str) -> Tensor:
        return self._params[name]

    def __contains__(self, name: str) -> bool:
        return name in self._params

    def __len__(self) -> int:
        return len(self._params)

    def names(self) -> list[str]:
        return list(self._params)

    def items(self) -> Iterator[tuple[str, Tensor]]:
        return iter(self._params.items())

    def tensors(self) -> list[Tensor]:
        return list(self._params.values())

    def num_values(self) -> int:
        return sum(t.size for t in self._params.values())

    def zero_grad(self) -> None:
        for tensor in self._params.values():
            tensor.grad = None

    # -- checkpointing ---------------------------------------------------------

    def save(self, directory: str | Path, metadata: dict | None = None) -> None:
        """Write ``params.bin`` (raw little-endian doubles) plus a manifest.

        The manifest records name, shape, and element offset per parameter
        and carries caller metadata (model config and its hash) verbatim.
        """
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        entries = []
        offset = 0
        chunks = []
        for name, tensor in self._params.items():
            entries.append({"name": name, "shape": list(tensor.data.shape), "offset": offset})
            flat = np.ascontiguousarray(tensor.data, dtype="<f8").ravel()
            chunks.append(flat.tobytes())
            offset += flat.size
        manifest = {
            "format": _CHECKPOINT_FORMAT,
            "dtype": "<f8",
            "total_values": offset,
            "metadata": metadata or {},
            "params": entries,
        }
        (directory / _PARAMS_FILE).write_bytes(b"".join(chunks))
        (directory / _MANIFEST_FILE).write_text(json.dumps(manifest, indent=2, sort_keys=True))

    @staticmethod
    def read_manifest(directory: str | Path) -> dict:
        manifest = json.loads((Path(directory) / _MANIFEST_FILE).read_text())
        if manifest.get("format") != _CHECKPOINT_FORMAT:
            raise ValueError(f"unrecognized checkpoint format {manifest.get('format')!r}")
        return manifest

    def load(self, directory: str | Path) -> dict:
        """Restore parameter values from a checkpoint directory.

        The stored names and shapes must match this store exactly. Returns
        the manifest metadata so callers can check config compatibility.
        """
        directory = Path(directory)
        manifest = self.read_manifest(directory)
        raw = np.frombuffer((directory / _PARAMS_FILE).read_bytes(), dtype="<f8")
        if raw.size != manifest["total_values"]:
            raise ValueError(
                f"checkpoint payload holds {raw.size} values, manifest expects {manifest['total_values']}"
            )
        stored = {entry["name"]: entry for entry in manifest["params"]}
        if set(stored) != set(self._params):
            missing = sorted(set(self._params) - set(stored))
            extra = sorted(set(stored) - set(self._params))
            raise ValueError(f"checkpoint parameter names differ: missing {missing}, unexpected {extra}")
        for name, tensor in self._params.items():
            entry = stored[name]
            shape = tuple(entry["shape"])
            if shape != tensor.data.shape:
                raise ShapeMismatchError(
                    f"checkpoint shape {shape} for {name!r} does not match model shape {tensor.data.shape}"
                )
            count = int(np.prod(shape)) if shape else 1
            start = entry["offset"]
            tensor.data = raw[start : start + count].reshape(shape).astype(np.float64).copy()
            tensor.grad = None
        return manifest.get("metadata", {})
