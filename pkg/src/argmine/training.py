"""Multi-task training of the segment model (and the token baseline).

The objective combines three cross-entropies: 3-way segment class, 4-way
relation over all ordered segment pairs, and binary major-claim, weighted
1 / 1 / 0.5. Optimization is decoupled-weight-decay Adam with a linear
warmup into cosine decay and global-norm gradient clipping. Everything is
deterministic under a fixed seed on one thread.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import autodiff as ad
from .autodiff import ParameterStore, Tensor
from .documents import Document
from .labels import SegmentLabels
from .model import DocFeatures, ModelConfig, ModelOutputs, SegmentModel, TokenModel, TokenModelConfig, augment

LOG_FLOOR = 1e-12  # cross-entropy clamp against log(0)


class DivergedError(RuntimeError):
    """Raised when training hits a non-finite loss.

    The exception carries the result built from the last finite-loss state
    (best checkpoint so far) in ``last_good``.
    """

    def __init__(self, message: str, last_good: "FitResult | None" = None):
        super().__init__(message)
        self.last_good = last_good


@dataclass(frozen=True)
class TrainConfig:
    """Optimization hyperparameters; the defaults are the reference settings."""

    lambda_component: float = 1.0
    lambda_relation: float = 1.0
    lambda_major: float = 0.5
    lr_max: float = 1e-4
    warmup_epochs: int = 1
    epochs: int = 15
    batch_size: int = 16
    weight_decay: float = 5e-5
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    grad_clip: float = 5.0
    seed: int = 0

    def __post_init__(self) -> None:
        if min(self.lambda_component, self.lambda_relation, self.lambda_major) < 0:
            raise ValueError("loss weights must be >= 0")
        if self.epochs < self.warmup_epochs:
            raise ValueError(f"epochs ({self.epochs}) must be >= warmup_epochs ({self.warmup_epochs})")
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch_size must be >= 1")


# ---------------------------------------------------------------------------
# Losses
# ---------------------------------------------------------------------------


def loss_component(comp_probs: Tensor, labels: np.ndarray) -> Tensor:
    """Summed cross-entropy of the 3-way class head: -sum_i log p_i[y_i]."""
    picked = ad.gather_last(ad.log(comp_probs, floor=LOG_FLOOR), labels)
    return ad.mul(ad.tensor_sum(picked), -1.0)


def loss_relation(rel_probs: Tensor, labels: np.ndarray) -> Tensor:
    """Summed cross-entropy over ALL ordered pairs, diagonal included."""
    picked = ad.gather_last(ad.log(rel_probs, floor=LOG_FLOOR), labels)
    return ad.mul(ad.tensor_sum(picked), -1.0)


def loss_major(major_conf: Tensor, major: np.ndarray) -> Tensor:
    """Summed binary cross-entropy of the major-claim confidence head."""
    targets = major.astype(np.float64)
    log_c = ad.log(major_conf, floor=LOG_FLOOR)
    log_not_c = ad.log(ad.add(ad.mul(major_conf, -1.0), 1.0), floor=LOG_FLOOR)
    per_segment = ad.add(ad.mul(log_c, targets), ad.mul(log_not_c, 1.0 - targets))
    return ad.mul(ad.tensor_sum(per_segment), -1.0)


def total_loss(l_c: Tensor, l_r: Tensor, l_m: Tensor, cfg: TrainConfig) -> Tensor:
    """Weighted multi-task sum: lambda_c*L_c + lambda_r*L_r + lambda_m*L_m."""
    return ad.add(
        ad.add(ad.mul(l_c, cfg.lambda_component), ad.mul(l_r, cfg.lambda_relation)),
        ad.mul(l_m, cfg.lambda_major),
    )


def document_loss(outputs: ModelOutputs, labels: SegmentLabels, cfg: TrainConfig) -> Tensor:
    """Per-document training objective.

    The relation term is divided by n^2 (its pair count) before weighting:
    without that, long documents would be dominated by the quadratic
    relation sum and the 1/1/0.5 weighting would be meaningless across
    variable-length documents.
    """
    n = len(labels.component)
    l_c = loss_component(outputs.comp_probs, labels.component)
    l_r = ad.mul(loss_relation(outputs.rel_probs, labels.relations), 1.0 / (n * n))
    l_m = loss_major(outputs.major_conf, labels.major)
    return total_loss(l_c, l_r, l_m, cfg)


# ---------------------------------------------------------------------------
# Schedule and optimizer
# ---------------------------------------------------------------------------


def lr_at(step: int, total_steps: int, cfg: TrainConfig) -> float:
    """Linear warmup from 0 to lr_max over the first epoch's share of steps,
    then cosine decay to 0 at ``total_steps``."""
    warmup = total_steps * cfg.warmup_epochs / cfg.epochs
    if warmup > 0 and step < warmup:
        return cfg.lr_max * step / warmup
    if total_steps <= warmup:
        return cfg.lr_max
    progress = (step - warmup) / (total_steps - warmup)
    return cfg.lr_max * 0.5 * (1.0 + math.cos(math.pi * progress))


class AdamW:
    """Adam with decoupled weight decay and bias correction.

    A step with zero gradient and zero weight decay leaves parameters
    bit-identical (moments stay zero, so the update term is exactly 0).
    """

    def __init__(self, store: ParameterStore, cfg: TrainConfig):
        self.store = store
        self.cfg = cfg
        self.step_count = 0
        self._m = {name: np.zeros_like(t.data) for name, t in store.items()}
        self._v = {name: np.zeros_like(t.data) for name, t in store.items()}

    def step(self, lr: float) -> None:
        cfg = self.cfg
        self.step_count += 1
        bias1 = 1.0 - cfg.beta1**self.step_count
        bias2 = 1.0 - cfg.beta2**self.step_count
        for name, tensor in self.store.items():
            grad = tensor.grad
            m, v = self._m[name], self._v[name]
            if grad is not None:
                m *= cfg.beta1
                m += (1.0 - cfg.beta1) * grad
                v *= cfg.beta2
                v += (1.0 - cfg.beta2) * grad * grad
            else:
                m *= cfg.beta1
                v *= cfg.beta2
            update = (m / bias1) / (np.sqrt(v / bias2) + cfg.eps)
            tensor.data -= lr * update
            if cfg.weight_decay:
                tensor.data -= lr * cfg.weight_decay * tensor.data


def clip_gradients(store: ParameterStore, max_norm: float) -> float:
    """Scale all gradients so their global L2 norm is at most ``max_norm``.

    Returns the pre-clip norm.
    """
    total = 0.0
    for _, tensor in store.items():
        if tensor.grad is not None:
            total += float(np.sum(tensor.grad * tensor.grad))
    norm = math.sqrt(total)
    if norm > max_norm > 0:
        scale = max_norm / norm
        for _, tensor in store.items():
            if tensor.grad is not None:
                tensor.grad *= scale
    return norm


# ---------------------------------------------------------------------------
# Fit loop
# ---------------------------------------------------------------------------


@dataclass
class FitResult:
    model: SegmentModel
    history: list[dict] = field(default_factory=list)
    best_epoch: int = 0
    best_score: float = float("-inf")


def _snapshot(store: ParameterStore) -> dict[str, np.ndarray]:
    return {name: tensor.data.copy() for name, tensor in store.items()}


def _restore(store: ParameterStore, snapshot: dict[str, np.ndarray]) -> None:
    for name, tensor in store.items():
        tensor.data = snapshot[name].copy()
        tensor.grad = None


def fit(
    train_docs: Sequence[Document],
    val_docs: Sequence[Document],
    model_config: ModelConfig,
    train_config: TrainConfig,
    checkpoint_dir: str | Path | None = None,
    log_path: str | Path | None = None,
) -> FitResult:
    """Train a segment model; keep the epoch with the best validation score.

    Every document must be annotated. Documents are shuffled each epoch and
    batched ``batch_size`` at a time; each batch's gradient is the mean of
    its per-document gradients. The selection scalar is weighted component
    F1 on the validation documents. Per-epoch metrics are appended to
    ``log_path`` as JSON lines when given; the best checkpoint is written
    to ``checkpoint_dir`` when given. A non-finite loss raises
    :class:`DivergedError` after restoring (and saving) the best state so
    far.
    """
    from .evaluation import evaluate_features  # local import to avoid a cycle

    if not train_docs:
        raise ValueError("fit needs at least one training document")
    root = np.random.SeedSequence(train_config.seed)
    init_seed, shuffle_seed, dropout_seed = root.spawn(3)
    model = SegmentModel(model_config, seed=init_seed)
    shuffle_rng = np.random.default_rng(shuffle_seed)
    dropout_rng = np.random.default_rng(dropout_seed)

    def _featurize_all(docs: Sequence[Document], role: str) -> list[DocFeatures]:
        feats = []
        for doc in docs:
            if doc.annotation is None:
                raise ValueError(f"{role} document {doc.doc_id!r} has no annotation")
            feats.append(model.featurize(doc))
        return feats

    train_feats = _featurize_all(train_docs, "training")
    val_feats = _featurize_all(val_docs, "validation")

    steps_per_epoch = math.ceil(len(train_feats) / train_config.batch_size)
    total_steps = steps_per_epoch * train_config.epochs
    optimizer = AdamW(model.store, train_config)
    result = FitResult(model=model)
    best_params = _snapshot(model.store)
    log_file = Path(log_path).open("a", encoding="utf-8") if log_path else None

    def _finish(diverged_at: str | None = None) -> FitResult:
        _restore(model.store, best_params)
        if checkpoint_dir is not None:
            model.save(checkpoint_dir)
        if log_file is not None:
            log_file.close()
        if diverged_at is not None:
            raise DivergedError(f"non-finite loss at {diverged_at}", last_good=result)
        return result

    step = 0
    for epoch in range(1, train_config.epochs + 1):
        order = shuffle_rng.permutation(len(train_feats))
        epoch_loss = 0.0
        last_lr = 0.0
        for start in range(0, len(order), train_config.batch_size):
            batch = order[start : start + train_config.batch_size]
            last_lr = lr_at(step, total_steps, train_config)
            model.store.zero_grad()
            for index in batch:
                feats = train_feats[index]
                outputs = model.forward(feats, train=True, rng=dropout_rng)
                loss = document_loss(outputs, feats.labels, train_config)
                value = loss.item()
                if not math.isfinite(value):
                    return _finish(diverged_at=f"epoch {epoch}, doc {feats.doc_id!r}")
                loss.backward(seed=1.0 / len(batch))
                epoch_loss += value
            clip_gradients(model.store, train_config.grad_clip)
            optimizer.step(last_lr)
            step += 1

        report = evaluate_features(model, val_feats) if val_feats else None
        score = report.component.weighted if report else -epoch_loss
        record = {
            "epoch": epoch,
            "train_loss": epoch_loss / len(train_feats),
            "lr": last_lr,
            "val_component_weighted_f1": report.component.weighted if report else None,
            "val_relation_weighted_f1": report.relation.weighted if report else None,
            "val_major_density": report.major_density if report else None,
        }
        result.history.append(record)
        if log_file is not None:
            log_file.write(json.dumps(record) + "\n")
            log_file.flush()
        if score > result.best_score:
            result.best_score = score
            result.best_epoch = epoch
            best_params = _snapshot(model.store)

    return _finish()


# ---------------------------------------------------------------------------
# Token-model training
# ---------------------------------------------------------------------------

_AUGMENT_KINDS = ("mask", "swap", "repeat")


def fit_token_model(
    train_docs: Sequence[Document],
    config: TokenModelConfig = TokenModelConfig(),
    train_config: TrainConfig = TrainConfig(),
    p_aug: float = 0.3,
    ratio: float = 0.15,
) -> tuple[TokenModel, list[dict]]:
    """Train the per-segment token baseline on component classes.

    Samples are individual segments; each training pass randomly augments
    the token sequences (mask/swap/repeat, chosen uniformly) before
    embedding. Returns the trained model and a per-epoch loss history.
    """
    from .labels import derive_labels
    from .model import char_tokens, word_tokens

    samples: list[tuple[list[str], list[str], int]] = []
    for doc in train_docs:
        if doc.annotation is None:
            raise ValueError(f"document {doc.doc_id!r} has no annotation")
        labels = derive_labels(doc.annotation, len(doc.segments))
        for segment, label in zip(doc.segments, labels.component):
            samples.append((char_tokens(segment.text), word_tokens(segment.text), int(label)))

    root = np.random.SeedSequence(train_config.seed)
    init_seed, shuffle_seed, aug_seed, dropout_seed = root.spawn(4)
    model = TokenModel(config, seed=init_seed)
    shuffle_rng = np.random.default_rng(shuffle_seed)
    aug_rng = np.random.default_rng(aug_seed)
    dropout_rng = np.random.default_rng(dropout_seed)
    optimizer = AdamW(model.store, train_config)

    steps_per_epoch = math.ceil(len(samples) / train_config.batch_size)
    total_steps = steps_per_epoch * train_config.epochs
    history = []
    step = 0
    for epoch in range(1, train_config.epochs + 1):
        order = shuffle_rng.permutation(len(samples))
        epoch_loss = 0.0
        for start in range(0, len(order), train_config.batch_size):
            batch = order[start : start + train_config.batch_size]
            lr = lr_at(step, total_steps, train_config)
            model.store.zero_grad()
            for index in batch:
                chars, words, label = samples[index]
                kind = _AUGMENT_KINDS[int(aug_rng.integers(len(_AUGMENT_KINDS)))]
                chars = augment(chars, aug_rng, kind=kind, p_aug=p_aug, ratio=ratio)
                words = augment(words, aug_rng, kind=kind, p_aug=p_aug, ratio=ratio)
                probs_c = model.forward_view(chars, "char", train=True, rng=dropout_rng)
                probs_w = model.forward_view(words, "word", train=True, rng=dropout_rng)
                probs = ad.mul(ad.add(probs_c, probs_w), 0.5)
                picked = ad.gather_last(
                    ad.reshape(ad.log(probs, floor=LOG_FLOOR), (1, 3)), np.array([label])
                )
                loss = ad.mul(ad.tensor_sum(picked), -1.0)
                value = loss.item()
                if not math.isfinite(value):
                    raise DivergedError(f"non-finite token loss at epoch {epoch}")
                loss.backward(seed=1.0 / len(batch))
                epoch_loss += value
            clip_gradients(model.store, train_config.grad_clip)
            optimizer.step(lr)
            step += 1
        history.append({"epoch": epoch, "train_loss": epoch_loss / len(samples)})
    return model, history
