"""Masking collator and the Adam training loop with linear LR decay."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from . import model as model_mod
from .model import Checkpoint, ConfigError
from .tokenizer import TokenSeq, Vocab, encode

log = logging.getLogger(__name__)


class TrainingDiverged(RuntimeError):
    """Loss became non-finite during training."""


@dataclass(frozen=True)
class TrainConfig:
    batch_size: int = 64
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    weight_decay: float = 0.01
    epochs: int = 30
    seed: int = 0
    mask_ratio: float = 0.15
    mask_token_prob: float = 0.8
    random_token_prob: float = 0.1
    keep_prob: float = 0.1
    mask_role_tags: bool = False
    adam_eps: float = 1e-6

    def validate(self) -> None:
        if self.batch_size < 1:
            raise ConfigError("batch_size must be positive")
        if self.epochs < 1:
            raise ConfigError("epochs must be positive")
        if self.learning_rate < 0:
            raise ConfigError("learning_rate must be non-negative")
        if not 0.0 < self.mask_ratio < 1.0:
            raise ConfigError("mask_ratio must be in (0, 1)")
        total = self.mask_token_prob + self.random_token_prob + self.keep_prob
        if abs(total - 1.0) > 1e-9:
            raise ConfigError("mask/random/keep probabilities must sum to 1")

    @classmethod
    def desk(cls, **overrides) -> "TrainConfig":
        """From-scratch desk recipe: lr 1e-3, batch 64, 30 epochs."""
        return cls(**overrides)

    @classmethod
    def paper_recipe(cls, **overrides) -> "TrainConfig":
        """Fine-tuning recipe for a pretrained model: lr 1e-5, batch 384,
        50 epochs; slow from random init, kept for reference."""
        base = cls(batch_size=384, learning_rate=1e-5, epochs=50)
        return replace(base, **overrides)


@dataclass
class MaskedBatch:
    input_ids: np.ndarray   # [B, S] with substitutions applied
    lengths: np.ndarray     # [B]
    target_ids: np.ndarray  # [B, S], original id at selected positions else -1
    selection: np.ndarray   # [B, S] bool


def mask_collate(
    ids: np.ndarray,
    lengths: np.ndarray,
    vocab: Vocab,
    rng: np.random.Generator,
    *,
    mask_ratio: float = 0.15,
    mask_token_prob: float = 0.8,
    random_token_prob: float = 0.1,
    keep_prob: float = 0.1,
    mask_role_tags: bool = False,
) -> MaskedBatch:
    """Select eligible tokens independently with probability mask_ratio, then
    replace each selected token with [MASK] / a random non-special token / its
    original value at 0.8 / 0.1 / 0.1.

    Specials are never eligible; role tag tokens are eligible only when
    mask_role_tags is set.  Random replacements are drawn uniformly over
    non-special, non-tag ids.
    """
    if abs(mask_token_prob + random_token_prob + keep_prob - 1.0) > 1e-9:
        raise ValueError("mask/random/keep probabilities must sum to 1")
    ids = np.asarray(ids)
    lengths = np.asarray(lengths)
    excluded = set(vocab.special_ids)
    if not mask_role_tags:
        excluded |= set(vocab.role_tag_ids)
    pool = np.array(
        [
            i
            for i in range(len(vocab))
            if i not in vocab.special_ids and i not in vocab.role_tag_ids
        ],
        dtype=ids.dtype,
    )
    B, S = ids.shape
    in_seq = np.arange(S)[None, :] < lengths[:, None]
    eligible = in_seq & ~np.isin(ids, np.array(sorted(excluded)))
    selection = eligible & (rng.random((B, S)) < mask_ratio)
    channel = rng.random((B, S))
    replacements = pool[rng.integers(0, len(pool), size=(B, S))]
    new_ids = ids.copy()
    use_mask = selection & (channel < mask_token_prob)
    use_random = selection & (channel >= mask_token_prob) & (
        channel < mask_token_prob + random_token_prob
    )
    new_ids[use_mask] = vocab.mask_id
    new_ids[use_random] = replacements[use_random]
    target_ids = np.where(selection, ids, -1)
    return MaskedBatch(
        input_ids=new_ids, lengths=lengths, target_ids=target_ids, selection=selection
    )


def _decayable(params: dict[str, np.ndarray]) -> set[str]:
    return {name for name, p in params.items() if p.ndim >= 2}


def seqs_to_arrays(seqs: Sequence[TokenSeq]) -> tuple[np.ndarray, np.ndarray]:
    ids = np.array([s.ids for s in seqs], dtype=np.int64)
    lengths = np.array([s.length for s in seqs], dtype=np.int64)
    return ids, lengths


def train(
    ckpt: Checkpoint,
    corpus_texts: Sequence[str],
    vocab: Vocab,
    config: TrainConfig,
) -> tuple[Checkpoint, list[float]]:
    """Train with Adam (decoupled weight decay on matrices, linear LR decay to
    zero over all steps); deterministic given config.seed.

    Returns a new checkpoint and the per-epoch mean loss trace.
    """
    config.validate()
    texts = list(corpus_texts)
    if not texts:
        raise ValueError("empty training corpus")
    seqs = [encode(vocab, t, ckpt.config.max_seq) for t in texts]
    ids, lengths = seqs_to_arrays(seqs)
    params = {name: p.copy() for name, p in ckpt.params.items()}
    m_state = {name: np.zeros_like(p) for name, p in params.items()}
    v_state = {name: np.zeros_like(p) for name, p in params.items()}
    decayable = _decayable(params)
    rng = np.random.default_rng(config.seed)
    n = len(seqs)
    steps_per_epoch = math.ceil(n / config.batch_size)
    total_steps = config.epochs * steps_per_epoch
    policy = dict(
        mask_ratio=config.mask_ratio,
        mask_token_prob=config.mask_token_prob,
        random_token_prob=config.random_token_prob,
        keep_prob=config.keep_prob,
        mask_role_tags=config.mask_role_tags,
    )
    trace: list[float] = []
    step = 0
    updates = 0
    for epoch in range(config.epochs):
        order = rng.permutation(n)
        losses: list[float] = []
        for start in range(0, n, config.batch_size):
            chosen = order[start : start + config.batch_size]
            b_len = lengths[chosen]
            S = int(b_len.max())
            b_ids = ids[chosen][:, :S]
            batch = mask_collate(b_ids, b_len, vocab, rng, **policy)
            lr_t = config.learning_rate * max(0.0, 1.0 - step / total_steps)
            step += 1
            if not batch.selection.any():
                continue
            loss, grads = model_mod.loss_and_grads(
                params,
                ckpt.config,
                batch.input_ids,
                batch.lengths,
                batch.target_ids,
                batch.selection,
                rng=rng,
                dropout=ckpt.config.dropout,
            )
            if not math.isfinite(loss):
                raise TrainingDiverged(
                    f"non-finite loss at epoch {epoch + 1}, step {step}"
                )
            losses.append(loss)
            updates += 1
            for name, g in grads.items():
                m = m_state[name]
                v = v_state[name]
                m *= config.beta1
                m += (1.0 - config.beta1) * g
                v *= config.beta2
                v += (1.0 - config.beta2) * g * g
                m_hat = m / (1.0 - config.beta1**updates)
                v_hat = v / (1.0 - config.beta2**updates)
                update = m_hat / (np.sqrt(v_hat) + config.adam_eps)
                if name in decayable:
                    update = update + config.weight_decay * params[name]
                params[name] -= lr_t * update
        epoch_loss = float(np.mean(losses)) if losses else float("nan")
        trace.append(epoch_loss)
        log.info("epoch %d/%d: loss %.4f", epoch + 1, config.epochs, epoch_loss)
    meta = dict(ckpt.meta)
    meta.update(
        seed=config.seed,
        epochs=int(meta.get("epochs", 0)) + config.epochs,
        final_loss=trace[-1] if trace else None,
    )
    return Checkpoint(ckpt.config, params, meta, ckpt.vocab), trace
