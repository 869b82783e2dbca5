"""End-to-end pipeline shared by the CLI, the service, and the test suite."""

from __future__ import annotations

import logging
from typing import Sequence

from .corpus import CorpusSplit, Sentence, render_flat, render_tagged
from .model import Checkpoint, ModelConfig, init_model, extend_embeddings
from .tokenizer import (
    Vocab,
    add_mwe_tokens,
    add_role_tokens,
    encode_pieces,
    train_subword,
)
from .training import TrainConfig, train

log = logging.getLogger(__name__)

DEFAULT_VOCAB_SIZE = 1500

# Multi-word expressions injected into the tagged-mode vocabulary; drawn from
# the sample board's multi-word captions.
DEFAULT_MWES = (
    "querer comer",
    "querer beber",
    "fazer xixi",
    "tomar banho",
    "de manhã",
)


def render_texts(sentences: Sequence[Sentence], mode: str) -> list[str]:
    if mode == "cs":
        return [render_tagged(s) for s in sentences]
    if mode == "flat":
        return [render_flat(s) for s in sentences]
    raise ValueError(f"unknown mode {mode!r}")


def build_vocab_and_model(
    train_texts: Sequence[str],
    mode: str,
    seed: int,
    *,
    vocab_size: int = DEFAULT_VOCAB_SIZE,
    mwes: Sequence[str] = DEFAULT_MWES,
    model_overrides: dict | None = None,
) -> tuple[Vocab, Checkpoint]:
    """Train the subword vocabulary and initialize a model over it.

    Tagged mode extends the vocabulary with the 12 role tag tokens and the MWE
    tokens, appending their mean-vector rows to the embedding table; flat mode
    leaves the vocabulary untouched.
    """
    vocab = train_subword(train_texts, vocab_size)
    config = ModelConfig.desk(vocab_size=len(vocab), **(model_overrides or {}))
    ckpt = init_model(config, seed)
    if mode == "cs":
        table = ckpt.params["embeddings.word"]
        vocab, tag_rows = add_role_tokens(vocab, lambda i: table[i])
        ckpt = extend_embeddings(ckpt, tag_rows)
        table = ckpt.params["embeddings.word"]
        vocab, mwe_rows = add_mwe_tokens(vocab, mwes, lambda i: table[i])
        ckpt = extend_embeddings(ckpt, mwe_rows)
    ckpt.vocab = vocab
    ckpt.meta["mode"] = mode
    return vocab, ckpt


def check_sequence_lengths(
    texts: Sequence[str], vocab: Vocab, max_seq: int
) -> int:
    """Longest encoded length (with [CLS]/[SEP]); raises if any text would be
    truncated."""
    longest = 0
    for text in texts:
        need = len(encode_pieces(vocab, text)) + 2
        longest = max(longest, need)
        if need > max_seq:
            raise ValueError(
                f"text needs {need} tokens but max_seq is {max_seq}: {text!r}"
            )
    return longest


def train_from_split(
    split: CorpusSplit,
    mode: str,
    *,
    seed: int = 42,
    vocab_size: int = DEFAULT_VOCAB_SIZE,
    mwes: Sequence[str] = DEFAULT_MWES,
    model_overrides: dict | None = None,
    train_config: TrainConfig | None = None,
) -> tuple[Checkpoint, list[float]]:
    """Corpus split -> trained checkpoint (with vocabulary attached)."""
    texts = render_texts(split.train, mode)
    vocab, ckpt = build_vocab_and_model(
        texts,
        mode,
        seed,
        vocab_size=vocab_size,
        mwes=mwes,
        model_overrides=model_overrides,
    )
    check_sequence_lengths(texts, vocab, ckpt.config.max_seq)
    config = train_config or TrainConfig.desk(seed=seed)
    log.info(
        "training %s model: %d sentences, vocab %d, %d epochs",
        mode, len(texts), len(vocab), config.epochs,
    )
    return train(ckpt, texts, vocab, config)
