"""Card scoring: caption vectors, the card decoder matrix, ranked prediction.

A board is "encoded" against a checkpoint by building an h-by-|V| matrix whose
column j is the mean input-embedding vector of card j's caption pieces.  That
matrix stands in for the model's decoder at prediction time, so the softmax
runs over communication cards instead of subword tokens.
"""

from __future__ import annotations

import io
import json
import struct
import warnings
import zlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import checkpoint as ckpt_mod
from . import model as model_mod
from .board import Board, BoardError, Card
from .model import Checkpoint
from .roles import ROLE_ORDER, Role
from .tokenizer import Vocab, encode_pieces


class PredictionError(RuntimeError):
    """Prediction could not be made (bad query, stale decoder, ...)."""


def card_vector(card: Card, vocab: Vocab, embedding_table: np.ndarray) -> np.ndarray:
    """Mean of the caption's piece embedding rows (no [CLS]/[SEP])."""
    piece_ids = encode_pieces(vocab, card.caption)
    if all(pid == vocab.unk_id for pid in piece_ids):
        warnings.warn(f"caption {card.caption!r} tokenizes to only [UNK]")
        return embedding_table[vocab.unk_id].copy()
    return embedding_table[np.array(piece_ids)].mean(axis=0)


@dataclass
class CardDecoder:
    """h-by-|V| card matrix plus the card-id/column correspondence."""

    matrix: np.ndarray
    card_ids: list[str]
    fingerprint: str
    _column: dict[str, int] = field(init=False, repr=False)

    def __post_init__(self):
        self._column = {cid: j for j, cid in enumerate(self.card_ids)}

    def column_of(self, card_id: str) -> int:
        return self._column[card_id]


def build_decoder(board: Board, ckpt: Checkpoint, vocab: Vocab | None = None) -> CardDecoder:
    board.validate()
    vocab = vocab or ckpt.vocab
    if vocab is None:
        raise PredictionError("checkpoint has no vocabulary attached")
    table = ckpt.params["embeddings.word"]
    columns = [card_vector(card, vocab, table) for card in board.cards]
    matrix = np.stack(columns, axis=1)
    return CardDecoder(
        matrix=matrix,
        card_ids=[card.id for card in board.cards],
        fingerprint=ckpt_mod.fingerprint(ckpt),
    )


@dataclass(frozen=True)
class Query:
    """A masked-slot request: either tagged mode with filled slots and a mask
    role, or flat mode with a word prefix."""

    mode: str  # "cs" | "flat"
    filled: dict[Role, str] = field(default_factory=dict)
    prefix: str = ""
    mask_role: Role | None = None
    k: int = 12

    def validate(self) -> None:
        if self.mode not in ("cs", "flat"):
            raise PredictionError(f"unknown mode {self.mode!r}")
        if self.k < 1:
            raise PredictionError("k must be at least 1")
        if self.mode == "cs":
            if self.mask_role is None:
                raise PredictionError("cs query needs a mask_role")
            if self.mask_role in self.filled:
                raise PredictionError(
                    f"mask_role {self.mask_role.value!r} is already filled"
                )


@dataclass
class Prediction:
    """Ranked (card id, probability, log-probability), most probable first."""

    items: list[tuple[str, float, float]]
    query: Query


def build_masked_sequence(
    query: Query, vocab: Vocab, max_seq: int
) -> tuple[np.ndarray, int, int]:
    """Token ids for the query with exactly one [MASK]; returns (ids, length,
    mask position).  In cs mode the mask sits inside its role tags at the
    role's canonical position; in flat mode it follows the prefix."""
    query.validate()
    if query.mode == "cs":
        parts = []
        for role in ROLE_ORDER:
            if role is query.mask_role:
                parts.append(f"{role.open_tag} [MASK] {role.close_tag}")
            elif role in query.filled:
                parts.append(f"{role.open_tag} {query.filled[role]} {role.close_tag}")
        text = " ".join(parts)
    else:
        prefix = query.prefix.strip()
        text = f"{prefix} [MASK]" if prefix else "[MASK]"
    pieces = encode_pieces(vocab, text)
    if len(pieces) + 2 > max_seq:
        raise PredictionError(
            f"query needs {len(pieces) + 2} tokens, model max_seq is {max_seq}"
        )
    if pieces.count(vocab.mask_id) != 1:
        raise PredictionError("query must encode to exactly one [MASK]")
    ids = np.array([vocab.cls_id] + pieces + [vocab.sep_id], dtype=np.int64)
    mask_pos = int(np.nonzero(ids == vocab.mask_id)[0][0])
    return ids, len(ids), mask_pos


def mask_hidden_state(query: Query, ckpt: Checkpoint) -> np.ndarray:
    """Head-transform hidden vector at the query's mask position."""
    if ckpt.vocab is None:
        raise PredictionError("checkpoint has no vocabulary attached")
    ids, length, mask_pos = build_masked_sequence(
        query, ckpt.vocab, ckpt.config.max_seq
    )
    hidden = model_mod.mlm_hidden(ckpt, ids[None, :], np.array([length]))
    return hidden[0, mask_pos]


def predict_cards(query: Query, ckpt: Checkpoint, decoder: CardDecoder) -> Prediction:
    """Rank all cards by softmax(hidden-at-mask . card matrix); ties broken by
    ascending card id.  Returns the top min(k, |V|) entries."""
    query.validate()
    if decoder.fingerprint != ckpt_mod.fingerprint(ckpt):
        raise PredictionError(
            "decoder fingerprint does not match checkpoint (stale decoder); "
            "re-run board encoding"
        )
    hidden = mask_hidden_state(query, ckpt).astype(np.float64)
    logits = hidden @ decoder.matrix.astype(np.float64)
    log_probs = model_mod.log_softmax(logits)
    probs = np.exp(log_probs)
    order = sorted(
        range(len(decoder.card_ids)),
        key=lambda j: (-probs[j], decoder.card_ids[j]),
    )
    top = order[: min(query.k, len(order))]
    items = [
        (decoder.card_ids[j], float(probs[j]), float(log_probs[j])) for j in top
    ]
    return Prediction(items=items, query=query)


_DECODER_MAGIC = b"CSCD"
_DECODER_VERSION = 1


def save_decoder(decoder: CardDecoder, path: str | Path) -> None:
    """Binary decoder file: magic "CSCD", version, JSON doc, f32 matrix, CRC32."""
    doc = json.dumps(
        {
            "card_ids": decoder.card_ids,
            "fingerprint": decoder.fingerprint,
            "shape": list(decoder.matrix.shape),
        },
        ensure_ascii=False,
        sort_keys=True,
    ).encode("utf-8")
    buf = io.BytesIO()
    buf.write(_DECODER_MAGIC)
    buf.write(struct.pack("<I", _DECODER_VERSION))
    buf.write(struct.pack("<I", len(doc)))
    buf.write(doc)
    buf.write(np.ascontiguousarray(decoder.matrix, dtype="<f4").tobytes())
    payload = buf.getvalue()
    Path(path).write_bytes(payload + struct.pack("<I", zlib.crc32(payload)))


def load_decoder(path: str | Path) -> CardDecoder:
    data = Path(path).read_bytes()
    if len(data) < 16:
        raise PredictionError(f"{path}: too short to be a decoder file")
    payload, crc = data[:-4], struct.unpack("<I", data[-4:])[0]
    if crc != zlib.crc32(payload):
        raise PredictionError(f"{path}: CRC mismatch (corrupt file)")
    if payload[:4] != _DECODER_MAGIC:
        raise PredictionError(f"{path}: bad magic (not a decoder file)")
    version = struct.unpack("<I", payload[4:8])[0]
    if version != _DECODER_VERSION:
        raise PredictionError(f"{path}: unsupported decoder version {version}")
    doc_len = struct.unpack("<I", payload[8:12])[0]
    doc = json.loads(payload[12 : 12 + doc_len].decode("utf-8"))
    shape = tuple(doc["shape"])
    matrix = np.frombuffer(payload[12 + doc_len :], dtype="<f4").reshape(shape).copy()
    return CardDecoder(
        matrix=matrix, card_ids=list(doc["card_ids"]), fingerprint=doc["fingerprint"]
    )


def prediction_items(prediction: Prediction, board: Board) -> list[dict]:
    """JSON-ready ranking entries shared by the CLI and the HTTP service."""
    by_id = {card.id: card for card in board.cards}
    out = []
    for card_id, prob, _ in prediction.items:
        card = by_id[card_id]
        out.append(
            {
                "card_id": card_id,
                "caption": card.caption,
                "prob": prob,
                "role": card.role_hint.value if card.role_hint else None,
            }
        )
    return out
