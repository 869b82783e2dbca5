"""Subword tokenizer: WordPiece-style training, encoding, vocabulary extension.

Vocabulary extension covers the two token families the model needs beyond
plain subwords: role tag tokens (``<quem>`` ... ``</quando>``) and multi-word
expression tokens (``fazer_xixi``).  Both are initialized with mean vectors of
their constituent pieces so they can be appended to an existing embedding
table.
"""

from __future__ import annotations

import warnings
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from .roles import ALL_TAGS

SPECIALS = ("[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]")


class TokenizerError(ValueError):
    """Tokenizer training or extension failed."""


@dataclass(frozen=True)
class TokenSeq:
    """Encoded sequence: [CLS] content [SEP], padded with [PAD] to max_seq."""

    ids: tuple[int, ...]
    length: int  # attention length, including [CLS] and [SEP]


@dataclass
class Vocab:
    """Ordered token table; ids are dense list positions.

    Immutable by convention: extension helpers return a new Vocab and never
    renumber existing ids.
    """

    tokens: list[str]
    role_tag_ids: tuple[int, ...] = ()
    mwe_ids: tuple[int, ...] = ()
    _index: dict[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        self._index = {tok: i for i, tok in enumerate(self.tokens)}
        if len(self._index) != len(self.tokens):
            raise TokenizerError("duplicate token strings in vocabulary")
        for special in SPECIALS:
            if special not in self._index:
                raise TokenizerError(f"missing special token {special}")

    def __len__(self) -> int:
        return len(self.tokens)

    def id_of(self, token: str) -> int | None:
        return self._index.get(token)

    @property
    def pad_id(self) -> int:
        return self._index["[PAD]"]

    @property
    def unk_id(self) -> int:
        return self._index["[UNK]"]

    @property
    def cls_id(self) -> int:
        return self._index["[CLS]"]

    @property
    def sep_id(self) -> int:
        return self._index["[SEP]"]

    @property
    def mask_id(self) -> int:
        return self._index["[MASK]"]

    @property
    def special_ids(self) -> tuple[int, ...]:
        return tuple(self._index[s] for s in SPECIALS)

    def whole_word_id(self, word: str) -> int | None:
        """Id for words matched as single tokens before subword splitting:
        specials, role tags, and injected MWE tokens."""
        tid = self._index.get(word)
        if tid is None:
            return None
        if tid in self.special_ids or tid in self.role_tag_ids or tid in self.mwe_ids:
            return tid
        return None


def _is_punct(ch: str) -> bool:
    return not (ch.isalnum() or ch.isspace())


def _split_punct(word: str) -> list[str]:
    """Split a word into alphanumeric runs and single punctuation characters,
    so '<o_que>' becomes ['<', 'o', '_', 'que', '>']."""
    fragments: list[str] = []
    run = ""
    for ch in word:
        if _is_punct(ch):
            if run:
                fragments.append(run)
                run = ""
            fragments.append(ch)
        else:
            run += ch
    if run:
        fragments.append(run)
    return fragments


def _pre_tokenize(text: str) -> list[str]:
    units: list[str] = []
    for word in text.lower().split():
        units.extend(_split_punct(word))
    return units


def _word_symbols(word: str) -> tuple[str, ...]:
    return tuple([word[0]] + ["##" + ch for ch in word[1:]])


def train_subword(corpus_texts: Iterable[str], target_vocab_size: int) -> Vocab:
    """Learn a subword vocabulary by greedy pair merging.

    Pairs are scored by count(ab) / (count(a) * count(b)) and merged until the
    target size is reached or nothing is left to merge.  The single-character
    alphabet is always included, so trained-on text never produces [UNK].
    """
    word_freq: Counter[str] = Counter()
    for text in corpus_texts:
        for unit in _pre_tokenize(text):
            word_freq[unit] += 1
    if not word_freq:
        raise TokenizerError("empty corpus")
    alphabet = sorted(
        {sym for word in word_freq for sym in _word_symbols(word)}
    )
    min_size = len(SPECIALS) + len(alphabet)
    if target_vocab_size < min_size:
        raise TokenizerError(
            f"target_vocab_size {target_vocab_size} below minimum {min_size} "
            "(specials + character alphabet)"
        )
    words: dict[str, tuple[str, ...]] = {
        w: _word_symbols(w) for w in word_freq
    }
    tokens = list(SPECIALS) + alphabet
    seen = set(tokens)
    while len(tokens) < target_vocab_size:
        pair_counts: Counter[tuple[str, str]] = Counter()
        sym_counts: Counter[str] = Counter()
        for word, syms in words.items():
            freq = word_freq[word]
            for sym in syms:
                sym_counts[sym] += freq
            for pair in zip(syms, syms[1:]):
                pair_counts[pair] += freq
        if not pair_counts:
            break
        best = min(
            pair_counts,
            key=lambda p: (
                -pair_counts[p] / (sym_counts[p[0]] * sym_counts[p[1]]),
                p,
            ),
        )
        a, b = best
        merged = a + b.removeprefix("##")
        for word, syms in words.items():
            if a not in syms:
                continue
            out: list[str] = []
            i = 0
            while i < len(syms):
                if i + 1 < len(syms) and syms[i] == a and syms[i + 1] == b:
                    out.append(merged)
                    i += 2
                else:
                    out.append(syms[i])
                    i += 1
            words[word] = tuple(out)
        if merged not in seen:
            seen.add(merged)
            tokens.append(merged)
    return Vocab(tokens=tokens)


def _wordpiece(vocab: Vocab, fragment: str) -> list[int]:
    """Greedy longest-match segmentation; a fragment that cannot be fully
    segmented maps to a single [UNK]."""
    ids: list[int] = []
    start = 0
    while start < len(fragment):
        end = len(fragment)
        found = None
        while end > start:
            piece = fragment[start:end]
            if start > 0:
                piece = "##" + piece
            tid = vocab.id_of(piece)
            if tid is not None:
                found = tid
                break
            end -= 1
        if found is None:
            return [vocab.unk_id]
        ids.append(found)
        start = end
    return ids


def encode_pieces(vocab: Vocab, text: str) -> list[int]:
    """Tokenize text to ids without [CLS]/[SEP]/padding.

    Specials, role tags, and MWE tokens match as whole words; MWE tokens also
    match their space-separated surface form (longest first).
    """
    ids: list[int] = []
    words = text.split()
    mwe_set = set(vocab.mwe_ids)
    i = 0
    while i < len(words):
        if mwe_set:
            matched = False
            for n in (3, 2):
                if i + n <= len(words):
                    tid = vocab.id_of("_".join(w.lower() for w in words[i : i + n]))
                    if tid is not None and tid in mwe_set:
                        ids.append(tid)
                        i += n
                        matched = True
                        break
            if matched:
                continue
        word = words[i]
        tid = vocab.whole_word_id(word)
        if tid is None:
            tid = vocab.whole_word_id(word.lower())
        if tid is not None:
            ids.append(tid)
        else:
            for fragment in _split_punct(word.lower()):
                ids.extend(_wordpiece(vocab, fragment))
        i += 1
    return ids


def encode(vocab: Vocab, text: str, max_seq: int) -> TokenSeq:
    """Encode to a fixed-length TokenSeq; truncation drops trailing content,
    never [CLS]/[SEP]."""
    if max_seq < 3:
        raise ValueError("max_seq must be at least 3")
    content = encode_pieces(vocab, text)[: max_seq - 2]
    ids = [vocab.cls_id] + content + [vocab.sep_id]
    length = len(ids)
    ids.extend([vocab.pad_id] * (max_seq - length))
    return TokenSeq(ids=tuple(ids), length=length)


def decode(vocab: Vocab, seq: TokenSeq | Sequence[int]) -> str:
    """Render ids back to text; continuation pieces rejoin their word."""
    if isinstance(seq, TokenSeq):
        ids = seq.ids[: seq.length]
    else:
        ids = tuple(seq)
    skip = {vocab.pad_id, vocab.cls_id, vocab.sep_id}
    words: list[str] = []
    for tid in ids:
        if tid in skip:
            continue
        token = vocab.tokens[tid]
        if token.startswith("##") and words:
            words[-1] += token[2:]
        else:
            words.append(token)
    return " ".join(words)


def _mean_vector(rows: list[np.ndarray]) -> np.ndarray:
    return np.mean(np.stack(rows), axis=0)


def add_role_tokens(
    vocab: Vocab, embedding_lookup: Callable[[int], np.ndarray]
) -> tuple[Vocab, list[tuple[str, np.ndarray]]]:
    """Append the 12 role tag tokens with mean-of-pieces init vectors.

    Each tag string is tokenized with the pre-extension vocabulary (including
    its '<', '_', '/' and '>' pieces) and the new token's vector is the
    elementwise mean of those piece vectors.
    """
    if vocab.role_tag_ids:
        raise TokenizerError("role tags already added to this vocabulary")
    additions: list[tuple[str, np.ndarray]] = []
    for tag in ALL_TAGS:
        if vocab.id_of(tag) is not None:
            raise TokenizerError(f"token {tag!r} already in vocabulary")
        piece_ids = encode_pieces(vocab, tag)
        vector = _mean_vector([np.asarray(embedding_lookup(i)) for i in piece_ids])
        additions.append((tag, vector))
    base = len(vocab.tokens)
    new_vocab = Vocab(
        tokens=vocab.tokens + [tag for tag, _ in additions],
        role_tag_ids=tuple(range(base, base + len(additions))),
        mwe_ids=vocab.mwe_ids,
    )
    return new_vocab, additions


def add_mwe_tokens(
    vocab: Vocab,
    expressions: Iterable[str],
    embedding_lookup: Callable[[int], np.ndarray],
) -> tuple[Vocab, list[tuple[str, np.ndarray]]]:
    """Append one token per 2-3 word expression (words joined by '_').

    The init vector is the mean of the constituent word vectors, where each
    word vector is itself the mean of its subword-piece vectors.  Expressions
    colliding with existing tokens are skipped with a warning and omitted from
    the returned additions.
    """
    additions: list[tuple[str, np.ndarray]] = []
    new_tokens: list[str] = []
    for expr in expressions:
        words = expr.lower().split()
        if not 2 <= len(words) <= 3:
            raise TokenizerError(f"MWE must have 2-3 words: {expr!r}")
        token = "_".join(words)
        if vocab.id_of(token) is not None or token in new_tokens:
            warnings.warn(f"skipping MWE {token!r}: token already present")
            continue
        word_vectors = []
        for word in words:
            piece_ids = encode_pieces(vocab, word)
            word_vectors.append(
                _mean_vector([np.asarray(embedding_lookup(i)) for i in piece_ids])
            )
        additions.append((token, _mean_vector(word_vectors)))
        new_tokens.append(token)
    base = len(vocab.tokens)
    new_vocab = Vocab(
        tokens=vocab.tokens + new_tokens,
        role_tag_ids=vocab.role_tag_ids,
        mwe_ids=vocab.mwe_ids + tuple(range(base, base + len(new_tokens))),
    )
    return new_vocab, additions


def save_vocab(vocab: Vocab, path: str | Path) -> None:
    """One token per line; line number (after headers) is the id."""
    lines = [
        "# pictocs-vocab 1",
        "# specials: " + ",".join(str(i) for i in vocab.special_ids),
        "# role_tags: " + ",".join(str(i) for i in vocab.role_tag_ids),
        "# mwes: " + ",".join(str(i) for i in vocab.mwe_ids),
    ]
    lines.extend(vocab.tokens)
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_vocab(path: str | Path) -> Vocab:
    text = Path(path).read_text(encoding="utf-8")
    lines = text.splitlines()
    if not lines or lines[0] != "# pictocs-vocab 1":
        raise TokenizerError(f"{path}: not a pictocs vocab file")

    def _ids(line: str, prefix: str) -> tuple[int, ...]:
        if not line.startswith(prefix):
            raise TokenizerError(f"{path}: missing header {prefix!r}")
        rest = line[len(prefix) :].strip()
        return tuple(int(x) for x in rest.split(",")) if rest else ()

    role_tag_ids = _ids(lines[2], "# role_tags:")
    mwe_ids = _ids(lines[3], "# mwes:")
    return Vocab(tokens=lines[4:], role_tag_ids=role_tag_ids, mwe_ids=mwe_ids)
