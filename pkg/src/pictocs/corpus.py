"""Synthetic role-annotated corpus: grammar, generation, tagged/flat renderings."""

from __future__ import annotations

import json
import random
import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Iterable

from .roles import ALL_TAGS, ROLE_ORDER, Role


class GrammarError(ValueError):
    """A grammar file or grammar rule is invalid."""


class ParseError(ValueError):
    """Tagged text does not parse; carries the character position."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at position {position})")
        self.position = position


def _phrase_problem(text: str) -> str | None:
    """Why `text` is not a valid slot phrase, or None if it is fine."""
    if not text or text != text.strip():
        return "empty or has surrounding whitespace"
    if not 1 <= len(text.split()) <= 3:
        return "must be 1-3 space-separated words"
    if "<" in text or ">" in text:
        return "contains angle brackets"
    return None


@dataclass(frozen=True)
class Slot:
    role: Role
    text: str

    def __post_init__(self):
        problem = _phrase_problem(self.text)
        if problem:
            raise ValueError(f"bad slot text {self.text!r}: {problem}")


@dataclass(frozen=True)
class Sentence:
    slots: tuple[Slot, ...]

    def __post_init__(self):
        if not self.slots:
            raise ValueError("sentence must have at least one slot")
        orders = [s.role.order for s in self.slots]
        if any(b <= a for a, b in zip(orders, orders[1:])):
            raise ValueError("slots must be unique and in canonical role order")

    @property
    def last_slot(self) -> Slot:
        return self.slots[-1]

    def role_map(self) -> dict[Role, str]:
        return {s.role: s.text for s in self.slots}


@dataclass
class Grammar:
    """Weighted lexicon per role plus verb-object compatibility.

    Verbs present in `compat` are transitive and draw their object from the
    listed phrases; verbs absent from `compat` never take an object slot.
    """

    lexicon: dict[Role, list[tuple[str, float]]]
    compat: dict[str, list[str]]
    slot_presence: dict[Role, float]

    def validate(self) -> None:
        for role, entries in self.lexicon.items():
            if not entries:
                raise GrammarError(f"lexicon.{role.value}: no phrases")
            for phrase, weight in entries:
                problem = _phrase_problem(phrase)
                if problem:
                    raise GrammarError(f"lexicon.{role.value}: {phrase!r} {problem}")
                if weight <= 0:
                    raise GrammarError(
                        f"lexicon.{role.value}: {phrase!r} weight must be positive"
                    )
        if Role.VERBO not in self.lexicon:
            raise GrammarError("lexicon.verbo: missing (every sentence needs a verb)")
        if self.slot_presence.get(Role.VERBO, 0.0) != 1.0:
            raise GrammarError("slot_presence.verbo: must be 1.0")
        for role, p in self.slot_presence.items():
            if not 0.0 <= p <= 1.0:
                raise GrammarError(f"slot_presence.{role.value}: {p} outside [0, 1]")
            if p > 0 and role not in self.lexicon:
                raise GrammarError(f"lexicon.{role.value}: missing but presence is {p}")
        verbs = {p for p, _ in self.lexicon[Role.VERBO]}
        objects = {p for p, _ in self.lexicon.get(Role.O_QUE, [])}
        for verb, allowed in self.compat.items():
            if verb not in verbs:
                raise GrammarError(f"compat.{verb}: verb not in lexicon.verbo")
            if not allowed:
                raise GrammarError(f"compat.{verb}: empty object list")
            for phrase in allowed:
                if phrase not in objects:
                    raise GrammarError(
                        f"compat.{verb}: {phrase!r} not in lexicon.o_que"
                    )

    def object_weights(self) -> dict[str, float]:
        return {p: w for p, w in self.lexicon.get(Role.O_QUE, [])}


@dataclass
class CorpusSplit:
    train: list[Sentence]
    test: list[Sentence]


def render_tagged(sentence: Sentence) -> str:
    """Render as `<role> text </role>` spans in canonical order."""
    return " ".join(
        f"{s.role.open_tag} {s.text} {s.role.close_tag}" for s in sentence.slots
    )


def render_flat(sentence: Sentence) -> str:
    """Render slot texts in canonical order without tags."""
    return " ".join(s.text for s in sentence.slots)


_OPEN_TAGS = {r.open_tag: r for r in ROLE_ORDER}
_CLOSE_TAGS = {r.close_tag: r for r in ROLE_ORDER}


def parse_tagged(text: str) -> Sentence:
    """Inverse of render_tagged; rejects malformed tag structure."""
    tokens = [(m.group(), m.start()) for m in re.finditer(r"\S+", text)]
    slots: list[Slot] = []
    i = 0
    while i < len(tokens):
        tok, off = tokens[i]
        role = _OPEN_TAGS.get(tok)
        if role is None:
            if tok in _CLOSE_TAGS:
                raise ParseError(f"unexpected closing tag {tok!r}", off)
            if "<" in tok or ">" in tok:
                raise ParseError(f"unknown tag {tok!r}", off)
            raise ParseError(f"expected an opening role tag, got {tok!r}", off)
        if any(s.role is role for s in slots):
            raise ParseError(f"duplicate role {role.value!r}", off)
        if slots and role.order <= slots[-1].role.order:
            raise ParseError(f"role {role.value!r} out of canonical order", off)
        i += 1
        words: list[str] = []
        while i < len(tokens) and tokens[i][0] not in _CLOSE_TAGS:
            word, woff = tokens[i]
            if "<" in word or ">" in word:
                raise ParseError(f"unexpected tag-like token {word!r} inside span", woff)
            words.append(word)
            i += 1
        if i == len(tokens):
            raise ParseError(f"missing closing tag for {role.value!r}", len(text))
        close, coff = tokens[i]
        if close != role.close_tag:
            raise ParseError(
                f"mismatched closing tag {close!r} for {role.open_tag!r}", coff
            )
        if not words:
            raise ParseError(f"empty text in {role.value!r} span", coff)
        slots.append(Slot(role, " ".join(words)))
        i += 1
    if not slots:
        raise ParseError("no role spans found", 0)
    return Sentence(tuple(slots))


def _weighted_choice(rng: random.Random, entries: list[tuple[str, float]]) -> str:
    phrases = [p for p, _ in entries]
    weights = [w for _, w in entries]
    return rng.choices(phrases, weights=weights, k=1)[0]


def _generate_sentence(grammar: Grammar, rng: random.Random) -> Sentence:
    verb = _weighted_choice(rng, grammar.lexicon[Role.VERBO])
    obj_weights = grammar.object_weights()
    slots: list[Slot] = []
    for role in ROLE_ORDER:
        if role is Role.VERBO:
            slots.append(Slot(role, verb))
            continue
        if role is Role.O_QUE:
            allowed = grammar.compat.get(verb)
            if not allowed:
                continue
            if rng.random() >= grammar.slot_presence.get(role, 0.0):
                continue
            entries = [(p, obj_weights[p]) for p in allowed]
            slots.append(Slot(role, _weighted_choice(rng, entries)))
            continue
        if rng.random() >= grammar.slot_presence.get(role, 0.0):
            continue
        slots.append(Slot(role, _weighted_choice(rng, grammar.lexicon[role])))
    return Sentence(tuple(slots))


def generate_corpus(
    grammar: Grammar, n_train: int, n_test: int, seed: int
) -> CorpusSplit:
    """Sample a train/test split; test sentences are unique and never reappear
    in train (disjointness is at the rendered-string level)."""
    if n_train < 0 or n_test < 0:
        raise ValueError("sentence counts must be non-negative")
    grammar.validate()
    rng = random.Random(seed)
    test: list[Sentence] = []
    test_keys: set[str] = set()
    attempts = 0
    while len(test) < n_test:
        attempts += 1
        if attempts > 1000 * (n_test + 1):
            raise GrammarError("grammar too small for the requested unique test set")
        s = _generate_sentence(grammar, rng)
        key = render_tagged(s)
        if key not in test_keys:
            test_keys.add(key)
            test.append(s)
    train: list[Sentence] = []
    while len(train) < n_train:
        s = _generate_sentence(grammar, rng)
        if render_tagged(s) not in test_keys:
            train.append(s)
    return CorpusSplit(train=train, test=test)


def validate_sentence(sentence: Sentence, grammar: Grammar) -> None:
    """Independent re-check of a sentence against the grammar.

    Verifies lexicon membership per role, the mandatory verb, and verb-object
    compatibility; raises ValueError naming the first violation.
    """
    roles = [s.role for s in sentence.slots]
    if Role.VERBO not in roles:
        raise ValueError("sentence has no verb slot")
    lexicon_sets = {
        role: {p for p, _ in entries} for role, entries in grammar.lexicon.items()
    }
    verb = sentence.role_map()[Role.VERBO]
    for slot in sentence.slots:
        members = lexicon_sets.get(slot.role, set())
        if slot.text not in members:
            raise ValueError(
                f"{slot.text!r} is not a lexicon phrase for {slot.role.value}"
            )
        if slot.role is Role.O_QUE:
            allowed = grammar.compat.get(verb)
            if not allowed:
                raise ValueError(f"verb {verb!r} does not take an object")
            if slot.text not in allowed:
                raise ValueError(f"object {slot.text!r} incompatible with {verb!r}")


def save_corpus(sentences: Iterable[Sentence], path: str | Path) -> None:
    """One JSON record per line: {"slots": [{"role": ..., "text": ...}, ...]}."""
    with open(path, "w", encoding="utf-8") as fh:
        for s in sentences:
            record = {
                "slots": [{"role": sl.role.value, "text": sl.text} for sl in s.slots]
            }
            fh.write(json.dumps(record, ensure_ascii=False) + "\n")


def load_corpus(path: str | Path) -> list[Sentence]:
    sentences = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
                slots = tuple(
                    Slot(Role.from_name(sl["role"]), sl["text"])
                    for sl in record["slots"]
                )
                sentences.append(Sentence(slots))
            except (KeyError, TypeError, ValueError) as exc:
                raise ValueError(f"{path}:{lineno}: bad corpus record: {exc}") from exc
    return sentences


def parse_grammar(text: str) -> Grammar:
    """Parse the sectioned grammar format ([slot_presence], [lexicon.<role>],
    [compat.<verb>]); see data/grammar.default for the reference file."""
    lexicon: dict[Role, list[tuple[str, float]]] = {}
    compat: dict[str, list[str]] = {}
    presence: dict[Role, float] = {}
    section: str | None = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
            if section != "slot_presence" and not section.startswith(
                ("lexicon.", "compat.")
            ):
                raise GrammarError(f"line {lineno}: unknown section [{section}]")
            continue
        if section is None:
            raise GrammarError(f"line {lineno}: content before any section")
        if section == "slot_presence":
            if "=" not in line:
                raise GrammarError(f"line {lineno}: expected 'role = probability'")
            name, value = line.rsplit("=", 1)
            try:
                presence[Role.from_name(name)] = float(value)
            except ValueError as exc:
                raise GrammarError(f"line {lineno}: {exc}") from exc
        elif section.startswith("lexicon."):
            try:
                role = Role.from_name(section[len("lexicon.") :])
            except ValueError as exc:
                raise GrammarError(f"section [{section}]: {exc}") from exc
            if "=" in line:
                phrase, weight_text = line.rsplit("=", 1)
                try:
                    weight = float(weight_text)
                except ValueError:
                    raise GrammarError(
                        f"line {lineno}: bad weight {weight_text.strip()!r}"
                    ) from None
            else:
                phrase, weight = line, 1.0
            lexicon.setdefault(role, []).append((phrase.strip(), weight))
        else:
            verb = section[len("compat.") :]
            compat.setdefault(verb, []).append(line)
    grammar = Grammar(lexicon=lexicon, compat=compat, slot_presence=presence)
    grammar.validate()
    return grammar


def load_grammar(path: str | Path) -> Grammar:
    return parse_grammar(Path(path).read_text(encoding="utf-8"))


def default_grammar() -> Grammar:
    """The grammar shipped with the package (data/grammar.default)."""
    text = (
        resources.files("pictocs.data").joinpath("grammar.default").read_text("utf-8")
    )
    return parse_grammar(text)
