"""Communication boards: cards, folders, file I/O, board-from-grammar helper."""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .corpus import Grammar
from .roles import ROLE_COLORS, ROLE_ORDER, Role


class BoardError(ValueError):
    """Board document is invalid."""


@dataclass(frozen=True)
class Card:
    id: str
    caption: str
    role_hint: Role | None = None
    pictogram: str | None = None
    folder: str | None = None


@dataclass
class Board:
    name: str
    cards: list[Card]
    folders: list[tuple[str, list[str]]]
    role_colors: dict[Role, str] | None = None

    def validate(self) -> None:
        if not self.cards:
            raise BoardError("board has no cards")
        seen: set[str] = set()
        for card in self.cards:
            if not card.id:
                raise BoardError("card with empty id")
            if card.id in seen:
                raise BoardError(f"duplicate card id {card.id!r}")
            seen.add(card.id)
            if not card.caption:
                raise BoardError(f"card {card.id!r} has empty caption")
        for name, members in self.folders:
            for cid in members:
                if cid not in seen:
                    raise BoardError(f"folder {name!r} references unknown card {cid!r}")

    def caption_to_card(self) -> dict[str, Card]:
        """Caption lookup; on duplicate captions the lexicographically first
        card id wins, keeping lookups deterministic."""
        table: dict[str, Card] = {}
        for card in sorted(self.cards, key=lambda c: c.id):
            table.setdefault(card.caption, card)
        return table

    def card_by_id(self, card_id: str) -> Card:
        for card in self.cards:
            if card.id == card_id:
                return card
        raise KeyError(card_id)

    def colors(self) -> dict[Role, str]:
        return self.role_colors if self.role_colors else dict(ROLE_COLORS)


def board_to_dict(board: Board) -> dict:
    doc = {
        "name": board.name,
        "cards": [
            {
                "id": c.id,
                "caption": c.caption,
                "role_hint": c.role_hint.value if c.role_hint else None,
                "pictogram": c.pictogram,
                "folder": c.folder,
            }
            for c in board.cards
        ],
        "folders": [{"name": n, "cards": members} for n, members in board.folders],
    }
    if board.role_colors:
        doc["role_colors"] = {r.value: c for r, c in board.role_colors.items()}
    return doc


def board_from_dict(doc: dict, source: str = "<board>") -> Board:
    try:
        cards = [
            Card(
                id=c["id"],
                caption=c["caption"],
                role_hint=Role.from_name(c["role_hint"]) if c.get("role_hint") else None,
                pictogram=c.get("pictogram"),
                folder=c.get("folder"),
            )
            for c in doc["cards"]
        ]
        folders = [(f["name"], list(f["cards"])) for f in doc.get("folders", [])]
        colors = None
        if doc.get("role_colors"):
            colors = {
                Role.from_name(name): value
                for name, value in doc["role_colors"].items()
            }
        board = Board(
            name=doc.get("name", "board"), cards=cards, folders=folders,
            role_colors=colors,
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise BoardError(f"{source}: bad board document: {exc}") from exc
    board.validate()
    return board


def save_board(board: Board, path: str | Path) -> None:
    Path(path).write_text(
        json.dumps(board_to_dict(board), ensure_ascii=False, indent=2) + "\n",
        encoding="utf-8",
    )


def load_board(path: str | Path) -> Board:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise BoardError(f"{path}: not valid JSON: {exc}") from exc
    return board_from_dict(doc, source=str(path))


def _slug(caption: str) -> str:
    return caption.replace(" ", "_")


_ROLE_FOLDERS = {
    Role.QUEM: "pessoas",
    Role.VERBO: "ações",
    Role.COMO: "modos",
    Role.ONDE: "lugares",
    Role.QUANDO: "tempos",
}

_OBJECT_FOLDERS = (
    ("comidas", ("comer",)),
    ("bebidas", ("beber",)),
    ("brinquedos", ("brincar",)),
)


def board_from_grammar(grammar: Grammar, name: str = "board") -> Board:
    """One card per lexicon phrase, foldered by role (objects are grouped by
    the verbs that take them).  Guarantees every sentence the grammar can
    generate ends in a phrase that exists on the board."""
    object_folder: dict[str, str] = {}
    for folder, verbs in _OBJECT_FOLDERS:
        for verb in verbs:
            for phrase in grammar.compat.get(verb, []):
                object_folder.setdefault(phrase, folder)
    cards: list[Card] = []
    seen: set[str] = set()
    for role in ROLE_ORDER:
        for phrase, _ in grammar.lexicon.get(role, []):
            if phrase in seen:
                continue
            seen.add(phrase)
            if role is Role.O_QUE:
                folder = object_folder.get(phrase, "coisas")
            else:
                folder = _ROLE_FOLDERS[role]
            cards.append(
                Card(id=_slug(phrase), caption=phrase, role_hint=role, folder=folder)
            )
    folder_names = sorted({c.folder for c in cards if c.folder})
    folders = [
        (fname, [c.id for c in cards if c.folder == fname]) for fname in folder_names
    ]
    board = Board(name=name, cards=cards, folders=folders)
    board.validate()
    return board


def sample_board() -> Board:
    """The board shipped with the package (data/board.sample)."""
    text = resources.files("pictocs.data").joinpath("board.sample").read_text("utf-8")
    return board_from_dict(json.loads(text), source="board.sample")
