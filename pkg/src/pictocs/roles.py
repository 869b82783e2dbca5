"""Colourful Semantics roles: canonical order, tag strings, display colors."""

from __future__ import annotations

import enum


class Role(enum.Enum):
    """Semantic slot of a sentence, named by its guiding question word."""

    QUEM = "quem"
    VERBO = "verbo"
    O_QUE = "o_que"
    COMO = "como"
    ONDE = "onde"
    QUANDO = "quando"

    @property
    def order(self) -> int:
        return _ORDER[self]

    @property
    def open_tag(self) -> str:
        return f"<{self.value}>"

    @property
    def close_tag(self) -> str:
        return f"</{self.value}>"

    @classmethod
    def from_name(cls, name: str) -> "Role":
        try:
            return cls(name.strip().lower())
        except ValueError:
            raise ValueError(f"unknown role {name!r}") from None


# Canonical slot order; generated sentences never permute it.
ROLE_ORDER = (Role.QUEM, Role.VERBO, Role.O_QUE, Role.COMO, Role.ONDE, Role.QUANDO)
_ORDER = {role: i for i, role in enumerate(ROLE_ORDER)}

ALL_TAGS = tuple(t for r in ROLE_ORDER for t in (r.open_tag, r.close_tag))

# Conventional Colourful Semantics palette, served to the UI by the backend.
ROLE_COLORS = {
    Role.QUEM: "#e8862d",    # orange
    Role.VERBO: "#e3c229",   # yellow
    Role.O_QUE: "#3da45c",   # green
    Role.ONDE: "#3f7fc1",    # blue
    Role.QUANDO: "#8a6550",  # brown
    Role.COMO: "#8e5bb5",    # purple
}
