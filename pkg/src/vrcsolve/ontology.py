"""Closed attribute vocabulary with coarse category maps over the shapes.

The lexicons live in ``data/`` (one token per line) so they can be audited
without touching code.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from importlib import resources

from .errors import UnknownCategory, UnknownToken

CATEGORIES = ("letter", "number", "3D object", "2D shape")


class AttrKind(str, Enum):
    SHAPE = "shape"
    COLOR = "color"
    TOWARD = "toward"


@dataclass(frozen=True)
class AttributeTag:
    kind: AttrKind
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class CompoundLabel:
    shape: str
    color: str | None = None
    toward: str | None = None

    def tokens(self) -> list[str]:
        return [t for t in (self.shape, self.color, self.toward) if t is not None]


def _read_lines(name: str) -> list[str]:
    text = resources.files("vrcsolve").joinpath("data", name).read_text("utf-8")
    return [ln for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]


class Ontology:
    """Immutable view of the attribute lexicons."""

    def __init__(self, shapes: dict[str, str], colors: list[str], towards: list[str]):
        self.shape_category = dict(shapes)
        self.shapes = tuple(shapes)
        self.colors = tuple(colors)
        self.towards = tuple(towards)
        self._check_disjoint()
        self._index: dict[str, AttributeTag] = {}
        for kind, values in (
            (AttrKind.SHAPE, self.shapes),
            (AttrKind.COLOR, self.colors),
            (AttrKind.TOWARD, self.towards),
        ):
            for v in values:
                self._index[v] = AttributeTag(kind, v)
        self._categories: dict[str, frozenset[str]] = {
            cat: frozenset(s for s, c in self.shape_category.items() if c == cat)
            for cat in CATEGORIES
        }

    def _check_disjoint(self) -> None:
        s, c, t = set(self.shapes), set(self.colors), set(self.towards)
        if s & c or s & t or c & t:
            raise ValueError("attribute value sets overlap")
        if len(s) != len(self.shapes) or len(c) != len(self.colors) or len(t) != len(self.towards):
            raise ValueError("duplicate ontology token")
        unknown = set(self.shape_category.values()) - set(CATEGORIES)
        if unknown:
            raise ValueError(f"unknown shape categories: {sorted(unknown)}")

    def parse_attribute_token(self, text: str) -> AttributeTag:
        tag = self._index.get(text)
        if tag is None:
            raise UnknownToken(f"not an ontology token: {text!r}")
        return tag

    def kind_of(self, token: str) -> AttrKind | None:
        tag = self._index.get(token)
        return tag.kind if tag else None

    def is_shape(self, token: str) -> bool:
        return self.kind_of(token) is AttrKind.SHAPE

    def expand_category(self, category: str) -> frozenset[str]:
        key = category.strip().lower()
        for cat, members in self._categories.items():
            if cat.lower() == key:
                return members
        raise UnknownCategory(f"unknown category: {category!r}")

    def is_category(self, name: str) -> bool:
        return name.strip().lower() in {c.lower() for c in CATEGORIES}

    def category_of(self, shape: str) -> str:
        return self.shape_category[shape]

    def all_tokens(self) -> list[AttributeTag]:
        return list(self._index.values())

    def stats(self) -> dict[str, int]:
        """Cardinalities of the vocabulary; the compound count is derived, not fixed."""
        return {
            "shapes": len(self.shapes),
            "colors": len(self.colors),
            "towards": len(self.towards),
            "compound_full": len(self.shapes) * len(self.colors) * len(self.towards),
        }


@lru_cache(maxsize=None)
def default_ontology() -> Ontology:
    shapes: dict[str, str] = {}
    for line in _read_lines("shapes.tsv"):
        token, category = line.split("\t")
        shapes[token] = category
    return Ontology(shapes, _read_lines("colors.txt"), _read_lines("towards.txt"))


def parse_attribute_token(text: str) -> AttributeTag:
    return default_ontology().parse_attribute_token(text)


def expand_category(category: str) -> frozenset[str]:
    return default_ontology().expand_category(category)
