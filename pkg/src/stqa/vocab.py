"""Canonical label vocabulary with synonym-aware lookup."""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from functools import cached_property
from importlib import resources
from pathlib import Path

import yaml

CATEGORIES = ("instrument", "verb", "target")

_SEPARATORS = re.compile(r"[\s_\-]+")


def normalize_surface(text: str) -> str:
    """Case-fold and collapse whitespace, underscores and hyphens to one space."""
    return _SEPARATORS.sub(" ", text.strip().lower()).strip()


def display(label: str) -> str:
    """Text rendering of a canonical label (``cystic_duct`` -> ``cystic duct``)."""
    return label.replace("_", " ")


class UnknownLabel(KeyError):
    def __init__(self, surface: str, category: str | None = None):
        super().__init__(surface)
        self.surface = surface
        self.category = category

    def __str__(self) -> str:
        where = f" {self.category}" if self.category else ""
        return f"unknown{where} label {self.surface!r}"


@dataclass(frozen=True)
class Vocabulary:
    instruments: tuple[str, ...]
    verbs: tuple[str, ...]
    targets: tuple[str, ...]
    synonyms: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        seen: set[str] = set()
        for label in (*self.instruments, *self.verbs, *self.targets):
            if label != label.lower():
                raise ValueError(f"canonical label {label!r} must be lowercase")
            if label in seen:
                raise ValueError(f"duplicate canonical label {label!r}")
            seen.add(label)
        for surface, canonical in self.synonyms.items():
            if canonical not in seen:
                raise ValueError(f"synonym {surface!r} maps to unknown label {canonical!r}")

    @classmethod
    def from_mapping(cls, data: dict) -> "Vocabulary":
        synonyms = {normalize_surface(k): v for k, v in (data.get("synonyms") or {}).items()}
        return cls(
            instruments=tuple(data.get("instruments") or ()),
            verbs=tuple(data.get("verbs") or ()),
            targets=tuple(data.get("targets") or ()),
            synonyms=synonyms,
        )

    @classmethod
    def load(cls, path: str | Path | None = None) -> "Vocabulary":
        if path is None:
            text = resources.files("stqa.data").joinpath("vocab.yaml").read_text()
        else:
            text = Path(path).read_text()
        return cls.from_mapping(yaml.safe_load(text) or {})

    def labels(self, category: str | None = None) -> tuple[str, ...]:
        if category is None:
            return (*self.instruments, *self.verbs, *self.targets)
        return {"instrument": self.instruments, "verb": self.verbs, "target": self.targets}[category]

    @cached_property
    def category_of(self) -> dict[str, str]:
        out = {}
        for cat in CATEGORIES:
            for label in self.labels(cat):
                out[label] = cat
        return out

    @cached_property
    def surface_map(self) -> dict[str, str]:
        """Normalized surface form -> canonical label; canonical labels map to themselves."""
        out = {normalize_surface(label): label for label in self.category_of}
        for surface, canonical in self.synonyms.items():
            out.setdefault(surface, canonical)
        return out

    @cached_property
    def _pattern(self) -> re.Pattern:
        forms = sorted(self.surface_map, key=lambda s: (-len(s), s))
        alt = "|".join(re.escape(f).replace(r"\ ", " ") for f in forms)
        return re.compile(rf"(?<![a-z0-9])(?:{alt})(?![a-z0-9])")

    def canonical(self, surface: str, category: str | None = None) -> str:
        """Exact lookup of a surface form; raises UnknownLabel."""
        label = self.surface_map.get(normalize_surface(surface))
        if label is None or (category is not None and self.category_of[label] != category):
            raise UnknownLabel(surface, category)
        return label

    def find(self, text: str, category: str | None = None) -> list[tuple[int, str]]:
        """All label mentions in ``text`` as (position, canonical), longest match first."""
        norm = normalize_surface(text)
        hits = []
        for m in self._pattern.finditer(norm):
            label = self.surface_map[m.group(0)]
            if category is None or self.category_of[label] == category:
                hits.append((m.start(), label))
        return hits
