"""Canonical relation lists and mapping of free-form relation strings onto them.

Language models asked to pick a relation from a predefined list still drift
("citizenship" for "country of citizenship"). ``normalize_relation`` maps any
non-empty candidate onto its nearest catalog entry, so downstream code only
ever sees canonical labels.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .errors import (
    CatalogNotFoundError,
    DuplicateRelationError,
    EmptyCandidateError,
    EmptyCatalogError,
)

__all__ = ["RelationCatalog", "NormalizedRelation", "load_catalog", "normalize_relation"]

_BUILTIN_CATALOGS = ("mquake-cf", "mquake-t")

_WORD_RE = re.compile(r"[a-z0-9]+")


def _squash(text: str) -> str:
    """Casefold and collapse whitespace, for identity comparison."""
    return " ".join(text.casefold().split())


def _word_set(text: str) -> frozenset[str]:
    return frozenset(_WORD_RE.findall(text.casefold()))


def _trigram_set(text: str) -> frozenset[str]:
    squashed = _squash(text)
    if len(squashed) < 3:
        return frozenset((squashed,)) if squashed else frozenset()
    return frozenset(squashed[i : i + 3] for i in range(len(squashed) - 2))


def token_jaccard(a: str, b: str) -> float:
    """Jaccard similarity of the lowercase word sets of the two strings."""
    wa, wb = _word_set(a), _word_set(b)
    if not wa and not wb:
        return 1.0
    if not wa or not wb:
        return 0.0
    return len(wa & wb) / len(wa | wb)


def trigram_dice(a: str, b: str) -> float:
    """Dice coefficient over character trigram sets; the lexical tie-breaker."""
    ta, tb = _trigram_set(a), _trigram_set(b)
    if not ta and not tb:
        return 1.0
    if not ta or not tb:
        return 0.0
    return 2.0 * len(ta & tb) / (len(ta) + len(tb))


class NormalizedRelation(NamedTuple):
    label: str
    score: float


@dataclass
class RelationCatalog:
    """Ordered list of canonical relation labels, immutable once loaded.

    ``vectors`` is an optional unit-norm embedding per label; when present,
    normalization uses cosine similarity against candidates embedded by the
    same ``provider`` instead of the lexical default.
    """

    name: str
    relations: tuple[str, ...]
    vectors: dict[str, np.ndarray] | None = field(default=None, repr=False)
    provider: object | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        self.relations = tuple(self.relations)
        if not self.relations:
            raise EmptyCatalogError(f"catalog {self.name!r} has no relations")
        seen: set[str] = set()
        for label in self.relations:
            if not label.strip():
                raise EmptyCatalogError(f"catalog {self.name!r} contains an empty label")
            if label in seen:
                raise DuplicateRelationError(f"catalog {self.name!r} lists {label!r} twice")
            seen.add(label)
        self._by_squashed = {_squash(label): label for label in self.relations}

    def __contains__(self, label: str) -> bool:
        return label in self.relations

    def __iter__(self):
        return iter(self.relations)

    def __len__(self) -> int:
        return len(self.relations)

    def canonical(self, candidate: str) -> str | None:
        """Exact (case/whitespace-insensitive) catalog member for candidate, or None."""
        return self._by_squashed.get(_squash(candidate))

    def with_vectors(self, provider) -> "RelationCatalog":
        """Copy of this catalog with unit-norm embeddings from the provider attached."""
        raw = np.asarray(provider.embed(list(self.relations)), dtype=np.float64)
        norms = np.linalg.norm(raw, axis=1, keepdims=True)
        norms[norms == 0.0] = 1.0
        unit = raw / norms
        return RelationCatalog(
            name=self.name,
            relations=self.relations,
            vectors={label: unit[i] for i, label in enumerate(self.relations)},
            provider=provider,
        )


def _read_catalog_lines(text: str) -> list[str]:
    labels = []
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        labels.append(line)
    return labels


def load_catalog(name_or_path: str) -> RelationCatalog:
    """Load a built-in catalog by name, or any UTF-8 one-label-per-line file.

    Built-ins: ``mquake-cf`` (50 relations) and ``mquake-t`` (35 relations).
    """
    if name_or_path in _BUILTIN_CATALOGS:
        text = (resources.files("kgqa.data.catalogs") / f"{name_or_path}.txt").read_text("utf-8")
        return RelationCatalog(name=name_or_path, relations=_read_catalog_lines(text))
    path = Path(name_or_path)
    if not path.is_file():
        raise CatalogNotFoundError(
            f"{name_or_path!r} is neither a built-in catalog ({', '.join(_BUILTIN_CATALOGS)}) nor a readable file"
        )
    return RelationCatalog(name=path.stem, relations=_read_catalog_lines(path.read_text("utf-8")))


def normalize_relation(candidate: str, catalog: RelationCatalog) -> NormalizedRelation:
    """Map a free-form relation string onto the most similar catalog entry.

    Exact members (modulo case/whitespace) return score 1.0. Everything else
    is force-mapped to the argmax-similarity entry: cosine when the catalog
    carries vectors, otherwise token Jaccard with a character-trigram Dice
    tie-breaker. Remaining ties go to the earlier catalog entry, so the
    result is deterministic. The score is a diagnostic, not a gate.
    """
    if not candidate.strip():
        raise EmptyCandidateError("relation candidate is empty")

    exact = catalog.canonical(candidate)
    if exact is not None:
        return NormalizedRelation(exact, 1.0)

    if catalog.vectors is not None:
        return _normalize_by_cosine(candidate, catalog)

    best_label = catalog.relations[0]
    best_key = (-1.0, -1.0)
    for label in catalog.relations:
        key = (token_jaccard(candidate, label), trigram_dice(candidate, label))
        if key > best_key:
            best_key = key
            best_label = label
    return NormalizedRelation(best_label, best_key[0])


def _normalize_by_cosine(candidate: str, catalog: RelationCatalog) -> NormalizedRelation:
    from .embeddings import unit_vector

    assert catalog.vectors is not None
    if catalog.provider is None:
        raise ValueError(
            f"catalog {catalog.name!r} has vectors but no provider; attach them via with_vectors()"
        )
    query = unit_vector(np.asarray(catalog.provider.embed([candidate]), dtype=np.float64)[0])
    best_label = catalog.relations[0]
    best_score = -np.inf
    for label in catalog.relations:
        score = float(np.dot(catalog.vectors[label], query))
        if score > best_score:
            best_score = score
            best_label = label
    return NormalizedRelation(best_label, best_score)
