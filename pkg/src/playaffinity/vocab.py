"""Identifier vocabularies and the per-entity-type threshold table."""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

from .errors import ConfigurationError, ModelFormatError

USER_UNK = "<User_UNK>"
ENTITY_UNK = "<Entity_UNK>"

_VOCAB_HEADER = "#vocab-v1"


@dataclass(frozen=True)
class Vocabulary:
    """Dense integer indices for identifier strings.

    Identifiers seen fewer than ``min_count`` times in the build corpus share
    ``unk_index``, as does every identifier never seen at all. The UNK row is
    always index 0 and is stored in ``index_to_id`` under ``unk_token``.
    """

    index_to_id: tuple[str, ...]
    min_count: int = 1
    unk_token: str = "<UNK>"
    unk_index: int = 0
    id_to_index: dict[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.min_count < 1:
            raise ConfigurationError(f"min_count must be >= 1, got {self.min_count}")
        if not self.index_to_id or self.index_to_id[self.unk_index] != self.unk_token:
            raise ConfigurationError("UNK token must occupy the UNK index")
        table = {ident: i for i, ident in enumerate(self.index_to_id)}
        if len(table) != len(self.index_to_id):
            raise ConfigurationError("duplicate identifiers in vocabulary")
        object.__setattr__(self, "id_to_index", table)

    def __len__(self):
        return len(self.index_to_id)

    def __contains__(self, ident):
        return ident in self.id_to_index

    def lookup(self, ident: str) -> int:
        return self.id_to_index.get(ident, self.unk_index)

    def lookup_many(self, idents: Iterable[str]) -> list[int]:
        get, unk = self.id_to_index.get, self.unk_index
        return [get(i, unk) for i in idents]

    def unk_fraction(self, idents: Iterable[str]) -> float:
        """Fraction of ``idents`` that resolve to the UNK index (0.0 when empty)."""
        total = hits = 0
        for ident in idents:
            total += 1
            hits += self.lookup(ident) == self.unk_index
        return hits / total if total else 0.0

    def save(self, path):
        """Write ``identifier<TAB>index`` lines after a one-line header."""
        lines = [f"{_VOCAB_HEADER}\t{self.unk_index}\t{self.min_count}"]
        for i, ident in enumerate(self.index_to_id):
            _check_identifier(ident)
            lines.append(f"{ident}\t{i}")
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path) -> "Vocabulary":
        text = Path(path).read_text(encoding="utf-8")
        lines = text.split("\n")
        if lines and lines[-1] == "":
            lines.pop()
        if not lines:
            raise ModelFormatError(f"{path}: empty vocabulary file")
        head = lines[0].split("\t")
        if len(head) != 3 or head[0] != _VOCAB_HEADER:
            raise ModelFormatError(f"{path}: missing or unknown vocabulary header")
        unk_index, min_count = int(head[1]), int(head[2])
        ids: list[str | None] = [None] * (len(lines) - 1)
        for lineno, line in enumerate(lines[1:], start=2):
            ident, sep, idx = line.rpartition("\t")
            if not sep:
                raise ModelFormatError(f"{path}:{lineno}: expected identifier<TAB>index")
            i = int(idx)
            if not 0 <= i < len(ids) or ids[i] is not None:
                raise ModelFormatError(f"{path}:{lineno}: index {i} out of range or repeated")
            ids[i] = ident
        return cls(tuple(ids), min_count=min_count, unk_token=ids[unk_index], unk_index=unk_index)


def _check_identifier(ident):
    if "\t" in ident or "\n" in ident or "\r" in ident:
        raise ConfigurationError(f"identifier {ident!r} contains a tab or newline")


def build_vocabulary(idents: Iterable[str], min_count: int = 5, unk_token: str = "<UNK>") -> Vocabulary:
    """Count ``idents`` and assign indices in first-occurrence order.

    Index 0 is reserved for ``unk_token``; identifiers with fewer than
    ``min_count`` occurrences (and the literal UNK token itself) map to it.
    """
    if min_count < 1:
        raise ConfigurationError(f"min_count must be >= 1, got {min_count}")
    counts = Counter(idents)
    kept = [i for i, c in counts.items() if c >= min_count and i != unk_token]
    return Vocabulary((unk_token, *kept), min_count=min_count, unk_token=unk_token)


def lookup(vocab: Vocabulary, ident: str) -> int:
    return vocab.lookup(ident)


# Thresholds in seconds for the music domain entity types.
DEFAULT_THRESHOLDS = {"song": 30.0, "album": 180.0, "station": 180.0}


@dataclass(frozen=True)
class EntityTypeTable:
    """Per-entity-type playback threshold ``T`` in seconds."""

    thresholds: Mapping[str, float] = field(default_factory=lambda: dict(DEFAULT_THRESHOLDS))

    def __post_init__(self):
        clean = {}
        for name, value in self.thresholds.items():
            value = float(value)
            if not (math.isfinite(value) and value > 0):
                raise ConfigurationError(f"threshold for {name!r} must be positive, got {value}")
            clean[str(name)] = value
        object.__setattr__(self, "thresholds", clean)

    def threshold(self, entity_type: str) -> float:
        try:
            return self.thresholds[entity_type]
        except KeyError:
            raise ConfigurationError(f"no threshold configured for entity type {entity_type!r}") from None

    def __contains__(self, entity_type):
        return entity_type in self.thresholds

    @property
    def types(self) -> list[str]:
        return sorted(self.thresholds)

    def to_json(self, path):
        Path(path).write_text(json.dumps(self.thresholds, indent=2, sort_keys=True) + "\n")

    @classmethod
    def from_json(cls, path) -> "EntityTypeTable":
        data = json.loads(Path(path).read_text())
        if not isinstance(data, dict):
            raise ConfigurationError(f"{path}: expected a JSON object mapping entity type to seconds")
        return cls(data)
