"""Low-rank user/entity factor model, scoring and binary persistence.

File layout (little-endian)::

    header      4s magic b"PAFM", u16 version, u16 reserved, u32 K,
                u64 user rows, u64 entity rows
    factors     float32[user rows * K], float32[entity rows * K]  (row-major)
    vocab x2    u32 unk_index, u32 min_count, u64 size,
                size * (u32 byte length, utf-8 identifier)        (users, then entities)
    types       u32 count, count * (u32 byte length, utf-8 name, f64 threshold)
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigurationError, ModelFormatError
from .vocab import EntityTypeTable, Vocabulary

MAGIC = b"PAFM"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<4sHHIQQ")


@dataclass(frozen=True)
class Hyperparameters:
    k: int = 50
    eta: float = 0.2
    lam: float = 0.005
    negatives_per_obs: int = 3
    iterations: int = 5
    init_scale: float = 0.01

    def __post_init__(self):
        if self.k < 1 or self.negatives_per_obs < 1 or self.iterations < 1:
            raise ConfigurationError("k, negatives_per_obs and iterations must be positive")
        if not self.eta > 0 or self.lam < 0 or self.init_scale < 0:
            raise ConfigurationError("eta must be positive; lam and init_scale non-negative")


@dataclass
class EmbeddingModel:
    """User factors ``f_u`` (rows of ``user_factors``) and entity factors ``g_e``.

    The affinity score is the plain inner product ``f_u . g_e`` with no bias
    terms; predictions use the cosine of the two rows.
    """

    user_factors: np.ndarray
    entity_factors: np.ndarray
    user_vocab: Vocabulary
    entity_vocab: Vocabulary
    type_table: EntityTypeTable = field(default_factory=EntityTypeTable)

    def __post_init__(self):
        if self.user_factors.ndim != 2 or self.entity_factors.ndim != 2:
            raise ConfigurationError("factor tables must be 2-D")
        if self.user_factors.shape[1] != self.entity_factors.shape[1]:
            raise ConfigurationError("user and entity factors disagree on K")
        if len(self.user_factors) != len(self.user_vocab) or len(self.entity_factors) != len(self.entity_vocab):
            raise ConfigurationError("factor row counts must match vocabulary sizes")

    @property
    def k(self) -> int:
        return self.user_factors.shape[1]

    @classmethod
    def initialize(cls, user_vocab, entity_vocab, hp: Hyperparameters = Hyperparameters(), seed=0,
                   type_table: EntityTypeTable | None = None, dtype=np.float32) -> "EmbeddingModel":
        users, entities = init_factors(len(user_vocab), len(entity_vocab), hp, seed, dtype)
        return cls(users, entities, user_vocab, entity_vocab, type_table or EntityTypeTable())

    def score(self, u, e):
        return score(self, u, e)

    def predict_affinity(self, u, e):
        return predict_affinity(self, u, e)

    def predict_ids(self, users, entities) -> np.ndarray:
        """Cosine predictions for raw identifiers; unknown ones fall back to UNK."""
        u = np.array(self.user_vocab.lookup_many(users), dtype=np.int64)
        e = np.array(self.entity_vocab.lookup_many(entities), dtype=np.int64)
        return predict_affinity(self, u, e)

    def save(self, path):
        save(self, path)

    @classmethod
    def load(cls, path) -> "EmbeddingModel":
        return load(path)


def init_factors(user_count: int, entity_count: int, hp: Hyperparameters, seed=0, dtype=np.float32):
    """I.i.d. uniform factors in ``[-init_scale, init_scale]``."""
    if user_count < 1 or entity_count < 1:
        raise ConfigurationError("need at least one user row and one entity row")
    rng = np.random.default_rng(seed)
    s = hp.init_scale
    users = rng.uniform(-s, s, size=(user_count, hp.k)).astype(dtype)
    entities = rng.uniform(-s, s, size=(entity_count, hp.k)).astype(dtype)
    return users, entities


def _rows(table, idx, what):
    idx = np.asarray(idx)
    if not np.issubdtype(idx.dtype, np.integer):
        raise TypeError(f"{what} index must be integer")
    if idx.size and (idx.min() < 0 or idx.max() >= len(table)):
        raise IndexError(f"{what} index out of range [0, {len(table)})")
    return table[idx].astype(np.float64, copy=False)


def score(model: EmbeddingModel, u, e):
    f = _rows(model.user_factors, u, "user")
    g = _rows(model.entity_factors, e, "entity")
    out = np.einsum("...k,...k->...", f, g)
    return float(out) if np.ndim(out) == 0 else out


def pairwise_diff(model: EmbeddingModel, u, preferred, dispreferred):
    """``f_u . (g_preferred - g_dispreferred)``."""
    f = _rows(model.user_factors, u, "user")
    diff = _rows(model.entity_factors, preferred, "entity") - _rows(model.entity_factors, dispreferred, "entity")
    out = np.einsum("...k,...k->...", f, diff)
    return float(out) if np.ndim(out) == 0 else out


def cosine(f: np.ndarray, g: np.ndarray) -> np.ndarray:
    """Row-wise cosine similarity; 0.0 wherever either vector is zero."""
    f = np.asarray(f, dtype=np.float64)
    g = np.asarray(g, dtype=np.float64)
    dots = np.einsum("...k,...k->...", f, g)
    norms = np.linalg.norm(f, axis=-1) * np.linalg.norm(g, axis=-1)
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.where(norms > 0, dots / np.where(norms > 0, norms, 1.0), 0.0)
    return np.clip(out, -1.0, 1.0)


def predict_affinity(model: EmbeddingModel, u, e):
    out = cosine(_rows(model.user_factors, u, "user"), _rows(model.entity_factors, e, "entity"))
    return float(out) if np.ndim(out) == 0 else out


# -- persistence -------------------------------------------------------------

def _pack_str(s: str) -> bytes:
    raw = s.encode("utf-8")
    return struct.pack("<I", len(raw)) + raw


def _pack_vocab(v: Vocabulary) -> bytes:
    parts = [struct.pack("<IIQ", v.unk_index, v.min_count, len(v))]
    parts.extend(_pack_str(i) for i in v.index_to_id)
    return b"".join(parts)


def to_bytes(model: EmbeddingModel) -> bytes:
    users = np.ascontiguousarray(model.user_factors, dtype="<f4")
    entities = np.ascontiguousarray(model.entity_factors, dtype="<f4")
    parts = [
        _HEADER.pack(MAGIC, FORMAT_VERSION, 0, model.k, len(users), len(entities)),
        users.tobytes(),
        entities.tobytes(),
        _pack_vocab(model.user_vocab),
        _pack_vocab(model.entity_vocab),
        struct.pack("<I", len(model.type_table.thresholds)),
    ]
    for name in sorted(model.type_table.thresholds):
        parts.append(_pack_str(name) + struct.pack("<d", model.type_table.thresholds[name]))
    return b"".join(parts)


class _Reader:
    def __init__(self, buf: bytes):
        self.buf = memoryview(buf)
        self.pos = 0

    def take(self, n: int) -> memoryview:
        if self.pos + n > len(self.buf):
            raise ModelFormatError("model file is truncated")
        out = self.buf[self.pos:self.pos + n]
        self.pos += n
        return out

    def unpack(self, fmt: str):
        s = struct.Struct(fmt)
        return s.unpack(self.take(s.size))

    def string(self) -> str:
        (n,) = self.unpack("<I")
        try:
            return bytes(self.take(n)).decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ModelFormatError(f"bad identifier encoding: {exc}") from None

    def vocab(self) -> Vocabulary:
        unk_index, min_count, size = self.unpack("<IIQ")
        ids = tuple(self.string() for _ in range(size))
        if not 0 <= unk_index < size:
            raise ModelFormatError("UNK index outside vocabulary")
        try:
            return Vocabulary(ids, min_count=min_count, unk_token=ids[unk_index], unk_index=unk_index)
        except ConfigurationError as exc:
            raise ModelFormatError(str(exc)) from None


def from_bytes(buf: bytes) -> EmbeddingModel:
    r = _Reader(buf)
    magic, version, _, k, n_users, n_entities = r.unpack(_HEADER.format)
    if magic != MAGIC:
        raise ModelFormatError(f"not a model file (magic {magic!r})")
    if version != FORMAT_VERSION:
        raise ModelFormatError(f"unsupported model format version {version}")
    users = np.frombuffer(r.take(4 * n_users * k), dtype="<f4").reshape(n_users, k).astype(np.float32)
    entities = np.frombuffer(r.take(4 * n_entities * k), dtype="<f4").reshape(n_entities, k).astype(np.float32)
    user_vocab, entity_vocab = r.vocab(), r.vocab()
    (n_types,) = r.unpack("<I")
    thresholds = {}
    for _ in range(n_types):
        name = r.string()
        (thresholds[name],) = r.unpack("<d")
    if r.pos != len(r.buf):
        raise ModelFormatError("trailing bytes after model payload")
    try:
        return EmbeddingModel(users, entities, user_vocab, entity_vocab, EntityTypeTable(thresholds))
    except ConfigurationError as exc:
        raise ModelFormatError(str(exc)) from None


def save(model: EmbeddingModel, path):
    Path(path).write_bytes(to_bytes(model))


def load(path) -> EmbeddingModel:
    return from_bytes(Path(path).read_bytes())
