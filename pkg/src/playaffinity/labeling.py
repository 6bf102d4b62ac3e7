"""Duration binarization and confidence weighting curves."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable, Iterator, NamedTuple

import numpy as np

from .errors import ConfigurationError
from .ingest import Observation
from .vocab import EntityTypeTable, Vocabulary

# Weight returns to 1.0 at this multiple of the threshold and stays there.
SATURATION_MULTIPLE = 10.0

_LN10 = np.log(10.0)


class WeightingKind(str, enum.Enum):
    UNIFORM = "uniform"
    LOG = "log"
    CONCAVE_QUADRATIC = "concave_quadratic"
    LINEAR = "linear"
    CONVEX_QUADRATIC = "convex_quadratic"

    @classmethod
    def parse(cls, name) -> "WeightingKind":
        """Accepts enum values and the CLI spellings ``concave-quad``/``convex-quad``."""
        if isinstance(name, cls):
            return name
        key = str(name).strip().lower().replace("-", "_")
        key = {"concave_quad": "concave_quadratic", "convex_quad": "convex_quadratic"}.get(key, key)
        try:
            return cls(key)
        except ValueError:
            choices = ", ".join(k.value for k in cls)
            raise ConfigurationError(f"unknown weighting {name!r}; choose from {choices}") from None


def _check_threshold(T):
    T = np.asarray(T, dtype=float)
    if np.any(~(T > 0)):
        raise ConfigurationError("threshold T must be strictly positive")
    return T


def binarize(duration, threshold):
    """+1 where ``duration >= threshold``, else -1. Works on scalars and arrays."""
    T = _check_threshold(threshold)
    out = np.where(np.asarray(duration, dtype=float) >= T, 1, -1).astype(np.int8)
    return int(out) if out.ndim == 0 else out


def distance_from_threshold(duration, threshold):
    """Normalized distance ``u`` in [0, 1] from the threshold.

    ``(T - t) / T`` below the threshold and ``(t - T) / 9T`` above it, clipped
    at 1 beyond ``10 T``.
    """
    T = _check_threshold(threshold)
    t = np.asarray(duration, dtype=float)
    below = (T - t) / T
    above = (t - T) / ((SATURATION_MULTIPLE - 1.0) * T)
    return np.clip(np.where(t < T, below, above), 0.0, 1.0)


def _curve(u, kind: WeightingKind):
    if kind is WeightingKind.LINEAR:
        return u
    if kind is WeightingKind.CONVEX_QUADRATIC:
        return u * u
    if kind is WeightingKind.CONCAVE_QUADRATIC:
        return u * (2.0 - u)
    if kind is WeightingKind.LOG:
        return np.log1p(9.0 * u) / _LN10
    return np.ones_like(u)


def confidence_weight(duration, threshold, kind=WeightingKind.CONVEX_QUADRATIC):
    """Confidence weight in [0, 1] for a playback of ``duration`` seconds.

    Every non-uniform curve is 0 at the threshold and 1 at ``t = 0`` and at
    ``t >= 10 T``; ``uniform`` is 1 everywhere.
    """
    kind = WeightingKind.parse(kind)
    u = distance_from_threshold(duration, threshold)
    w = np.clip(_curve(u, kind), 0.0, 1.0)
    # log1p(9)/ln(10) is not exactly 1 in floating point.
    w = np.where(u >= 1.0, 1.0, w)
    return float(w) if w.ndim == 0 else w


class LabeledSample(NamedTuple):
    user_index: int
    entity_index: int
    entity_type: str
    label: int
    weight: float
    duration: float


def label_stream(
    observations: Iterable[Observation],
    user_vocab: Vocabulary,
    entity_vocab: Vocabulary,
    type_table: EntityTypeTable,
    kind=WeightingKind.CONVEX_QUADRATIC,
) -> Iterator[LabeledSample]:
    kind = WeightingKind.parse(kind)
    for o in observations:
        T = type_table.threshold(o.entity_type)
        yield LabeledSample(
            user_vocab.lookup(o.user),
            entity_vocab.lookup(o.entity),
            o.entity_type,
            binarize(o.duration, T),
            confidence_weight(o.duration, T, kind),
            o.duration,
        )


@dataclass
class LabeledSamples:
    """Column-oriented batch of labeled samples, the trainer's input format."""

    users: np.ndarray
    entities: np.ndarray
    labels: np.ndarray
    weights: np.ndarray
    durations: np.ndarray
    entity_types: np.ndarray

    def __len__(self):
        return len(self.users)

    def __getitem__(self, idx) -> "LabeledSamples":
        return LabeledSamples(
            self.users[idx], self.entities[idx], self.labels[idx],
            self.weights[idx], self.durations[idx], self.entity_types[idx],
        )

    def positives(self) -> "LabeledSamples":
        """Only the positive-label rows (trains from the positive triples alone)."""
        return self[self.labels > 0]

    def samples(self) -> Iterator[LabeledSample]:
        for row in zip(self.users.tolist(), self.entities.tolist(), self.entity_types.tolist(),
                       self.labels.tolist(), self.weights.tolist(), self.durations.tolist()):
            yield LabeledSample(*row)

    @classmethod
    def from_samples(cls, samples: Iterable[LabeledSample]) -> "LabeledSamples":
        rows = list(samples)
        if not rows:
            return cls(np.zeros(0, np.int64), np.zeros(0, np.int64), np.zeros(0, np.int8),
                       np.zeros(0), np.zeros(0), np.zeros(0, dtype=object))
        u, e, ty, lab, w, d = zip(*rows)
        return cls(np.array(u, np.int64), np.array(e, np.int64), np.array(lab, np.int8),
                   np.array(w, float), np.array(d, float), np.array(ty, dtype=object))


def label_samples(
    observations: Iterable[Observation],
    user_vocab: Vocabulary,
    entity_vocab: Vocabulary,
    type_table: EntityTypeTable,
    kind=WeightingKind.CONVEX_QUADRATIC,
) -> LabeledSamples:
    """Vectorized :func:`label_stream` returning a column batch."""
    kind = WeightingKind.parse(kind)
    obs = list(observations)
    types = np.array([o.entity_type for o in obs], dtype=object)
    thresholds = np.array([type_table.threshold(t) for t in types], dtype=float) if obs else np.zeros(0)
    durations = np.array([o.duration for o in obs], dtype=float)
    labels = binarize(durations, thresholds) if obs else np.zeros(0, np.int8)
    weights = confidence_weight(durations, thresholds, kind) if obs else np.zeros(0)
    return LabeledSamples(
        np.array(user_vocab.lookup_many(o.user for o in obs), dtype=np.int64),
        np.array(entity_vocab.lookup_many(o.entity for o in obs), dtype=np.int64),
        np.asarray(labels, dtype=np.int8),
        np.asarray(weights, dtype=float),
        durations,
        types,
    )
