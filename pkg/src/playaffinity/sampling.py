"""Expansion of labeled samples into BPR training triples.

Each observation yields ``N`` triples. A positive observation contributes
``(u, e_r, n_j)`` with the observed entity preferred over a random peer; a
negative observation contributes ``(u, p_j, e_r)`` with the observed entity
dispreferred. Peers are uniform over the entity pool minus ``e_r``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator, NamedTuple

import numpy as np

from .errors import ConfigurationError
from .labeling import LabeledSample, LabeledSamples


class TrainingTriple(NamedTuple):
    user: int
    preferred: int
    dispreferred: int
    weight: float


@dataclass(frozen=True)
class SamplerConfig:
    negatives_per_obs: int
    entity_pool_size: int
    seed: int = 0

    def __post_init__(self):
        if self.negatives_per_obs < 1:
            raise ConfigurationError(f"N must be >= 1, got {self.negatives_per_obs}")
        if self.entity_pool_size < 2:
            raise ConfigurationError("entity pool needs at least 2 entities to draw a distinct peer")


def make_rng(seed: int, epoch: int = 0, worker: int = 0) -> np.random.Generator:
    """Independent stream per (seed, epoch, worker)."""
    return np.random.default_rng(np.random.SeedSequence([seed & (2**64 - 1), epoch, worker]))


def sample_peers(observed: np.ndarray, n: int, pool_size: int, rng: np.random.Generator) -> np.ndarray:
    """Draw ``n`` peers per row, uniform over ``range(pool_size)`` minus the row's entity.

    Drawing from ``pool_size - 1`` values and stepping over the observed index
    has the same law as redrawing until distinct, and consumes exactly ``n``
    variates per row, so batched and per-row calls see the same stream.
    """
    observed = np.asarray(observed, dtype=np.int64)
    draws = rng.integers(0, pool_size - 1, size=(len(observed), n), dtype=np.int64)
    draws += draws >= observed[:, None]
    return draws


def triple_arrays(batch: LabeledSamples, config: SamplerConfig, rng: np.random.Generator):
    """Column form of :func:`triple_stream` for one batch.

    Returns ``(users, preferred, dispreferred, weights)``, each of length
    ``N * len(batch)``, grouped so the ``N`` triples of an observation are
    contiguous.
    """
    n = config.negatives_per_obs
    if len(batch) and (batch.entities.min() < 0 or batch.entities.max() >= config.entity_pool_size):
        raise ConfigurationError("entity index outside the sampling pool")
    peers = sample_peers(batch.entities, n, config.entity_pool_size, rng)
    observed = np.repeat(batch.entities, n)
    peers = peers.ravel()
    positive = np.repeat(batch.labels > 0, n)
    preferred = np.where(positive, observed, peers)
    dispreferred = np.where(positive, peers, observed)
    return np.repeat(batch.users, n), preferred, dispreferred, np.repeat(batch.weights, n)


def expand(sample: LabeledSample, config: SamplerConfig, rng: np.random.Generator) -> list[TrainingTriple]:
    peers = sample_peers(np.array([sample.entity_index]), config.negatives_per_obs,
                         config.entity_pool_size, rng)[0]
    if sample.label > 0:
        return [TrainingTriple(sample.user_index, sample.entity_index, int(p), sample.weight) for p in peers]
    return [TrainingTriple(sample.user_index, int(p), sample.entity_index, sample.weight) for p in peers]


def iter_batches(samples: Iterable[LabeledSample] | LabeledSamples, size: int) -> Iterator[LabeledSamples]:
    if isinstance(samples, LabeledSamples):
        for start in range(0, len(samples), size):
            yield samples[start:start + size]
        return
    chunk = []
    for s in samples:
        chunk.append(s)
        if len(chunk) == size:
            yield LabeledSamples.from_samples(chunk)
            chunk = []
    if chunk:
        yield LabeledSamples.from_samples(chunk)


def triple_stream(samples, config: SamplerConfig, batch_size: int = 8192) -> Iterator[TrainingTriple]:
    """Lazily expand a labeled stream; memory is bounded by ``batch_size``."""
    rng = make_rng(config.seed)
    for batch in iter_batches(samples, batch_size):
        cols = triple_arrays(batch, config, rng)
        for u, p, d, w in zip(*(c.tolist() for c in cols)):
            yield TrainingTriple(u, p, d, w)
