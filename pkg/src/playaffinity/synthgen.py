"""Synthetic playback logs generated from planted user/entity factors.

True affinity is the cosine of planted vectors. Each request picks the
best-liked of a few popularity-drawn candidates; with probability
``neg_rate`` the system resolves it wrongly to the least-liked of a fresh
candidate set and the user stops within ``T/2``. Correct resolutions play for
``T * (1 + 9 * sigmoid(sharpness * a)) * lognormal(noise)``, clamped to
``[T, 20 T]``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, NamedTuple, Sequence

import numpy as np

from .errors import ConfigurationError
from .evaluation import EvalReport, evaluate
from .ingest import Observation
from .model import EmbeddingModel, cosine
from .vocab import ENTITY_UNK, USER_UNK, DEFAULT_THRESHOLDS, EntityTypeTable, Vocabulary


@dataclass(frozen=True)
class SynthConfig:
    user_count: int = 5000
    entity_count: int = 2000
    rank: int = 8
    type_fractions: Mapping[str, float] = field(
        default_factory=lambda: {"song": 0.6, "album": 0.2, "station": 0.2})
    requests_per_user: float = 40.0
    neg_rate: float = 0.25
    noise_scale: float = 0.3
    days: int = 30
    seed: int = 0
    sharpness: float = 3.0
    zipf_exponent: float = 1.0
    candidates: int = 5
    unattended_rate: float = 0.1
    interrupt_rate: float = 0.0
    thresholds: Mapping[str, float] = field(default_factory=lambda: dict(DEFAULT_THRESHOLDS))

    def __post_init__(self):
        if self.user_count < 2 or self.entity_count < 2:
            raise ConfigurationError("need at least 2 users and 2 entities")
        if self.rank < 1 or self.days < 1 or self.candidates < 1:
            raise ConfigurationError("rank, days and candidates must be positive")
        for name in ("neg_rate", "unattended_rate", "interrupt_rate"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ConfigurationError(f"{name} must lie in [0, 1]")
        if self.noise_scale < 0 or self.requests_per_user < 1:
            raise ConfigurationError("noise_scale must be >= 0 and requests_per_user >= 1")
        fractions = np.array(list(self.type_fractions.values()), dtype=float)
        if np.any(fractions < 0) or not np.isclose(fractions.sum(), 1.0):
            raise ConfigurationError("type fractions must be non-negative and sum to 1")
        missing = set(self.type_fractions) - set(self.thresholds)
        if missing:
            raise ConfigurationError(f"no threshold for entity types {sorted(missing)}")


class GroundTruth(NamedTuple):
    model: EmbeddingModel
    entity_types: np.ndarray
    popularity: np.ndarray


def user_id(i: int) -> str:
    return f"User_{i}"


def entity_id(j: int) -> str:
    return f"Entity_{j}"


def generate(config: SynthConfig = SynthConfig()) -> tuple[list[Observation], GroundTruth]:
    """Return a day-ordered observation log and the planted factors.

    The truth model's vocabularies hold every synthetic identifier (UNK rows
    are zero vectors), so it can be scored on any split of the log.
    """
    c = config
    rng = np.random.default_rng(c.seed)
    F = rng.standard_normal((c.user_count, c.rank)) / np.sqrt(c.rank)
    G = rng.standard_normal((c.entity_count, c.rank)) / np.sqrt(c.rank)
    names = list(c.type_fractions)
    types = rng.choice(len(names), size=c.entity_count, p=[c.type_fractions[t] for t in names])
    popularity = 1.0 / np.arange(1, c.entity_count + 1) ** c.zipf_exponent
    popularity /= popularity.sum()
    thresholds = np.array([c.thresholds[t] for t in names], dtype=float)[types]

    per_user = 1 + rng.poisson(c.requests_per_user - 1, size=c.user_count)
    users = np.repeat(np.arange(c.user_count), per_user)
    n = len(users)

    def pick(best: bool):
        cand = rng.choice(c.entity_count, size=(n, c.candidates), p=popularity)
        aff = cosine(F[users][:, None, :], G[cand])
        col = aff.argmax(axis=1) if best else aff.argmin(axis=1)
        return cand[np.arange(n), col]

    liked = pick(best=True)
    disliked = pick(best=False)
    wrong = rng.random(n) < c.neg_rate
    entities = np.where(wrong, disliked, liked)
    T = thresholds[entities]
    true_aff = cosine(F[users], G[entities])

    noise = np.exp(c.noise_scale * rng.standard_normal(n))
    played = T * (1.0 + 9.0 / (1.0 + np.exp(-c.sharpness * true_aff))) * noise
    played = np.clip(played, T, 20.0 * T)
    stopped = rng.uniform(0.0, T / 2.0)
    # External factors: wrong plays left running, liked plays cut short.
    unattended = rng.random(n) < c.unattended_rate
    stopped = np.where(unattended, rng.uniform(T, 2.0 * T), stopped)
    interrupted = rng.random(n) < c.interrupt_rate
    played = np.where(interrupted, rng.uniform(T / 2.0, T), played)
    durations = np.where(wrong, stopped, played)
    days = rng.integers(1, c.days + 1, size=n)

    order = np.argsort(days, kind="stable")
    log = [
        Observation(user_id(u), names[types[e]], entity_id(e), float(d), int(day))
        for u, e, d, day in zip(users[order].tolist(), entities[order].tolist(),
                                durations[order].tolist(), days[order].tolist())
    ]
    truth = GroundTruth(_truth_model(F, G, c), np.array(names, dtype=object)[types], popularity)
    return log, truth


def _truth_model(F, G, c: SynthConfig) -> EmbeddingModel:
    user_vocab = Vocabulary((USER_UNK, *(user_id(i) for i in range(len(F)))), unk_token=USER_UNK)
    entity_vocab = Vocabulary((ENTITY_UNK, *(entity_id(j) for j in range(len(G)))), unk_token=ENTITY_UNK)
    pad = np.zeros((1, F.shape[1]))
    return EmbeddingModel(
        np.vstack([pad, F]).astype(np.float32),
        np.vstack([pad, G]).astype(np.float32),
        user_vocab, entity_vocab, EntityTypeTable(c.thresholds),
    )


def oracle_metrics(truth: GroundTruth, observations: Sequence[Observation],
                   multipliers: Sequence[float] = (1.0, 5.0)) -> EvalReport:
    """Metrics of the planted factors themselves: the ceiling a learned model can approach."""
    return evaluate(truth.model, observations, multipliers=multipliers)
