"""End-to-end helpers: observations in, trained model out."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .ingest import Observation
from .labeling import LabeledSamples, WeightingKind, label_samples
from .model import EmbeddingModel, Hyperparameters
from .trainer import OptimizerMode, TrainReport, train
from .vocab import ENTITY_UNK, USER_UNK, EntityTypeTable, Vocabulary, build_vocabulary


@dataclass
class FitResult:
    model: EmbeddingModel
    report: TrainReport
    samples: LabeledSamples
    user_unk_fraction: float
    entity_unk_fraction: float


def build_vocabularies(train: Sequence[Observation], min_count: int = 5) -> tuple[Vocabulary, Vocabulary]:
    """Separate user and entity vocabularies counted over the training split only."""
    users = build_vocabulary((o.user for o in train), min_count, USER_UNK)
    entities = build_vocabulary((o.entity for o in train), min_count, ENTITY_UNK)
    return users, entities


def fit(
    train_observations: Sequence[Observation],
    hp: Hyperparameters = Hyperparameters(),
    weighting=WeightingKind.CONVEX_QUADRATIC,
    type_table: EntityTypeTable | None = None,
    min_count: int = 5,
    optimizer=OptimizerMode.ADAGRAD,
    workers: int = 1,
    seed: int = 0,
    positives_only: bool = False,
    shuffle_buffer: int = 0,
) -> FitResult:
    """Build vocabularies, label and weight the training split, and train.

    ``positives_only`` drops negative observations so only
    observed-preferred triples are generated.
    """
    table = type_table or EntityTypeTable()
    user_vocab, entity_vocab = build_vocabularies(train_observations, min_count)
    samples = label_samples(train_observations, user_vocab, entity_vocab, table, weighting)
    if positives_only:
        samples = samples.positives()
    model, report = train(samples, user_vocab, entity_vocab, hp, optimizer=optimizer,
                          workers=workers, seed=seed, type_table=table, shuffle_buffer=shuffle_buffer)
    return FitResult(
        model, report, samples,
        user_vocab.unk_fraction(o.user for o in train_observations),
        entity_vocab.unk_fraction(o.entity for o in train_observations),
    )
