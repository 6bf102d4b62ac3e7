from types import SimpleNamespace

import numpy as np
import pytest

from playaffinity.ingest import SplitSpec, causal_split
from playaffinity.model import EmbeddingModel
from playaffinity.synthgen import SynthConfig, generate
from playaffinity.vocab import ENTITY_UNK, USER_UNK, Vocabulary

BENCHMARK = SynthConfig(user_count=5000, entity_count=2000, rank=8, neg_rate=0.25, seed=7)


@pytest.fixture(scope="session")
def benchmark():
    log, truth = generate(BENCHMARK)
    spec = SplitSpec(BENCHMARK.days - 1, BENCHMARK.days)
    split = causal_split(log, spec)
    return SimpleNamespace(config=BENCHMARK, log=log, truth=truth, spec=spec,
                           train=split.train, dev=split.dev, test=split.test)


def make_model(user_rows, entity_rows, dtype=np.float64):
    """Model over explicit factor rows; identifiers are u0.. and e0.. after the UNK row."""
    users = np.asarray(user_rows, dtype=dtype)
    entities = np.asarray(entity_rows, dtype=dtype)
    uv = Vocabulary((USER_UNK, *(f"u{i}" for i in range(1, len(users)))), unk_token=USER_UNK)
    ev = Vocabulary((ENTITY_UNK, *(f"e{i}" for i in range(1, len(entities)))), unk_token=ENTITY_UNK)
    return EmbeddingModel(users, entities, uv, ev)


@pytest.fixture
def random_model():
    rng = np.random.default_rng(11)
    return make_model(rng.normal(size=(6, 4)), rng.normal(size=(9, 4)))


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
