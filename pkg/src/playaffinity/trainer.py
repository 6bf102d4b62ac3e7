"""Weighted BPR training by stochastic updates, optionally Hogwild-parallel.

Per triple ``(u, p, n, w)`` with ``x = f_u . (g_p - g_n)`` the update is::

    f_u += eta * w * (sigma(-x) * (g_p - g_n) - lam * f_u)
    g_p += eta * w * (sigma(-x) * f_u         - lam * g_p)
    g_n += eta * w * (-sigma(-x) * f_u        - lam * g_n)

In ``adagrad`` mode ``eta`` is divided per coordinate by the root of that
coordinate's accumulated squared gradient (plus ``eps``).
"""

from __future__ import annotations

import enum
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable

import numba
import numpy as np

from .errors import ConfigurationError, DivergenceError
from .labeling import LabeledSamples
from .model import EmbeddingModel, Hyperparameters, init_factors, pairwise_diff
from .sampling import SamplerConfig, TrainingTriple, iter_batches, make_rng, triple_arrays
from .vocab import EntityTypeTable, Vocabulary

logger = logging.getLogger(__name__)

DEFAULT_EPS = 1e-8
BATCH_SIZE = 65536
_SHUFFLE_STREAM = 2**32


class OptimizerMode(str, enum.Enum):
    PLAIN_SGD = "sgd"
    ADAGRAD = "adagrad"

    @classmethod
    def parse(cls, value) -> "OptimizerMode":
        if isinstance(value, cls):
            return value
        key = {"plain_sgd": "sgd", "plain": "sgd"}.get(str(value).lower(), str(value).lower())
        try:
            return cls(key)
        except ValueError:
            raise ConfigurationError(f"unknown optimizer {value!r}; choose sgd or adagrad") from None


@dataclass
class OptimizerState:
    mode: OptimizerMode
    user_accum: np.ndarray | None = None
    entity_accum: np.ndarray | None = None
    eps: float = DEFAULT_EPS

    @classmethod
    def create(cls, model: EmbeddingModel, mode=OptimizerMode.ADAGRAD, eps=DEFAULT_EPS) -> "OptimizerState":
        mode = OptimizerMode.parse(mode)
        if mode is OptimizerMode.PLAIN_SGD:
            return cls(mode, eps=eps)
        return cls(mode, np.zeros(model.user_factors.shape), np.zeros(model.entity_factors.shape), eps)


@dataclass
class TrainReport:
    epoch_losses: list[float] = field(default_factory=list)
    triples_per_epoch: list[int] = field(default_factory=list)
    epoch_seconds: list[float] = field(default_factory=list)
    wall_time: float = 0.0
    workers: int = 1
    optimizer: str = OptimizerMode.ADAGRAD.value

    def log_lines(self) -> list[str]:
        return [
            f"epoch {i + 1}\tloss {loss:.6f}\ttriples {n}\tseconds {sec:.3f}"
            for i, (loss, n, sec) in enumerate(zip(self.epoch_losses, self.triples_per_epoch, self.epoch_seconds))
        ]

    def to_dict(self) -> dict:
        return {
            "epoch_losses": self.epoch_losses,
            "triples_per_epoch": self.triples_per_epoch,
            "epoch_seconds": self.epoch_seconds,
            "wall_time": self.wall_time,
            "workers": self.workers,
            "optimizer": self.optimizer,
        }


def _log_sigmoid(x):
    return -np.logaddexp(0.0, -x)


def triple_loss(model: EmbeddingModel, triple: TrainingTriple) -> float:
    """``-w * ln sigma(x)`` for the triple's score gap ``x``."""
    x = pairwise_diff(model, triple.user, triple.preferred, triple.dispreferred)
    return float(-triple.weight * _log_sigmoid(x))


def sgd_step(model: EmbeddingModel, state: OptimizerState, triple: TrainingTriple, eta: float, lam: float):
    """Apply one update in place to the three rows the triple touches."""
    u, p, n, w = triple
    if p == n:
        raise ConfigurationError("preferred and dispreferred entity must differ")
    U, E = model.user_factors, model.entity_factors
    f, gp, gn = U[u].astype(np.float64), E[p].astype(np.float64), E[n].astype(np.float64)
    with np.errstate(all="ignore"):
        s = 1.0 / (1.0 + np.exp(f @ (gp - gn)))
        grads = (
            -w * (s * (gp - gn) - lam * f),
            -w * (s * f - lam * gp),
            -w * (-s * f - lam * gn),
        )
    if not all(np.all(np.isfinite(g)) for g in grads):
        raise DivergenceError(f"non-finite gradient for triple {tuple(triple)}")
    if state.mode is OptimizerMode.ADAGRAD:
        steps = []
        for acc, row, g in ((state.user_accum, u, grads[0]), (state.entity_accum, p, grads[1]),
                            (state.entity_accum, n, grads[2])):
            acc[row] += g * g
            steps.append(eta * g / (np.sqrt(acc[row]) + state.eps))
    else:
        steps = [eta * g for g in grads]
    U[u] = f - steps[0]
    E[p] = gp - steps[1]
    E[n] = gn - steps[2]


@numba.njit(nogil=True, cache=True)
def _apply_triples(U, E, AU, AE, users, pref, disp, weights, eta, lam, eps, adagrad):
    """Sequential sweep over triples; returns (loss sum, index of first
    non-finite update or -1). Rows are shared and updated without locks."""
    k_dim = U.shape[1]
    total = 0.0
    for t in range(users.shape[0]):
        u = users[t]
        p = pref[t]
        n = disp[t]
        w = weights[t]
        x = 0.0
        for k in range(k_dim):
            x += U[u, k] * (E[p, k] - E[n, k])
        if x >= 0:
            z = np.exp(-x)
            s = z / (1.0 + z)
            total += w * np.log1p(z)
        else:
            s = 1.0 / (1.0 + np.exp(x))
            total += w * (np.log1p(np.exp(x)) - x)
        for k in range(k_dim):
            fu = U[u, k]
            gp = E[p, k]
            gn = E[n, k]
            d_f = -w * (s * (gp - gn) - lam * fu)
            d_p = -w * (s * fu - lam * gp)
            d_n = -w * (-s * fu - lam * gn)
            if not (np.isfinite(d_f) and np.isfinite(d_p) and np.isfinite(d_n)):
                return total, t
            if adagrad:
                # Read-add-write into a local first, so the scale uses at
                # least this step's own squared gradient under races.
                a_f = AU[u, k] + d_f * d_f
                AU[u, k] = a_f
                a_p = AE[p, k] + d_p * d_p
                AE[p, k] = a_p
                a_n = AE[n, k] + d_n * d_n
                AE[n, k] = a_n
                U[u, k] = fu - eta * d_f / (np.sqrt(a_f) + eps)
                E[p, k] = gp - eta * d_p / (np.sqrt(a_p) + eps)
                E[n, k] = gn - eta * d_n / (np.sqrt(a_n) + eps)
            else:
                U[u, k] = fu - eta * d_f
                E[p, k] = gp - eta * d_p
                E[n, k] = gn - eta * d_n
    return total, -1


def apply_triples(U, E, state: OptimizerState, users, pref, disp, weights, eta: float, lam: float) -> float:
    """Run the compiled update sweep over column arrays; returns the summed loss."""
    adagrad = state.mode is OptimizerMode.ADAGRAD
    AU = state.user_accum if adagrad else np.zeros((1, 1))
    AE = state.entity_accum if adagrad else np.zeros((1, 1))
    total, bad = _apply_triples(U, E, AU, AE, users, pref, disp, weights, eta, lam, state.eps, adagrad)
    if bad >= 0:
        raise DivergenceError(
            f"non-finite gradient at triple ({users[bad]}, {pref[bad]}, {disp[bad]}); lower eta"
        )
    return total


def _shuffled(batch: LabeledSamples, buffer: int, rng: np.random.Generator) -> LabeledSamples:
    order = np.concatenate([
        start + rng.permutation(min(buffer, len(batch) - start)) for start in range(0, len(batch), buffer)
    ])
    return batch[order]


def train(
    samples: LabeledSamples | Callable[[], Iterable],
    user_vocab: Vocabulary,
    entity_vocab: Vocabulary,
    hp: Hyperparameters = Hyperparameters(),
    optimizer=OptimizerMode.ADAGRAD,
    workers: int = 1,
    seed: int = 0,
    type_table: EntityTypeTable | None = None,
    shuffle_buffer: int = 0,
    batch_size: int = BATCH_SIZE,
) -> tuple[EmbeddingModel, TrainReport]:
    """Fit factors to a labeled stream.

    ``samples`` is either a :class:`LabeledSamples` batch or a zero-argument
    factory that replays the labeled stream (batches or single samples); it
    is called once per epoch. Fresh peers are drawn every epoch. Within an
    epoch, rows are dealt round-robin to ``workers`` threads that update the
    shared factors without locks. With one worker the result is
    bit-reproducible for a fixed ``seed``.
    """
    if workers < 1:
        raise ConfigurationError("workers must be >= 1")
    mode = OptimizerMode.parse(optimizer)
    factory = (lambda: [samples]) if isinstance(samples, LabeledSamples) else samples
    init_u, init_e = init_factors(len(user_vocab), len(entity_vocab), hp, seed, dtype=np.float64)
    work = EmbeddingModel(init_u, init_e, user_vocab, entity_vocab, type_table or EntityTypeTable())
    state = OptimizerState.create(work, mode)
    sampler = SamplerConfig(hp.negatives_per_obs, len(entity_vocab), seed)
    report = TrainReport(workers=workers, optimizer=mode.value)
    pool = ThreadPoolExecutor(max_workers=workers) if workers > 1 else None

    def run_shard(shard: LabeledSamples, rng) -> tuple[float, int]:
        if not len(shard):
            return 0.0, 0
        u, p, d, w = triple_arrays(shard, sampler, rng)
        return apply_triples(work.user_factors, work.entity_factors, state, u, p, d, w, hp.eta, hp.lam), len(u)

    start = time.perf_counter()
    try:
        for epoch in range(hp.iterations):
            t0 = time.perf_counter()
            rngs = [make_rng(seed, epoch, k) for k in range(workers)]
            shuffle_rng = make_rng(seed, epoch, _SHUFFLE_STREAM)
            loss = 0.0
            count = offset = 0
            for batch in iter_batches_from(factory(), batch_size):
                if shuffle_buffer > 0:
                    batch = _shuffled(batch, shuffle_buffer, shuffle_rng)
                if workers == 1:
                    results = [run_shard(batch, rngs[0])]
                else:
                    slot = (offset + np.arange(len(batch))) % workers
                    futures = [pool.submit(run_shard, batch[slot == k], rngs[k]) for k in range(workers)]
                    results = [f.result() for f in futures]
                for part_loss, part_count in results:
                    loss += part_loss
                    count += part_count
                offset += len(batch)
            if offset == 0:
                raise ConfigurationError("training stream is empty")
            report.epoch_losses.append(loss / count)
            report.triples_per_epoch.append(count)
            report.epoch_seconds.append(time.perf_counter() - t0)
            logger.info("epoch %d/%d loss %.6f triples %d", epoch + 1, hp.iterations, loss / count, count)
    finally:
        if pool is not None:
            pool.shutdown()
    report.wall_time = time.perf_counter() - start
    model = EmbeddingModel(
        work.user_factors.astype(np.float32), work.entity_factors.astype(np.float32),
        user_vocab, entity_vocab, work.type_table,
    )
    return model, report


def iter_batches_from(stream, batch_size: int):
    """Normalize a replayed stream of batches and/or single samples into batches."""
    pending = []
    for item in stream:
        if isinstance(item, LabeledSamples):
            if pending:
                yield from iter_batches(pending, batch_size)
                pending = []
            yield from iter_batches(item, batch_size)
        else:
            pending.append(item)
    if pending:
        yield from iter_batches(pending, batch_size)
