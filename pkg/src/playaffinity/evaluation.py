"""Rank-correlation and ROC metrics for duration-vs-affinity evaluation."""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Sequence

import numpy as np
from scipy import stats

from .errors import ConfigurationError
from .ingest import Observation
from .labeling import binarize
from .model import EmbeddingModel
from .vocab import EntityTypeTable

HIST_EDGES = np.linspace(-1.0, 1.0, 41)


class SpearmanResult(NamedTuple):
    rho: float
    pvalue: float

    @property
    def defined(self) -> bool:
        return not math.isnan(self.rho)


def spearman(xs, ys) -> SpearmanResult:
    """Spearman correlation with average ranks for ties.

    The p-value is two-sided from the t approximation
    ``t = rho * sqrt((n - 2) / (1 - rho**2))`` on ``n - 2`` degrees of freedom.
    Constant input on either side has no defined correlation and returns
    ``SpearmanResult(nan, nan)``.
    """
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("spearman needs two 1-D sequences of equal length")
    n = len(x)
    if n < 3:
        raise ValueError(f"spearman needs at least 3 pairs, got {n}")
    rx = stats.rankdata(x) - (n + 1) / 2.0
    ry = stats.rankdata(y) - (n + 1) / 2.0
    denom = math.sqrt(float(rx @ rx) * float(ry @ ry))
    if denom == 0.0:
        return SpearmanResult(math.nan, math.nan)
    rho = max(-1.0, min(1.0, float(rx @ ry) / denom))
    if abs(rho) == 1.0:
        return SpearmanResult(rho, 0.0)
    t = rho * math.sqrt((n - 2) / (1.0 - rho * rho))
    return SpearmanResult(rho, float(2.0 * stats.t.sf(abs(t), n - 2)))


def auc(labels, scores) -> float:
    """Probability that a random positive outscores a random negative, ties
    counted one half (Mann-Whitney rank-sum form)."""
    lab = np.asarray(labels)
    s = np.asarray(scores, dtype=float)
    if lab.shape != s.shape:
        raise ValueError("labels and scores differ in length")
    pos = lab > 0
    n_pos = int(pos.sum())
    n_neg = len(lab) - n_pos
    if n_pos == 0:
        raise ValueError("auc needs at least one positive label")
    if n_neg == 0:
        raise ValueError("auc needs at least one negative label")
    ranks = stats.rankdata(s)
    return float((ranks[pos].sum() - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


def _fmt(x: float) -> str:
    return repr(float(x))


@dataclass
class EvalReport:
    """Metric cells keyed by name, each with the number of rows behind it.

    ``absent`` records cells that could not be computed and why.
    """

    rho: float | None = None
    rho_normalized: float | None = None
    rho_per_type: dict[str, float] = field(default_factory=dict)
    auc_at: dict[float, float] = field(default_factory=dict)
    counts: dict[str, int] = field(default_factory=dict)
    absent: dict[str, str] = field(default_factory=dict)

    def cells(self) -> list[tuple[str, float, int]]:
        out = []
        if self.rho is not None:
            out.append(("rho", self.rho, self.counts["rho"]))
        if self.rho_normalized is not None:
            out.append(("rho_normalized", self.rho_normalized, self.counts["rho_normalized"]))
        for t in sorted(self.rho_per_type):
            out.append((f"rho[{t}]", self.rho_per_type[t], self.counts[f"rho[{t}]"]))
        for m in sorted(self.auc_at):
            name = auc_name(m)
            out.append((name, self.auc_at[m], self.counts[name]))
        return out

    def summary_lines(self, prefix: str = "") -> list[str]:
        """Machine-readable ``name<TAB>value<TAB>count`` lines."""
        return [f"{prefix}{name}\t{_fmt(value)}\t{count}" for name, value, count in self.cells()]

    def table(self, title: str = "") -> str:
        rows = [(name, f"{value:+.4f}", str(count)) for name, value, count in self.cells()]
        rows += [(name, "n/a", reason) for name, reason in sorted(self.absent.items())]
        width = max([len(r[0]) for r in rows] + [6])
        lines = [title] if title else []
        lines += [f"{name:<{width}}  {value:>8}  {count}" for name, value, count in rows]
        return "\n".join(lines)


def auc_name(multiplier: float) -> str:
    m = float(multiplier)
    label = str(int(m)) if m.is_integer() else repr(m)
    return "auc[T]" if m == 1.0 else f"auc[{label}T]"


def _resolve(model: EmbeddingModel, observations: Sequence[Observation]):
    users = np.array(model.user_vocab.lookup_many(o.user for o in observations), dtype=np.int64)
    entities = np.array(model.entity_vocab.lookup_many(o.entity for o in observations), dtype=np.int64)
    return users, entities


def evaluate(
    model: EmbeddingModel,
    observations: Iterable[Observation],
    type_table: EntityTypeTable | None = None,
    multipliers: Sequence[float] = (1.0, 5.0),
) -> EvalReport:
    """Correlate play durations with cosine predictions.

    ``rho`` uses raw durations, ``rho_normalized`` durations divided by the
    type threshold, ``rho[type]`` only that type's rows. ``auc[mT]`` scores
    labels re-binarized at ``m`` times each row's threshold. Unseen users and
    entities resolve to UNK before prediction.
    """
    obs = list(observations)
    if not obs:
        raise ConfigurationError("cannot evaluate an empty test set")
    table = type_table or model.type_table
    users, entities = _resolve(model, obs)
    preds = model.predict_affinity(users, entities)
    return _report(
        np.array([o.duration for o in obs]),
        np.array([table.threshold(o.entity_type) for o in obs]),
        np.array([o.entity_type for o in obs], dtype=object),
        np.atleast_1d(preds),
        multipliers,
    )


def _report(durations, thresholds, types, preds, multipliers) -> EvalReport:
    report = EvalReport()

    def corr(name, xs, ys):
        if len(xs) < 3:
            report.absent[name] = f"only {len(xs)} rows"
            return None
        result = spearman(xs, ys)
        if not result.defined:
            report.absent[name] = "constant input"
            return None
        report.counts[name] = len(xs)
        return result.rho

    report.rho = corr("rho", durations, preds)
    report.rho_normalized = corr("rho_normalized", durations / thresholds, preds)
    for t in sorted(set(types.tolist())):
        mask = types == t
        value = corr(f"rho[{t}]", durations[mask], preds[mask])
        if value is not None:
            report.rho_per_type[t] = value
    for m in multipliers:
        name = auc_name(m)
        labels = binarize(durations, float(m) * thresholds)
        try:
            report.auc_at[float(m)] = auc(labels, preds)
        except ValueError as exc:
            report.absent[name] = str(exc)
            continue
        report.counts[name] = len(labels)
    return report


class EntityCorrelation(NamedTuple):
    entity_index: int
    entity_id: str
    entity_type: str
    rho: float
    pvalue: float
    count: int


@dataclass
class PerEntityResult:
    entities: list[EntityCorrelation]
    excluded: int
    histograms: dict[str, np.ndarray]
    bin_edges: np.ndarray = field(default_factory=lambda: HIST_EDGES.copy())

    def summary_lines(self, prefix: str = "entity.") -> list[str]:
        lines = [f"{prefix}included\t{len(self.entities)}\t{len(self.entities) + self.excluded}"]
        for e in self.entities:
            lines.append(f"{prefix}rho[{e.entity_id}]\t{_fmt(e.rho)}\t{e.count}")
        for t in sorted(self.histograms):
            counts = ",".join(str(int(c)) for c in self.histograms[t])
            lines.append(f"{prefix}hist[{t}]\t{counts}\t{int(self.histograms[t].sum())}")
        return lines


def first_occurrences(model: EmbeddingModel, observations: Iterable[Observation]) -> list[Observation]:
    """Keep the first row of each resolved ``(user, entity)`` pair, in input order."""
    seen = set()
    out = []
    uv, ev = model.user_vocab, model.entity_vocab
    for o in observations:
        key = (uv.lookup(o.user), ev.lookup(o.entity))
        if key not in seen:
            seen.add(key)
            out.append(o)
    return out


def per_entity(
    model: EmbeddingModel,
    observations: Iterable[Observation],
    min_count: int = 10,
    alpha: float = 0.01,
) -> PerEntityResult:
    """Per-entity Spearman correlation between duration and prediction.

    Only entities with more than ``min_count`` deduplicated test rows and a
    p-value below ``alpha`` are kept. The UNK entity pools many identifiers
    and is never reported.
    """
    rows = first_occurrences(model, observations)
    groups: dict[int, list[Observation]] = defaultdict(list)
    ev = model.entity_vocab
    for o in rows:
        groups[ev.lookup(o.entity)].append(o)
    kept, excluded = [], 0
    for idx in sorted(groups):
        group = groups[idx]
        if idx == ev.unk_index or len(group) <= min_count:
            excluded += 1
            continue
        users, entities = _resolve(model, group)
        result = spearman([o.duration for o in group], model.predict_affinity(users, entities))
        if not result.defined or not result.pvalue < alpha:
            excluded += 1
            continue
        kept.append(EntityCorrelation(idx, ev.index_to_id[idx], group[0].entity_type,
                                      result.rho, result.pvalue, len(group)))
    kept.sort(key=lambda e: (e.entity_type, e.entity_index))
    by_type: dict[str, list[float]] = defaultdict(list)
    for e in kept:
        by_type[e.entity_type].append(e.rho)
    hists = {t: np.histogram(v, bins=HIST_EDGES)[0] for t, v in sorted(by_type.items())}
    return PerEntityResult(kept, excluded, hists)


def seen_unseen_split(model: EmbeddingModel, train: Iterable[Observation], test: Iterable[Observation]):
    """Partition ``test`` by whether its resolved ``(user, entity)`` pair occurs in ``train``."""
    uv, ev = model.user_vocab, model.entity_vocab
    pairs = {(uv.lookup(o.user), ev.lookup(o.entity)) for o in train}
    seen, unseen = [], []
    for o in test:
        (seen if (uv.lookup(o.user), ev.lookup(o.entity)) in pairs else unseen).append(o)
    return seen, unseen


def unk_involved_fraction(model: EmbeddingModel, observations: Iterable[Observation]) -> float:
    """Share of rows whose user or entity resolves to UNK."""
    total = hits = 0
    uv, ev = model.user_vocab, model.entity_vocab
    for o in observations:
        total += 1
        hits += uv.lookup(o.user) == uv.unk_index or ev.lookup(o.entity) == ev.unk_index
    return hits / total if total else 0.0
