"""Playback log parsing and causal day-based splitting."""

from __future__ import annotations

import io
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, NamedTuple, TextIO

from .errors import ConfigurationError, ParseError

logger = logging.getLogger(__name__)

LOG_COLUMNS = ("user_id", "entity_type", "entity_id", "duration_sec", "day")

# Slot names as they appear in raw logs.
_SLOT_ALIASES = {"songname": "song", "albumname": "album", "stationname": "station"}


def canonical_type(raw: str) -> str:
    """``"SongName"`` -> ``"song"``; unknown slot names are lower-cased with a
    trailing ``name`` stripped so new entity types pass through."""
    key = raw.strip().lower()
    if key in _SLOT_ALIASES:
        return _SLOT_ALIASES[key]
    if key.endswith("name") and len(key) > 4:
        return key[:-4]
    return key


class Observation(NamedTuple):
    """One playback record."""

    user: str
    entity_type: str
    entity: str
    duration: float
    day: int


@dataclass
class ParseStats:
    accepted: int = 0
    rejected: int = 0


def _open(source) -> tuple[TextIO, bool]:
    if isinstance(source, (str, Path)):
        return open(source, encoding="utf-8", newline=""), True
    return source, False


def parse_log(source, strict: bool = False, stats: ParseStats | None = None) -> Iterator[Observation]:
    """Yield observations from a tab-separated playback log.

    The first line must be the header ``user_id entity_type entity_id
    duration_sec day``. Malformed lines and negative durations are counted in
    ``stats.rejected`` and skipped, or raise :class:`ParseError` when
    ``strict`` is set.
    """
    stats = stats if stats is not None else ParseStats()
    fh, owned = _open(source)
    try:
        header = fh.readline().rstrip("\r\n").split("\t")
        if tuple(header) != LOG_COLUMNS:
            raise ParseError(f"expected header {'/'.join(LOG_COLUMNS)}, got {header!r}", 1)
        for lineno, line in enumerate(fh, start=2):
            line = line.rstrip("\r\n")
            if not line:
                continue
            try:
                obs = _parse_line(line)
            except ValueError as exc:
                if strict:
                    raise ParseError(str(exc), lineno) from None
                stats.rejected += 1
                logger.debug("rejecting line %d: %s", lineno, exc)
                continue
            stats.accepted += 1
            yield obs
    finally:
        if owned:
            fh.close()
    if stats.rejected:
        logger.warning("skipped %d malformed log lines", stats.rejected)


def _parse_line(line: str) -> Observation:
    parts = line.split("\t")
    if len(parts) != len(LOG_COLUMNS):
        raise ValueError(f"expected {len(LOG_COLUMNS)} fields, got {len(parts)}")
    user, etype, entity, dur, day = parts
    if not user or not entity or not etype:
        raise ValueError("empty identifier field")
    duration = float(dur)
    if not math.isfinite(duration) or duration < 0:
        raise ValueError(f"duration must be finite and non-negative, got {dur!r}")
    return Observation(user, canonical_type(etype), entity, duration, int(day))


def read_log(source, strict: bool = False) -> tuple[list[Observation], ParseStats]:
    stats = ParseStats()
    return list(parse_log(source, strict=strict, stats=stats)), stats


def read_logs(paths: Iterable, strict: bool = False, max_workers: int = 4) -> tuple[list[Observation], ParseStats]:
    """Parse several files concurrently and merge in file order, then line order."""
    from concurrent.futures import ThreadPoolExecutor

    paths = list(paths)
    with ThreadPoolExecutor(max_workers=max(1, min(max_workers, len(paths)))) as pool:
        parts = list(pool.map(lambda p: read_log(p, strict=strict), paths))
    merged, total = [], ParseStats()
    for obs, stats in parts:
        merged.extend(obs)
        total.accepted += stats.accepted
        total.rejected += stats.rejected
    return merged, total


def format_log(observations: Iterable[Observation]) -> str:
    buf = io.StringIO()
    write_log(observations, buf)
    return buf.getvalue()


def write_log(observations: Iterable[Observation], dest):
    """Inverse of :func:`parse_log`; durations are written with ``repr`` so
    they parse back to the same float."""
    owned = isinstance(dest, (str, Path))
    fh = open(dest, "w", encoding="utf-8", newline="") if owned else dest
    try:
        fh.write("\t".join(LOG_COLUMNS) + "\n")
        for o in observations:
            fh.write(f"{o.user}\t{o.entity_type}\t{o.entity}\t{float(o.duration)!r}\t{int(o.day)}\n")
    finally:
        if owned:
            fh.close()


@dataclass(frozen=True)
class SplitSpec:
    """Observations before ``dev_day`` train; ``dev_day`` and ``test_day``
    are held out; anything after ``test_day`` is discarded."""

    dev_day: int
    test_day: int

    def __post_init__(self):
        if not self.dev_day < self.test_day:
            raise ConfigurationError(f"dev_day ({self.dev_day}) must precede test_day ({self.test_day})")

    @classmethod
    def last_two_days(cls, observations: Iterable[Observation]) -> "SplitSpec":
        last = max(o.day for o in observations)
        return cls(last - 1, last)


class Split(NamedTuple):
    train: list[Observation]
    dev: list[Observation]
    test: list[Observation]


def causal_split(observations: Iterable[Observation], spec: SplitSpec) -> Split:
    train, dev, test = [], [], []
    for o in observations:
        if o.day < spec.dev_day:
            train.append(o)
        elif o.day == spec.dev_day:
            dev.append(o)
        elif o.day == spec.test_day:
            test.append(o)
    if not train:
        raise ConfigurationError(f"no observations before dev day {spec.dev_day}; cannot fit a model")
    return Split(train, dev, test)
