import io
from collections import Counter

import pytest
from hypothesis import given, strategies as st

from playaffinity.errors import ConfigurationError, ParseError
from playaffinity.ingest import (
    Observation, ParseStats, SplitSpec, canonical_type, causal_split, format_log, parse_log, read_log, read_logs,
    write_log,
)

HEADER = "user_id\tentity_type\tentity_id\tduration_sec\tday\n"


def log_text(*lines):
    return io.StringIO(HEADER + "".join(line + "\n" for line in lines))


class TestParseLog:
    def test_song_row(self):
        (obs,) = parse_log(log_text("User_3\tSongName\tEntity_5\t10.0\t41"))
        assert obs == Observation("User_3", "song", "Entity_5", 10.0, 41)

    def test_station_row(self):
        (obs,) = parse_log(log_text("User_4\tStationName\tEntity_7\t900.0\t41"))
        assert obs.entity_type == "station"
        assert obs.duration == 900.0

    def test_negative_duration_rejected(self):
        stats = ParseStats()
        rows = list(parse_log(log_text("User_3\tSongName\tEntity_5\t-3.0\t41",
                                       "User_3\tSongName\tEntity_5\t3.0\t41"), stats=stats))
        assert len(rows) == 1
        assert (stats.accepted, stats.rejected) == (1, 1)

    @pytest.mark.parametrize("line", [
        "User_3\tSongName\tEntity_5\t10.0",
        "User_3\tSongName\tEntity_5\tten\t41",
        "User_3\tSongName\tEntity_5\t10.0\tday41",
        "User_3\tSongName\tEntity_5\tnan\t41",
        "\tSongName\tEntity_5\t1.0\t41",
    ])
    def test_malformed_lines_counted(self, line):
        stats = ParseStats()
        assert list(parse_log(log_text(line), stats=stats)) == []
        assert stats.rejected == 1

    def test_strict_reports_line_number(self):
        src = log_text("User_3\tSongName\tEntity_5\t10.0\t41", "User_3\tSongName\tEntity_5\t-3.0\t41")
        with pytest.raises(ParseError, match="line 3"):
            list(parse_log(src, strict=True))

    def test_bad_header(self):
        with pytest.raises(ParseError):
            list(parse_log(io.StringIO("a\tb\n")))

    def test_order_preserved_and_blank_lines_skipped(self):
        rows = list(parse_log(log_text("a\tsong\tx\t1.0\t1", "", "b\tsong\ty\t2.0\t1")))
        assert [r.user for r in rows] == ["a", "b"]

    def test_extensible_types(self):
        assert canonical_type("AudioBookName") == "audiobook"
        assert canonical_type("song") == "song"

    def test_read_logs_merges_in_file_order(self, tmp_path):
        paths = []
        for i in range(3):
            p = tmp_path / f"part{i}.tsv"
            write_log([Observation(f"u{i}", "song", "e", float(i), 1)] * 2, p)
            paths.append(p)
        merged, stats = read_logs(paths)
        assert [o.user for o in merged] == ["u0", "u0", "u1", "u1", "u2", "u2"]
        assert stats.accepted == 6


obs_strategy = st.builds(
    Observation,
    st.from_regex(r"[A-Za-z0-9_]{1,8}", fullmatch=True),
    st.sampled_from(["song", "album", "station"]),
    st.from_regex(r"[A-Za-z0-9_]{1,8}", fullmatch=True),
    st.floats(0, 1e6, allow_nan=False),
    st.integers(0, 400),
)


@given(st.lists(obs_strategy, max_size=20))
def test_write_parse_round_trip(observations):
    assert list(parse_log(io.StringIO(format_log(observations)))) == observations


def days_log(counts):
    return [Observation(f"u{d}_{i}", "song", "e", 1.0, d) for d, c in counts.items() for i in range(c)]


class TestCausalSplit:
    def test_ninety_days(self):
        log = days_log({d: 2 for d in range(1, 91)})
        split = causal_split(log, SplitSpec(89, 90))
        assert {o.day for o in split.train} == set(range(1, 89))
        assert {o.day for o in split.dev} == {89}
        assert {o.day for o in split.test} == {90}

    def test_empty_train_is_an_error(self):
        with pytest.raises(ConfigurationError):
            causal_split(days_log({90: 5}), SplitSpec(89, 90))

    def test_split_sizes_match_tally(self):
        counts = {1: 3, 2: 7, 3: 1, 4: 4, 5: 9, 6: 2, 7: 5, 8: 6, 9: 8, 10: 3, 11: 4}
        log = days_log(counts)
        tally = Counter(o.day for o in log)  # one-pass per-day tally
        split = causal_split(log, SplitSpec(9, 10))
        assert len(split.train) == sum(tally[d] for d in range(1, 9))
        assert len(split.dev) == tally[9]
        assert len(split.test) == tally[10]

    def test_dev_must_precede_test(self):
        with pytest.raises(ConfigurationError):
            SplitSpec(5, 5)

    def test_last_two_days(self):
        assert SplitSpec.last_two_days(days_log({1: 1, 7: 1})) == SplitSpec(6, 7)


@given(st.lists(st.integers(1, 12), min_size=1, max_size=50), st.integers(2, 10))
def test_partition_and_causality(days, dev_day):
    log = [Observation(f"u{i}", "song", "e", 1.0, d) for i, d in enumerate(days)]
    spec = SplitSpec(dev_day, dev_day + 1)
    if not any(d < dev_day for d in days):
        with pytest.raises(ConfigurationError):
            causal_split(log, spec)
        return
    train, dev, test = causal_split(log, spec)
    discarded = [o for o in log if o.day > spec.test_day]
    assert Counter(train + dev + test + discarded) == Counter(log)
    assert max(o.day for o in train) < min((o.day for o in dev + test), default=10**9)
