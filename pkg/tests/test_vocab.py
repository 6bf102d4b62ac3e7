import pytest
from hypothesis import given, strategies as st

from playaffinity.errors import ConfigurationError, ModelFormatError
from playaffinity.vocab import EntityTypeTable, Vocabulary, build_vocabulary, lookup


def corpus():
    return ["User_3"] * 12 + ["User_9"] * 4 + ["User_1"] * 5


class TestBuildVocabulary:
    def test_frequent_identifier_gets_own_index(self):
        v = build_vocabulary(corpus(), min_count=5)
        assert lookup(v, "User_3") != v.unk_index

    def test_rare_identifier_folds_to_unk(self):
        v = build_vocabulary(corpus(), min_count=5)
        assert lookup(v, "User_9") == v.unk_index

    def test_min_count_one_keeps_everything(self):
        ids = corpus() + ["once"]
        v = build_vocabulary(ids, min_count=1)
        assert all(v.lookup(i) != v.unk_index for i in set(ids))

    def test_first_occurrence_order(self):
        v = build_vocabulary(["b", "a", "b", "c", "a"], min_count=1)
        assert v.index_to_id == ("<UNK>", "b", "a", "c")

    def test_empty_stream_gives_unk_only(self):
        v = build_vocabulary([], min_count=5)
        assert len(v) == 1
        assert v.lookup("anything") == v.unk_index == 0

    def test_rejects_bad_min_count(self):
        with pytest.raises(ConfigurationError):
            build_vocabulary(["a"], min_count=0)

    def test_unseen_and_unk_token_resolve_to_unk(self):
        v = build_vocabulary(corpus(), min_count=5, unk_token="<User_UNK>")
        assert v.lookup("never_seen") == v.unk_index
        assert v.lookup("<User_UNK>") == v.unk_index

    def test_unk_fraction(self):
        v = build_vocabulary(corpus(), min_count=5)
        assert v.unk_fraction(corpus()) == pytest.approx(4 / 21)
        assert v.unk_fraction([]) == 0.0


@given(st.lists(st.sampled_from("abcdefghij"), max_size=60), st.integers(1, 6))
def test_invariants(ids, min_count):
    v = build_vocabulary(ids, min_count=min_count)
    assert sorted(v.id_to_index.values()) == list(range(len(v)))
    for i, ident in enumerate(v.index_to_id):
        if i != v.unk_index:
            assert v.lookup(ident) == i
    for ident in set(ids):
        if ids.count(ident) < min_count:
            assert v.lookup(ident) == v.unk_index
        else:
            assert v.lookup(ident) != v.unk_index


class TestSerialization:
    def test_round_trip(self, tmp_path):
        v = build_vocabulary(corpus() + ["Entity #5"] * 6, min_count=5, unk_token="<Entity_UNK>")
        path = tmp_path / "vocab.tsv"
        v.save(path)
        assert Vocabulary.load(path) == v
        assert path.read_text().splitlines()[1] == "<Entity_UNK>\t0"

    def test_rejects_tab_in_identifier(self, tmp_path):
        v = build_vocabulary(["a\tb"], min_count=1)
        with pytest.raises(ConfigurationError):
            v.save(tmp_path / "v.tsv")

    def test_rejects_missing_header(self, tmp_path):
        path = tmp_path / "v.tsv"
        path.write_text("<UNK>\t0\n")
        with pytest.raises(ModelFormatError):
            Vocabulary.load(path)


class TestEntityTypeTable:
    def test_defaults(self):
        t = EntityTypeTable()
        assert t.threshold("song") == 30.0
        assert t.threshold("station") == t.threshold("album") == 180.0

    def test_unknown_type_names_it(self):
        with pytest.raises(ConfigurationError, match="audiobook"):
            EntityTypeTable().threshold("audiobook")

    @pytest.mark.parametrize("bad", [0, -1, float("nan")])
    def test_non_positive_threshold(self, bad):
        with pytest.raises(ConfigurationError):
            EntityTypeTable({"song": bad})

    def test_json_round_trip(self, tmp_path):
        t = EntityTypeTable({"song": 30, "video": 120.5})
        t.to_json(tmp_path / "t.json")
        assert EntityTypeTable.from_json(tmp_path / "t.json") == t
