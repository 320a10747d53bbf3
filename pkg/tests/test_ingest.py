"""Corpus loading, defect repair, class stats, and the stratified split."""

from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import standard_rows, write_corpus
from tajweed.ingest import (
    ClipRecord,
    CorpusError,
    DatasetSplit,
    RuleLabels,
    apply_split_manifest,
    class_distribution,
    load_corpus,
    read_split_manifest,
    split_dataset,
    write_split_manifest,
)

TRIPLES = [(a, b, c) for a in (0, 1) for b in (0, 1) for c in (0, 1)]


def records_from_triples(triples) -> list[ClipRecord]:
    """In-memory records; split_dataset never touches the audio paths."""
    return [
        ClipRecord(
            clip_id=f"S{1 + i // 50}_{i % 50}",
            speaker_id=f"S{1 + i // 50}",
            audio_path=Path(f"/nonexistent/{i}.wav"),
            labels=RuleLabels(*t),
        )
        for i, t in enumerate(triples)
    ]


class TestRuleLabels:
    def test_accepts_binary(self):
        assert RuleLabels(1, 0, 1).as_tuple() == (1, 0, 1)

    def test_rejects_other_values(self):
        with pytest.raises(ValueError):
            RuleLabels(2, 0, 1)
        with pytest.raises(ValueError):
            RuleLabels(1, -1, 0)


class TestLoadCorpus:
    def test_small_corpus_preserves_row_order(self, tmp_path):
        rows = [("S1_0", (1, 1, 1)), ("S1_1", (0, 1, 0)), ("S2_0", (1, 0, 1))]
        write_corpus(tmp_path, rows)
        records = load_corpus(tmp_path)
        assert [r.clip_id for r in records] == ["S1_0", "S1_1", "S2_0"]
        assert [r.labels.as_tuple() for r in records] == [t for _, t in rows]
        assert records[2].speaker_id == "S2"
        assert all(r.audio_path.is_file() for r in records)

    def test_s22_6_empty_tight_noon_imputed_and_flagged(self, tmp_path):
        rows = [("S22_5", (1, 1, 1)), ("S22_6", (1, 1, 1)), ("S22_7", (0, 1, 0))]
        write_corpus(tmp_path, rows, empty_cells={"S22_6": "tight_noon"})
        records = load_corpus(tmp_path)
        byid = {r.clip_id: r for r in records}
        assert byid["S22_6"].labels.tight_noon == 1
        assert byid["S22_6"].imputed == ("tight_noon",)
        assert byid["S22_5"].imputed == ()

    def test_exclude_defective_drops_the_clip(self, tmp_path):
        rows = [("S22_5", (1, 1, 1)), ("S22_6", (1, 1, 1)), ("S22_7", (0, 1, 0))]
        write_corpus(tmp_path, rows, empty_cells={"S22_6": "tight_noon"})
        records = load_corpus(tmp_path, exclude_defective=True)
        assert [r.clip_id for r in records] == ["S22_5", "S22_7"]

    def test_unknown_empty_cell_is_hard_error(self, tmp_path):
        rows = [("S1_0", (1, 1, 1)), ("S1_1", (0, 1, 0))]
        write_corpus(tmp_path, rows, empty_cells={"S1_1": "hide"})
        with pytest.raises(CorpusError, match="no known repair"):
            load_corpus(tmp_path)

    def test_unparseable_label_names_row(self, tmp_path):
        write_corpus(tmp_path, [("S1_0", (1, 1, 1))])
        labels = tmp_path / "labels.csv"
        labels.write_text(labels.read_text().replace("1,1,1", "1,2,1"))
        with pytest.raises(CorpusError, match="row 2"):
            load_corpus(tmp_path)

    def test_missing_audio_listed(self, tmp_path):
        rows = [("S1_0", (1, 1, 1)), ("S1_1", (0, 1, 0))]
        write_corpus(tmp_path, rows, skip_audio={"S1_1"})
        with pytest.raises(CorpusError, match="S1_1"):
            load_corpus(tmp_path)

    def test_wrong_header_rejected(self, tmp_path):
        write_corpus(tmp_path, [("S1_0", (1, 1, 1))])
        labels = tmp_path / "labels.csv"
        labels.write_text(labels.read_text().replace("hide", "conceal"))
        with pytest.raises(CorpusError, match="header"):
            load_corpus(tmp_path)

    def test_duplicate_clip_id_rejected(self, tmp_path):
        write_corpus(tmp_path, [("S1_0", (1, 1, 1))])
        labels = tmp_path / "labels.csv"
        labels.write_text(labels.read_text() + "S1_0,0,0,0\n")
        with pytest.raises(CorpusError, match="duplicate"):
            load_corpus(tmp_path)

    def test_labels_round_trip(self, tmp_path):
        rows = [(f"S1_{i}", TRIPLES[i % 8]) for i in range(16)]
        write_corpus(tmp_path, rows)
        records = load_corpus(tmp_path)
        source = dict(rows)
        for rec in records:
            assert rec.labels.as_tuple() == source[rec.clip_id]


class TestClassDistribution:
    def test_all_ones_no_negatives(self):
        recs = records_from_triples([(1, 1, 1)] * 4)
        assert class_distribution(recs) == (0.0, 0.0, 0.0)

    def test_hand_count(self):
        recs = records_from_triples([(0, 1, 1), (1, 1, 0)])
        assert class_distribution(recs) == (0.5, 0.0, 0.5)

    def test_independent_linear_scan(self):
        import random

        rng = random.Random(5)
        triples = [tuple(rng.randint(0, 1) for _ in range(3)) for _ in range(377)]
        recs = records_from_triples(triples)
        got = class_distribution(recs)
        for j in range(3):
            manual = sum(1 for t in triples if t[j] == 0) / len(triples)
            assert got[j] == manual

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            class_distribution([])


class TestSplitDataset:
    def test_full_corpus_sizes(self):
        # 1505 records -> exactly (1204, 301), whatever the label mix
        triples = [TRIPLES[i % 8] for i in range(1505)]
        split = split_dataset(records_from_triples(triples), seed=42)
        assert (len(split.train), len(split.test)) == (1204, 301)

    def test_deterministic_byte_exact(self):
        triples = [TRIPLES[(i * 3) % 8] for i in range(257)]
        recs = records_from_triples(triples)
        a = split_dataset(recs, seed=7)
        b = split_dataset(recs, seed=7)
        assert [r.clip_id for r in a.train] == [r.clip_id for r in b.train]
        assert [r.clip_id for r in a.test] == [r.clip_id for r in b.test]

    def test_seed_changes_membership(self):
        triples = [(1, 1, 1)] * 60
        recs = records_from_triples(triples)
        a = split_dataset(recs, seed=1)
        b = split_dataset(recs, seed=2)
        assert {r.clip_id for r in a.test} != {r.clip_id for r in b.test}

    def test_two_strata_of_five(self):
        # hand enumeration: each stratum of 5 gives floor(4) train + 1 test
        triples = [(1, 1, 1)] * 5 + [(0, 0, 0)] * 5
        recs = records_from_triples(triples)
        split = split_dataset(recs, seed=3)
        assert (len(split.train), len(split.test)) == (8, 2)
        for stratum in ((1, 1, 1), (0, 0, 0)):
            n_train = sum(1 for r in split.train if r.labels.as_tuple() == stratum)
            n_test = sum(1 for r in split.test if r.labels.as_tuple() == stratum)
            assert (n_train, n_test) == (4, 1)

    def test_seed_required(self):
        recs = records_from_triples([(1, 1, 1)] * 6)
        with pytest.raises(ValueError, match="seed"):
            split_dataset(recs, seed=None)

    def test_too_small_rejected(self):
        recs = records_from_triples([(1, 1, 1)] * 4)
        with pytest.raises(ValueError):
            split_dataset(recs, seed=1)


@settings(max_examples=60, deadline=None)
@given(
    labels=st.lists(st.sampled_from(TRIPLES), min_size=5, max_size=80),
    seed=st.integers(min_value=0, max_value=2**31),
)
def test_split_partition_properties(labels, seed):
    recs = records_from_triples(labels)
    split = split_dataset(recs, seed)
    train_ids = {r.clip_id for r in split.train}
    test_ids = {r.clip_id for r in split.test}
    # disjoint, exhaustive, exact 80/20 overall
    assert not (train_ids & test_ids)
    assert len(train_ids | test_ids) == len(recs)
    assert len(split.train) == (4 * len(recs)) // 5
    # per-stratum train share within one clip of 80%
    for stratum in set(labels):
        k = sum(1 for t in labels if t == stratum)
        n_train = sum(1 for r in split.train if r.labels.as_tuple() == stratum)
        assert (4 * k) // 5 <= n_train <= (4 * k) // 5 + 1
    # purity: same inputs, same answer
    again = split_dataset(recs, seed)
    assert [r.clip_id for r in again.train] == [r.clip_id for r in split.train]


class TestSplitManifest:
    def test_round_trip(self, tmp_path):
        recs = records_from_triples([TRIPLES[i % 8] for i in range(23)])
        split = split_dataset(recs, seed=11)
        path = tmp_path / "split.csv"
        write_split_manifest(split, path)
        manifest = read_split_manifest(path)
        assert len(manifest) == 23
        rebuilt = apply_split_manifest(recs, manifest)
        assert [r.clip_id for r in rebuilt.train] == [r.clip_id for r in split.train]
        assert [r.clip_id for r in rebuilt.test] == [r.clip_id for r in split.test]

    def test_unknown_clip_rejected(self, tmp_path):
        recs = records_from_triples([(1, 1, 1)] * 6)
        split = split_dataset(recs, seed=1)
        path = tmp_path / "split.csv"
        write_split_manifest(split, path)
        with pytest.raises(CorpusError, match="unknown"):
            apply_split_manifest(recs[:-1], read_split_manifest(path))

    def test_bad_subset_value_rejected(self, tmp_path):
        path = tmp_path / "split.csv"
        path.write_text("clip_id,subset\nS1_0,validation\n")
        with pytest.raises(CorpusError):
            read_split_manifest(path)


def test_dataset_split_type_is_immutable():
    recs = records_from_triples([(1, 1, 1)] * 6)
    split = split_dataset(recs, seed=1)
    assert isinstance(split, DatasetSplit)
    assert isinstance(split.train, tuple) and isinstance(split.test, tuple)
