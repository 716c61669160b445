import numpy as np
import pandas as pd
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from exposure_audit.errors import EmptyDatasetError, ParseError, SupplierConflictError
from exposure_audit.ingest import (
    RatingDataset,
    filter_min_profile,
    implicit_to_explicit,
    load_ratings,
    load_supplier_map,
    read_supplier_map,
    split_train_test,
    write_ratings,
)


def _write(path, text):
    path.write_text(text, encoding="utf-8")
    return path


def _sized(sizes):
    """Dataset where user k has ``sizes[k]`` ratings on items i000.."""
    rows = [(f"u{k}", f"i{j:03d}", 1 + (j % 5)) for k, s in enumerate(sizes) for j in range(s)]
    return RatingDataset.from_records(rows)


class TestLoadRatings:
    def test_three_rows(self, tmp_path):
        path = _write(tmp_path / "r.csv", "u1,i1,4\nu1,i2,2\nu2,i1,5\n")
        ds = load_ratings(path)
        assert (ds.n_users, ds.n_items, len(ds)) == (2, 2, 3)
        assert ds.profiles["u1"] == {"i1": 4.0, "i2": 2.0}

    @pytest.mark.parametrize("text", [
        "user,item,rating\nu1,i1,4\nu2,i1,5\n",
        "u1::i1::4::978300760\nu2::i1::5::978300761\n",
        "u1\ti1\t4\nu2\ti1\t5\n",
    ])
    def test_delimiters_and_header(self, tmp_path, text):
        ds = load_ratings(_write(tmp_path / "r.dat", text))
        assert len(ds) == 2 and ds.n_users == 2

    def test_malformed_row_reports_line(self, tmp_path):
        path = _write(tmp_path / "r.csv", "u1,i1,4\nu1,i2\n")
        with pytest.raises(ParseError, match=r"r\.csv:2"):
            load_ratings(path)

    def test_out_of_scale(self, tmp_path):
        with pytest.raises(ParseError):
            load_ratings(_write(tmp_path / "r.csv", "u1,i1,9\n"))

    def test_empty(self, tmp_path):
        with pytest.raises(EmptyDatasetError):
            load_ratings(_write(tmp_path / "r.csv", ""))

    def test_implicit_aggregation(self, tmp_path):
        path = _write(tmp_path / "p.csv", "u1,a\n" * 10 + "u1,b,3\nu1,b,2\n")
        frame = load_ratings(path, format="implicit_csv")
        counts = dict(zip(frame["item"], frame["count"]))
        assert counts == {"a": 10, "b": 5}

    def test_unknown_format(self, tmp_path):
        with pytest.raises(ValueError):
            load_ratings(_write(tmp_path / "r.csv", "u1,i1,4\n"), format="parquet")

    def test_write_roundtrip(self, tmp_path, tiny):
        write_ratings(tiny, tmp_path / "out.csv")
        again = load_ratings(tmp_path / "out.csv")
        pd.testing.assert_frame_equal(again.frame, tiny.frame)


class TestImplicitToExplicit:
    def test_scaling_example(self):
        ds = implicit_to_explicit(pd.DataFrame({"user": "u1", "item": ["a", "b", "c"], "count": [10, 5, 1]}))
        prof = ds.profiles["u1"]
        # 1 + 4 * (5 - 1) / (10 - 1)
        assert prof["a"] == 5.0 and prof["c"] == 1.0
        assert prof["b"] == pytest.approx(2.7777777777777777, abs=1e-12)

    def test_equal_counts_midpoint(self):
        ds = implicit_to_explicit(pd.DataFrame({"user": "u1", "item": ["a", "b"], "count": [7, 7]}))
        assert set(ds.profiles["u1"].values()) == {3.0}

    @given(st.lists(st.integers(1, 1000), min_size=1, max_size=30))
    def test_monotone_and_bounded(self, counts):
        frame = pd.DataFrame({"user": "u", "item": [f"i{k}" for k in range(len(counts))], "count": counts})
        prof = implicit_to_explicit(frame).profiles["u"]
        values = [prof[f"i{k}"] for k in range(len(counts))]
        assert all(1.0 <= v <= 5.0 for v in values)
        for a, ca in zip(values, counts):
            for b, cb in zip(values, counts):
                if ca > cb:
                    assert a >= b


class TestFilter:
    def test_boundary_inclusive(self):
        ds = filter_min_profile(_sized([25, 20, 19]), 20)
        assert sorted(ds.profiles) == ["u0", "u1"]

    def test_threshold_one_is_identity(self):
        ds = _sized([3, 1, 2])
        assert filter_min_profile(ds, 1).frame.equals(ds.frame)

    def test_recount(self):
        ds = filter_min_profile(_sized([30, 22, 20, 10, 5]), 20)
        assert ds.n_users == 3
        expected = {}
        for u, i, _ in ds.frame.itertuples(index=False):
            expected[i] = expected.get(i, 0) + 1
        assert ds.item_counts == expected
        assert expected["i000"] == 3 and expected["i025"] == 1

    def test_nothing_survives(self):
        with pytest.raises(EmptyDatasetError):
            filter_min_profile(_sized([3, 4]), 20)


class TestSplit:
    def test_exact_fraction(self):
        pair = split_train_test(_sized([10]), 0.2, seed=1)
        assert len(pair.test) == 2 and len(pair.train) == 8

    def test_deterministic(self):
        ds = _sized([15, 12, 30])
        a, b = split_train_test(ds, 0.2, seed=5), split_train_test(ds, 0.2, seed=5)
        assert a.train.frame.equals(b.train.frame) and a.test.frame.equals(b.test.frame)

    def test_single_rating_user_warns(self):
        pair = split_train_test(_sized([1, 10]), 0.2, seed=0)
        assert pair.warnings and "u0" in pair.train.profiles

    def test_global_share(self, synthetic_split):
        share = len(synthetic_split.test) / (len(synthetic_split.train) + len(synthetic_split.test))
        assert 0.18 <= share <= 0.22

    @settings(max_examples=40, deadline=None)
    @given(st.lists(st.integers(1, 40), min_size=1, max_size=12), st.integers(0, 2**16))
    def test_partition(self, sizes, seed):
        ds = _sized(sizes)
        pair = split_train_test(ds, 0.2, seed=seed)
        train = set(zip(pair.train.frame["user"], pair.train.frame["item"]))
        test = set(zip(pair.test.frame["user"], pair.test.frame["item"]))
        assert not train & test
        assert train | test == set(zip(ds.frame["user"], ds.frame["item"]))
        assert set(pair.train.profiles) == set(ds.profiles)


class TestSuppliers:
    def test_drops_unmapped_items(self, tmp_path):
        rows = [(f"u{u}", f"i{i}", 3) for u in range(4) for i in range(10) if (u + i) % 3]
        ds = RatingDataset.from_records(rows)
        mapped = [f"i{i}" for i in range(2, 10)]
        path = _write(tmp_path / "s.csv", "".join(f"{i},s{k % 3}\n" for k, i in enumerate(mapped)))
        smap, joined = load_supplier_map(path, ds)
        lost = sum(1 for _, i, _ in rows if i in ("i0", "i1"))
        assert len(joined) == len(rows) - lost
        assert smap.dropped_ratings == lost and smap.dropped_items == 2
        assert all(i in smap for i in joined.item_ids)

    def test_total_map_drops_nothing(self, tmp_path, tiny):
        smap, joined = load_supplier_map(_write(tmp_path / "s.csv", "i1,a\ni2,b\n"), tiny)
        assert len(joined) == len(tiny) and smap.dropped_ratings == 0

    def test_conflict(self, tmp_path):
        with pytest.raises(SupplierConflictError):
            read_supplier_map(_write(tmp_path / "s.csv", "i1,a\ni1,b\n"))


def test_duplicate_pairs_rejected():
    with pytest.raises(ValueError):
        RatingDataset.from_records([("u", "i", 1), ("u", "i", 2)])


def test_csr_matches_frame(tiny):
    X = tiny.to_csr().toarray()
    assert X.shape == (2, 2)
    assert np.isclose(X[tiny.user_index["u1"], tiny.item_index["i2"]], 2.0)
