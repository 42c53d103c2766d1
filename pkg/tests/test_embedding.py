"""Embedding table parsing, cosine math, and synonym retrieval."""

import numpy as np
import pytest

from swapguard import words
from swapguard.embedding import (EmbeddingFormatError, EmbeddingTable,
                                 UnknownTokenError, cosine_sim,
                                 load_embeddings, nearest_synonyms,
                                 save_embeddings, synthetic_table)


def brute_force_neighbors(table, token, max_candidates, min_cos_sim):
    """Independent O(V) reference for nearest_synonyms."""
    q = table.vector(token)
    hits = []
    for other in table.tokens:
        if other == token:
            continue
        c = cosine_sim(q, table.vector(other))
        if c >= min_cos_sim:
            hits.append((other, c))
    hits.sort(key=lambda tc: (-tc[1], tc[0]))
    return hits[:max_candidates]


class TestEmbeddingTable:
    def test_basic_accessors(self):
        t = EmbeddingTable(["aa", "bb"], np.array([[1.0, 0.0], [0.0, 2.0]]))
        assert len(t) == 2 and t.dim == 2
        assert "aa" in t and "zz" not in t
        np.testing.assert_array_equal(t.vector("bb"), [0.0, 2.0])

    def test_unknown_token(self):
        t = EmbeddingTable(["aa"], np.array([[1.0]]))
        with pytest.raises(UnknownTokenError):
            t.vector("bb")

    def test_rejects_duplicates_zero_rows_and_nonfinite(self):
        with pytest.raises(EmbeddingFormatError, match="duplicate"):
            EmbeddingTable(["aa", "aa"], np.eye(2))
        with pytest.raises(EmbeddingFormatError, match="zero vector"):
            EmbeddingTable(["aa", "bb"], np.array([[1.0, 0.0], [0.0, 0.0]]))
        with pytest.raises(EmbeddingFormatError, match="finite"):
            EmbeddingTable(["aa"], np.array([[np.nan, 1.0]]))

    def test_vectors_read_only(self):
        t = EmbeddingTable(["aa"], np.array([[1.0, 2.0]]))
        with pytest.raises(ValueError):
            t.vectors[0, 0] = 9.0


class TestLoadSave:
    def test_load_with_header(self, tmp_path):
        p = tmp_path / "emb.txt"
        p.write_text("2 3\naa 1 2 3\nbb 4 5 6\n", encoding="utf-8")
        t = load_embeddings(p)
        assert t.tokens == ["aa", "bb"] and t.dim == 3

    def test_load_without_header(self, tmp_path):
        p = tmp_path / "emb.txt"
        p.write_text("aa 1 2 3\nbb 4 5 6\n", encoding="utf-8")
        assert load_embeddings(p).tokens == ["aa", "bb"]

    def test_round_trip_bit_exact(self, tmp_path):
        t = synthetic_table(dim=50, seed=3)
        p = tmp_path / "emb.txt"
        save_embeddings(t, p)
        back = load_embeddings(p)
        assert back.tokens == t.tokens
        np.testing.assert_array_equal(back.vectors, t.vectors)

    @pytest.mark.parametrize("content,lineno,fragment", [
        ("aa 1 2\nbb 3\n", 2, "expected 2 components"),
        ("aa 1 2\naa 3 4\n", 2, "duplicate"),
        ("aa 1 x\n", 1, "bad float"),
        ("aa 1 inf\n", 1, "non-finite"),
        ("aa\n", 1, "no vector components"),
    ])
    def test_parse_errors_carry_line_numbers(self, tmp_path, content, lineno, fragment):
        p = tmp_path / "bad.txt"
        p.write_text(content, encoding="utf-8")
        with pytest.raises(EmbeddingFormatError) as err:
            load_embeddings(p)
        assert f"line {lineno}" in str(err.value)
        assert fragment in str(err.value)

    def test_empty_file_rejected(self, tmp_path):
        p = tmp_path / "empty.txt"
        p.write_text("", encoding="utf-8")
        with pytest.raises(EmbeddingFormatError, match="no embedding entries"):
            load_embeddings(p)


class TestCosine:
    def test_hand_value(self):
        # (3,4)·(4,3) / (5·5) = 24/25
        assert cosine_sim(np.array([3.0, 4.0]), np.array([4.0, 3.0])) == pytest.approx(0.96)

    def test_bounds_and_self(self):
        v = np.array([1.0, 2.0, -3.0])
        assert cosine_sim(v, v) == pytest.approx(1.0)
        assert cosine_sim(v, -v) == pytest.approx(-1.0)

    def test_errors(self):
        with pytest.raises(ValueError):
            cosine_sim(np.ones(2), np.ones(3))
        with pytest.raises(ValueError):
            cosine_sim(np.zeros(2), np.ones(2))


class TestNearestSynonyms:
    def test_matches_brute_force_on_random_tables(self):
        rng = np.random.default_rng(42)
        tokens = [f"w{i:02d}" for i in range(20)]
        table = EmbeddingTable(tokens, rng.normal(size=(20, 6)))
        for token in tokens[:5]:
            for thresh in (0.0, 0.2, 0.5, 0.8):
                for cap in (1, 3, 100):
                    got = nearest_synonyms(table, token, cap, thresh)
                    want = brute_force_neighbors(table, token, cap, thresh)
                    assert [c.token for c in got] == [t for t, _ in want]
                    np.testing.assert_allclose([c.cosine for c in got],
                                               [c for _, c in want], atol=1e-12)

    def test_threshold_monotonicity(self):
        table = synthetic_table()
        loose = {c.token for c in nearest_synonyms(table, "movie", 100, 0.3)}
        mid = {c.token for c in nearest_synonyms(table, "movie", 100, 0.6)}
        tight = {c.token for c in nearest_synonyms(table, "movie", 100, 0.9)}
        assert tight <= mid <= loose

    def test_excludes_query_and_validates_args(self):
        table = synthetic_table()
        assert all(c.token != "movie"
                   for c in nearest_synonyms(table, "movie", 100, 0.0))
        with pytest.raises(ValueError):
            nearest_synonyms(table, "movie", 0, 0.5)
        with pytest.raises(ValueError):
            nearest_synonyms(table, "movie", 5, 1.5)
        with pytest.raises(UnknownTokenError):
            nearest_synonyms(table, "zzz", 5, 0.5)


class TestSyntheticTable:
    def test_covers_vocabulary(self):
        t = synthetic_table()
        assert set(t.tokens) == set(words.all_words())
        assert t.dim == 50

    def test_candidate_ladder_per_canonical_word(self):
        """Thresholds 0.9 / 0.6 / 0.3 admit exactly 1 / 3 / 5 family members."""
        t = synthetic_table()
        heads = [h for h, members in words.ALL_FAMILIES.items() if members]
        for head in heads:
            for thresh, want in ((0.9, 1), (0.6, 3), (0.3, 5)):
                got = nearest_synonyms(t, head, 100, thresh)
                assert len(got) == want, (head, thresh)
                assert {c.token for c in got} <= set(words.ALL_FAMILIES[head])

    def test_cross_family_cosines_are_zero(self):
        t = synthetic_table()
        fam = {}
        for head, members in words.ALL_FAMILIES.items():
            for w in [head, *members]:
                fam[w] = head
        unit = t.vectors / np.linalg.norm(t.vectors, axis=1, keepdims=True)
        cos = unit @ unit.T
        for i, a in enumerate(t.tokens):
            for j in range(i + 1, len(t.tokens)):
                if fam[a] != fam[t.tokens[j]]:
                    assert abs(cos[i, j]) < 1e-12

    def test_uniform_norms_and_scale_invariant_cosines(self):
        t7 = synthetic_table(scale=7.0)
        t3 = synthetic_table(scale=3.0)
        np.testing.assert_allclose(np.linalg.norm(t7.vectors, axis=1), 7.0)
        np.testing.assert_allclose(np.linalg.norm(t3.vectors, axis=1), 3.0)
        a = cosine_sim(t7.vector("movie"), t7.vector("film"))
        b = cosine_sim(t3.vector("movie"), t3.vector("film"))
        assert a == pytest.approx(b, abs=1e-12)

    def test_deterministic_given_seed(self):
        np.testing.assert_array_equal(synthetic_table(seed=5).vectors,
                                      synthetic_table(seed=5).vectors)

    def test_dim_too_small_rejected(self):
        with pytest.raises(ValueError):
            synthetic_table(dim=10)

    def test_negation_word_present_and_isolated(self):
        t = synthetic_table()
        assert "not" in t
        assert nearest_synonyms(t, "not", 100, 0.3) == []
