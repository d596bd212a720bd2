import numpy as np
import pytest

from bitextforge.align import (GROW_DIAG, INTERSECTION, NULL, LinkCounts, TranslationTable,
                               align_pair, count_links, format_pharaoh, grow_diag, parse_pharaoh,
                               train_ibm1, viterbi_links)
from bitextforge.errors import EmptyBitext, PositionOutOfRange
from bitextforge.toydata import dictionary_corpus

A, B, X, Y = 1, 2, 11, 12


def test_single_pair_trace():
    # "a" only ever meets "x", and so does NULL: both rows put all mass on x
    for it in (1, 2, 5, 20):
        t = train_ibm1([([A], [X])], iterations=it)
        assert t.t(X, A) == 1.0
        assert t.t(X, NULL) == 1.0
        assert t.loglik_history == [0.0] * (it + 1)


def test_two_pair_preference():
    t = train_ibm1([([A, B], [X, Y]), ([A], [X])], iterations=5)
    assert t.t(X, A) > t.t(Y, A)
    assert t.t(Y, B) > t.t(X, B)


def test_normalization_every_iteration():
    pairs, _ = dictionary_corpus(300, seed=1, n_words=40)
    for it in range(1, 6):
        t = train_ibm1(pairs, iterations=it)
        for e, total in t.row_sums().items():
            assert abs(total - 1) < 1e-6


def test_loglik_monotone():
    pairs, _ = dictionary_corpus(500, seed=2, n_words=60)
    t = train_ibm1(pairs, iterations=10)
    h = t.loglik_history
    assert len(h) == 11
    for a, b in zip(h, h[1:]):
        assert b >= a - 1e-9 * abs(a)
    assert h[-1] > h[0]


def test_empty_bitext():
    with pytest.raises(EmptyBitext):
        train_ibm1([])
    with pytest.raises(ValueError):
        train_ibm1([([A], [X])], iterations=0)


def test_dictionary_recovery():
    pairs, gold = dictionary_corpus(5000, seed=3)
    fwd = train_ibm1(pairs, 5)
    bwd = train_ibm1([(t, s) for s, t in pairs], 5)
    hit = total = 0
    for pair, g in zip(pairs, gold):
        links = align_pair(fwd, bwd, pair, INTERSECTION)
        hit += len(links & g)
        total += len(g)
    assert hit / total >= 0.99


def table(entries):
    keys = np.array(list(entries), dtype=np.int64).reshape(-1, 2)
    return TranslationTable(keys, np.array(list(entries.values()), dtype=np.float64))


def test_align_pair_identity():
    t = table({(X, X): 0.99, (NULL, X): 0.01})
    assert align_pair(t, t, ([X], [X])) == {(0, 0)}


def test_intersection_and_grow_diag():
    # fwd links (0,0),(1,1); bwd only (0,0) because both targets prefer source 0
    fwd = table({(A, X): 0.9, (B, Y): 0.9, (NULL, X): 0.05, (NULL, Y): 0.05})
    bwd = table({(X, A): 0.9, (X, B): 0.6, (Y, B): 0.1, (NULL, A): 0.05, (NULL, B): 0.05})
    pair = ([A, B], [X, Y])
    assert viterbi_links(fwd, *pair) == {(0, 0), (1, 1)}
    assert {(i, j) for j, i in viterbi_links(bwd, pair[1], pair[0])} == {(0, 0), (1, 0)}
    inter = align_pair(fwd, bwd, pair, INTERSECTION)
    assert inter == {(0, 0)}
    grown = align_pair(fwd, bwd, pair, GROW_DIAG)
    assert grown >= inter
    assert grow_diag({(0, 0)}, {(0, 0), (1, 1)}) == {(0, 0), (1, 1)}


def test_count_links_examples():
    c = count_links([([5], [9])], [{(0, 0)}], 12)
    assert c.c[5, 9] == c.c[9, 5] == 1
    assert c.c.nnz == 2
    empty = count_links([([1, 2], [3, 4])], [set()], 6)
    assert empty.c.nnz == 0
    self_link = count_links([([4], [4])], [{(0, 0)}], 6)
    assert self_link.c[4, 4] == 2
    with pytest.raises(PositionOutOfRange):
        count_links([([1], [2])], [{(1, 0)}], 4)


def test_counts_match_gold_and_are_symmetric(tmp_path):
    pairs, gold = dictionary_corpus(200, seed=4, n_words=30)
    counts = count_links(pairs, gold, 60)
    dense = counts.c.toarray()
    assert np.array_equal(dense, dense.T)
    expected = np.zeros((60, 60))
    for (s, t), g in zip(pairs, gold):
        for i, j in g:
            expected[s[i], t[j]] += 1
            expected[t[j], s[i]] += 1
    assert np.array_equal(dense, expected)
    # a 1-1 dictionary: each source word only ever pairs with word + 30
    rows, cols = np.nonzero(dense[:30])
    assert np.all(cols == rows + 30)
    counts.save(tmp_path / "c.tsv")
    assert np.array_equal(LinkCounts.load(tmp_path / "c.tsv").c.toarray(), dense)


def test_pharaoh_roundtrip():
    links = {(0, 1), (2, 0), (10, 3)}
    assert format_pharaoh(links) == "0-1 2-0 10-3"
    assert parse_pharaoh(format_pharaoh(links)) == links
    assert parse_pharaoh("") == set()


def test_table_save_load(tmp_path):
    pairs, _ = dictionary_corpus(50, seed=5, n_words=20)
    t = train_ibm1(pairs, 3)
    t.save(tmp_path / "t.tsv")
    back = TranslationTable.load(tmp_path / "t.tsv")
    assert back.rows == t.rows
