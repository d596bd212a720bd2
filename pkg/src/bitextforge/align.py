"""IBM Model 1 word alignment with NULL, Viterbi link extraction,
intersection / grow-diag symmetrization and symmetric link counting.

``TranslationTable`` stores ``t(f | e)``: the probability that conditioning
token ``e`` (source side, including NULL) generates token ``f`` on the
other side.  Rows are normalized over ``f`` for each ``e``.
"""
from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp

from .errors import EmptyBitext, PositionOutOfRange

NULL = -1


class TranslationTable:
    def __init__(self, keys, values):
        self.keys = keys            # (K, 2) int64 array of (e, f)
        self.values = values        # (K,) float64
        self.rows = {}
        for (e, f), v in zip(keys.tolist(), values.tolist()):
            self.rows.setdefault(e, {})[f] = v
        self.loglik_history = []

    def t(self, f, e) -> float:
        return self.rows.get(e, {}).get(f, 0.0)

    def row_sums(self) -> dict:
        sums = {}
        for (e, _), v in zip(self.keys.tolist(), self.values.tolist()):
            sums[e] = sums.get(e, 0.0) + v
        return sums

    def matrix(self, src: Sequence[int], tgt: Sequence[int]) -> np.ndarray:
        """(len(src)+1) x len(tgt) matrix of t(tgt_j | src_i), row 0 is NULL."""
        empty = {}
        rows = [self.rows.get(e, empty) for e in [NULL] + list(src)]
        return np.array([[r.get(f, 0.0) for f in tgt] for r in rows],
                        dtype=np.float64).reshape(len(rows), len(tgt))

    def save(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            for (e, f), v in zip(self.keys.tolist(), self.values.tolist()):
                fh.write(f"{e}\t{f}\t{v!r}\n")

    @classmethod
    def load(cls, path):
        keys, vals = [], []
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                e, f, v = line.split("\t")
                keys.append((int(e), int(f)))
                vals.append(float(v))
        return cls(np.array(keys, dtype=np.int64).reshape(-1, 2), np.array(vals))


def train_ibm1(bitext: Iterable, iterations: int = 5) -> TranslationTable:
    """EM for IBM Model 1 over ``(src_ids, tgt_ids)`` pairs.

    Initialization is uniform over the target tokens each source token (and
    NULL) co-occurs with.  ``loglik_history`` holds the corpus log-likelihood
    measured at the start of every iteration plus once after the last one.
    """
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    pairs = [([NULL] + list(s), list(t)) for s, t in bitext if len(t)]
    if not pairs:
        raise EmptyBitext("no sentence pairs to align")

    # Flatten every (l+1) x m cell matrix column by column so that each target
    # position owns a contiguous run; EM then reduces with bincount.
    index = {}
    flat, col_id, col_len = [], [], []
    col = 0
    for s, t in pairs:
        for f in t:
            for e in s:
                k = index.get((e, f))
                if k is None:
                    k = index[(e, f)] = len(index)
                flat.append(k)
                col_id.append(col)
            col_len.append(len(s))
            col += 1
    flat = np.array(flat, dtype=np.int64)
    col_id = np.array(col_id, dtype=np.int64)
    log_len = np.log(np.array(col_len, dtype=np.float64))
    keys = np.array(list(index), dtype=np.int64).reshape(-1, 2)
    _, src_of = np.unique(keys[:, 0], return_inverse=True)
    fan_out = np.bincount(src_of)
    values = 1.0 / fan_out[src_of]

    history = []
    for it in range(iterations + 1):
        probs = values[flat]
        colsum = np.bincount(col_id, weights=probs, minlength=col)
        history.append(float(np.sum(np.log(colsum) - log_len)))
        if it == iterations:
            break
        counts = np.bincount(flat, weights=probs / colsum[col_id], minlength=len(values))
        totals = np.bincount(src_of, weights=counts)
        values = counts / totals[src_of]
    table = TranslationTable(keys, values)
    table.loglik_history = history
    return table


def viterbi_links(table: TranslationTable, src, tgt) -> set:
    """Each target position links to its best source position; NULL links dropped."""
    if not len(tgt):
        return set()
    best = table.matrix(src, tgt).argmax(axis=0)
    return {(int(i) - 1, j) for j, i in enumerate(best) if i > 0}


def grow_diag(inter: set, union: set) -> set:
    links = set(inter)
    neighbours = [(-1, 0), (0, -1), (1, 0), (0, 1), (-1, -1), (-1, 1), (1, -1), (1, 1)]
    grew = True
    while grew:
        grew = False
        for i, j in sorted(links):
            for di, dj in neighbours:
                cand = (i + di, j + dj)
                if cand in links or cand not in union:
                    continue
                src_free = all(a != cand[0] for a, _ in links)
                tgt_free = all(b != cand[1] for _, b in links)
                if src_free or tgt_free:
                    links.add(cand)
                    grew = True
    return links


INTERSECTION, GROW_DIAG = "intersection", "grow-diag"


def align_pair(fwd: TranslationTable, bwd: TranslationTable, pair, mode: str = INTERSECTION) -> set:
    """Symmetrized links ``(src_pos, tgt_pos)``.

    ``fwd`` conditions on the source side, ``bwd`` on the target side.
    """
    src, tgt = pair
    a = viterbi_links(fwd, src, tgt)
    b = {(i, j) for j, i in viterbi_links(bwd, tgt, src)}
    inter = a & b
    if mode == INTERSECTION:
        return inter
    if mode == GROW_DIAG:
        return grow_diag(inter, a | b)
    raise ValueError(f"unknown symmetrization mode {mode!r}")


class LinkCounts:
    """Symmetric sparse matrix of alignment counts over the joint vocabulary."""

    def __init__(self, matrix: sp.csr_matrix):
        self.c = matrix.tocsr()

    @property
    def size(self):
        return self.c.shape[0]

    def __getitem__(self, ij):
        return self.c[ij]

    def save(self, path):
        coo = self.c.tocoo()
        order = np.lexsort((coo.col, coo.row))
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(f"# size={self.size}\n")
            for k in order:
                fh.write(f"{coo.row[k]}\t{coo.col[k]}\t{int(coo.data[k])}\n")

    @classmethod
    def load(cls, path):
        rows, cols, data = [], [], []
        with open(path, encoding="utf-8") as fh:
            size = int(fh.readline().strip().split("=")[1])
            for line in fh:
                i, j, c = line.split("\t")
                rows.append(int(i)); cols.append(int(j)); data.append(float(c))
        return cls(sp.csr_matrix((data, (rows, cols)), shape=(size, size)))


def count_links(bitext: Sequence, links: Sequence, vocab_size: int) -> LinkCounts:
    """c[s][t] and c[t][s] both incremented once per link between pieces s and t.

    A link between two occurrences of the same piece therefore adds 2 to the
    diagonal entry.
    """
    rows, cols = [], []
    for (src, tgt), lk in zip(bitext, links):
        for i, j in lk:
            if not (0 <= i < len(src) and 0 <= j < len(tgt)):
                raise PositionOutOfRange(f"link {i}-{j} outside {len(src)}x{len(tgt)} pair")
            a, b = src[i], tgt[j]
            rows += (a, b)
            cols += (b, a)
    data = np.ones(len(rows), dtype=np.float64)
    m = sp.coo_matrix((data, (rows, cols)), shape=(vocab_size, vocab_size)).tocsr()
    m.sum_duplicates()
    return LinkCounts(m)


def format_pharaoh(links: set) -> str:
    return " ".join(f"{i}-{j}" for i, j in sorted(links))


def parse_pharaoh(line: str) -> set:
    out = set()
    for tok in line.split():
        i, j = tok.split("-")
        out.add((int(i), int(j)))
    return out
