"""Independent reference implementations used by the unit and acceptance tests.

Each one recomputes a quantity from first principles (direct recursion,
exhaustive enumeration, dense loops) without calling the code under test.
"""
import itertools
import math
from collections import Counter

import numpy as np

from bitextforge.graph_embed import EmbeddingStack, build_graph, init_layers
from bitextforge.ngram_lm import BAD, GOOD
from bitextforge.subword import BOS_ID, EOS_ID, UNK_ID

D = 0.75


class KNOracle:
    """Direct recursive interpolated Kneser-Ney, computed from counts alone."""

    def __init__(self, corpus, order, extra_vocab=()):
        self.order = order
        raw = Counter()
        for s in corpus:
            toks = [BOS_ID] + list(s) + [EOS_ID]
            for i in range(1, len(toks)):
                for k in range(1, min(order, i + 1) + 1):
                    raw[tuple(toks[i - k + 1:i + 1])] += 1
        self.raw = raw
        self.words = ({g[0] for g in raw if len(g) == 1} | {UNK_ID, EOS_ID} | set(extra_vocab)) - {BOS_ID}

    def count(self, g):
        if len(g) == self.order or g[0] == BOS_ID:
            return self.raw.get(g, 0)
        # continuation count: distinct left extensions
        return sum(1 for h in self.raw if len(h) == len(g) + 1 and h[1:] == g)

    def prob(self, h, w):
        h = tuple(h)[max(0, len(h) - self.order + 1):] if self.order > 1 else ()
        if not h:
            level = {g: self.count(g) for g in self.raw if len(g) == 1}
            total = sum(level.values())
            c = level.get((w,), 0)
            return max(c - D, 0) / total + D * len(level) / total / len(self.words)
        ext = {g: self.count(g) for g in self.raw if len(g) == len(h) + 1 and g[:-1] == h}
        lower = self.prob(h[1:], w)
        total = sum(ext.values())
        if total == 0:
            return lower
        c = ext.get(h + (w,), 0)
        return max(c - D, 0) / total + D * len(ext) / total * lower

    def perplexity(self, corpus):
        lp, n = 0.0, 0
        for s in corpus:
            toks = [BOS_ID] + list(s) + [EOS_ID]
            for i in range(1, len(toks)):
                lp += math.log(self.prob(toks[max(0, i - self.order + 1):i], toks[i]))
            n += len(s) + 1
        return math.exp(-lp / n)


def reachable_contexts(model):
    words = sorted(model.vocab)
    ctxs = [()]
    for k in range(1, model.order):
        ctxs += list(itertools.product(words, repeat=k))
        ctxs += [(BOS_ID,) + c for c in itertools.product(words, repeat=k - 1)]
    return ctxs


def assert_normalized(model, tol=1e-6):
    words = sorted(model.vocab)
    for ctx in reachable_contexts(model):
        total = sum(model.prob(ctx, w) for w in words)
        assert abs(total - 1) < tol, (ctx, total)


def brute_force_cutoff(samples, target):
    """Every cutoff between or around distinct scores, scored from scratch."""
    distinct = sorted({s.score for s in samples})
    cands = [-math.inf, math.inf] + [(a + b) / 2 for a, b in zip(distinct, distinct[1:])]
    bad = [s.score for s in samples if s.label == BAD]
    good = [s.score for s in samples if s.label == GOOD]
    feasible = []
    for c in cands:
        br = sum(x < c for x in bad) / len(bad)
        gr = sum(x >= c for x in good) / len(good)
        if br >= target:
            feasible.append((-gr, c))
    neg_gr, c = min(feasible)
    return c, -neg_gr


def segmentations(s):
    """Every split of ``s`` into contiguous non-empty pieces."""
    n = len(s)
    for cuts in itertools.product((False, True), repeat=n - 1):
        pieces, start = [], 0
        for i, cut in enumerate(cuts, 1):
            if cut:
                pieces.append(s[start:i])
                start = i
        pieces.append(s[start:])
        yield pieces


def brute_best(s, logp):
    best = -math.inf
    for seg in segmentations(s):
        if all(p in logp for p in seg):
            best = max(best, sum(logp[p] for p in seg))
    return best


def random_counts(rng, V, density=0.3):
    c = rng.integers(1, 6, size=(V, V)) * (rng.random((V, V)) < density)
    return c + c.T


def random_instance(seed, V=None, d=None, H=None, activation="tanh"):
    rng = np.random.default_rng(seed)
    V = V or int(rng.integers(2, 9))
    d = d or int(rng.integers(1, 5))
    H = int(rng.integers(1, 4)) if H is None else H
    graph = build_graph(random_counts(rng, V))
    layers = init_layers(d, H, seed, activation)
    for L in layers:
        L.B = rng.normal(size=d)
    stack = EmbeddingStack(rng.normal(size=(V, d)), layers)
    return stack, graph, rng.normal(size=(V, d))


def dense_forward(E, G, layers):
    """Plain dense loops, written independently of the sparse implementation."""
    acts = {"identity": lambda z: z, "tanh": np.tanh, "relu": lambda z: np.maximum(z, 0)}
    V, d = E.shape
    cur = E.copy()
    for L in layers:
        nxt = np.empty_like(cur)
        for i in range(V):
            agg = np.zeros(d)
            for j in range(V):
                agg += G[i, j] * cur[j]
            nxt[i] = acts[L.activation](cur[i] @ L.W1 + agg @ L.W2 + (L.B if L.B.ndim == 1 else L.B[i]))
        cur = nxt
    return cur
