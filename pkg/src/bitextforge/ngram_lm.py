"""Interpolated Kneser-Ney n-gram language model over subword IDs, ARPA
serialization, and score-threshold calibration for monolingual filtering.

The model is held directly in backoff form: ``table[k][ngram] = (log10 p,
log10 backoff or None)``.  For an observed n-gram the stored probability is
the fully interpolated estimate, and for a context ``h`` the backoff weight
is the interpolation mass ``D * N1+(h .) / A(h)``, so the usual ARPA lookup
reproduces interpolated KN exactly.

Highest-order n-grams and n-grams starting with ``<s>`` use raw counts; every
other lower-order n-gram uses its continuation count (number of distinct
left extensions).  The unigram level is interpolated with a uniform
distribution over the vocabulary, which always contains ``<unk>`` and
``</s>``.
"""
from __future__ import annotations

import math
import warnings
from collections import Counter, defaultdict
from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import EmptyCorpus, EmptySentence, OrderTooLarge
from .subword import BOS_ID, EOS_ID, UNK_ID

DISCOUNT = 0.75
LN10 = math.log(10.0)
_BOS_LOGP = -99.0
_SPECIAL_NAMES = {UNK_ID: "<unk>", BOS_ID: "<s>", EOS_ID: "</s>"}
_NAME_IDS = {v: k for k, v in _SPECIAL_NAMES.items()}


class NGramModel:
    def __init__(self, order, table, discount=DISCOUNT):
        self.order = order
        self.table = table  # list indexed by n-gram length; table[0] unused
        self.discount = discount
        self.vocab = frozenset(g[0] for g in table[1] if g[0] != BOS_ID)

    def log10prob(self, context: Sequence[int], word: int) -> float:
        if word not in self.vocab:
            word = UNK_ID
        ctx = tuple(c if c in self.vocab or c == BOS_ID else UNK_ID for c in context)
        g = ctx[max(0, len(ctx) - (self.order - 1)):] if self.order > 1 else ()
        g = g + (word,)
        acc = 0.0
        while True:
            entry = self.table[len(g)].get(g)
            if entry is not None:
                return acc + entry[0]
            ctx_entry = self.table[len(g) - 1].get(g[:-1]) if len(g) > 1 else None
            if ctx_entry is not None and ctx_entry[1] is not None:
                acc += ctx_entry[1]
            g = g[1:]

    def prob(self, context, word) -> float:
        return 10.0 ** self.log10prob(context, word)

    def sentence_logprob(self, sentence: Sequence[int]) -> float:
        """Natural-log probability of the sentence followed by ``</s>``."""
        toks = [BOS_ID] + list(sentence) + [EOS_ID]
        total = 0.0
        for i in range(1, len(toks)):
            total += self.log10prob(toks[max(0, i - self.order + 1):i], toks[i])
        return total * LN10

    def contexts(self):
        """All contexts that carry their own distribution (have a backoff weight)."""
        out = [()]
        for k in range(1, self.order):
            out.extend(g for g, (_, bo) in self.table[k].items() if bo is not None)
        return out

    def perplexity(self, corpus) -> float:
        lp, n = 0.0, 0
        for s in corpus:
            lp += self.sentence_logprob(s)
            n += len(s) + 1
        return math.exp(-lp / n)

    # -- ARPA ------------------------------------------------------------------
    @staticmethod
    def _word(i):
        return _SPECIAL_NAMES.get(i, str(i))

    def to_arpa(self) -> str:
        lines = ["", "\\data\\"]
        for k in range(1, self.order + 1):
            lines.append(f"ngram {k}={len(self.table[k])}")
        for k in range(1, self.order + 1):
            lines.append("")
            lines.append(f"\\{k}-grams:")
            for g in sorted(self.table[k]):
                lp, bo = self.table[k][g]
                words = " ".join(self._word(i) for i in g)
                lines.append(f"{lp!r}\t{words}" + ("" if bo is None else f"\t{bo!r}"))
        lines.append("")
        lines.append("\\end\\")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_arpa(cls, text: str) -> "NGramModel":
        table = [dict()]
        order = 0
        section = None
        for raw in text.splitlines():
            line = raw.strip()
            if not line or line == "\\data\\" or line.startswith("ngram "):
                if line.startswith("ngram "):
                    order = max(order, int(line[6:].split("=")[0]))
                continue
            if line == "\\end\\":
                break
            if line.startswith("\\") and line.endswith("-grams:"):
                section = int(line[1:line.index("-")])
                while len(table) <= section:
                    table.append({})
                continue
            parts = raw.split("\t")
            g = tuple(_NAME_IDS[w] if w in _NAME_IDS else int(w) for w in parts[1].split(" "))
            bo = float(parts[2]) if len(parts) > 2 else None
            table[section][g] = (float(parts[0]), bo)
        return cls(order, table)

    def save(self, path):
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(self.to_arpa())

    @classmethod
    def load(cls, path):
        with open(path, encoding="utf-8") as fh:
            return cls.from_arpa(fh.read())


def train_lm(corpus: Iterable[Sequence[int]], order: int = 5, discount: float = DISCOUNT,
             vocab: Iterable[int] = ()) -> NGramModel:
    """Estimate an interpolated Kneser-Ney model with a fixed absolute discount.

    ``vocab`` optionally lists extra IDs (e.g. the full subword inventory) that
    receive uniform-floor probability even if unseen in ``corpus``.
    """
    if order < 1:
        raise ValueError("order must be >= 1")
    if not 0 < discount < 1:
        raise ValueError("discount must lie in (0, 1)")
    raw = [Counter() for _ in range(order + 1)]
    longest = -1
    for sent in corpus:
        toks = [BOS_ID] + [int(t) for t in sent] + [EOS_ID]
        longest = max(longest, len(toks) - 2)
        for i in range(1, len(toks)):
            for k in range(1, min(order, i + 1) + 1):
                raw[k][tuple(toks[i - k + 1:i + 1])] += 1
    if longest < 0:
        raise EmptyCorpus("language model needs at least one sentence")
    if order > longest + 1:
        warnings.warn(f"order {order} exceeds longest sentence + 1 ({longest + 1})", OrderTooLarge)

    # adjusted counts per order
    adj = [None] * (order + 1)
    adj[order] = dict(raw[order])
    for k in range(order - 1, 0, -1):
        cont = Counter(g[1:] for g in raw[k + 1])
        adj[k] = {g: (c if g[0] == BOS_ID else cont[g]) for g, c in raw[k].items()}

    words = {g[0] for g in raw[1]} | {UNK_ID, EOS_ID} | {int(v) for v in vocab}
    words.discard(BOS_ID)
    uniform = 1.0 / len(words)

    table = [dict() for _ in range(order + 1)]
    # unigrams
    total = sum(adj[1].values())
    gamma = discount * len(adj[1]) / total
    for w in sorted(words):
        p = max(adj[1].get((w,), 0) - discount, 0.0) / total + gamma * uniform
        table[1][(w,)] = (math.log10(p), None)
    table[1][(BOS_ID,)] = (_BOS_LOGP, None)
    model = NGramModel(order, table, discount)

    for k in range(2, order + 1):
        ctx_total = defaultdict(int)
        ctx_types = defaultdict(int)
        for g, c in adj[k].items():
            ctx_total[g[:-1]] += c
            ctx_types[g[:-1]] += 1
        for h, a in ctx_total.items():
            gam = discount * ctx_types[h] / a
            lp, _ = table[k - 1][h]
            table[k - 1][h] = (lp, math.log10(gam))
        for g in sorted(adj[k]):
            h = g[:-1]
            lower = 10.0 ** model.log10prob(h[1:], g[-1])
            p = (adj[k][g] - discount) / ctx_total[h] + discount * ctx_types[h] / ctx_total[h] * lower
            table[k][g] = (math.log10(p), None)
    return model


def score(model: NGramModel, sentence: Sequence[int], normalized: bool = True) -> float:
    """Log-probability in nats, divided by (tokens + 1) when ``normalized``."""
    if len(sentence) == 0:
        raise EmptySentence("cannot score an empty sentence")
    lp = model.sentence_logprob(sentence)
    return lp / (len(sentence) + 1) if normalized else lp


# --- threshold calibration -----------------------------------------------------

GOOD, BAD = "good", "bad"


@dataclass(frozen=True)
class LabeledScore:
    score: float
    label: str

    def __post_init__(self):
        if not math.isfinite(self.score):
            raise ValueError("score must be finite")
        if self.label not in (GOOD, BAD):
            raise ValueError(f"label must be {GOOD!r} or {BAD!r}")


@dataclass(frozen=True)
class Threshold:
    cutoff: float
    achieved_bad_removed: float
    achieved_good_retained: float
    achieved_total_retained: float
    normalized: bool = True


def _evaluate(samples, cutoff):
    bad = [s.score for s in samples if s.label == BAD]
    good = [s.score for s in samples if s.label == GOOD]
    bad_removed = sum(x < cutoff for x in bad) / len(bad)
    good_retained = sum(x >= cutoff for x in good) / len(good)
    total = sum(s.score >= cutoff for s in samples) / len(samples)
    return bad_removed, good_retained, total


def calibrate_threshold(samples: Sequence[LabeledScore], target_bad_removed: float = 0.7,
                        normalized: bool = True) -> Threshold:
    """Cutoff maximizing retained good sentences s.t. enough bad ones are removed.

    Candidates are -inf, +inf and midpoints between adjacent distinct scores;
    a sentence is removed iff its score is strictly below the cutoff.  Ties go
    to the smaller cutoff.
    """
    if not 0 < target_bad_removed <= 1:
        raise ValueError("target must lie in (0, 1]")
    labels = {s.label for s in samples}
    if labels != {GOOD, BAD}:
        raise ValueError("need at least one good and one bad sample")
    distinct = sorted({s.score for s in samples})
    candidates = [-math.inf]
    candidates += [(a + b) / 2 for a, b in zip(distinct, distinct[1:])]
    candidates.append(math.inf)

    best = None
    for c in candidates:  # ascending, so strict '>' keeps the smallest cutoff on ties
        br, gr, tr = _evaluate(samples, c)
        if br >= target_bad_removed and (best is None or gr > best[1]):
            best = (c, gr, br, tr)
    c, gr, br, tr = best
    return Threshold(c, br, gr, tr, normalized)


def filter_mono(stream, model: NGramModel, threshold: Threshold, encode=None, stats=None):
    """Keep sentences whose score is >= the cutoff, preserving order.

    ``stream`` yields ID sequences, or text when ``encode`` is given.  Items
    that encode to nothing are rejected as ``empty``.
    """
    kept = []
    for item in stream:
        ids = encode(item) if encode else item
        if stats is not None:
            stats.lines_in += 1
        if len(ids) == 0:
            if stats is not None:
                stats.reject("empty")
            continue
        if score(model, ids, threshold.normalized) >= threshold.cutoff:
            kept.append(item)
            if stats is not None:
                stats.lines_kept += 1
        elif stats is not None:
            stats.reject("lm_score")
    return kept
