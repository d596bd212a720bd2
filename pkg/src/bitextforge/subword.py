"""Unigram-LM subword model: training by hard (Viterbi) EM with likelihood-based
pruning, Viterbi encoding and concatenative decoding.

Spaces are rewritten to the marker ``▁`` and one marker is prepended, so
``"he llo"`` becomes ``"▁he▁llo"``; pieces may carry the marker only as their
first character.  Decoding concatenates pieces and turns markers back into
spaces, dropping the single leading one.
"""
from __future__ import annotations

import json
import math
from collections import Counter
from typing import Iterable, Sequence

from .errors import EmptyCorpus, UnknownID, VocabTooSmall

MARK = "▁"
UNK_ID, BOS_ID, EOS_ID = 0, 1, 2
TAGS = ("2he", "2en", "2syn")
SPECIALS = ("<unk>", "<s>", "</s>") + TAGS
TAG_IDS = {t: SPECIALS.index(t) for t in TAGS}
UNK_SURFACE = "⁇"
_UNK_PENALTY = 10.0


def to_chunks(text: str) -> list:
    """``"a bc"`` -> ``["▁a", "▁bc"]``; repeated spaces give bare ``"▁"`` chunks."""
    return [MARK + part for part in text.split(" ")]


def viterbi(chunk: str, logp: dict, max_len: int, unk_logprob=None, exclude=None):
    """Best segmentation of ``chunk`` under piece log-probs.

    Returns ``(score, pieces)``; characters that are not pieces become
    ``None`` entries scored at ``unk_logprob``.  Returns ``(-inf, None)`` when
    no segmentation exists and ``unk_logprob`` is None.
    """
    n = len(chunk)
    best = [-math.inf] * (n + 1)
    back = [0] * (n + 1)
    best[0] = 0.0
    for i in range(1, n + 1):
        for j in range(max(0, i - max_len), i):
            if best[j] == -math.inf:
                continue
            piece = chunk[j:i]
            if piece == exclude:
                continue
            lp = logp.get(piece)
            if lp is None or lp == -math.inf:
                continue
            s = best[j] + lp
            if s > best[i]:
                best[i] = s
                back[i] = j
        if best[i] == -math.inf and unk_logprob is not None and best[i - 1] > -math.inf:
            best[i] = best[i - 1] + unk_logprob
            back[i] = -(i - 1) - 1  # negative marks an unknown character
    if best[n] == -math.inf:
        return -math.inf, None
    pieces = []
    i = n
    while i > 0:
        j = back[i]
        if j < 0:
            j = -j - 1
            pieces.append(None)
        else:
            pieces.append(chunk[j:i])
        i = j
    pieces.reverse()
    return best[n], pieces


class SubwordModel:
    def __init__(self, pieces: dict):
        """``pieces`` maps piece string to log-probability (specials excluded)."""
        ordered = sorted(pieces.items(), key=lambda kv: (-kv[1], kv[0]))
        self.id_to_piece = list(SPECIALS) + [p for p, _ in ordered]
        self.logprobs = dict(ordered)
        self.piece_to_id = {p: i for i, p in enumerate(self.id_to_piece) if i >= len(SPECIALS)}
        self.max_len = max((len(p) for p in pieces), default=1)
        self.unk_logprob = min(pieces.values(), default=0.0) - _UNK_PENALTY
        self._cache = {}

    def __len__(self):
        return len(self.id_to_piece)

    @property
    def chars(self):
        return {p for p in self.logprobs if len(p) == 1}

    def segment(self, chunk: str) -> list:
        ids = self._cache.get(chunk)
        if ids is None:
            _, pieces = viterbi(chunk, self.logprobs, self.max_len, self.unk_logprob)
            ids = [UNK_ID if p is None else self.piece_to_id[p] for p in pieces]
            if len(self._cache) < 200_000:
                self._cache[chunk] = ids
        return list(ids)

    def encode(self, text: str) -> list:
        """Piece IDs for ``text``.  A direction tag is recognised only as the first word."""
        if text == "":
            return []
        ids = []
        for k, chunk in enumerate(to_chunks(text)):
            if k == 0 and chunk[1:] in TAG_IDS:
                ids.append(TAG_IDS[chunk[1:]])
            else:
                ids.extend(self.segment(chunk))
        return ids

    def encode_pieces(self, text: str) -> list:
        return [self.id_to_piece[i] for i in self.encode(text)]

    def decode(self, ids: Sequence[int]) -> str:
        out = []
        for i in ids:
            i = int(i)
            if not 0 <= i < len(self.id_to_piece):
                raise UnknownID(f"piece id {i} outside model of size {len(self)}")
            if i == UNK_ID:
                out.append(UNK_SURFACE)
            elif i in (BOS_ID, EOS_ID):
                continue
            elif i < len(SPECIALS):
                out.append(MARK + self.id_to_piece[i])
            else:
                out.append(self.id_to_piece[i])
        text = "".join(out).replace(MARK, " ")
        return text[1:] if text.startswith(" ") else text

    def corpus_loglik(self, words: Counter) -> float:
        return sum(f * viterbi(w, self.logprobs, self.max_len, self.unk_logprob)[0]
                   for w, f in words.items())

    # -- serialization: JSON header line, then piece<TAB>logprob -----------------
    def save(self, path):
        header = {"format": "unigram-v1", "specials": {s: i for i, s in enumerate(SPECIALS)},
                  "size": len(self)}
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(json.dumps(header, sort_keys=True) + "\n")
            for p in self.id_to_piece[len(SPECIALS):]:
                if "\t" in p or "\n" in p:
                    raise ValueError(f"piece {p!r} cannot be stored in TSV")
                fh.write(f"{p}\t{self.logprobs[p]!r}\n")

    @classmethod
    def load(cls, path) -> "SubwordModel":
        with open(path, encoding="utf-8") as fh:
            header = json.loads(fh.readline())
            if header.get("specials") != {s: i for i, s in enumerate(SPECIALS)}:
                raise ValueError("unsupported special-token layout")
            pieces = {}
            for line in fh:
                p, lp = line.rstrip("\n").split("\t")
                pieces[p] = float(lp)
        return cls(pieces)


def _normalize(counts: dict) -> dict:
    total = sum(counts.values())
    return {p: (math.log(c / total) if c > 0 else -math.inf) for p, c in counts.items()}


class UnigramTrainer:
    """Hard-EM unigram trainer.  ``history`` records ``(round, iteration, loglik)``
    for every E-step; the log-likelihood never decreases within a round.
    """

    def __init__(self, vocab_size, seed_max_len=8, prune_fraction=0.2, em_iters=2,
                 seed_factor=4):
        self.vocab_size = vocab_size
        self.seed_max_len = seed_max_len
        self.prune_fraction = prune_fraction
        self.em_iters = em_iters
        self.seed_factor = seed_factor
        self.history = []

    @staticmethod
    def word_counts(corpus: Iterable) -> Counter:
        words = Counter()
        for s in corpus:
            text = getattr(s, "text", s)
            if text:
                words.update(to_chunks(text))
        return words

    def seed(self, words: Counter) -> dict:
        chars = Counter()
        subs = Counter()
        for w, f in words.items():
            for ch in w:
                chars[ch] += f
            for i in range(len(w)):
                for j in range(i + 2, min(len(w), i + self.seed_max_len) + 1):
                    subs[w[i:j]] += f
        cap = self.seed_factor * self.vocab_size
        top = sorted(subs.items(), key=lambda kv: (-kv[1], kv[0]))[:cap]
        counts = dict(chars)
        counts.update(top)
        return counts

    def _estep(self, words, logp, max_len):
        counts = dict.fromkeys(logp, 0.0)
        total = 0.0
        for w, f in words.items():
            score, pieces = viterbi(w, logp, max_len)
            total += f * score
            for p in pieces:
                counts[p] += f
        return total, counts

    def _prune(self, counts, logp, n_remove, max_len):
        floor = _normalize({p: (c if c > 0 else 0.5) for p, c in counts.items()})
        losses = []
        for p, c in counts.items():
            if len(p) == 1:
                continue
            if c == 0:
                losses.append((0.0, p))
                continue
            alt, _ = viterbi(p, floor, max_len, exclude=p)
            losses.append((c * (floor[p] - alt), p))
        losses.sort()
        for _, p in losses[:n_remove]:
            del counts[p]

    def train(self, corpus: Iterable) -> SubwordModel:
        words = self.word_counts(corpus)
        if not words:
            raise EmptyCorpus("subword training corpus is empty")
        counts = self.seed(words)
        n_chars = sum(1 for p in counts if len(p) == 1)
        target = self.vocab_size - len(SPECIALS)
        if target < n_chars:
            raise VocabTooSmall(
                f"vocab_size {self.vocab_size} < {n_chars} characters + {len(SPECIALS)} specials")
        rnd = 0
        while True:
            logp = _normalize({p: (c if c > 0 else 0.5) for p, c in counts.items()})
            max_len = max(len(p) for p in counts)
            for it in range(self.em_iters):
                ll, counts = self._estep(words, logp, max_len)
                self.history.append((rnd, it, ll))
                logp = _normalize(counts)
            n_multi = len(counts) - n_chars
            excess = len(counts) - target
            if excess <= 0:
                break
            n_remove = min(excess, max(1, math.ceil(self.prune_fraction * n_multi)))
            self._prune(counts, logp, n_remove, max_len)
            rnd += 1
        final = _normalize({p: (c if c > 0 else 0.5) for p, c in counts.items()})
        return SubwordModel(final)


def train_unigram(corpus: Iterable, vocab_size: int, seed_max_len: int = 8, **kw) -> SubwordModel:
    return UnigramTrainer(vocab_size, seed_max_len, **kw).train(corpus)
