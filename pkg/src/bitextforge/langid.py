"""Character n-gram language identification (orders 1-4, add-one smoothing)."""
from __future__ import annotations

import json
import math
import unicodedata
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .errors import EmptyCorpus, EmptyText

MAX_N = 4


def _prep(text: str) -> str:
    return unicodedata.normalize("NFC", text).lower()


def char_ngrams(text: str, n: int):
    return [text[i:i + n] for i in range(len(text) - n + 1)]


@dataclass(frozen=True)
class LangProfile:
    """Add-one smoothed character model.

    For order n with observed total ``N`` and ``V`` distinct n-grams, an
    observed gram gets ``(c + 1) / (N + V + 1)`` and every unseen gram shares
    the single leftover bucket ``1 / (N + V + 1)``.
    """
    lang: str
    ngram_logprobs: dict = field(default_factory=dict)  # n -> {gram: logprob}
    unseen_logprob: dict = field(default_factory=dict)  # n -> logprob

    def logprob(self, gram: str) -> float:
        n = len(gram)
        return self.ngram_logprobs[n].get(gram, self.unseen_logprob[n])

    def to_json(self) -> dict:
        return {"lang": self.lang,
                "unseen": {str(n): v for n, v in self.unseen_logprob.items()},
                "ngrams": {str(n): dict(sorted(t.items())) for n, t in self.ngram_logprobs.items()}}

    @classmethod
    def from_json(cls, d) -> "LangProfile":
        return cls(d["lang"],
                   {int(n): dict(t) for n, t in d["ngrams"].items()},
                   {int(n): float(v) for n, v in d["unseen"].items()})


def train_profile(corpus: Iterable, lang: str, max_n: int = MAX_N) -> LangProfile:
    counts = {n: Counter() for n in range(1, max_n + 1)}
    empty = True
    for s in corpus:
        text = _prep(getattr(s, "text", s))
        if text:
            empty = False
        for n in counts:
            counts[n].update(char_ngrams(text, n))
    if empty:
        raise EmptyCorpus(f"no training text for {lang!r}")
    logprobs, unseen = {}, {}
    for n, c in counts.items():
        denom = sum(c.values()) + len(c) + 1
        logprobs[n] = {g: math.log(k + 1) - math.log(denom) for g, k in c.items()}
        unseen[n] = -math.log(denom)
    return LangProfile(lang, logprobs, unseen)


def _gram_counts(text, orders):
    out = {}
    for n in orders:
        m = len(text) - n + 1
        if m > 0:
            out[n] = (Counter(text[i:i + n] for i in range(m)), m)
    return out


def _score(grams, profile):
    orders = []
    for n, (counts, m) in grams.items():
        get = profile.ngram_logprobs[n].get
        unseen = profile.unseen_logprob[n]
        orders.append(sum(c * get(g, unseen) for g, c in counts.items()) / m)
    return sum(orders) / len(orders)


def text_loglik(text: str, profile: LangProfile) -> float:
    """Average over orders of the per-gram mean log-probability."""
    return _score(_gram_counts(text, sorted(profile.ngram_logprobs)), profile)


def classify(text: str, profiles: Mapping[str, LangProfile]):
    """Return ``(best_lang, margin)`` where margin is best minus runner-up score."""
    if len(profiles) < 2:
        raise ValueError("classification needs at least two profiles")
    prepped = _prep(" ".join(text.split()))
    if not prepped:
        raise EmptyText("nothing to classify")
    orders = sorted({n for p in profiles.values() for n in p.ngram_logprobs})
    grams = _gram_counts(prepped, orders)
    # Sorting by (-score, lang) makes the result independent of mapping order.
    scored = sorted((-_score({n: grams[n] for n in p.ngram_logprobs if n in grams}, p), lang)
                    for lang, p in profiles.items())
    best, second = scored[0], scored[1]
    return best[1], second[0] - best[0]


def save_profiles(profiles: Mapping[str, LangProfile], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump({lang: profiles[lang].to_json() for lang in sorted(profiles)}, fh,
                  ensure_ascii=False, sort_keys=True)


def load_profiles(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        d = json.load(fh)
    return {lang: LangProfile.from_json(v) for lang, v in d.items()}
