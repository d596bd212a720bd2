"""Deterministic synthetic corpora: two pseudo-languages ("en" in Latin
letters, "he" in Hebrew letters) tied by a 1-1 dictionary, with planted
cleaning violations whose counts are recorded in ``planted.json``.

Generated text is already in tokenized form (tokens separated by single
spaces), so token counts of planted cases are exact by construction.
"""
from __future__ import annotations

import json
import random
from collections import Counter
from pathlib import Path

from .corpus import write_lines

EN_ONSETS = list("bdfgklmnprstvz") + ["ch", "sh", "th", "tr", "pl", "st"]
EN_VOWELS = ["a", "e", "i", "o", "u", "ai", "ou", "ee"]
HE_LETTERS = [chr(c) for c in range(0x05D0, 0x05EB)
              if chr(c) not in "ךםןףץ"]  # no final forms

DEFAULT_PLANTS = {
    "malformed": 10,
    "empty": 6,
    "length": 12,
    "overlap": 20,
    "ratio": 24,
    "duplicate": 60,
    "offtarget": 30,
    "one_to_many": 15,   # groups of 2 pairs sharing a source
    "many_to_one": 10,   # groups of 2 pairs sharing a target
}


class PseudoLanguagePair:
    """Vocabulary, 1-1 dictionary and a Zipf-ish sentence grammar."""

    def __init__(self, seed: int, n_words: int = 240):
        rng = random.Random(seed)
        en, he = [], []
        seen_en, seen_he = set(), set()
        while len(en) < n_words:
            w = "".join(rng.choice(EN_ONSETS) + rng.choice(EN_VOWELS) for _ in range(rng.randint(1, 3)))
            if w not in seen_en:
                seen_en.add(w)
                en.append(w)
        while len(he) < n_words:
            w = "".join(rng.choice(HE_LETTERS) for _ in range(rng.randint(2, 5)))
            if w not in seen_he:
                seen_he.add(w)
                he.append(w)
        self.en = en
        self.he = he
        self.dictionary = dict(zip(en, he))
        self.weights = [1.0 / (r + 1) ** 0.8 for r in range(n_words)]

    def words(self, rng, n):
        return rng.choices(self.en, weights=self.weights, k=n)

    def sentence(self, rng, lo=4, hi=14):
        return self.words(rng, rng.randint(lo, hi))

    def translate(self, rng, words, noise=0.0):
        out = [self.dictionary[w] for w in words]
        # local reordering: swap some adjacent pairs
        i = 0
        while i + 1 < len(out):
            if rng.random() < 0.3:
                out[i], out[i + 1] = out[i + 1], out[i]
                i += 2
            else:
                i += 1
        if noise and rng.random() < noise and len(out) > 4:
            del out[rng.randrange(len(out))]
        return out


def _decorate(rng, en_words, he_words):
    """Surface forms with punctuation plus occasional markup to be normalized."""
    src = " ".join(en_words) + " ."
    tgt = " ".join(he_words) + " ."
    r = rng.random()
    if r < 0.04:
        src = src.replace(" ", " &amp; ", 1)
        tgt = tgt.replace(" ", " & ", 1)
    elif r < 0.08:
        src = "“" + src[:-2] + "” ."
        tgt = '"' + tgt[:-2] + '" .'
    elif r < 0.10:
        src = src.replace(" ", "  ", 2)
    return src, tgt


def gibberish(rng):
    kind = rng.randrange(3)
    if kind == 0:
        return " ".join(str(rng.randrange(10 ** rng.randint(2, 6))) for _ in range(rng.randint(3, 10)))
    if kind == 1:
        letters = "qxzjkwvy"
        return " ".join("".join(rng.choice(letters) for _ in range(rng.randint(3, 8)))
                        for _ in range(rng.randint(3, 9)))
    return " ".join(["%"] * rng.randint(2, 5) + [str(rng.randrange(1000))] * rng.randint(2, 4))


def _overlap(a, b):
    inter = sum((Counter(a) & Counter(b)).values())
    return min(inter / len(a), inter / len(b))


def make_bitext(lang: PseudoLanguagePair, rng, n_pairs: int, plants=None):
    """Return ``(lines, planted_counts)``; ``lines`` are raw TSV lines."""
    plants = dict(DEFAULT_PLANTS if plants is None else plants)
    n_planted_lines = sum(plants.values()) + plants["one_to_many"] + plants["many_to_one"]
    n_clean = n_pairs - n_planted_lines
    used_src, used_tgt = set(), set()
    clean = []  # (src, tgt, en_words)

    def fresh_pair(lo=4, hi=14, noise=0.05):
        while True:
            words = lang.sentence(rng, lo, hi)
            he = lang.translate(rng, words, noise)
            src, tgt = _decorate(rng, words, he)
            key_s, key_t = " ".join(src.split()), " ".join(tgt.split())
            if key_s in used_src or key_t in used_tgt:
                continue
            used_src.add(key_s)
            used_tgt.add(key_t)
            return src, tgt, words

    for _ in range(n_clean):
        clean.append(fresh_pair())

    planted = []
    for k in range(plants["malformed"]):
        s, t, _ = fresh_pair()
        planted.append(s + " " + t if k % 2 == 0 else s + "\t" + t + "\t" + t)
    for _ in range(plants["empty"]):
        s, t, _ = fresh_pair()
        planted.append("&#8203; ​\t" + t)
    for _ in range(plants["length"]):
        words = lang.words(rng, rng.randint(257, 300))
        he = [lang.dictionary[w] for w in words]
        planted.append(" ".join(words) + "\t" + " ".join(he))
    for _ in range(plants["overlap"]):
        s, _, _ = fresh_pair()
        planted.append(s + "\t" + s)
    for _ in range(plants["ratio"]):
        words = lang.sentence(rng, 9, 14)
        he = [lang.dictionary[w] for w in words][:rng.randint(3, len(words) // 2)]
        planted.append(" ".join(words) + "\t" + " ".join(he))
    for _ in range(plants["offtarget"]):
        s, _, words = fresh_pair(6, 14)
        while True:
            other = lang.words(rng, len(words))
            if _overlap(words, other) <= 0.5:
                break
        planted.append(s + "\t" + " ".join(other) + " .")
    for _ in range(plants["one_to_many"]):
        s, t, words = fresh_pair(6, 14)
        t2 = t.replace(" .", " " + lang.dictionary[rng.choice(lang.en)] + " .")
        used_tgt.add(" ".join(t2.split()))
        planted.append(s + "\t" + t)
        planted.append(s + "\t" + t2)
    for _ in range(plants["many_to_one"]):
        s, t, words = fresh_pair(6, 14)
        s2 = s.replace(" .", " " + rng.choice(lang.en) + " .")
        used_src.add(" ".join(s2.split()))
        planted.append(s + "\t" + t)
        planted.append(s2 + "\t" + t)

    lines = [s + "\t" + t for s, t, _ in clean]
    for line in planted:
        lines.insert(rng.randrange(len(lines) + 1), line)
    # duplicates: copies of distinct clean pairs placed after the original,
    # with whitespace jitter that normalization removes
    for idx in rng.sample(range(len(clean)), plants["duplicate"]):
        s, t, _ = clean[idx]
        pos = lines.index(s + "\t" + t)
        lines.insert(rng.randint(pos + 1, len(lines)), s + " \t " + t)
    return lines, plants


def dictionary_corpus(n_pairs: int, seed: int, n_words: int = 200, lo: int = 3, hi: int = 12):
    """Integer-ID corpus where target sentences are permutations of the
    word-by-word translation.  Returns ``(pairs, gold_links)``."""
    rng = random.Random(seed)
    offset = n_words
    pairs, gold = [], []
    for _ in range(n_pairs):
        src = rng.sample(range(n_words), rng.randint(lo, hi))
        perm = list(range(len(src)))
        rng.shuffle(perm)
        tgt = [src[p] + offset for p in perm]
        pairs.append((src, tgt))
        gold.append({(p, j) for j, p in enumerate(perm)})
    return pairs, gold


def make_toy_data(out_dir, seed: int = 13, n_pairs: int = 10_000) -> dict:
    """Write the toy corpora and a pipeline config into ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    lang = PseudoLanguagePair(seed)
    rng = random.Random(seed + 1)

    bitext, plants = make_bitext(lang, rng, n_pairs)
    write_lines(out / "bitext.tsv", bitext)

    def sents(n, lo=4, hi=14):
        return [lang.sentence(rng, lo, hi) for _ in range(n)]

    en_mono = [" ".join(w) + " ." for w in sents(1500)]
    he_mono = [" ".join(lang.translate(rng, w)) + " ." for w in sents(1500)]
    write_lines(out / "langid.en.txt", en_mono[:1000])
    write_lines(out / "langid.he.txt", he_mono[:1000])
    write_lines(out / "langid.heldout.tsv", [f"en\t{s}" for s in en_mono[1000:]] +
                [f"he\t{s}" for s in he_mono[1000:]])

    write_lines(out / "lm_train.txt", [" ".join(w) + " ." for w in sents(3000)])

    def labeled(n, bad_frac):
        rows = []
        for _ in range(n):
            if rng.random() < bad_frac:
                rows.append((gibberish(rng), "bad"))
            else:
                rows.append((" ".join(lang.sentence(rng)) + " .", "good"))
        return rows

    calib = labeled(1000, 0.3)
    write_lines(out / "calibration.tsv", [f"{s}\t{lab}" for s, lab in calib])
    mono = labeled(5000, 0.3)
    write_lines(out / "mono.txt", [s for s, _ in mono])
    write_lines(out / "mono.labels.txt", [lab for _, lab in mono])

    syn = []
    for w in sents(1000):
        he = lang.translate(rng, w, noise=0.3)
        syn.append(" ".join(w) + " .\t" + " ".join(he) + " .")
    write_lines(out / "synthetic.tsv", syn)

    with open(out / "planted.json", "w", encoding="utf-8") as fh:
        json.dump(expected_rejections(plants), fh, indent=2, sort_keys=True)
        fh.write("\n")
    config = toy_config(seed)
    with open(out / "pipeline.json", "w", encoding="utf-8") as fh:
        json.dump(config, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return config


def expected_rejections(plants) -> dict:
    return {
        "clean.step1": {"malformed": plants["malformed"], "empty": plants["empty"]},
        "clean.step2": {"length": plants["length"], "overlap": plants["overlap"],
                        "ratio": plants["ratio"], "duplicate": plants["duplicate"]},
        "clean.step3": {"offtarget": plants["offtarget"],
                        "ambiguous": 2 * plants["one_to_many"] + 2 * plants["many_to_one"]},
    }


def toy_config(seed: int = 13) -> dict:
    return {
        "seed": seed,
        "shards": 1,
        "langs": ["en", "he"],
        "work_dir": "work",
        "inputs": {
            "bitext": "bitext.tsv",
            "langid_train": {"en": "langid.en.txt", "he": "langid.he.txt"},
            "lm_train": "lm_train.txt",
            "calibration": "calibration.tsv",
            "mono": "mono.txt",
            "synthetic": "synthetic.tsv",
        },
        "stages": [
            {"name": "langid"},
            {"name": "clean", "max_tokens": 256, "overlap_threshold": 0.75,
             "max_ratio": 1.5, "ratio_symmetric": True},
            {"name": "sample", "n": 4000},
            {"name": "spm", "vocab_size": 700, "seed_max_len": 8},
            {"name": "lm", "order": 3, "target_bad_removed": 0.7, "normalized": True},
            {"name": "align", "iterations": 5, "mode": "intersection"},
            {"name": "graph", "dim": 16, "hops": 1, "activation": "tanh"},
            {"name": "merge"},
        ],
    }
