"""Bitext cleaning: normalization/tokenization, per-pair filters, dedup and
one-to-many removal.

Per-pair filters return ``None`` to keep a pair or a short reason string to
reject it.  All numeric thresholds are strict: a pair at exactly the
threshold is kept.

Punctuation normalization table (applied after entity decoding and control
character removal):

- U+2018 U+2019 U+201A U+201B U+2032 become ``'``
- U+201C U+201D U+201E U+201F U+2033 U+00AB U+00BB become ``"``
- U+2010 to U+2015 and U+2212 become ``-``
- U+2026 becomes ``...``
- U+00A0 U+2007 U+202F become a space

Tokenization detaches every punctuation or symbol character (Unicode
categories P* and S*) from adjacent word characters, with two exceptions:
a ``.`` or ``,`` between two digits, and an apostrophe or hyphen between two
letters.  Runs of the same punctuation character stay together (``...``).
"""
from __future__ import annotations

import re
import unicodedata
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Optional

from .corpus import Sentence, SentencePair
from .errors import EmptySide, MissingTokens, UnknownLanguage


@dataclass(frozen=True)
class CleanConfig:
    max_tokens: int = 256
    overlap_threshold: float = 0.75
    max_ratio: float = 1.5
    ratio_symmetric: bool = True
    expected_langs: tuple = ("en", "he")

    def __post_init__(self):
        if self.max_tokens <= 0:
            raise ValueError("max_tokens must be positive")
        if not 0 < self.overlap_threshold <= 1:
            raise ValueError("overlap_threshold must lie in (0, 1]")
        if self.max_ratio < 1:
            raise ValueError("max_ratio must be >= 1")
        object.__setattr__(self, "expected_langs", tuple(self.expected_langs))


# --- Step 1: normalization ----------------------------------------------------

_NAMED_ENTITIES = {"amp": "&", "lt": "<", "gt": ">", "quot": '"', "apos": "'"}
_ENTITY_RE = re.compile(r"&(?:(amp|lt|gt|quot|apos)|#([0-9]{1,7})|#[xX]([0-9a-fA-F]{1,6}));")

_PUNCT_TABLE = {}
for _c in "‘’‚‛′":
    _PUNCT_TABLE[ord(_c)] = "'"
for _c in "“”„‟″«»":
    _PUNCT_TABLE[ord(_c)] = '"'
for _c in "‐‑‒–—―−":
    _PUNCT_TABLE[ord(_c)] = "-"
for _c in "   ":
    _PUNCT_TABLE[ord(_c)] = " "
_PUNCT_TABLE[0x2026] = "..."


def _entity(m):
    if m.group(1):
        return _NAMED_ENTITIES[m.group(1)]
    cp = int(m.group(2), 10) if m.group(2) else int(m.group(3), 16)
    if cp > 0x10FFFF or 0xD800 <= cp <= 0xDFFF:
        return m.group(0)
    return chr(cp)


def unescape_xml(text: str) -> str:
    # Repeat until stable so that doubly escaped input ("&amp;amp;") is fully
    # decoded; this keeps normalize idempotent.
    while True:
        out = _ENTITY_RE.sub(_entity, text)
        if out == text:
            return out
        text = out


def _strip_controls(text: str) -> str:
    if text.isprintable():
        return text
    chars = []
    for ch in text:
        cat = unicodedata.category(ch)
        if (cat == "Cc" and ch not in "\t\n") or cat == "Cf":
            chars.append(" ")
        else:
            chars.append(ch)
    return "".join(chars)


def normalize(text: str) -> str:
    text = unescape_xml(text)
    text = _strip_controls(text)
    text = text.translate(_PUNCT_TABLE)
    return " ".join(text.split())


def _is_punct(ch):
    return unicodedata.category(ch)[0] in "PS"


def _is_letter(ch):
    return unicodedata.category(ch)[0] in "LM"


_PLAIN_WORD = re.compile(r"[^\W_]+")


def _tokenize_chunk(chunk):
    if _PLAIN_WORD.fullmatch(chunk):
        return [chunk]
    tokens = []
    word = []
    n = len(chunk)
    i = 0
    while i < n:
        ch = chunk[i]
        if not _is_punct(ch):
            word.append(ch)
            i += 1
            continue
        prev = chunk[i - 1] if i > 0 else ""
        nxt = chunk[i + 1] if i + 1 < n else ""
        if word and nxt and (
            (ch in ".," and prev.isdigit() and nxt.isdigit())
            or (ch in "'-" and _is_letter(prev) and _is_letter(nxt))
        ):
            word.append(ch)
            i += 1
            continue
        if word:
            tokens.append("".join(word))
            word = []
        j = i
        while j < n and chunk[j] == ch:
            j += 1
        tokens.append(chunk[i:j])
        i = j
    if word:
        tokens.append("".join(word))
    return tokens


def tokenize(text: str) -> list:
    tokens = []
    for chunk in text.split():
        tokens.extend(_tokenize_chunk(chunk))
    return tokens


def prepare(sentence: Sentence) -> Sentence:
    """Step 1 for one side: normalize, tokenize, store tokenized surface form."""
    return sentence.with_tokens(tokenize(normalize(sentence.text)))


# --- Step 2: per-pair filters ----------------------------------------------------

def _tokens(pair):
    if pair.src.tokens is None or pair.tgt.tokens is None:
        raise MissingTokens("pair has not been tokenized")
    return pair.src.tokens, pair.tgt.tokens


def filter_length(pair: SentencePair, cfg: CleanConfig) -> Optional[str]:
    src, tgt = _tokens(pair)
    if len(src) > cfg.max_tokens or len(tgt) > cfg.max_tokens:
        return "length"
    return None


def overlap_fractions(src, tgt):
    inter = sum((Counter(src) & Counter(tgt)).values())
    return (inter / len(src) if src else 0.0, inter / len(tgt) if tgt else 0.0)


def filter_overlap(pair: SentencePair, cfg: CleanConfig) -> Optional[str]:
    src, tgt = _tokens(pair)
    fs, ft = overlap_fractions(src, tgt)
    if fs > cfg.overlap_threshold and ft > cfg.overlap_threshold:
        return "overlap"
    return None


def filter_ratio(pair: SentencePair, cfg: CleanConfig) -> Optional[str]:
    src, tgt = _tokens(pair)
    if not src or not tgt:
        raise EmptySide("ratio undefined for an empty side")
    # Compare by cross-multiplication so 3/2 == 1.5 exactly.
    if len(src) > cfg.max_ratio * len(tgt):
        return "ratio"
    if cfg.ratio_symmetric and len(tgt) > cfg.max_ratio * len(src):
        return "ratio"
    return None


STEP2_FILTERS = (filter_length, filter_overlap, filter_ratio)


def step2_reason(pair: SentencePair, cfg: CleanConfig) -> Optional[str]:
    """First firing Step 2 filter, in the fixed order length, overlap, ratio."""
    for f in STEP2_FILTERS:
        reason = f(pair, cfg)
        if reason:
            return reason
    return None


def dedup(stream: Iterable[SentencePair]) -> list:
    seen = set()
    out = []
    for pair in stream:
        if pair.key in seen:
            continue
        seen.add(pair.key)
        out.append(pair)
    return out


def remove_ambiguous(stream: Iterable[SentencePair]) -> list:
    """Drop every pair whose source has several distinct targets or vice versa."""
    pairs = list(stream)
    src_targets = {}
    tgt_sources = {}
    for p in pairs:
        src_targets.setdefault(p.src.text, set()).add(p.tgt.text)
        tgt_sources.setdefault(p.tgt.text, set()).add(p.src.text)
    return [p for p in pairs
            if len(src_targets[p.src.text]) == 1 and len(tgt_sources[p.tgt.text]) == 1]


# --- Step 3: language identification ---------------------------------------------

def filter_offtarget(pair: SentencePair, profiles, cfg: CleanConfig) -> Optional[str]:
    from .langid import classify

    src_lang, tgt_lang = cfg.expected_langs
    for lang in (src_lang, tgt_lang):
        if lang not in profiles:
            raise UnknownLanguage(f"no profile for {lang!r}")
    if classify(pair.src.text, profiles)[0] != src_lang:
        return "offtarget"
    if classify(pair.tgt.text, profiles)[0] != tgt_lang:
        return "offtarget"
    return None
