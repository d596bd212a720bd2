"""Direction tags for bidirectional training data, synthetic-data merging,
and the emoji <-> ``<U+XXXX>`` escape round trip used at inference time."""
from __future__ import annotations

import json
import random
import re
from dataclasses import replace
from typing import Sequence

from .corpus import Sentence, SentencePair
from .errors import UnknownLanguage
from .subword import TAGS

DEFAULT_LANGS = ("en", "he")
SYNTHETIC_LANG = "he"
SYN_TAG = "2syn"

EMOJI_RANGES = (
    (0x1F300, 0x1F5FF),
    (0x1F600, 0x1F64F),
    (0x1F680, 0x1F6FF),
    (0x1F900, 0x1FAFF),
    (0x2600, 0x27BF),
    (0xFE0F, 0xFE0F),
    (0x200D, 0x200D),
)


def tag_for(target_lang: str, synthetic: bool, langs=DEFAULT_LANGS, synthetic_lang=SYNTHETIC_LANG) -> str:
    if target_lang not in langs:
        raise UnknownLanguage(f"{target_lang!r} not in {langs}")
    if synthetic and target_lang == synthetic_lang:
        return SYN_TAG
    return "2" + target_lang


def tag(sentence: Sentence, target_lang: str, synthetic: bool = False,
        langs=DEFAULT_LANGS, synthetic_lang=SYNTHETIC_LANG) -> Sentence:
    t = tag_for(target_lang, synthetic, langs, synthetic_lang)
    tokens = None if sentence.tokens is None else (t,) + sentence.tokens
    text = t + " " + sentence.text if sentence.text else t
    return replace(sentence, text=text, tokens=tokens)


def untag(sentence: Sentence):
    """Inverse of :func:`tag`; returns ``(tag, sentence)``."""
    head, _, rest = sentence.text.partition(" ")
    if head not in TAGS:
        raise ValueError(f"sentence does not start with a direction tag: {sentence.text[:20]!r}")
    tokens = None if sentence.tokens is None else sentence.tokens[1:]
    return head, replace(sentence, text=rest, tokens=tokens)


def both_directions(pair: SentencePair, langs=DEFAULT_LANGS, synthetic_lang=SYNTHETIC_LANG):
    """``src -> tgt`` and ``tgt -> src`` training pairs with the source side tagged."""
    src_lang, tgt_lang = langs
    fwd = SentencePair(tag(pair.src, tgt_lang, pair.synthetic, langs, synthetic_lang), pair.tgt,
                       pair.origin, pair.synthetic)
    bwd = SentencePair(tag(pair.tgt, src_lang, pair.synthetic, langs, synthetic_lang), pair.src,
                       pair.origin, pair.synthetic)
    return fwd, bwd


def merge_synthetic(original: Sequence[SentencePair], synthetic: Sequence[SentencePair], seed: int,
                    langs=DEFAULT_LANGS, synthetic_lang=SYNTHETIC_LANG) -> list:
    out = []
    for p in original:
        out.extend(both_directions(replace(p, synthetic=False), langs, synthetic_lang))
    for p in synthetic:
        out.extend(both_directions(replace(p, synthetic=True), langs, synthetic_lang))
    random.Random(seed).shuffle(out)
    return out


# --- emoji escaping ------------------------------------------------------------------

_ESCAPE_RE = re.compile(r"<U\+([0-9A-F]{1,6})>")


def _valid_cp(hexdigits):
    cp = int(hexdigits, 16)
    return cp <= 0x10FFFF and not 0xD800 <= cp <= 0xDFFF


def load_ranges(path) -> tuple:
    with open(path, encoding="utf-8") as fh:
        return tuple((int(a, 16), int(b, 16)) for a, b in json.load(fh))


def _in_ranges(cp, ranges):
    return any(a <= cp <= b for a, b in ranges)


def emoji_encode(text: str, ranges=EMOJI_RANGES) -> str:
    """Replace each emoji code point by ``<U+XXXX>``.

    A literal ``<`` that would otherwise start a decodable escape is itself
    escaped as ``<U+3C>``, which keeps the round trip exact for any input.
    """
    out = []
    for i, ch in enumerate(text):
        cp = ord(ch)
        if _in_ranges(cp, ranges):
            out.append(f"<U+{cp:X}>")
        elif ch == "<":
            m = _ESCAPE_RE.match(text, i)
            out.append("<U+3C>" if m and _valid_cp(m.group(1)) else ch)
        else:
            out.append(ch)
    return "".join(out)


def emoji_decode(text: str) -> str:
    def sub(m):
        return chr(int(m.group(1), 16)) if _valid_cp(m.group(1)) else m.group(0)
    return _ESCAPE_RE.sub(sub, text)
