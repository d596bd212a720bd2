"""
Cleaning a noisy bitext
=======================

Normalization, the three per-pair filters, deduplication and the removal of
one-to-many pairs, applied by hand to a handful of sentence pairs.
"""
from bitextforge.cleaning import (CleanConfig, dedup, normalize, prepare, remove_ambiguous,
                                  step2_reason)
from bitextforge.corpus import SentencePair, parse_pair

cfg = CleanConfig()

# entities are decoded, zero-width and control characters become spaces,
# curly quotes and the ellipsis character are rewritten
print(normalize("“Fish &amp; chips”… please"))

raw = [
    "The cat sat on the mat.\tהחתול ישב על השטיח.",
    "The cat sat on the mat.\tהחתול ישב על השטיח.",       # exact duplicate
    "Hello world !\tHello world !",                         # copied source
    "one two three four five six seven\tאחד",               # lopsided lengths
    "Good morning\tבוקר טוב",
    "Good morning\tבוקר אור",                              # same source, other target
]
pairs = []
for n, line in enumerate(raw, 1):
    p = parse_pair(line, ("demo", n))
    pairs.append(SentencePair(prepare(p.src), prepare(p.tgt), p.origin))

# Step 2: the first filter to fire is the rejection reason
survivors = []
for p in pairs:
    reason = step2_reason(p, cfg)
    print(f"line {p.origin[1]}: {reason or 'keep'}")
    if reason is None:
        survivors.append(p)

survivors = dedup(survivors)
print("after dedup:", len(survivors))

# Step 3 drops every member of a conflicting group
final = remove_ambiguous(survivors)
for p in final:
    print(p.src.text, "|", p.tgt.text)
