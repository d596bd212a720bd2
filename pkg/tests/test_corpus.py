import json

import pytest
from hypothesis import given, strategies as st

from bitextforge.corpus import (Manifest, Sentence, SentencePair, StageStats, parse_pair,
                                read_pairs, sample_lines, serialize_pair, write_lines)
from bitextforge.errors import InvalidUtf8, MalformedLine


def test_parse_pair_fields():
    p = parse_pair("hello\tshalom", ("f.tsv", 3))
    assert (p.src.text, p.tgt.text) == ("hello", "shalom")
    assert p.synthetic is False
    assert p.origin == ("f.tsv", 3)


@pytest.mark.parametrize("line", ["a\tb\tc", "only source", ""])
def test_parse_pair_malformed(line):
    with pytest.raises(MalformedLine):
        parse_pair(line)


def test_parse_pair_invalid_utf8():
    with pytest.raises(InvalidUtf8):
        parse_pair(b"ab\xff\tcd")


def test_sentence_rejects_line_breaks():
    with pytest.raises(ValueError):
        Sentence("a\nb")


side = st.text(st.characters(blacklist_characters="\t\r\n", blacklist_categories=("Cs",)))


@given(side, side)
def test_serialize_roundtrip(src, tgt):
    pair = SentencePair(Sentence(src), Sentence(tgt))
    back = parse_pair(serialize_pair(pair))
    assert back.key == pair.key


def test_read_pairs_origin(tmp_path):
    path = tmp_path / "bi.tsv"
    write_lines(path, ["a\tb", "c\td"])
    pairs = read_pairs(path)
    assert [p.origin for p in pairs] == [("bi.tsv", 1), ("bi.tsv", 2)]


def test_sample_zero():
    assert sample_lines(["a", "b"], 0, 1) == []


def test_sample_all_in_order():
    lines = ["e", "d", "c", "b", "a"]
    for seed in range(5):
        assert sample_lines(lines, 5, seed) == lines
        assert sample_lines(lines, 9, seed) == lines


def test_sample_deterministic_and_ordered():
    lines = [f"line {i}" for i in range(10_000)]
    a = sample_lines(lines, 1000, 7)
    b = sample_lines(iter(lines), 1000, 7)
    assert len(a) == 1000
    assert "\n".join(a).encode() == "\n".join(b).encode()
    idx = [int(x.split()[1]) for x in a]
    assert idx == sorted(idx)
    assert a != sample_lines(lines, 1000, 8)


def test_sample_is_roughly_uniform():
    counts = [0] * 20
    for seed in range(2000):
        for x in sample_lines(range(20), 5, seed):
            counts[x] += 1
    # each item is kept with probability 1/4, so about 500 times
    assert min(counts) > 420 and max(counts) < 580


def test_stage_stats_conservation():
    st_ = StageStats("x", lines_in=10, lines_kept=7)
    st_.reject("a", 2)
    st_.reject("b")
    assert st_.conserved()
    m = Manifest("h")
    m.add(st_)
    bad = StageStats("y", lines_in=3, lines_kept=1)
    with pytest.raises(AssertionError):
        m.add(bad)


def test_manifest_roundtrip():
    m = Manifest("abc")
    s = StageStats("clean.step1", 5, 4, seconds=0.25)
    s.reject("empty")
    m.add(s)
    back = Manifest.loads(m.dumps())
    assert back.to_dict() == m.to_dict()
    assert "seconds" not in json.dumps(m.to_dict(timings=False))
