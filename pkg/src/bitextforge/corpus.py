"""Core data types, TSV bitext I/O, reservoir sampling and run manifests."""
from __future__ import annotations

import hashlib
import json
import random
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Iterator, Optional

from .errors import InvalidUtf8, MalformedLine

__version__ = "0.1.0"


@dataclass(frozen=True)
class Sentence:
    text: str
    tokens: Optional[tuple] = None
    lang: Optional[str] = None

    def __post_init__(self):
        if "\n" in self.text or "\r" in self.text:
            raise ValueError("sentence text may not contain line breaks")
        if self.tokens is not None and not isinstance(self.tokens, tuple):
            object.__setattr__(self, "tokens", tuple(self.tokens))

    def with_tokens(self, tokens):
        tokens = tuple(tokens)
        return replace(self, text=" ".join(tokens), tokens=tokens)


@dataclass(frozen=True)
class SentencePair:
    src: Sentence
    tgt: Sentence
    origin: tuple = ("", 0)
    synthetic: bool = False

    @property
    def key(self):
        return (self.src.text, self.tgt.text)


def _decode(line) -> str:
    if isinstance(line, (bytes, bytearray)):
        try:
            return bytes(line).decode("utf-8")
        except UnicodeDecodeError as exc:
            raise InvalidUtf8(str(exc)) from None
    return line


def parse_pair(line, origin=("", 0), langs=(None, None)) -> SentencePair:
    """Split one TSV line (str or bytes) into a pair; exactly one tab allowed."""
    text = _decode(line).rstrip("\r\n")
    if text.count("\t") != 1:
        raise MalformedLine(f"{origin[0]}:{origin[1]}: expected exactly one tab")
    src, tgt = text.split("\t")
    return SentencePair(Sentence(src, lang=langs[0]), Sentence(tgt, lang=langs[1]), origin=tuple(origin))


def serialize_pair(pair: SentencePair) -> str:
    return f"{pair.src.text}\t{pair.tgt.text}"


def iter_lines(path) -> Iterator[tuple]:
    """Yield ``(lineno, raw_bytes)`` with the trailing newline removed."""
    with open(path, "rb") as fh:
        for n, raw in enumerate(fh, 1):
            yield n, raw.rstrip(b"\r\n")


def read_text_lines(path) -> list:
    with open(path, encoding="utf-8") as fh:
        return [ln.rstrip("\r\n") for ln in fh]


def read_pairs(path, langs=(None, None)) -> list:
    name = Path(path).name
    return [parse_pair(raw, (name, n), langs) for n, raw in iter_lines(path)]


def write_lines(path, lines: Iterable[str]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for ln in lines:
            fh.write(ln)
            fh.write("\n")


def write_pairs(path, pairs: Iterable[SentencePair]) -> None:
    write_lines(path, (serialize_pair(p) for p in pairs))


def sample_lines(stream: Iterable, n: int, seed: int) -> list:
    """Uniform single-pass reservoir sample (Algorithm R).

    Survivors are returned in their original stream order.
    """
    if n < 0:
        raise ValueError("n must be non-negative")
    if n == 0:
        return []
    rng = random.Random(seed)
    reservoir = []
    for i, item in enumerate(stream):
        if i < n:
            reservoir.append((i, item))
        else:
            j = rng.randint(0, i)
            if j < n:
                reservoir[j] = (i, item)
    reservoir.sort(key=lambda t: t[0])
    return [item for _, item in reservoir]


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 16), b""):
            h.update(block)
    return h.hexdigest()


def stable_hash(obj) -> str:
    blob = json.dumps(obj, sort_keys=True, ensure_ascii=False, separators=(",", ":"))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


@dataclass
class StageStats:
    name: str
    lines_in: int = 0
    lines_kept: int = 0
    rejections: dict = field(default_factory=dict)
    seconds: float = 0.0
    extra: dict = field(default_factory=dict)

    def reject(self, reason, k=1):
        self.rejections[reason] = self.rejections.get(reason, 0) + k

    def conserved(self) -> bool:
        return self.lines_kept + sum(self.rejections.values()) == self.lines_in

    def to_dict(self):
        out = {
            "name": self.name,
            "lines_in": self.lines_in,
            "lines_kept": self.lines_kept,
            "rejections": dict(sorted(self.rejections.items())),
            "seconds": round(self.seconds, 6),
        }
        if self.extra:
            out["extra"] = self.extra
        return out

    @classmethod
    def from_dict(cls, d):
        return cls(d["name"], d["lines_in"], d["lines_kept"], dict(d["rejections"]),
                   d.get("seconds", 0.0), dict(d.get("extra", {})))


@dataclass
class Manifest:
    config_hash: str = ""
    tool_version: str = __version__
    stages: list = field(default_factory=list)
    status: str = "ok"

    def add(self, stats: StageStats):
        if not stats.conserved():
            raise AssertionError(f"counter conservation violated in stage {stats.name}")
        self.stages.append(stats)

    def stage(self, name) -> StageStats:
        for s in self.stages:
            if s.name == name:
                return s
        raise KeyError(name)

    def to_dict(self, timings=True):
        stages = [s.to_dict() for s in self.stages]
        if not timings:
            for s in stages:
                s.pop("seconds")
        return {"tool_version": self.tool_version, "config_hash": self.config_hash,
                "status": self.status, "stages": stages}

    def dumps(self, timings=True) -> str:
        return json.dumps(self.to_dict(timings), indent=2, sort_keys=True, ensure_ascii=False) + "\n"

    @classmethod
    def loads(cls, text):
        d = json.loads(text)
        return cls(d["config_hash"], d["tool_version"],
                   [StageStats.from_dict(s) for s in d["stages"]], d.get("status", "ok"))
