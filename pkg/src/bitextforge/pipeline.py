"""Config-driven pipeline: langid -> clean -> sample -> spm -> lm -> align ->
graph -> merge.

Every stage writes into ``work_dir/<stage>-<key>`` where the key hashes the
stage parameters, the global seed and languages, the content of its input
files and the keys of the stages it depends on.  A directory holding a
``stage.json`` marker is reused as is, so re-running a finished pipeline is a
no-op.  The shard count and the work directory are excluded from every hash:
they must not change any output.
"""
from __future__ import annotations

import json
import logging
import shutil
import time
from concurrent.futures import ProcessPoolExecutor
from functools import partial
from pathlib import Path

import numpy as np

from . import align as al
from . import graph_embed as ge
from .cleaning import CleanConfig, dedup, filter_offtarget, prepare, remove_ambiguous, step2_reason
from .corpus import (Manifest, Sentence, SentencePair, StageStats, iter_lines, parse_pair,
                     read_pairs, read_text_lines, sample_lines, serialize_pair, sha256_file,
                     stable_hash, write_lines, write_pairs)
from .errors import ConfigInvalid, InputMissing, InvalidUtf8, MalformedLine, StageFailed
from .langid import load_profiles, save_profiles, train_profile
from .ngram_lm import NGramModel, LabeledScore, calibrate_threshold, score, train_lm
from .subword import SubwordModel, UnigramTrainer
from .tagging import merge_synthetic

log = logging.getLogger(__name__)

STAGE_DEPS = {
    "langid": (),
    "clean": ("langid",),
    "sample": ("clean",),
    "spm": ("sample",),
    "lm": ("spm",),
    "align": ("spm", "clean"),
    "graph": ("align",),
    "merge": ("clean",),
}

STAGE_DEFAULTS = {
    "langid": {"max_n": 4},
    "clean": {"max_tokens": 256, "overlap_threshold": 0.75, "max_ratio": 1.5,
              "ratio_symmetric": True, "write_rejected": True},
    "sample": {"n": 10_000_000},
    "spm": {"vocab_size": 32_000, "seed_max_len": 8, "prune_fraction": 0.2, "em_iters": 2},
    "lm": {"order": 5, "target_bad_removed": 0.7, "normalized": True},
    "align": {"iterations": 5, "mode": "intersection"},
    "graph": {"dim": 16, "hops": 1, "activation": "tanh", "full_bias": False},
    "merge": {},
}

STAGE_INPUTS = {
    "langid": ("langid_train",),
    "clean": ("bitext",),
    "lm": ("lm_train", "calibration", "mono"),
    "merge": ("synthetic",),
}

TOP_KEYS = {"seed", "shards", "langs", "work_dir", "inputs", "stages"}
INPUT_KEYS = {"bitext", "langid_train", "lm_train", "calibration", "mono", "synthetic"}


# --- configuration ---------------------------------------------------------------

def validate_config(cfg: dict, base: Path) -> dict:
    """Check keys, stage order and input existence; return a normalized copy."""
    unknown = set(cfg) - TOP_KEYS
    if unknown:
        raise ConfigInvalid(f"unknown top-level keys: {sorted(unknown)}")
    inputs = dict(cfg.get("inputs", {}))
    bad = set(inputs) - INPUT_KEYS
    if bad:
        raise ConfigInvalid(f"unknown input keys: {sorted(bad)}")
    stages = []
    seen = set()
    for block in cfg.get("stages", []):
        if not isinstance(block, dict) or "name" not in block:
            raise ConfigInvalid("each stage needs a 'name'")
        name = block["name"]
        if name not in STAGE_DEPS:
            raise ConfigInvalid(f"unknown stage {name!r}")
        if name in seen:
            raise ConfigInvalid(f"stage {name!r} listed twice")
        for dep in STAGE_DEPS[name]:
            if dep not in seen:
                raise ConfigInvalid(f"stage {name!r} needs {dep!r} earlier in the list")
        params = dict(STAGE_DEFAULTS[name])
        extra = set(block) - set(params) - {"name"}
        if extra:
            raise ConfigInvalid(f"stage {name!r}: unknown keys {sorted(extra)}")
        params.update({k: v for k, v in block.items() if k != "name"})
        stages.append((name, params))
        seen.add(name)
    if not stages:
        raise ConfigInvalid("no stages configured")

    resolved = {}
    for name, _ in stages:
        for key in STAGE_INPUTS.get(name, ()):
            if key not in inputs:
                raise ConfigInvalid(f"stage {name!r} needs input {key!r}")
            val = inputs[key]
            paths = ({lang: base / p for lang, p in val.items()} if isinstance(val, dict)
                     else base / val)
            for p in (paths.values() if isinstance(paths, dict) else [paths]):
                if not p.is_file():
                    raise InputMissing(f"input {key!r} not found: {p}")
            resolved[key] = paths
    shards = int(cfg.get("shards", 1))
    if shards < 1:
        raise ConfigInvalid("shards must be >= 1")
    return {
        "seed": int(cfg.get("seed", 0)),
        "shards": shards,
        "langs": tuple(cfg.get("langs", ("en", "he"))),
        "work_dir": base / cfg.get("work_dir", "work"),
        "inputs": resolved,
        "stages": stages,
    }


def load_config(path):
    path = Path(path)
    if not path.is_file():
        raise InputMissing(f"config not found: {path}")
    try:
        with open(path, encoding="utf-8") as fh:
            cfg = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigInvalid(f"{path}: {exc}") from None
    return cfg, path.parent


def _input_digest(paths):
    if isinstance(paths, dict):
        return {k: sha256_file(p) for k, p in sorted(paths.items())}
    return sha256_file(paths)


# --- sharding --------------------------------------------------------------------------

def map_shards(fn, items, shards):
    """Apply ``fn`` (list -> list) to contiguous shards and concatenate in order."""
    items = list(items)
    if shards <= 1 or len(items) < 2:
        return fn(items)
    size = -(-len(items) // shards)
    chunks = [items[i:i + size] for i in range(0, len(items), size)]
    with ProcessPoolExecutor(max_workers=shards) as ex:
        parts = list(ex.map(fn, chunks))
    return [x for part in parts for x in part]


def _step12(rows, cfg, langs):
    out = []
    for n, raw in rows:
        try:
            pair = parse_pair(raw, ("bitext", n), langs)
        except InvalidUtf8:
            out.append((n, "step1", "malformed", raw.decode("utf-8", "replace")))
            continue
        except MalformedLine:
            out.append((n, "step1", "malformed", raw.decode("utf-8")))
            continue
        pair = SentencePair(prepare(pair.src), prepare(pair.tgt), pair.origin)
        if not pair.src.tokens or not pair.tgt.tokens:
            out.append((n, "step1", "empty", pair))
            continue
        reason = step2_reason(pair, cfg)
        out.append((n, "step2", reason, pair))
    return out


def _offtarget(pairs, profiles, cfg):
    return [filter_offtarget(p, profiles, cfg) for p in pairs]


def _prep_texts(lines):
    return [prepare(Sentence(" ".join(ln.split()))).text for ln in lines]


# --- stages ----------------------------------------------------------------------------

def stage_langid(ctx, params, out):
    profiles = {}
    n = 0
    for lang, path in sorted(ctx["inputs"]["langid_train"].items()):
        lines = _prep_texts(read_text_lines(path))
        n += len(lines)
        profiles[lang] = train_profile(lines, lang, params["max_n"])
    save_profiles(profiles, out / "profiles.json")
    return [StageStats("langid", n, n)]


def stage_clean(ctx, params, out):
    cfg = CleanConfig(params["max_tokens"], params["overlap_threshold"], params["max_ratio"],
                      params["ratio_symmetric"], ctx["langs"])
    profiles = load_profiles(ctx["dirs"]["langid"] / "profiles.json")
    rows = list(iter_lines(ctx["inputs"]["bitext"]))
    s1, s2, s3 = StageStats("clean.step1"), StageStats("clean.step2"), StageStats("clean.step3")
    rejected = []
    s1.lines_in = len(rows)
    survivors = []
    for n, phase, reason, item in map_shards(partial(_step12, cfg=cfg, langs=ctx["langs"]), rows,
                                             ctx["shards"]):
        if phase == "step1":
            s1.reject(reason)
            if isinstance(item, str):
                rejected.append((n, f"{reason}\tbitext:{n}\t{item.replace(chr(9), ' ')}\t"))
            else:
                rejected.append((n, f"{reason}\tbitext:{n}\t{serialize_pair(item)}"))
            continue
        s1.lines_kept += 1
        s2.lines_in += 1
        if reason:
            s2.reject(reason)
            rejected.append((n, f"{reason}\tbitext:{n}\t{serialize_pair(item)}"))
        else:
            survivors.append(item)
    deduped = dedup(survivors)
    kept_ids = {id(p) for p in deduped}
    for p in survivors:
        if id(p) not in kept_ids:
            s2.reject("duplicate")
            rejected.append((p.origin[1], f"duplicate\tbitext:{p.origin[1]}\t{serialize_pair(p)}"))
    s2.lines_kept = len(deduped)

    s3.lines_in = len(deduped)
    verdicts = map_shards(partial(_offtarget, profiles=profiles, cfg=cfg), deduped, ctx["shards"])
    on_target = []
    for p, reason in zip(deduped, verdicts):
        if reason:
            s3.reject(reason)
            rejected.append((p.origin[1], f"{reason}\tbitext:{p.origin[1]}\t{serialize_pair(p)}"))
        else:
            on_target.append(p)
    final = remove_ambiguous(on_target)
    final_ids = {id(p) for p in final}
    for p in on_target:
        if id(p) not in final_ids:
            s3.reject("ambiguous")
            rejected.append((p.origin[1], f"ambiguous\tbitext:{p.origin[1]}\t{serialize_pair(p)}"))
    s3.lines_kept = len(final)

    write_pairs(out / "clean.tsv", final)
    if params["write_rejected"]:
        rejected.sort(key=lambda t: t[0])
        write_lines(out / "rejected.tsv", (r for _, r in rejected))
    return [s1, s2, s3]


def stage_sample(ctx, params, out):
    lines = read_text_lines(ctx["dirs"]["clean"] / "clean.tsv")
    picked = sample_lines(lines, params["n"], ctx["seed"])
    write_lines(out / "sample.tsv", picked)
    st = StageStats("sample", len(lines), len(picked))
    if len(lines) > len(picked):
        st.reject("not_sampled", len(lines) - len(picked))
    return [st]


def stage_spm(ctx, params, out):
    lines = read_text_lines(ctx["dirs"]["sample"] / "sample.tsv")
    corpus = [side for ln in lines for side in ln.split("\t")]
    trainer = UnigramTrainer(params["vocab_size"], params["seed_max_len"],
                             params["prune_fraction"], params["em_iters"])
    model = trainer.train(corpus)
    model.save(out / "spm.model")
    write_lines(out / "em_history.tsv", (f"{r}\t{i}\t{ll!r}" for r, i, ll in trainer.history))
    return [StageStats("spm", len(corpus), len(corpus), extra={"pieces": len(model)})]


def _score_lines(texts, spm_path, lm_path, normalized):
    spm = SubwordModel.load(spm_path)
    lm = NGramModel.load(lm_path)
    out = []
    for t in texts:
        ids = spm.encode(t)
        out.append(score(lm, ids, normalized) if ids else None)
    return out


def stage_lm(ctx, params, out):
    spm_path = ctx["dirs"]["spm"] / "spm.model"
    spm = SubwordModel.load(spm_path)
    train = [spm.encode(t) for t in _prep_texts(read_text_lines(ctx["inputs"]["lm_train"]))]
    train = [ids for ids in train if ids]
    lm = train_lm(train, params["order"], vocab=range(len(spm)))
    lm_path = out / "lm.arpa"
    lm.save(lm_path)

    calib_rows = [ln.rsplit("\t", 1) for ln in read_text_lines(ctx["inputs"]["calibration"])]
    texts = _prep_texts(r[0] for r in calib_rows)
    scores = _score_lines(texts, spm_path, lm_path, params["normalized"])
    samples = [LabeledScore(s, r[1]) for s, r in zip(scores, calib_rows) if s is not None]
    thr = calibrate_threshold(samples, params["target_bad_removed"], params["normalized"])
    with open(out / "threshold.json", "w", encoding="utf-8") as fh:
        json.dump(thr.__dict__, fh, sort_keys=True, indent=2)
        fh.write("\n")

    mono = _prep_texts(read_text_lines(ctx["inputs"]["mono"]))
    mono_scores = map_shards(partial(_score_lines, spm_path=spm_path, lm_path=lm_path,
                                     normalized=params["normalized"]), mono, ctx["shards"])
    st = StageStats("lm.filter", len(mono))
    kept = []
    flags = []
    for text, s in zip(mono, mono_scores):
        if s is None:
            st.reject("empty")
            flags.append("0")
        elif s >= thr.cutoff:
            kept.append(text)
            flags.append("1")
        else:
            st.reject("lm_score")
            flags.append("0")
    st.lines_kept = len(kept)
    st.extra = {"cutoff": thr.cutoff, "calibration_bad_removed": thr.achieved_bad_removed,
                "calibration_good_retained": thr.achieved_good_retained}
    write_lines(out / "mono.filtered.txt", kept)
    write_lines(out / "mono.keep.txt", flags)
    return [StageStats("lm.train", len(train), len(train)), st]


def stage_align(ctx, params, out):
    spm = SubwordModel.load(ctx["dirs"]["spm"] / "spm.model")
    pairs = read_pairs(ctx["dirs"]["clean"] / "clean.tsv")
    bitext = [(spm.encode(p.src.text), spm.encode(p.tgt.text)) for p in pairs]
    fwd = al.train_ibm1(bitext, params["iterations"])
    bwd = al.train_ibm1([(t, s) for s, t in bitext], params["iterations"])
    links = [al.align_pair(fwd, bwd, pair, params["mode"]) for pair in bitext]
    write_lines(out / "alignments.pharaoh", (al.format_pharaoh(lk) for lk in links))
    counts = al.count_links(bitext, links, len(spm))
    counts.save(out / "counts.tsv")
    write_lines(out / "loglik.tsv", (f"{d}\t{k}\t{ll!r}" for d, t in (("fwd", fwd), ("bwd", bwd))
                                     for k, ll in enumerate(t.loglik_history)))
    st = StageStats("align", len(bitext), len(bitext),
                    extra={"links": int(sum(len(lk) for lk in links))})
    return [st]


def stage_graph(ctx, params, out):
    counts = al.LinkCounts.load(ctx["dirs"]["align"] / "counts.tsv")
    graph = ge.build_graph(counts)
    graph.save(out / "graph.tsv")
    V, d = graph.size, params["dim"]
    rng = np.random.default_rng(ctx["seed"])
    E = rng.normal(0.0, 1.0 / np.sqrt(d), size=(V, d))
    layers = ge.init_layers(d, params["hops"], ctx["seed"], params["activation"],
                            V if params["full_bias"] else None)
    stack = ge.EmbeddingStack(E, layers)
    EH = ge.gnn_forward(stack, graph, keep_cache=False)
    ge.save_arrays(out / "embeddings.bin", [E])
    ge.save_layers(out / "layers.bin", layers)
    ge.save_arrays(out / "reparam.bin", [EH])
    nonzero = int((np.diff(graph.G.indptr) > 0).sum())
    st = StageStats("graph", V, nonzero)
    if V > nonzero:
        st.reject("isolated", V - nonzero)
    return [st]


def stage_merge(ctx, params, out):
    original = read_pairs(ctx["dirs"]["clean"] / "clean.tsv")
    synthetic = []
    for p in read_pairs(ctx["inputs"]["synthetic"]):
        synthetic.append(SentencePair(prepare(p.src), prepare(p.tgt), p.origin, True))
    merged = merge_synthetic(original, synthetic, ctx["seed"], ctx["langs"])
    write_pairs(out / "merged.tsv", merged)
    n_in = len(original) + len(synthetic)
    if len(merged) != 2 * n_in:
        raise AssertionError("merge lost pairs")
    return [StageStats("merge", n_in, n_in, extra={"lines_out": len(merged)})]


STAGES = {
    "langid": stage_langid, "clean": stage_clean, "sample": stage_sample, "spm": stage_spm,
    "lm": stage_lm, "align": stage_align, "graph": stage_graph, "merge": stage_merge,
}


# --- driver ----------------------------------------------------------------------------

def config_hash(cfg: dict) -> str:
    return stable_hash({"seed": cfg["seed"], "langs": list(cfg["langs"]),
                        "stages": [[n, p] for n, p in cfg["stages"]]})


def run_pipeline(config, base=None, shards=None) -> Manifest:
    """Run every configured stage in order and return the merged manifest.

    ``config`` is a path or an already-loaded dict (then ``base`` resolves
    relative paths).  On failure the partial manifest is written with status
    ``failed`` and :class:`StageFailed` is raised.
    """
    if isinstance(config, (str, Path)):
        config, base = load_config(config)
    cfg = validate_config(config, Path(base or "."))
    if shards is not None:
        cfg["shards"] = int(shards)
    work = cfg["work_dir"]
    work.mkdir(parents=True, exist_ok=True)
    manifest = Manifest(config_hash=config_hash(cfg))
    digests = {k: _input_digest(p) for k, p in cfg["inputs"].items()}
    ctx = {"seed": cfg["seed"], "langs": cfg["langs"], "shards": cfg["shards"],
           "inputs": cfg["inputs"], "dirs": {}}
    keys = {}
    for name, params in cfg["stages"]:
        key = stable_hash({"stage": name, "params": params, "seed": cfg["seed"],
                           "langs": list(cfg["langs"]),
                           "inputs": {k: digests[k] for k in STAGE_INPUTS.get(name, ())},
                           "deps": {d: keys[d] for d in STAGE_DEPS[name]}})
        keys[name] = key
        out = work / f"{name}-{key[:16]}"
        ctx["dirs"][name] = out
        marker = out / "stage.json"
        t0 = time.perf_counter()
        if marker.is_file():
            log.info("stage %s: cached (%s)", name, out.name)
            with open(marker, encoding="utf-8") as fh:
                stats = [StageStats.from_dict(d) for d in json.load(fh)]
        else:
            log.info("stage %s: running", name)
            if out.exists():
                shutil.rmtree(out)
            tmp = work / f".{out.name}.tmp"
            if tmp.exists():
                shutil.rmtree(tmp)
            tmp.mkdir(parents=True)
            try:
                stats = STAGES[name](ctx, params, tmp)
                outputs = {p.name: sha256_file(p) for p in sorted(tmp.iterdir()) if p.is_file()}
                for st in stats:
                    st.extra = dict(st.extra, key=key[:16], outputs=outputs)
                    st.seconds = time.perf_counter() - t0
                with open(tmp / "stage.json", "w", encoding="utf-8") as fh:
                    json.dump([st.to_dict() for st in stats], fh, indent=2, sort_keys=True)
                tmp.rename(out)
            except Exception as exc:
                manifest.status = "failed"
                _write_manifest(manifest, work)
                err = StageFailed(name, exc)
                err.manifest = manifest
                raise err from exc
        for st in stats:
            manifest.add(st)
    _write_manifest(manifest, work)
    return manifest


def _write_manifest(manifest, work):
    with open(work / "manifest.json", "w", encoding="utf-8") as fh:
        fh.write(manifest.dumps())


def final_outputs(manifest: Manifest) -> dict:
    """``{stage: {file: sha256}}`` for byte-identity comparisons."""
    return {st.name: st.extra.get("outputs", {}) for st in manifest.stages}
