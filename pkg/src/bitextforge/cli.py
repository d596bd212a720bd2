"""``forge`` command line front end.

Data goes to files or standard output, logs to standard error.  Each error
class exits with its own status code (see ``errors.py``); 0 means success.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import align as al
from . import graph_embed as ge
from .cleaning import CleanConfig, prepare
from .corpus import Sentence, SentencePair, read_pairs, sample_lines, write_lines, write_pairs
from .errors import ForgeError
from .pipeline import _prep_texts
from .langid import classify, load_profiles, save_profiles, train_profile
from .ngram_lm import LabeledScore, NGramModel, Threshold, calibrate_threshold, score, train_lm
from .subword import SubwordModel, UnigramTrainer
from .tagging import emoji_decode, emoji_encode, load_ranges, merge_synthetic, tag, EMOJI_RANGES

log = logging.getLogger("forge")


def _lines(path):
    fh = sys.stdin if path in (None, "-") else open(path, encoding="utf-8")
    try:
        return [ln.rstrip("\r\n") for ln in fh]
    finally:
        if fh is not sys.stdin:
            fh.close()


def _emit(lines, out=None):
    if out:
        write_lines(out, lines)
    else:
        for ln in lines:
            sys.stdout.write(ln + "\n")


# --- commands -------------------------------------------------------------------------

def cmd_make_toy_data(args):
    from .toydata import make_toy_data
    make_toy_data(args.out, seed=args.seed, n_pairs=args.pairs)
    log.info("toy corpora written to %s", args.out)


def cmd_run(args):
    from .pipeline import run_pipeline
    manifest = run_pipeline(args.config, shards=args.shards)
    sys.stdout.write(manifest.dumps())


def cmd_sample(args):
    _emit(sample_lines(_lines(args.input), args.n, args.seed), args.output)


def cmd_clean(args):
    import tempfile
    from .pipeline import stage_clean

    params = {"max_tokens": 256, "overlap_threshold": 0.75, "max_ratio": 1.5,
              "ratio_symmetric": True, "write_rejected": True}
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            overrides = json.load(fh)
        unknown = set(overrides) - set(CleanConfig.__dataclass_fields__) - {"write_rejected"}
        if unknown:
            from .errors import ConfigInvalid
            raise ConfigInvalid(f"unknown clean keys: {sorted(unknown)}")
        params.update(overrides)
    langs = tuple(params.pop("expected_langs", args.langs))
    with tempfile.TemporaryDirectory() as tmp:
        tmp = Path(tmp)
        (tmp / "langid").mkdir()
        save_profiles(load_profiles(args.profiles), tmp / "langid" / "profiles.json")
        ctx = {"langs": langs, "shards": args.shards, "inputs": {"bitext": Path(args.input)},
               "dirs": {"langid": tmp / "langid"}}
        out = tmp / "out"
        out.mkdir()
        stats = stage_clean(ctx, params, out)
        Path(args.output).write_bytes((out / "clean.tsv").read_bytes())
        if args.rejected:
            Path(args.rejected).write_bytes((out / "rejected.tsv").read_bytes())
    for st in stats:
        log.info("%s: in=%d kept=%d %s", st.name, st.lines_in, st.lines_kept, st.rejections)


def cmd_langid_train(args):
    profiles = {}
    for item in args.input:
        lang, _, path = item.partition("=")
        profiles[lang] = train_profile(_prep_texts(_lines(path)), lang)
    save_profiles(profiles, args.output)


def cmd_langid_classify(args):
    profiles = load_profiles(args.profiles)
    _emit(f"{lang}\t{margin:.6f}" for lang, margin in
          (classify(t, profiles) for t in _lines(args.input)))


def cmd_spm_train(args):
    trainer = UnigramTrainer(args.vocab_size, args.seed_max_len)
    corpus = [side for ln in _lines(args.input) for side in ln.split("\t")]
    trainer.train(corpus).save(args.output)


def cmd_spm_encode(args):
    model = SubwordModel.load(args.model)
    if args.ids:
        _emit(" ".join(map(str, model.encode(t))) for t in _lines(args.input))
    else:
        _emit(" ".join(model.encode_pieces(t)) for t in _lines(args.input))


def cmd_spm_decode(args):
    model = SubwordModel.load(args.model)
    _emit(model.decode([int(x) for x in ln.split()]) for ln in _lines(args.input))


def cmd_lm_train(args):
    spm = SubwordModel.load(args.spm)
    corpus = [ids for ids in (spm.encode(t) for t in _prep_texts(_lines(args.input))) if ids]
    train_lm(corpus, args.order, vocab=range(len(spm))).save(args.output)


def cmd_lm_score(args):
    spm = SubwordModel.load(args.spm)
    lm = NGramModel.load(args.lm)
    _emit(repr(score(lm, spm.encode(t), not args.raw)) for t in _prep_texts(_lines(args.input)))


def cmd_lm_calibrate(args):
    samples = []
    for ln in _lines(args.input):
        s, lab = ln.split("\t")
        samples.append(LabeledScore(float(s), lab))
    thr = calibrate_threshold(samples, args.target, not args.raw)
    text = json.dumps(thr.__dict__, sort_keys=True, indent=2) + "\n"
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def cmd_lm_filter(args):
    spm = SubwordModel.load(args.spm)
    lm = NGramModel.load(args.lm)
    with open(args.threshold, encoding="utf-8") as fh:
        thr = Threshold(**json.load(fh))
    kept = []
    for t in _prep_texts(_lines(args.input)):
        ids = spm.encode(t)
        if ids and score(lm, ids, thr.normalized) >= thr.cutoff:
            kept.append(t)
    _emit(kept, args.output)


def _encoded_bitext(spm_path, path):
    spm = SubwordModel.load(spm_path)
    return spm, [(spm.encode(p.src.text), spm.encode(p.tgt.text)) for p in read_pairs(path)]


def cmd_align_train(args):
    _, bitext = _encoded_bitext(args.spm, args.input)
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    al.train_ibm1(bitext, args.iterations).save(out / "fwd.tsv")
    al.train_ibm1([(t, s) for s, t in bitext], args.iterations).save(out / "bwd.tsv")


def cmd_align_apply(args):
    _, bitext = _encoded_bitext(args.spm, args.input)
    fwd = al.TranslationTable.load(Path(args.tables) / "fwd.tsv")
    bwd = al.TranslationTable.load(Path(args.tables) / "bwd.tsv")
    _emit((al.format_pharaoh(al.align_pair(fwd, bwd, p, args.mode)) for p in bitext), args.output)


def cmd_align_count(args):
    spm, bitext = _encoded_bitext(args.spm, args.input)
    links = [al.parse_pharaoh(ln) for ln in _lines(args.alignments)]
    al.count_links(bitext, links, len(spm)).save(args.output)


def cmd_graph_build(args):
    ge.build_graph(al.LinkCounts.load(args.counts)).save(args.output)


def cmd_graph_reparam(args):
    graph = ge.AlignmentGraph.load(args.graph)
    (E,) = ge.load_arrays(args.embeddings)
    if args.layers:
        layers = ge.load_layers(args.layers)
    else:
        layers = ge.init_layers(E.shape[1], args.hops, args.seed, args.activation)
    ge.save_arrays(args.output, [ge.gnn_forward(ge.EmbeddingStack(E, layers), graph, keep_cache=False)])


def cmd_graph_gradcheck(args):
    rng = np.random.default_rng(args.seed)
    V, d = args.size, args.dim
    counts = rng.integers(0, 4, size=(V, V)) * (rng.random((V, V)) < 0.4)
    graph = ge.build_graph(counts + counts.T)
    layers = ge.init_layers(d, args.hops, args.seed, args.activation)
    for L in layers:
        L.B = rng.normal(size=L.B.shape)
    stack = ge.EmbeddingStack(rng.normal(size=(V, d)), layers)
    err = ge.gradcheck(stack, graph, rng.normal(size=(V, d)), args.step)
    ok = err < args.tol
    sys.stdout.write(f"max_rel_error={err:.3e} tol={args.tol:g} {'PASS' if ok else 'FAIL'}\n")
    if not ok:
        raise SystemExit(2)


def cmd_tag(args):
    _emit(tag(Sentence(t), args.target, args.synthetic).text for t in _lines(args.input))


def cmd_merge(args):
    orig = read_pairs(args.original)
    syn = [SentencePair(prepare(p.src), prepare(p.tgt), p.origin) for p in read_pairs(args.synthetic)]
    write_pairs(args.output, merge_synthetic(orig, syn, args.seed, tuple(args.langs)))


def cmd_emoji(args):
    ranges = load_ranges(args.ranges) if args.ranges else EMOJI_RANGES
    if args.direction == "encode":
        _emit(emoji_encode(t, ranges) for t in _lines(args.input))
    else:
        _emit(emoji_decode(t) for t in _lines(args.input))


# --- parser ------------------------------------------------------------------------------

def build_parser():
    p = argparse.ArgumentParser(prog="forge", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("make-toy-data", help="write the deterministic toy corpora")
    s.add_argument("out")
    s.add_argument("--seed", type=int, default=13)
    s.add_argument("--pairs", type=int, default=10_000)
    s.set_defaults(func=cmd_make_toy_data)

    s = sub.add_parser("run", help="run a pipeline config")
    s.add_argument("config")
    s.add_argument("--shards", type=int)
    s.set_defaults(func=cmd_run)

    s = sub.add_parser("sample", help="reservoir-sample lines")
    s.add_argument("input", nargs="?")
    s.add_argument("-n", type=int, required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_sample)

    s = sub.add_parser("clean", help="clean a TSV bitext")
    s.add_argument("input")
    s.add_argument("-o", "--output", required=True)
    s.add_argument("--profiles", required=True, help="language profiles JSON")
    s.add_argument("--rejected", help="write rejected pairs with reasons here")
    s.add_argument("--config", help="JSON file with CleanConfig keys")
    s.add_argument("--langs", nargs=2, default=["en", "he"])
    s.add_argument("--shards", type=int, default=1)
    s.set_defaults(func=cmd_clean)

    lg = sub.add_parser("langid").add_subparsers(dest="sub", required=True)
    s = lg.add_parser("train")
    s.add_argument("--input", action="append", required=True, metavar="LANG=PATH")
    s.add_argument("-o", "--output", required=True)
    s.set_defaults(func=cmd_langid_train)
    s = lg.add_parser("classify")
    s.add_argument("input", nargs="?")
    s.add_argument("--profiles", required=True)
    s.set_defaults(func=cmd_langid_classify)

    sp = sub.add_parser("spm").add_subparsers(dest="sub", required=True)
    s = sp.add_parser("train")
    s.add_argument("input")
    s.add_argument("-o", "--output", required=True)
    s.add_argument("--vocab-size", type=int, default=32_000)
    s.add_argument("--seed-max-len", type=int, default=8)
    s.set_defaults(func=cmd_spm_train)
    for name, fn in (("encode", cmd_spm_encode), ("decode", cmd_spm_decode)):
        s = sp.add_parser(name)
        s.add_argument("input", nargs="?")
        s.add_argument("--model", required=True)
        if name == "encode":
            s.add_argument("--ids", action="store_true")
        s.set_defaults(func=fn)

    lm = sub.add_parser("lm").add_subparsers(dest="sub", required=True)
    s = lm.add_parser("train")
    s.add_argument("input")
    s.add_argument("--spm", required=True)
    s.add_argument("--order", type=int, default=5)
    s.add_argument("-o", "--output", required=True)
    s.set_defaults(func=cmd_lm_train)
    s = lm.add_parser("score")
    s.add_argument("input", nargs="?")
    s.add_argument("--spm", required=True)
    s.add_argument("--lm", required=True)
    s.add_argument("--raw", action="store_true", help="unnormalized log-probability")
    s.set_defaults(func=cmd_lm_score)
    s = lm.add_parser("calibrate", help="input: score<TAB>good|bad")
    s.add_argument("input", nargs="?")
    s.add_argument("--target", type=float, default=0.7)
    s.add_argument("--raw", action="store_true")
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_lm_calibrate)
    s = lm.add_parser("filter")
    s.add_argument("input", nargs="?")
    s.add_argument("--spm", required=True)
    s.add_argument("--lm", required=True)
    s.add_argument("--threshold", required=True)
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_lm_filter)

    ag = sub.add_parser("align").add_subparsers(dest="sub", required=True)
    s = ag.add_parser("train")
    s.add_argument("input")
    s.add_argument("--spm", required=True)
    s.add_argument("--iterations", type=int, default=5)
    s.add_argument("-o", "--output", required=True, help="directory for fwd.tsv / bwd.tsv")
    s.set_defaults(func=cmd_align_train)
    s = ag.add_parser("apply")
    s.add_argument("input")
    s.add_argument("--spm", required=True)
    s.add_argument("--tables", required=True)
    s.add_argument("--mode", choices=[al.INTERSECTION, al.GROW_DIAG], default=al.INTERSECTION)
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_align_apply)
    s = ag.add_parser("count")
    s.add_argument("input")
    s.add_argument("alignments")
    s.add_argument("--spm", required=True)
    s.add_argument("-o", "--output", required=True)
    s.set_defaults(func=cmd_align_count)

    gr = sub.add_parser("graph").add_subparsers(dest="sub", required=True)
    s = gr.add_parser("build")
    s.add_argument("counts")
    s.add_argument("-o", "--output", required=True)
    s.set_defaults(func=cmd_graph_build)
    s = gr.add_parser("reparam")
    s.add_argument("--graph", required=True)
    s.add_argument("--embeddings", required=True)
    s.add_argument("--layers")
    s.add_argument("--hops", type=int, default=1)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--activation", choices=ge.ACTIVATIONS, default="tanh")
    s.add_argument("-o", "--output", required=True)
    s.set_defaults(func=cmd_graph_reparam)
    s = gr.add_parser("gradcheck")
    s.add_argument("--size", type=int, default=8)
    s.add_argument("--dim", type=int, default=4)
    s.add_argument("--hops", type=int, default=2)
    s.add_argument("--activation", choices=ge.ACTIVATIONS, default="tanh")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--step", type=float, default=1e-5)
    s.add_argument("--tol", type=float, default=1e-4)
    s.set_defaults(func=cmd_graph_gradcheck)

    s = sub.add_parser("tag", help="prepend a direction tag")
    s.add_argument("input", nargs="?")
    s.add_argument("--target", required=True)
    s.add_argument("--synthetic", action="store_true")
    s.set_defaults(func=cmd_tag)

    s = sub.add_parser("merge", help="tag original + synthetic bitext in both directions")
    s.add_argument("original")
    s.add_argument("synthetic")
    s.add_argument("-o", "--output", required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--langs", nargs=2, default=["en", "he"])
    s.set_defaults(func=cmd_merge)

    s = sub.add_parser("emoji")
    s.add_argument("direction", choices=["encode", "decode"])
    s.add_argument("input", nargs="?")
    s.add_argument("--ranges", help="JSON list of [start_hex, end_hex] pairs")
    s.set_defaults(func=cmd_emoji)
    return p


def _setup_logging(verbose):
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("%(levelname)s %(name)s: %(message)s"))
    for name in ("forge", "bitextforge"):
        logger = logging.getLogger(name)
        logger.handlers[:] = [handler]
        logger.setLevel(logging.INFO if verbose else logging.WARNING)
        logger.propagate = False


def main(argv=None):
    args = build_parser().parse_args(argv)
    _setup_logging(args.verbose)
    try:
        args.func(args)
    except ForgeError as exc:
        log.error("%s: %s", type(exc).__name__, exc)
        return exc.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
