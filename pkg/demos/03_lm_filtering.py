"""
Filtering monolingual text with a Kneser-Ney model
==================================================

A subword model is trained on clean text, a trigram model on its pieces, a
cutoff is calibrated on labeled sentences so that 70% of the bad ones fall
below it, and the cutoff is then applied to a noisy stream.
"""
import tempfile
from pathlib import Path

import numpy as np

from bitextforge.corpus import read_text_lines
from bitextforge.ngram_lm import LabeledScore, calibrate_threshold, filter_mono, score, train_lm
from bitextforge.subword import train_unigram
from bitextforge.toydata import make_toy_data

work = Path(tempfile.mkdtemp())
make_toy_data(work, n_pairs=1000)

train = read_text_lines(work / "lm_train.txt")
spm = train_unigram(train, vocab_size=400)
lm = train_lm([spm.encode(t) for t in train], order=3, vocab=range(len(spm)))

calib = [ln.rsplit("\t", 1) for ln in read_text_lines(work / "calibration.tsv")]
samples = [LabeledScore(score(lm, spm.encode(t)), lab) for t, lab in calib]
thr = calibrate_threshold(samples, target_bad_removed=0.7)
print(f"cutoff {thr.cutoff:.3f}: bad removed {thr.achieved_bad_removed:.3f}, "
      f"good kept {thr.achieved_good_retained:.3f}")

good = np.array([s.score for s in samples if s.label == "good"])
bad = np.array([s.score for s in samples if s.label == "bad"])
print(f"mean score good {good.mean():.2f}  bad {bad.mean():.2f} (nats per token)")

mono = read_text_lines(work / "mono.txt")
labels = read_text_lines(work / "mono.labels.txt")
kept = filter_mono(list(enumerate(mono)), lm, thr, encode=lambda t: spm.encode(t[1]))
kept_idx = {i for i, _ in kept}
bad_idx = [i for i, lab in enumerate(labels) if lab == "bad"]
print(f"kept {len(kept)} of {len(mono)}; "
      f"{np.mean([i not in kept_idx for i in bad_idx]):.3f} of the gibberish removed")
