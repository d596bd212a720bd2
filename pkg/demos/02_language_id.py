"""
Character n-gram language identification
========================================

Train two profiles on the toy corpora and classify held-out lines.
"""
import tempfile
from pathlib import Path

from bitextforge.corpus import read_text_lines
from bitextforge.langid import classify, train_profile
from bitextforge.toydata import make_toy_data

work = Path(tempfile.mkdtemp())
make_toy_data(work, n_pairs=1000)

profiles = {lang: train_profile(read_text_lines(work / f"langid.{lang}.txt"), lang)
            for lang in ("en", "he")}

rows = [ln.split("\t") for ln in read_text_lines(work / "langid.heldout.tsv")]
correct = sum(classify(text, profiles)[0] == lang for lang, text in rows)
print(f"held-out accuracy: {correct / len(rows):.3f} on {len(rows)} lines")

# the margin is the gap between the best and second best average log-likelihood
for text in ["stu kathi duthou", "שלום", "12 34 56"]:
    lang, margin = classify(text, profiles)
    print(f"{text!r:24} -> {lang}  margin {margin:.3f}")
