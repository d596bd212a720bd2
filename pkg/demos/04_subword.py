"""
Unigram subword segmentation
============================

Hard-EM training with pruning, then Viterbi encoding and exact decoding.
"""
from bitextforge.subword import UnigramTrainer, viterbi

corpus = ["the lower the better", "lowest newest widest", "newer wider lower"] * 20
trainer = UnigramTrainer(vocab_size=40, seed_max_len=6)
model = trainer.train(corpus)

# log-likelihood per E-step; it never drops inside a pruning round
for rnd, it, ll in trainer.history[:8]:
    print(f"round {rnd} iter {it}: {ll:.2f}")

for text in ["the lowest", "newer and wider"]:
    ids = model.encode(text)
    print(text, "->", model.encode_pieces(text), "->", repr(model.decode(ids)))

# one piece at -1.5 beats two pieces at -1 each
print(viterbi("ab", {"a": -1.0, "b": -1.0, "ab": -1.5}, max_len=2))
