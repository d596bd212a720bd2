"""
Direction tags and emoji escapes
================================
"""
from bitextforge.corpus import Sentence, SentencePair
from bitextforge.tagging import emoji_decode, emoji_encode, merge_synthetic, tag, untag

print(tag(Sentence("hello"), "he").text)
print(tag(Sentence("hello"), "he", synthetic=True).text)
print(untag(Sentence("2en shalom")))

original = [SentencePair(Sentence("good morning"), Sentence("בוקר טוב"))]
synthetic = [SentencePair(Sentence("thank you"), Sentence("תודה"), synthetic=True)]
for p in merge_synthetic(original, synthetic, seed=0):
    print(f"{'syn ' if p.synthetic else 'orig'}  {p.src.text}  ->  {p.tgt.text}")

line = "see you 👋 <3 ❤️"
enc = emoji_encode(line)
print(enc)
print(emoji_decode(enc) == line)
