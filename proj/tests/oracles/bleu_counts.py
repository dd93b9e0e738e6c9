#!/usr/bin/env python3
"""Hand-count BLEU-4 for the toy corpus used in tests/test_metrics.cpp."""
import math
from collections import Counter

HYPS = ["the cat sat on the mat .",
        "there is a cheap restaurant in the north",
        "it serves food"]
REFS = [["the cat is on the mat .", "a cat sat on a mat ."],
        ["there is a cheap place in the north part of town"],
        ["it serves indian food", "they serve food", "it serves cheap food ."]]


def grams(toks, n):
    return Counter(tuple(toks[i:i + n]) for i in range(len(toks) - n + 1))


match, total = [0] * 4, [0] * 4
c = r = 0
for h, refs in zip(HYPS, REFS):
    ht = h.split()
    rts = [x.split() for x in refs]
    c += len(ht)
    r += min((abs(len(x) - len(ht)), len(x)) for x in rts)[1]
    for n in range(1, 5):
        hg = grams(ht, n)
        best = Counter()
        for rt in rts:
            best |= grams(rt, n)
        total[n - 1] += sum(hg.values())
        match[n - 1] += sum(min(v, best[g]) for g, v in hg.items())

p = [m / t if m else 1e-9 / t for m, t in zip(match, total)]
bp = 1.0 if c > r else math.exp(1 - r / c)
bleu = bp * math.exp(sum(math.log(x) for x in p) / 4)
print("matches", match, "totals", total, "c", c, "r", r)
print("p", ["%.17g" % x for x in p])
print("bp %.17g bleu %.17g" % (bp, bleu))
