"""Spot a keyword inside a planted line and report the context groups."""

import numpy as np

from ctcregex import (AlphabetError, LabelAlphabet, NoFeasiblePathError, compile_pattern, decode,
                      word_log_prob)
from ctcregex.cli import spot_pattern
from ctcregex.synth import GeneratorSpec, generate

text = "the cat sat on the mat"
alphabet = LabelAlphabet(tuple(sorted(set(text))), 0)
rng = np.random.default_rng(11)
planted = generate(GeneratorSpec(text, p_spike=0.6, concentration=0.3), alphabet, rng)
m = planted.matrix
print(f"planted {text!r} into {m.T} frames over {alphabet.size} labels")

for keyword in ("cat", "mat", "hat", "dog"):
    try:
        pattern = spot_pattern(keyword, alphabet, ' "(-')
        res = decode(compile_pattern(pattern, alphabet), m)
    except (AlphabetError, NoFeasiblePathError) as exc:
        print(f"{keyword!r}: {type(exc).__name__}: {exc}")
        continue
    groups = {g.name: g for g in res.groups}
    kw = groups["keyword"]
    # confidence: best constrained path against the unconstrained sum for the decoded word
    print(f"{keyword!r}: best line {res.word!r}, keyword frames {kw.start}-{kw.end}, "
          f"path logprob {res.logprob:.2f}, word logprob {word_log_prob(res.word, m):.2f}")
