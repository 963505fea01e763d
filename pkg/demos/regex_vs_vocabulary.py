"""One automaton for [0-9]{3} versus decoding a 1000-word vocabulary."""

import time

from ctcregex import VocabularyTrie, beam_decode, compile_pattern, decode, decode_vocabulary
from ctcregex.synth import DIGITS, digit_matrices

words = [f"{i:03d}" for i in range(1000)]
ext = compile_pattern("[0-9]{3}", DIGITS)
trie = VocabularyTrie(words, DIGITS)
mats = [p.matrix for p in digit_matrices(3, 100, seed=3, p_spike=0.4, spike_jitter=0.2,
                                          p_nac=0.5, nac_jitter=0.2, concentration=0.2)]


def per_matrix(fn, ms=mats):
    t0 = time.perf_counter()
    out = [fn(m) for m in ms]
    return out, 1e3 * (time.perf_counter() - t0) / len(ms)


regex, t_regex = per_matrix(lambda m: decode(ext, m))
pruned, t_trie = per_matrix(lambda m: trie.decode(m))
_, t_plain = per_matrix(lambda m: decode_vocabulary(words, m), mats[:10])
_, t_beam = per_matrix(lambda m: beam_decode(ext, m, 100))
agree = sum(a.word == b.word for a, b in zip(regex, pruned))

print(f"regex automaton      {t_regex:7.2f} ms")
print(f"pruned trie          {t_trie:7.2f} ms  ({t_trie / t_regex:.1f}x)")
print(f"word-by-word         {t_plain:7.2f} ms  ({t_plain / t_regex:.1f}x)")
print(f"beam width 100       {t_beam:7.2f} ms  ({t_beam / t_regex:.1f}x)")
print(f"same word as trie on {agree}/{len(mats)} matrices")
