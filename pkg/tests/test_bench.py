import itertools

from ctcregex.automata import compile_pattern
from ctcregex.bench import REPORT_HEADER, reference_decode, run_bench
from ctcregex.ctc import VocabularyTrie
from ctcregex.decoder import decode
from ctcregex.synth import DIGITS, digit_matrices

KNOBS = dict(p_spike=0.4, spike_jitter=0.2, p_nac=0.5, nac_jitter=0.2, concentration=0.2)


def _counts(report):
    return {m: (s.mismatches, s.infeasible, len(s.seconds)) for m, s in report.methods.items()}


def test_bench_counts_and_determinism():
    ext = compile_pattern("[0-9]{3,5}", DIGITS)
    ms = [p.matrix for p in digit_matrices(4, 30, seed=1, **KNOBS)]
    vocab = ["".join(p) for k in (3, 4, 5) for p in itertools.product("0123456789", repeat=k)]
    trie = VocabularyTrie(vocab, DIGITS)
    a = run_bench(ms, ext, ["regex", "vocab", "beam", "greedy"], trie=trie)
    b = run_bench(ms, ext, ["regex", "vocab", "beam", "greedy"], trie=trie)
    assert _counts(a) == _counts(b)
    assert a.methods["regex"].mismatches == 0
    assert a.methods["vocab"].mismatches == 0
    lines = a.to_tsv().splitlines()
    assert lines[0].split("\t") == list(REPORT_HEADER)
    assert [l.split("\t")[0] for l in lines[1:]] == ["regex", "vocab", "beam", "greedy"]
    assert float(lines[1].split("\t")[3]) <= 66


def test_exact_and_approx_agree_on_condition_data():
    ext = compile_pattern("[0-9]{3,5}", DIGITS)
    ms = [p.matrix for p in digit_matrices(4, 30, seed=2, **KNOBS)]
    exact = run_bench(ms, ext, ["regex"], cont="exact")
    approx = run_bench(ms, ext, ["regex"], cont="approx")
    assert exact.methods["regex"].mismatches == approx.methods["regex"].mismatches == 0
    for m in ms:
        assert reference_decode(ext, m, astar_budget=1).path == decode(ext, m, "exact").path
