import itertools
import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ctcregex.automata import compile_pattern
from ctcregex.baselines import enumerate_all_paths
from ctcregex.core import NEG_INF, LabelAlphabet, PosteriorMatrix, path_log_prob
from ctcregex.ctc import VocabularyTrie
from ctcregex.decoder import (CONT, _best_two, app_scores, cont_scores, decode,
                              precompute_top_labels, schedule_arcs)
from ctcregex.errors import AlphabetError, CycleOrderError, NoFeasiblePathError
from ctcregex.synth import DIGITS, GeneratorSpec, digit_matrices, generate, max_run, nac_in_top3

from conftest import ABCD, POOL, random_matrix

CAT = LabelAlphabet(tuple("abct"), 0)


def spiky(alphabet, frames, p=0.9):
    y = np.full((len(frames), alphabet.size), (1 - p) / (alphabet.size - 1))
    for t, ch in enumerate(frames):
        y[t, alphabet.index(ch)] = p
    return PosteriorMatrix(y, alphabet)


# ---- examples ---------------------------------------------------------------

def test_single_frame_single_arc():
    ab = LabelAlphabet(("a",), 0)
    res = decode(compile_pattern("a", ab), PosteriorMatrix([[0.4, 0.6]], ab))
    assert res.path == (1,) and res.word == "a" and res.logprob == math.log(0.6)


def test_cat_against_enumeration():
    m = spiky(CAT, ["<nac>", "c", "<nac>", "a", "a", "t", "<nac>"], p=0.7)
    for mode in ("approx", "top2", "exact"):
        res = decode(compile_pattern("(c|b)at", CAT), m, mode)
        oracle = enumerate_all_paths(m, lambda w: w in ("cat", "bat"))
        assert res.word == "cat"
        assert res.path == oracle.path and res.logprob == oracle.logprob


def test_digit_automaton_matches_vocabulary_decoding():
    ext = compile_pattern("[0-9]{3,5}", DIGITS)
    vocab = ["".join(p) for k in (3, 4, 5) for p in itertools.product("0123456789", repeat=k)]
    trie = VocabularyTrie(vocab, DIGITS)
    for planted in digit_matrices(4, 15, seed=11):
        res = decode(ext, planted.matrix)
        ref = trie.decode(planted.matrix, order="bound")
        assert res.path == ref.path and res.word == planted.text
        assert res.logprob == pytest.approx(ref.logprob, abs=1e-9)


# ---- reference-form helpers -----------------------------------------------

TOP = [(1, -0.1), (2, -0.5), (3, -1.0)]


def test_app_case_1_unrestricted():
    app1, app2 = app_scores([(0, [(-1.0, 5), (-2.0, 6)])], TOP)
    assert app1 == (-1.0 - 0.1, 1, 0, 0)
    assert app2 == (-1.0 - 0.5, 2, 0, 0)


def test_app_case_2_first_label_forbidden():
    app1, _ = app_scores([(0, [(-1.0, 1), (-2.0, 2)])], TOP)
    assert app1[0] == max(-1.0 - 0.5, -2.0 - 0.1) and app1[1] == 2
    app1, _ = app_scores([(0, [(-1.0, 1), (-1.1, 2)])], TOP)
    assert app1[0] == pytest.approx(max(-1.0 - 0.5, -1.1 - 0.1)) and app1[1] == 1 and app1[3] == 1


def test_app_case_2b_second_rank():
    app1, app2 = app_scores([(0, [(-1.0, 1), (-2.0, 2)])], TOP)
    assert app1[1] == 2  # ending label of app1 is the second most likely label
    assert app2[0] == max(-2.0 - 0.1, -1.0 - 1.0) and app2[1] == 3


def test_app_across_predecessors_and_impossible_ranks():
    preds = [(3, [(-5.0, 1), (NEG_INF, None)]), (1, [(-0.5, 2)])]
    app1, app2 = app_scores(preds, TOP)
    assert app1 == (-0.6, 1, 1, 0)
    assert app2 == (-1.5, 3, 1, 0)
    assert app_scores([], TOP) == (None, None)


def test_cont_examples():
    row = np.log([0.1, 0.6, 0.2, 0.05, 0.05])
    one, two = cont_scores([(-1.0, 1)], row, [1], "approx")
    assert one == (-1.0 + row[1], 1, 0) and two is None
    assert cont_scores([(-1.0, 1)], row, [1], "exact") == (one, None)
    # critical arc: the ending label is no longer among the three most likely
    prev = [(-1.0, 4), (-3.0, 2)]
    approx = cont_scores(prev, row, [1, 2, 0], "approx")
    exact = cont_scores(prev, row, [1, 2, 0], "exact")
    assert approx == ((-3.0 + row[2], 2, 1), None)
    assert exact == ((-1.0 + row[4], 4, 0), (-3.0 + row[2], 2, 1))


def test_top_labels_examples():
    ab = LabelAlphabet(tuple("ab"), 0)
    ext = compile_pattern("a[ab]", ab)
    m = PosteriorMatrix([[0.2, 0.3, 0.5], [0.4, 0.4, 0.2]], ab)
    top = precompute_top_labels(ext, m)
    for arc, per_t in zip(ext.arcs, top):
        if arc.labels == {0}:
            assert per_t == [[0], [0]]
        elif arc.labels == {1}:
            assert per_t == [[1], [1]]
        else:
            assert per_t == [[2, 1], [1, 2]]
    ext = compile_pattern("[0-9]", DIGITS)
    m = digit_matrices(1, 1, seed=0)[0].matrix
    digit_arc = next(i for i, a in enumerate(ext.arcs) if len(a.labels) == 10)
    top = precompute_top_labels(ext, m)[digit_arc]
    for t in range(m.T):
        expect = sorted(range(1, 11), key=lambda l: (-m.probs[t, l], l))[:3]
        assert top[t] == expect


# ---- scheduling -------------------------------------------------------------

def _position(units):
    return {e: i for i, u in enumerate(units) for e in u}


def test_schedule_respects_dependencies():
    for pattern, ab in [("cat", CAT), ("[0-9]{3,5}", DIGITS), ("a*b", ABCD), (".*a.*", ABCD)]:
        ext = compile_pattern(pattern, ab)
        units = schedule_arcs(ext)
        pos = _position(units)
        assert sorted(pos) == list(range(len(ext.arcs)))
        for e, arc in enumerate(ext.arcs):
            for d in ext.incoming[arc.src]:
                assert pos[d] < pos[e] or pos[d] == pos[e]
    chain = compile_pattern("cat", CAT)
    char_units = [u for u in schedule_arcs(chain) if chain.arcs[u[0]].labels != {0}]
    assert [chain.alphabet.label(min(chain.arcs[u[0]].labels)) for u in char_units] == list("ccaatt")


def test_star_is_a_fused_unit():
    ext = compile_pattern("a*", ABCD)
    fused = [u for u in schedule_arcs(ext) if len(u) > 1]
    assert len(fused) == 1
    with pytest.raises(CycleOrderError):
        schedule_arcs(compile_pattern("(ab)*", ABCD))
    with pytest.raises(CycleOrderError):
        decode(compile_pattern("(ab)*", ABCD), random_matrix(np.random.default_rng(0), 3))


# ---- errors and degenerate languages -----------------------------------------

def test_errors():
    m = random_matrix(np.random.default_rng(0), 2)
    with pytest.raises(NoFeasiblePathError):
        decode(compile_pattern("aaa", ABCD), m)
    with pytest.raises(NoFeasiblePathError):
        decode(compile_pattern("aa", ABCD), m)  # needs a separating NaC
    with pytest.raises(AlphabetError):
        decode(compile_pattern("a", CAT), m)
    with pytest.raises(ValueError):
        decode(compile_pattern("a", ABCD), m, "fast")


def test_empty_word_language():
    m = random_matrix(np.random.default_rng(1), 4)
    res = decode(compile_pattern("", ABCD), m)
    assert res.word == "" and res.path == (0, 0, 0, 0)
    assert res.logprob == path_log_prob(res.path, m)
    res = decode(compile_pattern("a?", ABCD), spiky(ABCD, ["<nac>"] * 3))
    assert res.word == ""


# ---- capturing groups -------------------------------------------------------

SP = LabelAlphabet(tuple(" (act"), 0)


def test_pre_group_captures_the_separator():
    m = spiky(SP, ["<nac>", " ", "<nac>", "c", "a", "t", "<nac>"])
    res = decode(compile_pattern("(?<pre>[ (])?cat", SP), m)
    assert res.word == " cat"
    (pre,) = res.groups
    assert (pre.name, pre.start, pre.end, pre.text) == ("pre", 1, 1, " ")
    assert pre.logprob == math.log(0.9)
    assert pre.to_record() == {"name": "pre", "start": 2, "end": 2, "text": " ", "logprob": math.log(0.9)}
    wide = decode(compile_pattern("(?<pre>[ (])?cat", SP), m, trim_nac=False).groups[0]
    assert (wide.start, wide.end) == (0, 2)


def test_skipped_group_is_absent():
    m = spiky(SP, ["c", "a", "t", "<nac>"])
    res = decode(compile_pattern("(?<pre>[ (])?cat", SP), m)
    assert res.word == "cat" and res.groups == []


def test_whole_pattern_group_and_repeated_captures():
    m = spiky(SP, ["<nac>", "c", "<nac>", "a", "t", "<nac>", "<nac>"])
    (g,) = decode(compile_pattern("(cat)", SP), m).groups
    assert (g.start, g.end, g.text) == (1, 4, "cat")
    assert g.labels == tuple(SP.index(c) for c in ["c", "<nac>", "a", "t"])
    caps = decode(compile_pattern("(?<x>[act])*", SP), m).groups
    assert [(c.text, c.start) for c in caps] == [("c", 1), ("a", 3), ("t", 4)]


# ---- properties -------------------------------------------------------------

instances = st.tuples(st.sampled_from(POOL), st.integers(1, 6), st.integers(0, 2 ** 32 - 1))


def _check_table(ext, m, table, mode):
    T = m.T
    top = precompute_top_labels(ext, m)
    for e, arc in enumerate(ext.arcs):
        for t in range(T):
            cell = table.cell(e, t)
            assert len({lab for _, lab in cell}) == len(cell)
            assert all(lab in arc.labels for _, lab in cell)
            assert all(a >= b for (a, _), (b, _) in zip(cell, cell[1:]))
            if mode != "approx" or t == 0:
                continue
            row = m.log_probs[t]
            gam = [(l, float(row[l])) for l in top[e][t]]
            preds = [(d, table.cell(d, t - 1)) for d in ext.incoming[arc.src]]
            app = app_scores(preds, gam)
            cont = cont_scores(table.cell(e, t - 1), row, top[e][t], "approx")
            cands = [c for c in app if c] + [(c[0], c[1], e, c[2]) for c in cont if c]
            expect = [c for c in _best_two(cands) if c]
            assert [s for s, _ in cell] == pytest.approx([c[0] for c in expect], abs=1e-12)


@given(instances)
def test_exact_mode_equals_enumeration(inst):
    pattern, T, seed = inst
    m = random_matrix(np.random.default_rng(seed), T)
    ext = compile_pattern(pattern, ABCD)
    oracle = enumerate_all_paths(m, pattern)
    if oracle.path is None:
        with pytest.raises(NoFeasiblePathError):
            decode(ext, m, "exact")
        return
    res = decode(ext, m, "exact")
    assert res.path == oracle.path and res.word == oracle.word
    assert res.logprob == oracle.logprob


@given(instances)
def test_table_and_path_invariants(inst):
    pattern, T, seed = inst
    m = random_matrix(np.random.default_rng(seed), T, concentration=0.3)
    ext = compile_pattern(pattern, ABCD)
    try:
        exact = decode(ext, m, "exact")
    except NoFeasiblePathError:
        return
    for mode in ("approx", "top2", "exact"):
        try:
            res, table, frames = decode(ext, m, mode, return_table=True)
        except NoFeasiblePathError:
            assert mode != "exact"
            continue
        assert res.logprob <= exact.logprob
        assert res.logprob == path_log_prob(res.path, m)
        assert ext.accepts_path(res.path) and ext.base.accepts_word(res.word)
        _check_table(ext, m, table, mode)
        # two consecutive frames with the same character label stay on one arc
        for f0, f1 in zip(frames, frames[1:]):
            if f0.label == f1.label:
                assert f1.kind == CONT and f0.arc == f1.arc
        for g in res.groups:
            assert 0 <= g.start <= g.end < m.T
            assert g.labels == res.path[g.start:g.end + 1]
            assert g.logprob == pytest.approx(path_log_prob(g.labels, PosteriorMatrix(
                m.probs[g.start:g.end + 1], m.alphabet)), abs=1e-12)
        # combination count bounded by the automaton size, independent of the alphabet
        bound = 3 * len(ext.arcs) * T if mode == "approx" else ABCD.size * len(ext.arcs) * T
        assert res.stats["combinations"] <= bound


APPROX_PATTERNS = ["[a-f]{2,4}", "[abcd]+e?", "(?<x>[a-e])[a-f]*", "[a-d]*f[b-f]*", ".{3}",
                    "a[bcd]{1,3}|[cdef]+", "(?:.*(?<p>[ab]))?(?<k>cd)(?:(?<q>[ef]).*)?"]
AF = LabelAlphabet(tuple("abcdef"), 0)


@given(st.sampled_from(APPROX_PATTERNS), st.text(alphabet="abcdef", min_size=1, max_size=5),
       st.floats(0.3, 0.9), st.floats(0.3, 0.9), st.integers(0, 2 ** 32 - 1))
def test_approximation_exact_under_top3_conditions(pattern, text, p_spike, p_nac, seed):
    m = generate(GeneratorSpec(text, p_spike=p_spike, spike_jitter=0.1, p_nac=p_nac,
                               concentration=0.3, seed=seed), AF).matrix
    ext = compile_pattern(pattern, AF)
    try:
        exact = decode(ext, m, "exact")
    except NoFeasiblePathError:
        return
    approx = decode(ext, m, "approx")
    assert approx.logprob <= exact.logprob
    assert nac_in_top3(m)
    if max_run(exact.path, m.nac_index) <= 2:
        assert approx.path == exact.path and approx.logprob == exact.logprob


def test_small_automaton_combination_count():
    ext = compile_pattern("a", ABCD)
    res = decode(ext, random_matrix(np.random.default_rng(0), 8))
    assert max(res.stats["combinations_per_step"]) <= 8


def test_concurrent_decodes_share_one_automaton():
    ext = compile_pattern("[0-9]{3,5}", DIGITS)
    ms = [p.matrix for p in digit_matrices(5, 40, seed=3)]
    serial = [decode(ext, m).path for m in ms]
    with ThreadPoolExecutor(4) as pool:
        parallel = list(pool.map(lambda m: decode(ext, m).path, ms))
    assert parallel == serial
