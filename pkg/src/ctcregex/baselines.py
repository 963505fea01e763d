"""Reference decoders: A* search, beam search, greedy best path and
exhaustive path enumeration.

A search item is an automaton state plus a label prefix.  Repeating the
prefix's last label keeps the state (the repeated frame merges into the same
character); any other label follows the automaton.
"""

from __future__ import annotations

import heapq
import itertools
import re
from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np

from .automata import ExtendedNfa
from .core import NEG_INF, PosteriorMatrix, collapse_path
from .errors import NoFeasiblePathError, SearchLimitError
from .regex import to_python_regex
from .results import DecodeResult

ENUM_LIMIT = 10 ** 7


def _unwind(node):
    out = []
    while node is not None:
        out.append(node[0])
        node = node[1]
    out.reverse()
    return tuple(out)


def _word(path, alphabet):
    return "".join(alphabet.label(i) for i in collapse_path(path, alphabet.nac_index))


def suffix_max(logy: np.ndarray) -> list[float]:
    """suf[t] = sum over frames s >= t of max_l ln y[s, l]; suf[T] = 0."""
    best = logy.max(axis=1)
    suf = [0.0] * (len(best) + 1)
    for t in range(len(best) - 1, -1, -1):
        suf[t] = suf[t + 1] + float(best[t])
    return suf


def astar_decode(ext: ExtendedNfa, matrix: PosteriorMatrix, *,
                 max_expansions: int = 5_000_000) -> DecodeResult:
    """Exact best accepted path by best-first search with an admissible bound.

    The bound completes a prefix with the best label of every remaining
    frame.  Items are ordered by bound / length (a heuristic ordering only);
    exactness comes from discarding items whose bound falls below the best
    complete path found so far.
    """
    logy = matrix.log_probs.tolist()
    T = matrix.T
    L = matrix.alphabet.size
    suf = suffix_max(matrix.log_probs)
    delta = ext.delta
    finals = ext.finals
    tick = itertools.count()
    heap = []
    best = NEG_INF
    best_node = None
    expanded = pruned = 0

    def push(score, t, q, last, node):
        nonlocal best, best_node
        if t == T:
            if q in finals and score > best:
                best, best_node = score, node
            return
        bound = score + suf[t]
        if bound < best:
            return
        heapq.heappush(heap, (-bound / t, next(tick), score, t, q, last, node))

    row = logy[0]
    for a in range(L):
        for q2 in delta[ext.initial].get(a, ()):
            push(row[a], 1, q2, a, (a, None))
    while heap:
        _, _, score, t, q, last, node = heapq.heappop(heap)
        if score + suf[t] < best:
            pruned += 1
            continue
        expanded += 1
        if expanded > max_expansions:
            raise SearchLimitError(f"A* exceeded {max_expansions} expansions")
        row = logy[t]
        dq = delta[q]
        for a in range(L):
            if a == last:
                push(score + row[a], t + 1, q, a, (a, node))
            else:
                for q2 in dq.get(a, ()):
                    push(score + row[a], t + 1, q2, a, (a, node))
    if best_node is None:
        raise NoFeasiblePathError(f"no path of {T} frames collapses into the language")
    path = _unwind(best_node)
    return DecodeResult(path, _word(path, matrix.alphabet), best, "astar", matrix.alphabet,
                        stats={"expanded": expanded, "pruned": pruned})


def beam_decode(ext: ExtendedNfa, matrix: PosteriorMatrix, width: int) -> DecodeResult:
    """Keep the ``width`` most likely prefixes per frame.

    The answer is the best prefix of the last frame's beam that ends in a
    final state; if there is none the result has ``feasible=False``.  Equal
    scores keep generation order (earlier beam rank, then lower label).
    """
    if width < 1:
        raise ValueError("beam width must be at least 1")
    logy = matrix.log_probs.tolist()
    T = matrix.T
    L = matrix.alphabet.size
    delta = ext.delta
    counts = []

    row = logy[0]
    kids = [(row[a], q2, a, (a, None)) for a in range(L) for q2 in delta[ext.initial].get(a, ())]
    counts.append(len(kids))
    beam = _select(kids, width)
    for t in range(1, T):
        row = logy[t]
        kids = []
        add = kids.append
        for score, q, last, node in beam:
            dq = delta[q]
            for a in range(L):
                if a == last:
                    add((score + row[a], q, a, (a, node)))
                else:
                    for q2 in dq.get(a, ()):
                        add((score + row[a], q2, a, (a, node)))
        counts.append(len(kids))
        beam = _select(kids, width)
    stats = {"combinations": sum(counts), "combinations_per_step": counts}
    for score, q, _, node in beam:
        if q in ext.finals:
            path = _unwind(node)
            return DecodeResult(path, _word(path, matrix.alphabet), score, "beam",
                                matrix.alphabet, stats=stats)
    return DecodeResult.infeasible("beam", matrix.alphabet, stats)


def _select(items, width):
    if len(items) <= width:
        return sorted(items, key=lambda x: -x[0])
    scores = np.fromiter((x[0] for x in items), dtype=np.float64, count=len(items))
    keep = np.argsort(-scores, kind="stable")[:width]
    return [items[i] for i in keep]


def greedy_best_path(matrix: PosteriorMatrix) -> tuple[int, ...]:
    """Per-frame most likely label; ties go to the lower label index."""
    return tuple(int(i) for i in np.argmax(matrix.probs, axis=1))


def greedy_decode(matrix: PosteriorMatrix, ext: Optional[ExtendedNfa] = None) -> DecodeResult:
    path = greedy_best_path(matrix)
    logy = matrix.log_probs
    score = 0.0
    for t, lab in enumerate(path):
        score += float(logy[t, lab])
    feasible = ext is None or ext.accepts_path(path)
    return DecodeResult(path, _word(path, matrix.alphabet), score, "greedy", matrix.alphabet,
                        feasible=feasible)


@dataclass(frozen=True)
class Enumeration:
    path: Optional[tuple[int, ...]]
    word: Optional[str]
    logprob: float
    log_sum: Optional[float]
    n_paths: int
    n_accepted: int


def _acceptor(accept, alphabet) -> Callable[[str], bool]:
    if isinstance(accept, ExtendedNfa):
        return accept.accepts_word
    if isinstance(accept, str):
        compiled = re.compile(to_python_regex(accept), re.DOTALL)
        return lambda w: compiled.fullmatch(w) is not None
    if isinstance(accept, re.Pattern):
        return lambda w: accept.fullmatch(w) is not None
    return accept


def enumerate_all_paths(matrix: PosteriorMatrix, accept: Union[ExtendedNfa, str, Callable],
                        *, want_sum: bool = False, limit: int = ENUM_LIMIT,
                        chunk: int = 1 << 18) -> Enumeration:
    """Score every label path and keep those whose collapsed word is accepted.

    ``accept`` is an automaton, a pattern in this package's syntax (matched with
    Python's ``re`` as an independent reference), or a predicate on words.
    Scores are accumulated frame by frame, exactly like ``path_log_prob``.
    Among equal scores the lexicographically smallest path wins.
    """
    L = matrix.alphabet.size
    T = matrix.T
    total = L ** T
    if total > limit:
        raise SearchLimitError(f"{L}^{T} = {total} paths exceeds the limit of {limit}")
    ok = _acceptor(accept, matrix.alphabet)
    logy = matrix.log_probs
    nac = matrix.nac_index
    base = L + 1
    powers = L ** np.arange(T - 1, -1, -1, dtype=np.int64)
    verdict = {}
    best_score, best_idx = NEG_INF, -1
    sums = []
    n_acc = 0
    for start in range(0, total, chunk):
        idx = np.arange(start, min(total, start + chunk), dtype=np.int64)
        paths = (idx[:, None] // powers[None, :]) % L
        score = np.zeros(len(idx))
        code = np.zeros(len(idx), dtype=np.int64)
        prev = np.full(len(idx), -1, dtype=np.int64)
        for t in range(T):
            lab = paths[:, t]
            score += logy[t, lab]
            keep = (lab != prev) & (lab != nac)
            code = np.where(keep, code * base + lab + 1, code)
            prev = lab
        uniq, inv = np.unique(code, return_inverse=True)
        good = np.array([_verdict(int(c), base, matrix.alphabet, ok, verdict) for c in uniq], dtype=bool)
        mask = good[inv]
        if not mask.any():
            continue
        n_acc += int(mask.sum())
        sc = np.where(mask, score, NEG_INF)
        i = int(np.argmax(sc))
        if sc[i] > best_score:
            best_score, best_idx = float(sc[i]), int(idx[i])
        if want_sum:
            sums.append(np.logaddexp.reduce(score[mask]))
    log_sum = float(np.logaddexp.reduce(sums)) if want_sum and sums else (NEG_INF if want_sum else None)
    if best_idx < 0:
        return Enumeration(None, None, NEG_INF, log_sum, total, 0)
    path = tuple(int(x) for x in (best_idx // powers) % L)
    return Enumeration(path, _word(path, matrix.alphabet), best_score, log_sum, total, n_acc)


def decode_word_code(code: int, base: int, alphabet) -> str:
    chars = []
    while code:
        code, r = divmod(code, base)
        chars.append(alphabet.label(r - 1))
    return "".join(reversed(chars))


def _verdict(code, base, alphabet, ok, cache):
    if code not in cache:
        cache[code] = bool(ok(decode_word_code(code, base, alphabet)))
    return cache[code]
