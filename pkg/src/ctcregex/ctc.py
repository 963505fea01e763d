"""CTC forward/backward recursions, the CTC gradient and vocabulary decoding.

Tables are indexed ``[position in the extended word, frame]`` and hold
natural-log probabilities.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import NEG_INF, PosteriorMatrix, extend_word, path_log_prob
from .errors import NoFeasiblePathError, VocabularyError
from .results import Alignment, DecodeResult

MODES = ("sum", "max")
PRUNE_SLACK = 1e-9


def _combine(mode):
    if mode == "sum":
        return np.logaddexp
    if mode == "max":
        return np.maximum
    raise ValueError(f"mode must be one of {MODES}, got {mode!r}")


def _as_labels(word, matrix: PosteriorMatrix) -> tuple[int, ...]:
    if isinstance(word, str):
        return matrix.alphabet.encode(word)
    return tuple(int(i) for i in word)


def _skips(ext: np.ndarray) -> np.ndarray:
    # position s may be entered from s-2 iff it is a character differing from s-2
    skip = np.zeros(len(ext), dtype=bool)
    skip[2:] = ext[2:] != ext[:-2]
    return skip


@dataclass(frozen=True)
class ForwardTable:
    alpha: np.ndarray
    extended: tuple[int, ...]
    mode: str

    @property
    def logprob(self) -> float:
        last = self.alpha[:, -1]
        if len(last) == 1:
            return float(last[0])
        return float(_combine(self.mode)(last[-1], last[-2]))


@dataclass(frozen=True)
class BackwardTable:
    """``inclusive=False``: beta[s, t] scores frames t+1..T-1 given position s at t.
    ``inclusive=True``: the same but also including frame t's own emission."""

    beta: np.ndarray
    extended: tuple[int, ...]
    mode: str
    inclusive: bool


def forward_log(labels: Sequence[int], logy: np.ndarray, nac: int, mode: str = "sum") -> np.ndarray:
    """Forward table for a word given as label indices over a raw log-probability array."""
    comb = _combine(mode)
    ext = np.array(extend_word(labels, nac), dtype=np.intp)
    S, T = len(ext), logy.shape[0]
    skip = _skips(ext)
    alpha = np.full((S, T), NEG_INF)
    alpha[0, 0] = logy[0, ext[0]]
    if S > 1:
        alpha[1, 0] = logy[0, ext[1]]
    for t in range(1, T):
        prev = alpha[:, t - 1]
        acc = prev.copy()
        acc[1:] = comb(acc[1:], prev[:-1])
        acc[skip] = comb(acc[skip], prev[:-2][skip[2:]])
        alpha[:, t] = acc + logy[t, ext]
    return alpha


def backward_log(labels: Sequence[int], logy: np.ndarray, nac: int, mode: str = "sum",
                 inclusive: bool = False) -> np.ndarray:
    comb = _combine(mode)
    ext = np.array(extend_word(labels, nac), dtype=np.intp)
    S, T = len(ext), logy.shape[0]
    skip = _skips(ext)
    beta = np.full((S, T), NEG_INF)
    beta[-2:, T - 1] = logy[T - 1, ext[-2:]] if inclusive else 0.0
    for t in range(T - 2, -1, -1):
        nxt = beta[:, t + 1] if inclusive else beta[:, t + 1] + logy[t + 1, ext]
        acc = nxt.copy()
        acc[:-1] = comb(acc[:-1], nxt[1:])
        src = skip[2:]
        acc[:-2][src] = comb(acc[:-2][src], nxt[2:][src])
        beta[:, t] = acc + logy[t, ext] if inclusive else acc
    return beta


def extended_log_prob(labels: Sequence[int], logy: np.ndarray, nac: int, mode: str = "sum") -> float:
    alpha = forward_log(labels, logy, nac, mode)
    last = alpha[:, -1]
    if len(last) == 1:
        return float(last[0])
    return float(_combine(mode)(last[-1], last[-2]))


def forward(word, matrix: PosteriorMatrix, mode: str = "sum") -> ForwardTable:
    """Prefix log-probabilities of ``word`` (a string or label indices).

    Unreachable words are not an error: their table simply ends in ``-inf``.
    """
    labels = _as_labels(word, matrix)
    alpha = forward_log(labels, matrix.log_probs, matrix.nac_index, mode)
    return ForwardTable(alpha, extend_word(labels, matrix.nac_index), mode)


def backward(word, matrix: PosteriorMatrix, mode: str = "sum", inclusive: bool = False) -> BackwardTable:
    labels = _as_labels(word, matrix)
    beta = backward_log(labels, matrix.log_probs, matrix.nac_index, mode, inclusive)
    return BackwardTable(beta, extend_word(labels, matrix.nac_index), mode, inclusive)


def word_log_prob(word, matrix: PosteriorMatrix, mode: str = "sum") -> float:
    """ln p(word | X) in sum mode, or the best single path's log-prob in max mode."""
    return forward(word, matrix, mode).logprob


def ctc_gradient(word, matrix: PosteriorMatrix) -> np.ndarray:
    """dO/dy for O = -ln p(word | X), one entry per matrix cell."""
    labels = _as_labels(word, matrix)
    return _gradient(labels, matrix.log_probs, matrix.nac_index)


def _gradient(labels, logy, nac):
    fwd = forward_log(labels, logy, nac, "sum")
    bwd = backward_log(labels, logy, nac, "sum")
    ext = np.array(extend_word(labels, nac), dtype=np.intp)
    last = fwd[:, -1]
    logp = last[0] if len(last) == 1 else np.logaddexp(last[-1], last[-2])
    if logp == NEG_INF:
        raise NoFeasiblePathError("word cannot be emitted in this many frames (p = 0)")
    grad = np.zeros_like(logy)
    ab = fwd + bwd
    for lab in np.unique(ext):
        occ = np.logaddexp.reduce(ab[ext == lab], axis=0)
        grad[:, lab] = -np.exp(occ - logy[:, lab] - logp)
    return grad


def align(word, matrix: PosteriorMatrix) -> Alignment:
    """Most likely path collapsing to ``word``; ties prefer advancing over staying."""
    labels = _as_labels(word, matrix)
    logy = matrix.log_probs
    alpha = forward_log(labels, logy, matrix.nac_index, "max")
    ext = extend_word(labels, matrix.nac_index)
    S, T = alpha.shape
    if S == 1:
        s = 0
    else:
        s = S - 1 if alpha[S - 1, -1] >= alpha[S - 2, -1] else S - 2
    if alpha[s, -1] == NEG_INF:
        raise NoFeasiblePathError(f"word {word!r} cannot be emitted in {T} frames")
    states = [s]
    for t in range(T - 1, 0, -1):
        col = alpha[:, t - 1]
        cands = [s - 2] if s >= 2 and ext[s] != ext[s - 2] else []
        cands += [s - 1] if s >= 1 else []
        cands.append(s)
        s = max(cands, key=lambda k: col[k])  # first maximum wins
        states.append(s)
    states.reverse()
    path = tuple(ext[k] for k in states)
    spans = []
    for i in range(len(labels)):
        frames = [t for t, k in enumerate(states) if k == 2 * i + 1]
        spans.append((frames[0], frames[-1]))
    return Alignment(path, tuple(spans))


class _Node:
    __slots__ = ("label", "children", "word_index", "depth")

    def __init__(self, label, depth):
        self.label = label
        self.children = {}
        self.word_index = None
        self.depth = depth


class VocabularyTrie:
    """Prefix tree over a word list, reusable across matrices.

    Rows of the max-mode forward table are computed once per trie node, so
    words sharing a prefix share those rows.  Subtrees whose admissible bound
    falls below the best complete word are skipped.
    """

    def __init__(self, words: Sequence[str], alphabet):
        if len(words) == 0:
            raise VocabularyError("vocabulary is empty")
        self.alphabet = alphabet
        self.words = list(words)
        self.root = _Node(None, 0)
        for idx, w in enumerate(self.words):
            node = self.root
            for lab in alphabet.encode(w):
                child = node.children.get(lab)
                if child is None:
                    child = node.children[lab] = _Node(lab, node.depth + 1)
                node = child
            if node.word_index is None:
                node.word_index = idx
        self.n_nodes = self._count(self.root)

    def _count(self, node):
        return 1 + sum(self._count(c) for c in node.children.values())

    def decode(self, matrix: PosteriorMatrix, *, share_prefixes: bool = True, prune: bool = True,
               order: str = "sorted") -> DecodeResult:
        if order not in ("sorted", "bound"):
            raise ValueError("order must be 'sorted' or 'bound'")
        logy = matrix.log_probs
        nac = matrix.nac_index
        T = matrix.T
        # sufmax[t] = best possible score of frames t..T-1
        sufmax = np.concatenate([np.cumsum(logy.max(axis=1)[::-1])[::-1], [0.0]])
        cum = np.cumsum(logy, axis=0)
        ctx = _TrieContext(logy, cum, nac, T, sufmax[1:], prune)
        root_rows = (None, cum[:, nac].copy())

        if share_prefixes:
            ctx.walk(self.root, root_rows, order)
        else:
            for node, labels in self._terminals(self.root, ()):
                rows = root_rows
                prev = None
                for lab in labels:
                    rows = ctx.extend(rows, lab, prev)
                    prev = lab
                ctx.offer(node.word_index, rows)

        if ctx.best_index is None:
            raise NoFeasiblePathError("no vocabulary word can be emitted in this many frames")
        word = self.words[ctx.best_index]
        al = align(word, matrix)
        return DecodeResult(al.path, word, path_log_prob(al.path, matrix), "vocab",
                            matrix.alphabet, alignment=al,
                            stats={"rows": ctx.rows, "pruned": ctx.pruned})

    def _terminals(self, node, prefix):
        if node.word_index is not None:
            yield node, prefix
        for lab in sorted(node.children, key=self.alphabet.label):
            yield from self._terminals(node.children[lab], prefix + (lab,))


class _TrieContext:
    def __init__(self, logy, cum, nac, T, sufnext, prune):
        self.logy = logy
        self.cum = cum
        self.nac = nac
        self.T = T
        self.sufnext = sufnext
        self.prune = prune
        self.best = NEG_INF
        self.best_index = None
        self.rows = 0
        self.pruned = 0

    def _scan(self, label, init, feed):
        # alpha[t] = y[t] + max(alpha[t-1], feed[t-1]) as a running max of
        # (feed - cumulative emission), shifted back by the cumulative emission
        C = self.cum[:, label]
        D = np.empty(self.T)
        D[0] = init
        D[1:] = feed[:-1] - C[:-1]
        np.maximum.accumulate(D, out=D)
        self.rows += 1
        return C + D

    def extend(self, rows, label, prev_label):
        char_row, nac_row = rows
        feed = nac_row if char_row is None or label == prev_label else np.maximum(nac_row, char_row)
        init = 0.0 if char_row is None else NEG_INF
        new_char = self._scan(label, init, feed)
        new_nac = self._scan(self.nac, NEG_INF, new_char)
        return new_char, new_nac

    def bound(self, rows):
        return float(np.max(np.maximum(rows[0], rows[1]) + self.sufnext))

    def offer(self, index, rows):
        if index is None:
            return
        score = float(max(rows[0][-1], rows[1][-1]))
        if score == NEG_INF:
            return
        if score > self.best or (score == self.best and index < self.best_index):
            self.best = score
            self.best_index = index

    def walk(self, node, rows, order):
        kids = list(node.children.values())
        if order == "sorted":
            kids.sort(key=lambda n: n.label)
            for child in kids:
                self._visit(child, self.extend(rows, child.label, node.label), order)
        else:
            scored = []
            for child in kids:
                crow = self.extend(rows, child.label, node.label)
                scored.append((self.bound(crow), child, crow))
            scored.sort(key=lambda x: -x[0])
            for _, child, crow in scored:
                self._visit(child, crow, order)

    def _visit(self, node, rows, order):
        if self.prune and self.best_index is not None and self.bound(rows) < self.best - PRUNE_SLACK:
            self.pruned += 1
            return
        self.offer(node.word_index, rows)
        if node.children:
            self.walk(node, rows, order)


def decode_vocabulary(vocab: Sequence[str], matrix: PosteriorMatrix, **kwargs) -> DecodeResult:
    """Best vocabulary word under the max-path score; earlier words win exact ties."""
    return VocabularyTrie(vocab, matrix.alphabet).decode(matrix, **kwargs)
