"""Automaton pipeline: Thompson construction, ε-elimination, arc aggregation,
NaC extension, DAFSA vocabularies and structural checks.

Labels on arcs are column indices of the alphabet.  Every arc also carries
the ids of the capturing groups whose sub-pattern produced it (``groups``)
and the subset of those it enters afresh (``opens``).
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import networkx as nx

from . import regex as rx
from .core import LabelAlphabet, collapse_path
from .errors import CycleOrderError, VocabularyError


@dataclass(frozen=True)
class Arc:
    src: int
    dst: int
    labels: frozenset
    groups: frozenset = frozenset()
    opens: frozenset = frozenset()


@dataclass(frozen=True)
class Epsilon:
    src: int
    dst: int
    enters: Optional[int] = None  # group id whose sub-pattern this move enters


@dataclass(frozen=True)
class Nfa:
    n_states: int
    initial: int
    finals: frozenset
    arcs: tuple
    epsilons: tuple = ()
    alphabet: Optional[LabelAlphabet] = None

    def step(self, states: Iterable[int], label: int) -> frozenset:
        return frozenset(a.dst for a in self.arcs if a.src in states and label in a.labels)

    def closure(self, states: Iterable[int]) -> frozenset:
        seen = set(states)
        stack = list(seen)
        while stack:
            s = stack.pop()
            for e in self.epsilons:
                if e.src == s and e.dst not in seen:
                    seen.add(e.dst)
                    stack.append(e.dst)
        return frozenset(seen)

    def accepts(self, labels: Sequence[int]) -> bool:
        cur = self.closure([self.initial])
        for lab in labels:
            cur = self.closure(self.step(cur, lab))
            if not cur:
                return False
        return bool(cur & self.finals)

    def accepts_word(self, word: str) -> bool:
        return self.accepts(self.alphabet.encode(word))


class _Builder:
    def __init__(self, alphabet):
        self.alphabet = alphabet
        self.n = 0
        self.arcs = []
        self.eps = []

    def state(self):
        self.n += 1
        return self.n - 1

    def build(self, node, groups):
        if isinstance(node, rx.Empty):
            s = self.state()
            return s, s
        if isinstance(node, (rx.Literal, rx.CharClass, rx.AnyChar)):
            s, e = self.state(), self.state()
            labels = frozenset(self.alphabet.index(c) for c in rx.class_members(node, self.alphabet))
            self.arcs.append(Arc(s, e, labels, groups))
            return s, e
        if isinstance(node, rx.Concat):
            frags = [self.build(c, groups) for c in node.children]
            for (_, e1), (s2, _) in zip(frags, frags[1:]):
                self.eps.append(Epsilon(e1, s2))
            return frags[0][0], frags[-1][1]
        if isinstance(node, rx.Alternation):
            s = self.state()
            frags = [self.build(c, groups) for c in node.children]
            e = self.state()
            for cs, ce in frags:
                self.eps.append(Epsilon(s, cs))
                self.eps.append(Epsilon(ce, e))
            return s, e
        if isinstance(node, rx.Star):
            s = self.state()
            cs, ce = self.build(node.child, groups)
            e = self.state()
            self.eps += [Epsilon(s, cs), Epsilon(s, e), Epsilon(ce, cs), Epsilon(ce, e)]
            return s, e
        if isinstance(node, rx.Group):
            s = self.state()
            cs, ce = self.build(node.child, groups | {node.gid})
            self.eps.append(Epsilon(s, cs, node.gid))
            return s, ce
        raise TypeError(f"thompson expects a desugared AST, got {type(node).__name__}")


def thompson(ast, alphabet: LabelAlphabet) -> Nfa:
    """Thompson NFA of a desugared AST; class nodes become single multi-label arcs."""
    b = _Builder(alphabet)
    s, e = b.build(ast, frozenset())
    return Nfa(b.n, s, frozenset([e]), tuple(b.arcs), tuple(b.eps), alphabet)


def _must_enter(nfa: Nfa, start: int, eps_out) -> dict:
    """ε-closure of ``start`` mapped to the groups entered on every ε-path there."""
    entered = {start: frozenset()}
    stack = [start]
    while stack:
        u = stack.pop()
        for e in eps_out[u]:
            cand = entered[u] | ({e.enters} if e.enters is not None else frozenset())
            old = entered.get(e.dst)
            new = cand if old is None else old & cand
            if new != old:
                entered[e.dst] = new
                stack.append(e.dst)
    return entered


def _trim(n, initial, finals, arcs, alphabet):
    fwd = defaultdict(set)
    bwd = defaultdict(set)
    for a in arcs:
        fwd[a.src].add(a.dst)
        bwd[a.dst].add(a.src)

    def reach(seeds, adj):
        seen = set(seeds)
        stack = list(seeds)
        while stack:
            u = stack.pop()
            for v in adj[u]:
                if v not in seen:
                    seen.add(v)
                    stack.append(v)
        return seen

    keep = reach([initial], fwd) & reach(finals, bwd)
    keep.add(initial)
    order = [initial] + sorted(keep - {initial})
    ren = {q: i for i, q in enumerate(order)}
    new_arcs = sorted(
        (Arc(ren[a.src], ren[a.dst], a.labels, a.groups, a.opens)
         for a in arcs if a.src in keep and a.dst in keep),
        key=lambda a: (a.src, a.dst, sorted(a.labels)))
    return Nfa(len(order), 0, frozenset(ren[f] for f in finals if f in keep), tuple(new_arcs),
               (), alphabet)


def eliminate_epsilon(nfa: Nfa) -> Nfa:
    """Replace ε-moves by the character arcs they lead to.

    Kept states are the initial state and every target of a character arc;
    states are then trimmed and renumbered (initial first, then by old id).
    """
    eps_out = defaultdict(list)
    for e in nfa.epsilons:
        eps_out[e.src].append(e)
    arcs_out = defaultdict(list)
    for a in nfa.arcs:
        arcs_out[a.src].append(a)
    kept = [nfa.initial] + sorted({a.dst for a in nfa.arcs} - {nfa.initial})
    finals = set()
    new_arcs = []
    for p in kept:
        entered = _must_enter(nfa, p, eps_out)
        if nfa.finals & entered.keys():
            finals.add(p)
        for s in sorted(entered):
            for a in arcs_out[s]:
                new_arcs.append(Arc(p, a.dst, a.labels, a.groups, entered[s] & a.groups))
    return _trim(nfa.n_states, nfa.initial, finals, _dedupe(new_arcs), nfa.alphabet)


def _dedupe(arcs):
    seen = {}
    for a in arcs:
        key = (a.src, a.dst, a.labels)
        if key in seen:
            b = seen[key]
            seen[key] = Arc(a.src, a.dst, a.labels, a.groups | b.groups, a.opens | b.opens)
        else:
            seen[key] = a
    return list(seen.values())


def aggregate_arcs(nfa: Nfa) -> Nfa:
    """Merge arcs sharing both endpoints into one arc reading the union of labels."""
    merged = {}
    for a in nfa.arcs:
        key = (a.src, a.dst)
        b = merged.get(key)
        merged[key] = a if b is None else Arc(a.src, a.dst, a.labels | b.labels,
                                               a.groups | b.groups, a.opens | b.opens)
    arcs = tuple(merged[k] for k in sorted(merged))
    return Nfa(nfa.n_states, nfa.initial, nfa.finals, arcs, nfa.epsilons, nfa.alphabet)


@dataclass
class ExtendedNfa:
    """ε-free automaton over Σ' with a NaC twin ``q + n`` for every base state ``q``.

    Arc ids are positions in ``arcs`` (sorted by endpoints) and fix the
    decoders' tie-breaking.
    """

    n_states: int
    initial: int
    finals: frozenset
    arcs: tuple
    alphabet: LabelAlphabet
    base: Nfa
    groups: tuple = ()
    pattern: Optional[str] = None
    incoming: list = field(init=False)
    outgoing: list = field(init=False)
    delta: list = field(init=False)

    def __post_init__(self):
        self.incoming = [[] for _ in range(self.n_states)]
        self.outgoing = [[] for _ in range(self.n_states)]
        self.delta = [defaultdict(list) for _ in range(self.n_states)]
        for i, a in enumerate(self.arcs):
            self.outgoing[a.src].append(i)
            self.incoming[a.dst].append(i)
            for lab in sorted(a.labels):
                self.delta[a.src][lab].append(a.dst)
        self.delta = [{k: tuple(sorted(v)) for k, v in d.items()} for d in self.delta]

    def predecessors(self, q: int) -> tuple[int, ...]:
        """P(q): states with an arc into ``q``."""
        return tuple(sorted({self.arcs[i].src for i in self.incoming[q]}))

    def group_name(self, gid: int) -> Optional[str]:
        return self.groups[gid].name if gid < len(self.groups) else None

    def accepts_labels(self, labels: Sequence[int]) -> bool:
        """Plain NFA acceptance of a label sequence (no run merging)."""
        cur = {self.initial}
        for lab in labels:
            cur = {d for q in cur for d in self.delta[q].get(lab, ())}
            if not cur:
                return False
        return bool(cur & self.finals)

    def accepts_path(self, path: Sequence[int]) -> bool:
        """Acceptance of a frame path, where repeating the previous label stays put."""
        cur = {self.initial}
        prev = None
        for lab in path:
            if lab != prev:
                cur = {d for q in cur for d in self.delta[q].get(lab, ())}
                if not cur:
                    return False
            prev = lab
        return bool(cur & self.finals)

    def accepts_word(self, word: str) -> bool:
        return self.base.accepts(self.alphabet.encode(word))


def extend(nfa: Nfa, groups=(), pattern=None) -> ExtendedNfa:
    """Give every state q a twin q' reached by NaC that copies q's character arcs."""
    n = nfa.n_states
    nac = nfa.alphabet.nac_index
    arcs = list(nfa.arcs)
    for a in nfa.arcs:
        arcs.append(Arc(a.src + n, a.dst, a.labels, a.groups, a.opens))
    for q in range(n):
        arcs.append(Arc(q, q + n, frozenset([nac])))
    arcs.sort(key=lambda a: (a.src, a.dst))
    finals = frozenset(nfa.finals) | frozenset(f + n for f in nfa.finals)
    return ExtendedNfa(2 * n, nfa.initial, finals, tuple(arcs), nfa.alphabet, nfa, tuple(groups), pattern)


def compile_pattern(pattern: str, alphabet: LabelAlphabet, aggregate: bool = True) -> ExtendedNfa:
    """parse → desugar → Thompson → ε-elimination → aggregation → extension."""
    ast, groups = rx.parse(pattern, alphabet)
    nfa = eliminate_epsilon(thompson(rx.desugar(ast), alphabet))
    if aggregate:
        nfa = aggregate_arcs(nfa)
    return extend(nfa, groups, pattern)


def check_cycle_order(aut) -> list[tuple[int, ...]]:
    """Base-automaton cycles through more than one state (self-loops are fine)."""
    base = aut.base if isinstance(aut, ExtendedNfa) else aut
    g = nx.DiGraph()
    g.add_nodes_from(range(base.n_states))
    g.add_edges_from((a.src, a.dst) for a in base.arcs)
    bad = [tuple(sorted(c)) for c in nx.strongly_connected_components(g) if len(c) > 1]
    return sorted(bad)


def require_cycle_order(aut) -> None:
    bad = check_cycle_order(aut)
    if bad:
        raise CycleOrderError(bad)


def build_dafsa(words: Sequence[str], alphabet: LabelAlphabet) -> Nfa:
    """Minimal acyclic DFA of a sorted, duplicate-free word list (incremental construction)."""
    for w1, w2 in zip(words, words[1:]):
        if w1 == w2:
            raise VocabularyError(f"duplicate word {w1!r}")
        if w1 > w2:
            raise VocabularyError(f"words not sorted: {w1!r} before {w2!r}")
    trans = [dict()]
    final = [False]
    register = {}

    def signature(q):
        return final[q], tuple(sorted(trans[q].items()))

    def replace_or_register(q):
        ch = max(trans[q])
        child = trans[q][ch]
        if trans[child]:
            replace_or_register(child)
        sig = signature(child)
        if sig in register:
            trans[q][ch] = register[sig]
        else:
            register[sig] = child

    for w in words:
        q = 0
        i = 0
        while i < len(w) and w[i] in trans[q]:
            q = trans[q][w[i]]
            i += 1
        if trans[q]:
            replace_or_register(q)
        for ch in w[i:]:
            alphabet.index(ch)
            trans.append(dict())
            final.append(False)
            trans[q][ch] = len(trans) - 1
            q = len(trans) - 1
        final[q] = True
    if trans[0]:
        replace_or_register(0)

    # renumber reachable states in breadth-first order, children by character
    order = [0]
    ren = {0: 0}
    for q in order:
        for ch in sorted(trans[q]):
            d = trans[q][ch]
            if d not in ren:
                ren[d] = len(order)
                order.append(d)
    arcs = [Arc(ren[q], ren[d], frozenset([alphabet.index(ch)]))
            for q in order for ch, d in sorted(trans[q].items())]
    arcs.sort(key=lambda a: (a.src, a.dst, sorted(a.labels)))
    return Nfa(len(order), 0, frozenset(ren[q] for q in order if final[q]), tuple(arcs), (), alphabet)


def compile_vocabulary(words: Sequence[str], alphabet: LabelAlphabet) -> ExtendedNfa:
    return extend(aggregate_arcs(build_dafsa(words, alphabet)))


@dataclass(frozen=True)
class ArcCounts:
    states: int
    arcs: int
    nac_arcs: int
    char_arcs: int
    critical: int


def count_arcs(ext: ExtendedNfa) -> ArcCounts:
    """Arc statistics; an arc is critical when it reads more than two labels."""
    nac = ext.alphabet.nac_index
    n_nac = sum(1 for a in ext.arcs if a.labels == {nac})
    return ArcCounts(ext.n_states, len(ext.arcs), n_nac, len(ext.arcs) - n_nac,
                     sum(1 for a in ext.arcs if len(a.labels) > 2))


def dump(ext: ExtendedNfa) -> str:
    """Line-oriented text form: INIT, then ARC lines by (from, to), then FINAL lines."""
    lines = [f"INIT {ext.initial}"]
    for a in sorted(ext.arcs, key=lambda a: (a.src, a.dst)):
        labels = ",".join(ext.alphabet.label(i) for i in sorted(a.labels))
        groups = ",".join(str(g) for g in sorted(a.groups))
        lines.append(f"ARC {a.src} {a.dst} {{{labels}}} groups=[{groups}]")
    lines += [f"FINAL {f}" for f in sorted(ext.finals)]
    return "\n".join(lines) + "\n"


def accepts_collapsed(ext: ExtendedNfa, path: Sequence[int]) -> bool:
    """Whether the collapsed word of ``path`` is in the base language."""
    return ext.base.accepts(collapse_path(path, ext.alphabet.nac_index))
