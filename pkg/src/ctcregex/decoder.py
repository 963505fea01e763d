"""Regex-constrained best-path decoding over an extended automaton.

For every arc and frame the table keeps the best prefixes that currently sit
on that arc, one per ending label.  A prefix either *appends* a label to a
prefix on a predecessor arc (the label must differ from that prefix's last
label, otherwise the two frames would merge) or *continues* the arc's own
last label.  Ranks are kept as follows:

``approx``  candidates are the arc's three most likely labels at the frame;
            the two best prefixes (distinct ending labels) are stored.
``top2``    as ``approx`` plus the stored labels of the previous frame, so a
            continuation is never dropped for lack of rank.
``exact``   every label of the arc is a candidate and all are stored, which is
            the full dynamic programme and returns the true optimum.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import networkx as nx
import numpy as np

from .automata import ExtendedNfa, check_cycle_order
from .core import NEG_INF, PosteriorMatrix, collapse_path
from .errors import AlphabetError, CycleOrderError, NoFeasiblePathError
from .results import DecodeResult, GroupCapture

CONT_MODES = ("approx", "top2", "exact")
INIT, APP, CONT = 0, 1, 2
KIND_NAMES = {INIT: "init", APP: "app", CONT: "cont"}


def precompute_top_labels(ext: ExtendedNfa, matrix: PosteriorMatrix, k: int = 3) -> list:
    """top[arc][t] = the arc's ``k`` most likely labels at frame t, best first.

    Equal probabilities keep ascending label order (stable sort).
    """
    logy = matrix.log_probs
    by_set = {}
    out = []
    for arc in ext.arcs:
        if arc.labels not in by_set:
            labs = np.array(sorted(arc.labels), dtype=np.intp)
            order = np.argsort(-logy[:, labs], axis=1, kind="stable")[:, :k]
            by_set[arc.labels] = labs[order].tolist()
        out.append(by_set[arc.labels])
    return out


def app_scores(preds, top):
    """Best and second-best appended prefixes from the predecessors' stored ranks.

    ``preds`` is a list of ``(arc_id, [(score, label), ...])`` with at most two
    ranked entries per predecessor arc; ``top`` is ``[(label, logy), ...]`` for
    the current arc's top labels.  A label equal to the source prefix's ending
    label is skipped; the second result must end in a label different from the
    first.  Returns ``(app1, app2)``, each ``(score, label, arc_id, rank)`` or None.
    """
    cands = []
    for arc_id, ranks in preds:
        for k, (score, zeta) in enumerate(ranks):
            if score == NEG_INF:
                continue
            for lab, ly in top:
                if lab != zeta:
                    cands.append((score + ly, lab, arc_id, k))
    return _best_two(cands)


def cont_scores(prev, logy_row, top_labels, mode="approx"):
    """Continuation candidates of an arc's own ranked prefixes.

    ``prev`` holds ``[(score, label), ...]`` for the arc at the previous frame.
    In ``approx`` mode a prefix may only continue when its ending label is
    among ``top_labels``; ``exact`` drops that restriction.
    Returns ``(cont1, cont2)``, each ``(score, label, rank)`` or None.
    """
    cands = []
    for k, (score, zeta) in enumerate(prev):
        if score == NEG_INF:
            continue
        if mode == "approx" and zeta not in top_labels:
            continue
        cands.append((score + float(logy_row[zeta]), zeta, -1, k))
    one, two = _best_two(cands)
    strip = lambda c: None if c is None else (c[0], c[1], c[3])
    return strip(one), strip(two)


def _best_two(cands):
    if not cands:
        return None, None
    cands.sort(key=lambda c: (-c[0], c[2], c[1]))
    first = cands[0]
    for c in cands[1:]:
        if c[1] != first[1]:
            return first, c
    return first, None


def schedule_arcs(ext: ExtendedNfa) -> list[tuple[int, ...]]:
    """Processing units in dependency order.

    Arc e depends on arc d when d ends where e starts.  Strongly connected
    groups of arcs (the self-loop pattern of a starred class) form one fused
    unit that is advanced frame by frame; every other unit is a single arc that
    is filled for all frames at once.
    """
    cached = ext.__dict__.get("_schedule")
    if cached is not None:
        return cached
    bad = check_cycle_order(ext)
    if bad:
        raise CycleOrderError(bad)
    g = nx.DiGraph()
    g.add_nodes_from(range(len(ext.arcs)))
    for e, arc in enumerate(ext.arcs):
        for d in ext.incoming[arc.src]:
            g.add_edge(d, e)
    cond = nx.condensation(g)
    members = {c: tuple(sorted(cond.nodes[c]["members"])) for c in cond.nodes}
    order = nx.lexicographical_topological_sort(cond, key=lambda c: members[c][0])
    units = [members[c] for c in order]
    ext.__dict__["_schedule"] = units  # automata are immutable; reuse for every matrix
    return units


@dataclass
class Frame:
    """Provenance of one frame of the best path."""

    arc: int
    label: int
    kind: int


class ArcTable:
    """entries[arc][t]: prefixes on ``arc`` ending at frame t, best first.

    An entry is ``(-score, is_cont, src_arc, label, src_label)`` so that plain
    tuple order is the tie rule: higher score, then append before continue,
    then lower source arc, then lower label.  ``src_arc == -1`` marks a
    prefix started at frame 0.  Labels are distinct within one cell.
    """

    def __init__(self, n_arcs, T):
        self.entries = [[()] * T for _ in range(n_arcs)]

    def cell(self, arc, t):
        return [(-c[0], c[3]) for c in self.entries[arc][t]]

    def alpha(self, arc, t, rank):
        cell = self.entries[arc][t]
        return -cell[rank][0] if len(cell) > rank else NEG_INF

    def zeta(self, arc, t, rank):
        cell = self.entries[arc][t]
        return cell[rank][3] if len(cell) > rank else None


class _Filler:
    def __init__(self, ext, matrix, mode):
        self.ext = ext
        self.mode = mode
        self.logy = matrix.log_probs.tolist()
        self.T = matrix.T
        self.table = ArcTable(len(ext.arcs), self.T)
        self.top = precompute_top_labels(ext, matrix)
        self.all_labels = [sorted(a.labels) for a in ext.arcs]
        self.preds = [tuple(ext.incoming[a.src]) for a in ext.arcs]
        self.keep = None if mode == "exact" else 2
        self.combos = [0] * self.T

    def fill(self, e, ts):
        """Fill arc ``e`` for the frames in ``ts`` (ascending)."""
        ent = self.table.entries
        own = ent[e]
        pred_rows = [ent[d] for d in self.preds[e]]
        pred_ids = self.preds[e]
        logy = self.logy
        combos = self.combos
        mode = self.mode
        keep = self.keep
        top = self.top[e]
        labels = self.all_labels[e]
        starts = self.ext.arcs[e].src == self.ext.initial
        for t in ts:
            row = logy[t]
            if mode == "exact":
                cands = labels
            else:
                cands = top[t]
                if mode == "top2" and t > 0:
                    extra = [c[3] for c in own[t - 1] if c[3] not in cands]
                    if extra:
                        cands = cands + extra
            if t == 0:
                if starts:
                    out = [(-row[a], False, -1, a, -1) for a in cands]
                    combos[0] += len(out)
                    out.sort()
                    own[0] = out if keep is None else out[:keep]
                continue
            # b1: best predecessor prefix; b2: best one ending in another label.
            # Cells hold distinct labels, so each arc's top two entries suffice.
            b1n = b2n = None
            heads = []
            for d, prow in zip(pred_ids, pred_rows):
                cell = prow[t - 1]
                if cell:
                    c0 = cell[0]
                    heads.append((d, c0, cell[1] if len(cell) > 1 else None))
                    if b1n is None or c0[0] < b1n:
                        b1n, b1l, b1a = c0[0], c0[3], d
            if b1n is not None:
                for d, c0, c1 in heads:
                    c = c0 if c0[3] != b1l else c1
                    if c is not None and (b2n is None or c[0] < b2n):
                        b2n, b2l, b2a = c[0], c[3], d
            prev = own[t - 1]
            out = []
            for a in cands:
                if b1n is not None and b1l != a:
                    an, al, aa = b1n, b1l, b1a
                elif b2n is not None:
                    an, al, aa = b2n, b2l, b2a
                else:
                    an = None
                cn = None
                for c in prev:
                    if c[3] == a:
                        cn = c[0]
                        break
                if an is not None and (cn is None or an <= cn):
                    out.append((an - row[a], False, aa, a, al))
                elif cn is not None:
                    out.append((cn - row[a], True, e, a, a))
            if out:
                combos[t] += len(out)
                out.sort()
                own[t] = out if keep is None else out[:keep]

    def run(self, units):
        T = self.T
        frames = range(T)
        for unit in units:
            if len(unit) == 1 and unit[0] not in self.preds[unit[0]]:
                self.fill(unit[0], frames)
            else:
                for t in frames:
                    for e in unit:
                        self.fill(e, (t,))


def _final_choice(ext, table, T):
    best = None
    for q in sorted(ext.finals):
        for e in ext.incoming[q]:
            cell = table.entries[e][T - 1]
            if cell:
                s = -cell[0][0]
                if best is None or s > best[0] or (s == best[0] and e < best[1]):
                    best = (s, e, cell[0][3])
    return best


def backtrack(table: ArcTable, ext: ExtendedNfa, arc: int, label: int, T: int) -> list[Frame]:
    """Follow provenance from (arc, label) at the last frame back to frame 0."""
    frames = []
    for t in range(T - 1, -1, -1):
        cell = table.entries[arc][t]
        entry = next((c for c in cell if c[3] == label), None)
        assert entry is not None, f"broken provenance at frame {t}, arc {arc}"
        kind = CONT if entry[1] else (INIT if entry[2] < 0 else APP)
        assert (kind == INIT) == (t == 0), f"inconsistent provenance at frame {t}"
        frames.append(Frame(arc, label, kind))
        arc, label = entry[2], entry[4]
    frames.reverse()
    return frames


def extract_groups(frames: Sequence[Frame], ext: ExtendedNfa, matrix: PosteriorMatrix,
                   trim_nac: bool = True) -> list[GroupCapture]:
    """Frame spans of each capturing group along a backtracked path.

    A capture starts at a character frame whose arc lies in the group and
    either enters the group afresh or follows a frame outside it; it runs
    through interior NaC frames up to the last character frame read inside the
    group.  With ``trim_nac=False`` the NaC frames adjoining the span on both
    sides are included.
    """
    nac = ext.alphabet.nac_index
    logy = matrix.log_probs
    path = [f.label for f in frames]
    gids = sorted({g for a in ext.arcs for g in a.groups})
    spans = []
    for g in gids:
        cur = None
        for t, f in enumerate(frames):
            if f.label == nac:
                continue
            arc = ext.arcs[f.arc]
            if g not in arc.groups:
                if cur is not None:
                    spans.append((g, cur[0], cur[1]))
                    cur = None
                continue
            fresh = f.kind != CONT and g in arc.opens
            if cur is None or fresh:
                if cur is not None:
                    spans.append((g, cur[0], cur[1]))
                cur = [t, t]
            else:
                cur[1] = t
        if cur is not None:
            spans.append((g, cur[0], cur[1]))
    captures = []
    for g, s, e in sorted(spans, key=lambda x: (x[1], x[0])):
        if not trim_nac:
            while s > 0 and path[s - 1] == nac:
                s -= 1
            while e < len(path) - 1 and path[e + 1] == nac:
                e += 1
        labels = tuple(path[s:e + 1])
        lp = 0.0
        for t in range(s, e + 1):
            lp += float(logy[t, path[t]])
        text = "".join(ext.alphabet.label(i) for i in collapse_path(labels, nac))
        captures.append(GroupCapture(g, ext.group_name(g), s, e, labels, text, lp, trim_nac))
    return captures


def decode(ext: ExtendedNfa, matrix: PosteriorMatrix, cont: str = "approx", *,
           trim_nac: bool = True, return_table: bool = False):
    """Most likely path whose collapsed word is in the automaton's language.

    Raises CycleOrderError for automata with multi-state cycles and
    NoFeasiblePathError when no path of this length is accepted.
    """
    if cont not in CONT_MODES:
        raise ValueError(f"cont must be one of {CONT_MODES}")
    if ext.alphabet.labels != matrix.alphabet.labels:
        raise AlphabetError("automaton and matrix use different label alphabets")
    units = schedule_arcs(ext)
    filler = _Filler(ext, matrix, cont)
    filler.run(units)
    T = matrix.T
    choice = _final_choice(ext, filler.table, T)
    if choice is None:
        raise NoFeasiblePathError(f"no path of {T} frames collapses into the language")
    score, arc, label = choice
    frames = backtrack(filler.table, ext, arc, label, T)
    path = tuple(f.label for f in frames)
    word = "".join(ext.alphabet.label(i) for i in collapse_path(path, ext.alphabet.nac_index))
    stats = {
        "combinations": sum(filler.combos),
        "combinations_per_step": filler.combos,
        "frames": [(f.arc, KIND_NAMES[f.kind]) for f in frames],
    }
    res = DecodeResult(path, word, score, f"regex-{cont}", matrix.alphabet,
                       groups=extract_groups(frames, ext, matrix, trim_nac), stats=stats)
    if return_table:
        return res, filler.table, frames
    return res
