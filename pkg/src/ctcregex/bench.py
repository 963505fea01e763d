"""Timing and agreement harness shared by the ``bench`` command and the demos."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .automata import ExtendedNfa
from .baselines import astar_decode, beam_decode, greedy_decode
from .core import PosteriorMatrix
from .ctc import VocabularyTrie
from .decoder import decode
from .errors import NoFeasiblePathError, SearchLimitError
from .results import DecodeResult

METHODS = ("regex", "vocab", "beam", "astar", "greedy")
REPORT_HEADER = ("method", "matrices", "mean_ms", "combinations_per_step", "mismatches", "infeasible")


@dataclass
class MethodStats:
    method: str
    seconds: list = field(default_factory=list)
    combos_per_step: list = field(default_factory=list)
    mismatches: int = 0
    infeasible: int = 0

    @property
    def mean_ms(self) -> float:
        return 1e3 * float(np.mean(self.seconds)) if self.seconds else float("nan")

    def row(self) -> tuple:
        cps = float(np.mean(self.combos_per_step)) if self.combos_per_step else float("nan")
        return (self.method, len(self.seconds), f"{self.mean_ms:.4f}", f"{cps:.1f}",
                self.mismatches, self.infeasible)


@dataclass
class BenchReport:
    methods: dict
    names: list

    def to_tsv(self) -> str:
        lines = ["\t".join(REPORT_HEADER)]
        for st in self.methods.values():
            lines.append("\t".join(str(x) for x in st.row()))
        return "\n".join(lines) + "\n"


def reference_decode(ext: ExtendedNfa, matrix: PosteriorMatrix, astar_budget: int = 200_000) -> DecodeResult:
    """Exact optimum: A* when it finishes within its budget, else the exact table decoder."""
    try:
        return astar_decode(ext, matrix, max_expansions=astar_budget)
    except SearchLimitError:
        return decode(ext, matrix, "exact")


def run_method(method: str, ext: Optional[ExtendedNfa], matrix: PosteriorMatrix, *,
               cont: str = "approx", beam_width: int = 100,
               trie: Optional[VocabularyTrie] = None) -> DecodeResult:
    if method == "regex":
        return decode(ext, matrix, cont)
    if method == "vocab":
        if trie is None:
            raise ValueError("method 'vocab' needs a vocabulary")
        return trie.decode(matrix)
    if method == "beam":
        return beam_decode(ext, matrix, beam_width)
    if method == "astar":
        return astar_decode(ext, matrix)
    if method == "greedy":
        return greedy_decode(matrix, ext)
    raise ValueError(f"unknown method {method!r}")


def run_bench(matrices: Sequence[PosteriorMatrix], ext: ExtendedNfa, methods: Sequence[str], *,
              names: Optional[Sequence[str]] = None, cont: str = "approx", beam_width: int = 100,
              trie: Optional[VocabularyTrie] = None, reference=None) -> BenchReport:
    """Time each method on every matrix and count best-path disagreements with the reference.

    ``reference`` maps a matrix to the exact result (default: ``reference_decode``).
    """
    reference = reference or (lambda m: reference_decode(ext, m))
    stats = {m: MethodStats(m) for m in methods}
    for matrix in matrices:
        try:
            ref = reference(matrix).path
        except NoFeasiblePathError:
            ref = None
        for m in methods:
            t0 = time.perf_counter()
            try:
                res = run_method(m, ext, matrix, cont=cont, beam_width=beam_width, trie=trie)
            except NoFeasiblePathError:
                res = None
            stats[m].seconds.append(time.perf_counter() - t0)
            if res is None or not res.feasible:
                stats[m].infeasible += 1
                stats[m].mismatches += ref is not None
                continue
            if "combinations" in res.stats:
                stats[m].combos_per_step.append(res.stats["combinations"] / matrix.T)
            stats[m].mismatches += res.path != ref
    return BenchReport(stats, list(names or range(len(matrices))))
