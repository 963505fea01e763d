"""Synthetic posterior matrices with a planted text.

Character frames put a spike on the planted character; NaC frames put most
mass on NaC.  The remaining mass is spread by a Dirichlet draw, so a small
``concentration`` produces one or two strong competitors per frame.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .core import LabelAlphabet, PosteriorMatrix

DIGITS = LabelAlphabet(tuple("0123456789"), 0)
FLOOR = 1e-6


@dataclass(frozen=True)
class GeneratorSpec:
    text: str
    frames_per_char: tuple[int, int] = (1, 2)
    gap: tuple[int, int] = (0, 2)
    margin: tuple[int, int] = (1, 3)
    p_spike: float = 0.8
    spike_jitter: float = 0.0
    p_nac: float = 0.8
    nac_jitter: float = 0.0
    concentration: float = 0.5
    seed: Optional[int] = None


@dataclass(frozen=True)
class Planted:
    matrix: PosteriorMatrix
    text: str
    char_frames: tuple[tuple[int, int], ...]  # inclusive frame span per character


def _residual(rng, k, concentration, mass):
    w = rng.dirichlet(np.full(k, concentration))
    return FLOOR + (mass - k * FLOOR) * w


def generate(spec: GeneratorSpec, alphabet: LabelAlphabet, rng=None) -> Planted:
    """Draw one matrix; uses ``rng`` if given, else a generator seeded from ``spec.seed``."""
    rng = np.random.default_rng(spec.seed) if rng is None else rng
    nac = alphabet.nac_index
    L = alphabet.size
    labels = alphabet.encode(spec.text)
    rows = []
    spans = []

    def nac_frames(n):
        for _ in range(n):
            p = float(np.clip(spec.p_nac + rng.uniform(-spec.nac_jitter, spec.nac_jitter), 0.05, 0.99))
            row = np.empty(L)
            others = [i for i in range(L) if i != nac]
            row[others] = _residual(rng, len(others), spec.concentration, 1.0 - p)
            row[nac] = p
            _nac_into_top3(row, nac)
            rows.append(row)

    nac_frames(int(rng.integers(spec.margin[0], spec.margin[1] + 1)))
    for i, lab in enumerate(labels):
        if i > 0:
            g = int(rng.integers(spec.gap[0], spec.gap[1] + 1))
            if lab == labels[i - 1]:
                g = max(g, 1)
            nac_frames(g)
        start = len(rows)
        for _ in range(int(rng.integers(spec.frames_per_char[0], spec.frames_per_char[1] + 1))):
            p = float(np.clip(spec.p_spike + rng.uniform(-spec.spike_jitter, spec.spike_jitter), 0.05, 0.99))
            row = np.empty(L)
            others = [j for j in range(L) if j != lab]
            row[others] = _residual(rng, len(others), spec.concentration, 1.0 - p)
            row[lab] = p
            _nac_into_top3(row, nac)
            rows.append(row)
        spans.append((start, len(rows) - 1))
    nac_frames(int(rng.integers(spec.margin[0], spec.margin[1] + 1)))
    y = np.array(rows)
    y /= y.sum(axis=1, keepdims=True)
    return Planted(PosteriorMatrix(y, alphabet), spec.text, tuple(spans))


def _nac_into_top3(row, nac):
    # swap NaC with the third most likely label when it falls outside the top three
    order = np.argsort(-row, kind="stable")
    if nac not in order[:3]:
        third = order[2]
        row[nac], row[third] = row[third], row[nac]


def nac_in_top3(matrix: PosteriorMatrix) -> bool:
    """Every frame has NaC among its three most likely labels."""
    order = np.argsort(-matrix.probs, axis=1, kind="stable")[:, :3]
    return bool(np.all((order == matrix.nac_index).any(axis=1)))


def max_run(path, nac) -> int:
    """Longest run of one repeated character label (NaC runs ignored)."""
    best = run = 0
    prev = None
    for lab in path:
        run = run + 1 if lab == prev else 1
        prev = lab
        if lab != nac:
            best = max(best, run)
    return best


def random_digits(rng, k: int) -> str:
    return "".join(str(d) for d in rng.integers(0, 10, size=k))


def digit_matrices(k: int, count: int, seed: int, **knobs) -> list[Planted]:
    """``count`` matrices planting random ``k``-digit strings, reproducible from ``seed``."""
    rng = np.random.default_rng(seed)
    base = GeneratorSpec("", **knobs)
    return [generate(replace(base, text=random_digits(rng, k)), DIGITS, rng) for _ in range(count)]


def random_matrix(rng, T: int, alphabet: LabelAlphabet, concentration: float = 1.0) -> PosteriorMatrix:
    """Dirichlet rows bounded away from zero."""
    y = rng.dirichlet(np.full(alphabet.size, concentration), size=T)
    y = np.maximum(y, 1e-9)
    return PosteriorMatrix(y / y.sum(axis=1, keepdims=True), alphabet)


def near_flat_matrix(rng, T: int, alphabet: LabelAlphabet, eps: float) -> PosteriorMatrix:
    """Uniform rows perturbed by relative noise of size ``eps`` (ties broken, order random)."""
    y = 1.0 + eps * rng.uniform(-1.0, 1.0, size=(T, alphabet.size))
    return PosteriorMatrix(y / y.sum(axis=1, keepdims=True), alphabet)


def condition_report(matrix: PosteriorMatrix, exact_path) -> dict:
    """Which of the two conditions for the top-3 approximation hold."""
    return {"nac_top3": nac_in_top3(matrix), "max_run": max_run(exact_path, matrix.nac_index)}
