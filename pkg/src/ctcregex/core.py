"""Label alphabets, posterior matrices and the path-to-word collapse map.

All probabilities downstream of this module live in the natural-log domain;
``-inf`` stands for probability zero.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Hashable, Iterable, Sequence, TextIO

import numpy as np

from .errors import AlphabetError, MatrixFormatError

NAC = "<nac>"
NEG_INF = float("-inf")
ROW_SUM_TOL = 1e-9


def logsum(a: float, b: float) -> float:
    """log(exp(a) + exp(b)) with the max-shift trick; ``-inf`` is absorbing."""
    if a < b:
        a, b = b, a
    if b == NEG_INF:
        return a
    return a + math.log1p(math.exp(b - a))


@dataclass(frozen=True)
class LabelAlphabet:
    """Ordered character set plus the NaC label at a fixed column."""

    characters: tuple[str, ...]
    nac_index: int = 0

    def __post_init__(self):
        chars = tuple(self.characters)
        object.__setattr__(self, "characters", chars)
        if len(set(chars)) != len(chars):
            raise AlphabetError("duplicate characters in alphabet")
        for ch in chars:
            if ch == NAC:
                raise AlphabetError(f"{NAC} is reserved for the NaC label")
            if len(ch) != 1:
                raise AlphabetError(f"label {ch!r} is not a single character")
        if not 0 <= self.nac_index <= len(chars):
            raise AlphabetError(f"nac_index {self.nac_index} out of range")
        labels = list(chars)
        labels.insert(self.nac_index, NAC)
        object.__setattr__(self, "_labels", tuple(labels))
        object.__setattr__(self, "_index", {lab: i for i, lab in enumerate(labels)})

    @classmethod
    def from_labels(cls, labels: Sequence[str]) -> "LabelAlphabet":
        """Build from column names, one of which must be ``<nac>``."""
        labels = list(labels)
        if labels.count(NAC) != 1:
            raise AlphabetError(f"exactly one {NAC} column required")
        nac = labels.index(NAC)
        return cls(tuple(labels[:nac] + labels[nac + 1:]), nac)

    @classmethod
    def from_text(cls, text: str) -> "LabelAlphabet":
        """Alphabet of the distinct characters of ``text`` in sorted order, NaC first."""
        return cls(tuple(sorted(set(text))), 0)

    @property
    def size(self) -> int:
        return len(self._labels)

    @property
    def labels(self) -> tuple[str, ...]:
        return self._labels

    @property
    def char_indices(self) -> tuple[int, ...]:
        return tuple(i for i in range(self.size) if i != self.nac_index)

    def index(self, label: str) -> int:
        try:
            return self._index[label]
        except KeyError:
            raise AlphabetError(f"character {label!r} is not in the alphabet") from None

    def __contains__(self, ch) -> bool:
        return ch != NAC and ch in self._index

    def label(self, i: int) -> str:
        return self._labels[i]

    def encode(self, word: str) -> tuple[int, ...]:
        """Column indices of the characters of ``word``."""
        out = []
        for ch in word:
            if ch == NAC or ch not in self._index:
                raise AlphabetError(f"character {ch!r} is not in the alphabet")
            out.append(self._index[ch])
        return tuple(out)

    def decode_path(self, path: Iterable[int]) -> str:
        """Collapse a path of column indices to its word."""
        return "".join(self._labels[i] for i in collapse_path(path, self.nac_index))

    def names(self, path: Iterable[int]) -> list[str]:
        return [self._labels[i] for i in path]


class PosteriorMatrix:
    """T x |labels| row-stochastic matrix of strictly positive label probabilities.

    Rows are validated, never renormalized.  The arrays are read-only so a
    matrix can be shared between concurrent decodes.
    """

    def __init__(self, probs, alphabet: LabelAlphabet, *, atol: float = ROW_SUM_TOL):
        y = np.array(probs, dtype=np.float64)
        if y.ndim != 2:
            raise MatrixFormatError("jagged", "matrix must be two-dimensional")
        if y.shape[0] < 1:
            raise MatrixFormatError("empty", "matrix has no frames")
        if y.shape[1] != alphabet.size:
            raise MatrixFormatError(
                "jagged", f"{y.shape[1]} columns but alphabet has {alphabet.size} labels")
        if not np.all(np.isfinite(y)):
            raise MatrixFormatError("value", "non-finite entry")
        bad = np.argwhere(y <= 0)
        if len(bad):
            t, l = bad[0]
            raise MatrixFormatError("nonpositive", f"entry at frame {t + 1}, label "
                                    f"{alphabet.label(l)!r} is not strictly positive",
                                    line=int(t) + 2)
        sums = y.sum(axis=1)
        off = np.flatnonzero(np.abs(sums - 1.0) > atol)
        if len(off):
            t = int(off[0])
            raise MatrixFormatError("rowsum", f"frame {t + 1} sums to {sums[t]!r}", line=t + 2)
        y.flags.writeable = False
        logy = np.log(y)
        logy.flags.writeable = False
        self._y = y
        self._logy = logy
        self.alphabet = alphabet

    @property
    def T(self) -> int:
        return self._y.shape[0]

    @property
    def probs(self) -> np.ndarray:
        return self._y

    @property
    def log_probs(self) -> np.ndarray:
        return self._logy

    @property
    def nac_index(self) -> int:
        return self.alphabet.nac_index

    def __repr__(self):
        return f"PosteriorMatrix(T={self.T}, labels={list(self.alphabet.labels)})"


def collapse_path(path: Iterable[Hashable], nac: Hashable = NAC) -> tuple:
    """F = D(S(path)): merge runs of identical labels, then drop NaCs."""
    out = []
    prev = object()
    for lab in path:
        if lab != prev and lab != nac:
            out.append(lab)
        prev = lab
    return tuple(out)


def extend_word(word: Iterable[Hashable], nac: Hashable = NAC) -> tuple:
    """NaC before, between and after the characters; length 2|word| + 1."""
    out = [nac]
    for ch in word:
        out.append(ch)
        out.append(nac)
    return tuple(out)


def path_log_prob(path: Sequence[int], matrix: PosteriorMatrix) -> float:
    """Sum of ln y[t, path[t]], accumulated front to back.

    The accumulation order matches the decoders, so a decoder's reported
    score for a path compares bit-exactly with this value.
    """
    if len(path) != matrix.T:
        raise ValueError(f"path has {len(path)} labels, matrix has {matrix.T} frames")
    logy = matrix.log_probs
    total = 0.0
    for t, lab in enumerate(path):
        total += float(logy[t, lab])
    return total


def read_matrix(stream: TextIO, *, atol: float = ROW_SUM_TOL) -> PosteriorMatrix:
    """Parse the CSV matrix format: a header of label names, then one row per frame."""
    reader = csv.reader(stream)
    try:
        header = next(reader)
    except StopIteration:
        raise MatrixFormatError("header", "empty input", line=1) from None
    # labels are taken verbatim: a space is a legitimate character
    if not header or header == [""]:
        raise MatrixFormatError("header", "empty header", line=1)
    if header.count(NAC) != 1:
        raise MatrixFormatError("header", f"header must name exactly one {NAC} column", line=1)
    try:
        alphabet = LabelAlphabet.from_labels(header)
    except AlphabetError as exc:
        raise MatrixFormatError("header", str(exc), line=1) from None

    rows = []
    for lineno, row in enumerate(reader, start=2):
        if not row or row == [""]:
            continue
        if len(row) != len(header):
            raise MatrixFormatError(
                "jagged", f"expected {len(header)} fields, got {len(row)}", line=lineno)
        vals = []
        for field in row:
            try:
                v = float(field)
            except ValueError:
                raise MatrixFormatError("value", f"not a number: {field!r}", line=lineno) from None
            if not math.isfinite(v):
                raise MatrixFormatError("value", f"not a finite number: {field!r}", line=lineno)
            vals.append(v)
        rows.append(vals)
    if not rows:
        raise MatrixFormatError("empty", "matrix has no frames")
    return PosteriorMatrix(rows, alphabet, atol=atol)


def write_matrix(matrix: PosteriorMatrix, stream: TextIO) -> None:
    """Write ``matrix`` in the CSV format; floats use ``repr`` so they round-trip exactly."""
    csv.writer(stream, lineterminator="\n").writerow(matrix.alphabet.labels)
    for row in matrix.probs:
        stream.write(",".join(repr(float(v)) for v in row) + "\n")
