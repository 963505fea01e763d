"""Result records shared by all decoders."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

from .core import LabelAlphabet


@dataclass(frozen=True)
class GroupCapture:
    """One contiguous traversal of a capturing group by the best path.

    ``start`` and ``end`` are 0-based inclusive frame indices; serialized
    records shift them to 1-based.
    """

    group_id: int
    name: Optional[str]
    start: int
    end: int
    labels: tuple[int, ...]
    text: str
    logprob: float
    trim_nac: bool = True

    def to_record(self) -> dict:
        return {
            "name": self.name if self.name is not None else str(self.group_id),
            "start": self.start + 1,
            "end": self.end + 1,
            "text": self.text,
            "logprob": self.logprob,
        }


@dataclass(frozen=True)
class Alignment:
    """A best path for a fixed word and the frame span of each of its characters."""

    path: tuple[int, ...]
    spans: tuple[tuple[int, int], ...]


@dataclass
class DecodeResult:
    path: tuple[int, ...]
    word: str
    logprob: float
    method: str
    alphabet: LabelAlphabet
    feasible: bool = True
    groups: list[GroupCapture] = field(default_factory=list)
    alignment: Optional[Alignment] = None
    stats: dict = field(default_factory=dict)

    @classmethod
    def infeasible(cls, method: str, alphabet: LabelAlphabet, stats=None) -> "DecodeResult":
        return cls((), "", float("-inf"), method, alphabet, feasible=False, stats=stats or {})

    def to_record(self) -> dict:
        rec = {
            "word": self.word if self.feasible else None,
            "logprob": self.logprob if self.feasible else None,
            "path": self.alphabet.names(self.path),
            "groups": [g.to_record() for g in self.groups],
            "method": self.method,
        }
        if not self.feasible:
            rec["feasible"] = False
        return rec

    def to_json(self) -> str:
        return json.dumps(self.to_record(), ensure_ascii=False)
