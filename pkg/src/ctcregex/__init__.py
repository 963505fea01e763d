"""Decoding CTC posterior matrices under regular-expression constraints."""

from .automata import (ExtendedNfa, build_dafsa, check_cycle_order, compile_pattern,
                       compile_vocabulary, count_arcs, dump)
from .baselines import astar_decode, beam_decode, enumerate_all_paths, greedy_decode
from .core import (NAC, LabelAlphabet, PosteriorMatrix, collapse_path, extend_word,
                   path_log_prob, read_matrix, write_matrix)
from .ctc import (VocabularyTrie, align, backward, ctc_gradient, decode_vocabulary, forward,
                  word_log_prob)
from .decoder import decode
from .errors import (AlphabetError, CycleOrderError, MatrixFormatError, NoFeasiblePathError,
                     RegexSyntaxError, SearchLimitError, VocabularyError)
from .regex import parse
from .results import DecodeResult, GroupCapture

__all__ = [
    "NAC", "LabelAlphabet", "PosteriorMatrix", "collapse_path", "extend_word", "path_log_prob",
    "read_matrix", "write_matrix",
    "forward", "backward", "word_log_prob", "ctc_gradient", "align", "VocabularyTrie",
    "decode_vocabulary",
    "parse", "compile_pattern", "compile_vocabulary", "build_dafsa", "ExtendedNfa",
    "check_cycle_order", "count_arcs", "dump",
    "decode", "astar_decode", "beam_decode", "greedy_decode", "enumerate_all_paths",
    "DecodeResult", "GroupCapture",
    "AlphabetError", "CycleOrderError", "MatrixFormatError", "NoFeasiblePathError",
    "RegexSyntaxError", "SearchLimitError", "VocabularyError",
]
