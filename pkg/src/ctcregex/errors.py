"""Exception types shared across the package."""


class MatrixFormatError(ValueError):
    """A posterior matrix failed to parse or validate.

    ``kind`` is one of ``"header"``, ``"empty"``, ``"jagged"``, ``"value"``,
    ``"nonpositive"`` or ``"rowsum"`` so callers can tell failures apart
    without string matching.
    """

    def __init__(self, kind, message, line=None):
        self.kind = kind
        self.line = line
        where = f" (line {line})" if line is not None else ""
        super().__init__(f"{kind}: {message}{where}")


class RegexSyntaxError(ValueError):
    def __init__(self, message, pattern, pos):
        self.pattern = pattern
        self.pos = pos
        super().__init__(f"{message} at position {pos} in {pattern!r}")


class AlphabetError(ValueError):
    """A character is used that the label alphabet does not contain."""


class CycleOrderError(ValueError):
    """The automaton contains a cycle through more than one state."""

    def __init__(self, components):
        self.components = [tuple(c) for c in components]
        desc = "; ".join(",".join(map(str, c)) for c in self.components)
        super().__init__(f"cycles longer than one state are not supported: states {desc}")


class NoFeasiblePathError(RuntimeError):
    """No label path of the matrix length collapses into the language."""


class SearchLimitError(RuntimeError):
    """An exhaustive search would exceed its configured size guard."""


class VocabularyError(ValueError):
    pass
