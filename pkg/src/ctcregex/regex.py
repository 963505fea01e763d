"""Regular-expression front end: parser, quantifier desugaring, canonical printer.

Supported syntax: literals; the escapes ``\\\\ \\. \\[ \\] \\( \\) \\| \\? \\* \\+ \\{ \\}``;
classes ``[...]`` with ranges and leading ``^``; ``.``; postfix ``? * + {m} {m,n}
{m,}``; capturing ``(...)``, named ``(?<name>...)``, non-capturing ``(?:...)``; and
``|``.  Every character stands for one label of the alphabet; matching is always
against the whole collapsed word.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Optional, Union

from .core import LabelAlphabet
from .errors import AlphabetError, RegexSyntaxError

SPECIAL = set("\\.[]()|?*+{}")
CLASS_SPECIAL = set("\\[]^-")
_NAME = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")


@dataclass(frozen=True)
class Empty:
    pass


@dataclass(frozen=True)
class Literal:
    char: str


@dataclass(frozen=True)
class CharClass:
    """``chars`` are the written members (ranges already expanded within the alphabet)."""

    chars: frozenset
    negated: bool = False


@dataclass(frozen=True)
class AnyChar:
    pass


@dataclass(frozen=True)
class Concat:
    children: tuple


@dataclass(frozen=True)
class Alternation:
    children: tuple


@dataclass(frozen=True)
class Star:
    child: object


@dataclass(frozen=True)
class Optional_:
    child: object


@dataclass(frozen=True)
class Plus:
    child: object


@dataclass(frozen=True)
class Repeat:
    child: object
    min: int
    max: Optional[int]


@dataclass(frozen=True)
class Group:
    child: object
    gid: int
    name: Optional[str] = None


Node = Union[Empty, Literal, CharClass, AnyChar, Concat, Alternation, Star, Optional_, Plus, Repeat, Group]
QUANTIFIED = (Star, Optional_, Plus, Repeat)


@dataclass(frozen=True)
class GroupInfo:
    gid: int
    name: Optional[str]
    span: tuple[int, int]  # [start, end) offsets in the pattern

    @property
    def label(self) -> str:
        return self.name if self.name is not None else str(self.gid)


def class_members(node, alphabet: LabelAlphabet) -> frozenset:
    """Characters of Σ matched by a literal, class or ``.`` node."""
    if isinstance(node, Literal):
        return frozenset([node.char])
    if isinstance(node, AnyChar):
        return frozenset(alphabet.characters)
    if isinstance(node, CharClass):
        if node.negated:
            return frozenset(alphabet.characters) - node.chars
        return node.chars
    raise TypeError(f"not a character node: {node!r}")


class _Parser:
    def __init__(self, pattern: str, alphabet: LabelAlphabet):
        self.p = pattern
        self.i = 0
        self.alphabet = alphabet
        self.groups: list[GroupInfo] = []
        self.names: set[str] = set()

    def error(self, msg, pos=None):
        raise RegexSyntaxError(msg, self.p, self.i if pos is None else pos)

    def peek(self):
        return self.p[self.i] if self.i < len(self.p) else None

    def parse(self):
        node = self.alternation()
        if self.i < len(self.p):
            ch = self.p[self.i]
            self.error("unbalanced ')'" if ch == ")" else f"unexpected {ch!r}")
        return node

    def alternation(self):
        branches = [self.concat()]
        while self.peek() == "|":
            self.i += 1
            branches.append(self.concat())
        return branches[0] if len(branches) == 1 else Alternation(tuple(branches))

    def concat(self):
        items = []
        while self.peek() is not None and self.peek() not in "|)":
            items.append(self.quantified())
        if not items:
            return Empty()
        return items[0] if len(items) == 1 else Concat(tuple(items))

    def quantified(self):
        node = self.atom()
        ch = self.peek()
        if ch == "*":
            self.i += 1
            node = Star(node)
        elif ch == "+":
            self.i += 1
            node = Plus(node)
        elif ch == "?":
            self.i += 1
            node = Optional_(node)
        elif ch == "{":
            node = self.braces(node)
        if self.peek() is not None and self.peek() in "*+?{":
            self.error("multiple quantifiers")
        return node

    def braces(self, node):
        start = self.i
        m = re.compile(r"\{(\d+)(?:(,)(\d*))?\}").match(self.p, self.i)
        if not m:
            self.error("malformed repetition")
        self.i = m.end()
        lo = int(m.group(1))
        if m.group(2) is None:
            hi = lo
        elif m.group(3) == "":
            hi = None
        else:
            hi = int(m.group(3))
        if hi is not None and lo > hi:
            self.error(f"repetition minimum {lo} exceeds maximum {hi}", start)
        return Repeat(node, lo, hi)

    def char(self, ch, pos):
        if ch not in self.alphabet:
            raise AlphabetError(f"character {ch!r} at position {pos} is not in the alphabet")
        return ch

    def atom(self):
        pos = self.i
        ch = self.peek()
        if ch == "(":
            return self.group()
        if ch == "[":
            return self.char_class()
        if ch == ".":
            self.i += 1
            return AnyChar()
        if ch == "\\":
            self.i += 1
            esc = self.peek()
            if esc is None or esc not in SPECIAL:
                self.error("unsupported escape", pos)
            self.i += 1
            return Literal(self.char(esc, pos))
        if ch in "*+?{":
            self.error("quantifier without operand")
        if ch in "]}":
            self.error(f"unescaped {ch!r}")
        self.i += 1
        return Literal(self.char(ch, pos))

    def group(self):
        start = self.i
        self.i += 1
        name = None
        capturing = True
        if self.p.startswith("?:", self.i):
            self.i += 2
            capturing = False
        elif self.p.startswith("?<", self.i):
            self.i += 2
            m = _NAME.match(self.p, self.i)
            if not m or not self.p.startswith(">", m.end()):
                self.error("malformed group name")
            name = m.group(0)
            if name in self.names:
                self.error(f"duplicate group name {name!r}", start)
            self.names.add(name)
            self.i = m.end() + 1
        elif self.peek() == "?":
            self.error("unsupported group extension")
        gid = None
        if capturing:
            gid = len(self.groups)
            self.groups.append(None)  # reserve the id in left-paren order
        child = self.alternation()
        if self.peek() != ")":
            self.error("missing ')'", start)
        self.i += 1
        if not capturing:
            return child
        self.groups[gid] = GroupInfo(gid, name, (start, self.i))
        return Group(child, gid, name)

    def class_char(self):
        ch = self.peek()
        if ch is None:
            self.error("unterminated character class")
        if ch == "\\":
            self.i += 1
            esc = self.peek()
            if esc is None or not (esc in SPECIAL or esc in CLASS_SPECIAL):
                self.error("unsupported escape", self.i - 1)
            self.i += 1
            return esc
        if ch == "[":
            self.error("unescaped '[' in character class")
        self.i += 1
        return ch

    def char_class(self):
        start = self.i
        self.i += 1
        negated = False
        if self.peek() == "^":
            negated = True
            self.i += 1
        chars = set()
        first = True
        while True:
            if self.peek() is None:
                self.error("unterminated character class", start)
            if self.peek() == "]" and not first:
                self.i += 1
                break
            if self.peek() == "]":
                self.error("empty character class", start)
            pos = self.i
            lo = self.class_char()
            if self.peek() == "-" and self.i + 1 < len(self.p) and self.p[self.i + 1] != "]":
                self.i += 1
                hi = self.class_char()
                if ord(lo) > ord(hi):
                    self.error(f"bad range {lo}-{hi}", pos)
                chars.update(c for c in self.alphabet.characters if lo <= c <= hi)
            else:
                chars.add(self.char(lo, pos))
            first = False
        members = frozenset(self.alphabet.characters) - chars if negated else chars
        if not members:
            self.error("character class matches no character of the alphabet", start)
        return CharClass(frozenset(chars), negated)


def parse(pattern: str, alphabet: LabelAlphabet) -> tuple[Node, tuple[GroupInfo, ...]]:
    """Parse ``pattern`` into an AST plus its capturing-group table."""
    parser = _Parser(pattern, alphabet)
    ast = parser.parse()
    return ast, tuple(parser.groups)


def _flat_concat(items):
    out = []
    for it in items:
        if isinstance(it, Concat):
            out.extend(it.children)
        elif not isinstance(it, Empty):
            out.append(it)
    if not out:
        return Empty()
    return out[0] if len(out) == 1 else Concat(tuple(out))


def _bounded_tail(x, k):
    # k optional copies, nested so each one is only reachable after the previous
    tail = None
    for _ in range(k):
        inner = x if tail is None else _flat_concat([x, tail])
        tail = Alternation((inner, Empty()))
    return tail


def desugar(ast: Node) -> Node:
    """Rewrite ``? + {m,n}`` in terms of alternation, concatenation and star.

    Alternations whose branches are all single literals or plain classes
    become one class, so they later read through a single multi-label arc.
    """
    if isinstance(ast, (Empty, Literal, CharClass, AnyChar)):
        return ast
    if isinstance(ast, Group):
        return Group(desugar(ast.child), ast.gid, ast.name)
    if isinstance(ast, Concat):
        return _flat_concat([desugar(c) for c in ast.children])
    if isinstance(ast, Alternation):
        kids = tuple(desugar(c) for c in ast.children)
        if all(isinstance(k, Literal) or (isinstance(k, CharClass) and not k.negated) for k in kids):
            chars = set()
            for k in kids:
                chars |= {k.char} if isinstance(k, Literal) else k.chars
            return CharClass(frozenset(chars))
        return Alternation(kids)
    if isinstance(ast, Star):
        return Star(desugar(ast.child))
    if isinstance(ast, Optional_):
        return Alternation((desugar(ast.child), Empty()))
    if isinstance(ast, Plus):
        x = desugar(ast.child)
        return _flat_concat([x, Star(x)])
    if isinstance(ast, Repeat):
        x = desugar(ast.child)
        parts = [x] * ast.min
        if ast.max is None:
            parts.append(Star(x))
        elif ast.max > ast.min:
            parts.append(_bounded_tail(x, ast.max - ast.min))
        return _flat_concat(parts)
    raise TypeError(f"unknown node {ast!r}")


def _esc(ch, in_class=False):
    special = CLASS_SPECIAL if in_class else SPECIAL
    return "\\" + ch if ch in special else ch


def escape(text: str, in_class: bool = False) -> str:
    """Quote ``text`` so it matches literally (inside a class if ``in_class``)."""
    return "".join(_esc(c, in_class) for c in text)


def render(ast: Node) -> str:
    """Canonical pattern text for an AST; ``parse(render(ast))`` rebuilds it."""
    if isinstance(ast, Empty):
        return ""
    if isinstance(ast, Literal):
        return _esc(ast.char)
    if isinstance(ast, AnyChar):
        return "."
    if isinstance(ast, CharClass):
        body = "".join(_esc(c, True) for c in sorted(ast.chars))
        return "[" + ("^" if ast.negated else "") + body + "]"
    if isinstance(ast, Group):
        head = "(" if ast.name is None else f"(?<{ast.name}>"
        return head + render(ast.child) + ")"
    if isinstance(ast, Alternation):
        return "|".join(_wrap(c, (Alternation,)) for c in ast.children)
    if isinstance(ast, Concat):
        return "".join(_wrap(c, (Alternation, Concat, Empty)) for c in ast.children)
    if isinstance(ast, Star):
        return _operand(ast.child) + "*"
    if isinstance(ast, Plus):
        return _operand(ast.child) + "+"
    if isinstance(ast, Optional_):
        return _operand(ast.child) + "?"
    if isinstance(ast, Repeat):
        if ast.max == ast.min:
            q = f"{{{ast.min}}}"
        elif ast.max is None:
            q = f"{{{ast.min},}}"
        else:
            q = f"{{{ast.min},{ast.max}}}"
        return _operand(ast.child) + q
    raise TypeError(f"unknown node {ast!r}")


def _wrap(node, kinds):
    text = render(node)
    return f"(?:{text})" if isinstance(node, kinds) else text


def _operand(node):
    if isinstance(node, (Literal, CharClass, AnyChar, Group)):
        return render(node)
    return f"(?:{render(node)})"


def to_python_regex(pattern: str) -> str:
    """The same pattern in Python ``re`` syntax (only named groups differ)."""
    out = []
    i = 0
    in_class = False
    while i < len(pattern):
        ch = pattern[i]
        if ch == "\\":
            out.append(pattern[i:i + 2])
            i += 2
            continue
        if in_class:
            # a ']' right after '[' or '[^' cannot occur: empty classes are rejected
            in_class = ch != "]"
            out.append(ch)
            i += 1
        elif ch == "[":
            in_class = True
            out.append(ch)
            i += 1
            if pattern.startswith("^", i):
                out.append("^")
                i += 1
        elif pattern.startswith("(?<", i):
            out.append("(?P<")
            i += 3
        else:
            out.append(pattern[i])
            i += 1
    return "".join(out)
