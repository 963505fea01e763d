"""Command-line entry point: ``ctcregex {decode,spot,gen,vocab,bench}``.

Results go to standard output, one JSON record per decode; diagnostics are a
single line on standard error.  Exit codes: 0 ok, 2 usage, 3 parse or
validation error, 4 no feasible path, 5 unsupported cycle structure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import regex as rx
from .automata import compile_pattern, compile_vocabulary, dump
from .bench import METHODS, run_bench
from .core import LabelAlphabet, read_matrix, write_matrix
from .ctc import VocabularyTrie
from .errors import (AlphabetError, CycleOrderError, MatrixFormatError, NoFeasiblePathError,
                     RegexSyntaxError, SearchLimitError, VocabularyError)
from .synth import DIGITS, GeneratorSpec, generate, random_digits

EXIT_OK, EXIT_USAGE, EXIT_INPUT, EXIT_INFEASIBLE, EXIT_CYCLE = 0, 2, 3, 4, 5
DEFAULT_SEPARATORS = ' "(-'


class _Fail(Exception):
    def __init__(self, code, message):
        super().__init__(message)
        self.code = code


def _bool(text):
    if text.lower() in ("true", "1", "yes"):
        return True
    if text.lower() in ("false", "0", "no"):
        return False
    raise argparse.ArgumentTypeError(f"expected true or false, got {text!r}")


def _pair(text):
    try:
        lo, hi = (int(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected MIN,MAX, got {text!r}") from None
    return lo, hi


def _load_matrix(path):
    try:
        with open(path, encoding="utf-8", newline="") as fh:
            return read_matrix(fh)
    except OSError as exc:
        raise _Fail(EXIT_INPUT, f"cannot read matrix {path}: {exc.strerror}") from None


def _load_words(path):
    try:
        with open(path, encoding="utf-8") as fh:
            words = [w.rstrip("\n").rstrip("\r") for w in fh]
    except OSError as exc:
        raise _Fail(EXIT_INPUT, f"cannot read word list {path}: {exc.strerror}") from None
    while words and words[-1] == "":
        words.pop()
    if any(w == "" for w in words):
        raise _Fail(EXIT_INPUT, f"blank line in word list {path}")
    return words


def _emit(record):
    sys.stdout.write(json.dumps(record, ensure_ascii=False) + "\n")


def _record(result, groups):
    rec = result.to_record()
    if not groups:
        rec["groups"] = []
    return rec


def cmd_decode(args):
    matrix = _load_matrix(args.matrix)
    if args.method == "vocab":
        if not args.vocab:
            raise _Fail(EXIT_USAGE, "--method vocab needs --vocab")
        res = VocabularyTrie(_load_words(args.vocab), matrix.alphabet).decode(matrix)
        _emit(_record(res, args.groups))
        return EXIT_OK
    if args.regex is None:
        raise _Fail(EXIT_USAGE, "--regex is required for this method")
    ext = compile_pattern(args.regex, matrix.alphabet)
    from .bench import run_method
    from .decoder import decode
    if args.method == "regex":
        res = decode(ext, matrix, args.cont, trim_nac=args.trim_nac)
    else:
        res = run_method(args.method, ext, matrix, beam_width=args.beam_width)
    if not res.feasible:
        raise _Fail(EXIT_INFEASIBLE, f"{args.method} found no path accepted by the pattern")
    _emit(_record(res, args.groups))
    return EXIT_OK


def spot_pattern(keyword: str, alphabet: LabelAlphabet, separators: str = DEFAULT_SEPARATORS) -> str:
    """Keyword template with optional context groups ``pre`` and ``post``.

    Separators outside the alphabet are dropped; with none left the pattern
    is the keyword alone.
    """
    for ch in keyword:
        alphabet.index(ch)
    kw = rx.escape(keyword)
    seps = sorted({c for c in separators if c in alphabet})
    if not seps:
        return f"(?<keyword>{kw})"
    cls = "[" + rx.escape("".join(seps), in_class=True) + "]"
    return f"(?:.*(?<pre>{cls}))?(?<keyword>{kw})(?:(?<post>{cls}).*)?"


def cmd_spot(args):
    matrix = _load_matrix(args.matrix)
    if not args.keyword:
        raise _Fail(EXIT_USAGE, "--keyword must not be empty")
    pattern = spot_pattern(args.keyword, matrix.alphabet, args.separators)
    from .decoder import decode
    res = decode(compile_pattern(pattern, matrix.alphabet), matrix, args.cont)
    groups = {g.name: g for g in res.groups}
    rec = {
        "keyword": args.keyword,
        "pattern": pattern,
        "word": res.word,
        "logprob": res.logprob,
    }
    for name in ("keyword", "pre", "post"):
        g = groups.get(name)
        rec[name] = None if g is None else g.to_record()
    _emit(rec)
    return EXIT_OK


def cmd_gen(args):
    if (args.text is None) == (args.digits is None):
        raise _Fail(EXIT_USAGE, "give exactly one of --text or --digits")
    if args.digits is not None:
        alphabet = DIGITS
        if args.digits < 1:
            raise _Fail(EXIT_USAGE, "--digits must be positive")
    else:
        alphabet = LabelAlphabet.from_text(args.alphabet or args.text)
        for ch in args.text:
            alphabet.index(ch)
    spec = GeneratorSpec("", frames_per_char=args.frames_per_char, gap=args.gap, margin=args.margin,
                         p_spike=args.p_spike, spike_jitter=args.spike_jitter, p_nac=args.p_nac,
                         nac_jitter=args.nac_jitter, concentration=args.concentration)
    rng = np.random.default_rng(args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    width = max(5, len(str(args.count - 1)))
    lines = ["file\ttext\tframes"]
    for i in range(args.count):
        text = random_digits(rng, args.digits) if args.digits is not None else args.text
        planted = generate(replace(spec, text=text), alphabet, rng)
        name = f"m{i:0{width}d}.csv"
        with open(out / name, "w", encoding="utf-8", newline="\n") as fh:
            write_matrix(planted.matrix, fh)
        lines.append(f"{name}\t{text}\t{planted.matrix.T}")
    (out / "manifest.tsv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    return EXIT_OK


def cmd_vocab(args):
    words = _load_words(args.words)
    if not words:
        raise _Fail(EXIT_INPUT, "word list is empty")
    clean = sorted(set(words))
    if clean != words:
        print(f"warning: {args.words}: word list sorted and de-duplicated", file=sys.stderr)
    alphabet = LabelAlphabet.from_text(args.alphabet or "".join(clean))
    text = dump(compile_vocabulary(clean, alphabet))
    if args.out == "-":
        sys.stdout.write(text)
    else:
        Path(args.out).write_text(text, encoding="utf-8")
    return EXIT_OK


def cmd_bench(args):
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    for m in methods:
        if m not in METHODS:
            raise _Fail(EXIT_USAGE, f"unknown method {m!r} (choose from {', '.join(METHODS)})")
    files = sorted(p for p in os.listdir(args.dir) if p.endswith(".csv"))
    if not files:
        raise _Fail(EXIT_INPUT, f"no .csv matrices in {args.dir}")
    matrices = [_load_matrix(os.path.join(args.dir, f)) for f in files]
    alphabet = matrices[0].alphabet
    if any(m.alphabet != alphabet for m in matrices):
        raise _Fail(EXIT_INPUT, "matrices in the directory use different label alphabets")
    ext = compile_pattern(args.regex, alphabet)
    trie = None
    if "vocab" in methods:
        if not args.vocab:
            raise _Fail(EXIT_USAGE, "method vocab needs --vocab")
        trie = VocabularyTrie(_load_words(args.vocab), alphabet)
    report = run_bench(matrices, ext, methods, names=files, cont=args.cont,
                       beam_width=args.beam_width, trie=trie)
    if args.report == "-":
        sys.stdout.write(report.to_tsv())
    else:
        Path(args.report).write_text(report.to_tsv(), encoding="utf-8")
    return EXIT_OK


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _Fail(EXIT_USAGE, f"{self.prog}: {message}")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="ctcregex", description="Regex-constrained decoding of CTC posterior matrices.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    d = sub.add_parser("decode", help="best path of a matrix under a pattern")
    d.add_argument("--matrix", required=True)
    d.add_argument("--regex")
    d.add_argument("--method", choices=METHODS, default="regex")
    d.add_argument("--cont", choices=("exact", "approx", "top2"), default="approx")
    d.add_argument("--beam-width", type=int, default=100)
    d.add_argument("--groups", action="store_true", help="include capturing-group records")
    d.add_argument("--trim-nac", type=_bool, default=True)
    d.add_argument("--vocab")
    d.set_defaults(func=cmd_decode)

    s = sub.add_parser("spot", help="keyword spotting with context groups")
    s.add_argument("--matrix", required=True)
    s.add_argument("--keyword", required=True)
    s.add_argument("--separators", default=DEFAULT_SEPARATORS)
    s.add_argument("--cont", choices=("exact", "approx", "top2"), default="approx")
    s.set_defaults(func=cmd_spot)

    g = sub.add_parser("gen", help="write synthetic matrices and a manifest")
    g.add_argument("--text")
    g.add_argument("--digits", type=int)
    g.add_argument("--alphabet", help="characters of the label alphabet (default: those of --text)")
    g.add_argument("--count", type=int, default=1)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    g.add_argument("--frames-per-char", type=_pair, default=(1, 2))
    g.add_argument("--gap", type=_pair, default=(0, 2))
    g.add_argument("--margin", type=_pair, default=(1, 3))
    g.add_argument("--p-spike", type=float, default=0.8)
    g.add_argument("--spike-jitter", type=float, default=0.0)
    g.add_argument("--p-nac", type=float, default=0.8)
    g.add_argument("--nac-jitter", type=float, default=0.0)
    g.add_argument("--concentration", type=float, default=0.5)
    g.set_defaults(func=cmd_gen)

    v = sub.add_parser("vocab", help="dump the extended automaton of a word list")
    v.add_argument("--words", required=True)
    v.add_argument("--out", required=True)
    v.add_argument("--alphabet")
    v.set_defaults(func=cmd_vocab)

    b = sub.add_parser("bench", help="time decoders on a directory of matrices")
    b.add_argument("--dir", required=True)
    b.add_argument("--regex", required=True)
    b.add_argument("--methods", required=True, help="comma-separated: " + ",".join(METHODS))
    b.add_argument("--vocab")
    b.add_argument("--cont", choices=("exact", "approx", "top2"), default="approx")
    b.add_argument("--beam-width", type=int, default=100)
    b.add_argument("--report", required=True, help="TSV output path, or - for stdout")
    b.set_defaults(func=cmd_bench)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        try:
            args = parser.parse_args(argv)
        except SystemExit as exc:  # --help
            return EXIT_USAGE if exc.code else EXIT_OK
        if getattr(args, "beam_width", 1) < 1:
            raise _Fail(EXIT_USAGE, "--beam-width must be at least 1")
        if getattr(args, "count", 1) < 1:
            raise _Fail(EXIT_USAGE, "--count must be at least 1")
        return args.func(args)
    except _Fail as exc:
        code, msg = exc.code, str(exc)
    except (MatrixFormatError, RegexSyntaxError, AlphabetError, VocabularyError) as exc:
        code, msg = EXIT_INPUT, str(exc)
    except NoFeasiblePathError as exc:
        code, msg = EXIT_INFEASIBLE, str(exc)
    except CycleOrderError as exc:
        code, msg = EXIT_CYCLE, str(exc)
    except SearchLimitError as exc:
        code, msg = EXIT_INPUT, str(exc)
    print(f"ctcregex: error: {' '.join(msg.split())}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
