import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from ctcregex.cli import main, spot_pattern
from ctcregex.core import LabelAlphabet, PosteriorMatrix, read_matrix, write_matrix

GOLDEN = Path(__file__).parent / "golden"


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def records(out):
    return [json.loads(line) for line in out.splitlines()]


@pytest.fixture
def digits(tmp_path, capsys):
    d = tmp_path / "digits"
    assert run(capsys, "gen", "--digits", 4, "--count", 3, "--seed", 7, "--out", d)[0] == 0
    return d


def manifest(d):
    rows = (d / "manifest.tsv").read_text().splitlines()
    assert rows[0] == "file\ttext\tframes"
    return [r.split("\t") for r in rows[1:]]


def test_gen_is_deterministic(tmp_path, capsys, digits):
    again = tmp_path / "again"
    run(capsys, "gen", "--digits", 4, "--count", 3, "--seed", 7, "--out", again)
    for f in ["manifest.tsv"] + [r[0] for r in manifest(digits)]:
        assert (digits / f).read_bytes() == (again / f).read_bytes()
    for name, text, frames in manifest(digits):
        with open(digits / name, newline="") as fh:
            m = read_matrix(fh)
        assert m.T == int(frames) and len(text) == 4


def test_gen_text_greedy_decodes_to_planted(tmp_path, capsys):
    d = tmp_path / "t"
    code, _, _ = run(capsys, "gen", "--text", "abba", "--count", 2, "--seed", 1, "--out", d,
                     "--p-spike", 0.8, "--p-nac", 0.8)
    assert code == 0
    for name, text, _ in manifest(d):
        code, out, _ = run(capsys, "decode", "--matrix", d / name, "--method", "greedy", "--regex", "[ab]+")
        assert code == 0 and records(out)[0]["word"] == "abba"


def test_decode_recovers_planted_number(capsys, digits):
    for name, text, frames in manifest(digits):
        code, out, err = run(capsys, "decode", "--matrix", digits / name, "--regex", "[0-9]{3,5}")
        assert code == 0 and err == ""
        (rec,) = records(out)
        assert list(rec) == ["word", "logprob", "path", "groups", "method"]
        assert rec["word"] == text and len(rec["path"]) == int(frames)
        assert rec["method"] == "regex-approx"
        for method in ("astar", "beam"):
            code, out, _ = run(capsys, "decode", "--matrix", digits / name, "--regex", "[0-9]{3,5}",
                               "--method", method, "--cont", "exact")
            assert records(out)[0]["word"] == text and records(out)[0]["method"] == method


def test_decode_vocab_method(tmp_path, capsys, digits):
    name, text, _ = manifest(digits)[0]
    words = tmp_path / "words.txt"
    words.write_text("\n".join(sorted({text, "1234", "0000"})) + "\n")
    code, out, _ = run(capsys, "decode", "--matrix", digits / name, "--method", "vocab", "--vocab", words)
    assert code == 0 and records(out)[0]["word"] == text and records(out)[0]["method"] == "vocab"
    assert run(capsys, "decode", "--matrix", digits / name, "--method", "vocab")[0] == 2


def _spiky(tmp_path, frames, chars=" abcst"):
    ab = LabelAlphabet(tuple(chars), 0)
    y = np.full((len(frames), ab.size), 0.1 / (ab.size - 1))
    for t, ch in enumerate(frames):
        y[t, ab.index(ch)] = 0.9
    path = tmp_path / "m.csv"
    with open(path, "w", newline="") as fh:
        write_matrix(PosteriorMatrix(y, ab), fh)
    return path


SENTENCE = ["<nac>", "a", "<nac>", " ", "b", "<nac>", "a", "t", " ", "<nac>", "s", "a", "t", "<nac>"]


def test_groups_flag_on_keyword_pattern(tmp_path, capsys):
    m = _spiky(tmp_path, SENTENCE)
    pattern = "(?:.*(?<pre>[ ]))?(?<keyword>bat)(?:(?<post>[ ]).*)?"
    code, out, _ = run(capsys, "decode", "--matrix", m, "--regex", pattern, "--groups")
    rec = records(out)[0]
    assert code == 0 and rec["word"] == "a bat sat"
    names = [g["name"] for g in rec["groups"]]
    assert names == ["pre", "keyword", "post"]
    assert rec["groups"][0] == {"name": "pre", "start": 4, "end": 4, "text": " ", "logprob": np.log(0.9)}
    _, out, _ = run(capsys, "decode", "--matrix", m, "--regex", pattern)
    assert records(out)[0]["groups"] == []
    _, out, _ = run(capsys, "decode", "--matrix", m, "--regex", pattern, "--groups", "--trim-nac", "false")
    kw = records(out)[0]["groups"][1]
    assert (kw["start"], kw["end"]) == (5, 8)


def test_spot(tmp_path, capsys):
    m = _spiky(tmp_path, SENTENCE)
    code, out, _ = run(capsys, "spot", "--matrix", m, "--keyword", "bat")
    rec = records(out)[0]
    assert code == 0 and rec["keyword"]["text"] == "bat"
    assert rec["pre"]["text"] == " " and rec["post"]["text"] == " "
    first = records(run(capsys, "spot", "--matrix", m, "--keyword", "a")[1])[0]
    assert first["pre"] is None and first["keyword"]["start"] == 2
    absent = records(run(capsys, "spot", "--matrix", m, "--keyword", "cat")[1])[0]
    assert absent["keyword"]["logprob"] < rec["keyword"]["logprob"] - 2
    assert run(capsys, "spot", "--matrix", m, "--keyword", "xyz")[0] == 3


def test_spot_pattern_template():
    ab = LabelAlphabet(tuple(' "(-ab'), 0)
    assert spot_pattern("ab", ab) == '(?:.*(?<pre>[ "(\\-]))?(?<keyword>ab)(?:(?<post>[ "(\\-]).*)?'
    assert spot_pattern("ab", LabelAlphabet(tuple("ab"), 0)) == "(?<keyword>ab)"


def test_vocab_dump(tmp_path, capsys):
    words = tmp_path / "w.txt"
    words.write_text("bat\ncat\n")
    out_path = tmp_path / "d.txt"
    code, out, err = run(capsys, "vocab", "--words", words, "--out", out_path, "--alphabet", "abct")
    assert code == 0 and out == "" and err == ""
    assert out_path.read_text() == (GOLDEN / "bc_at.dump").read_text()
    words.write_text("cat\nbat\nbat\n")
    code, _, err = run(capsys, "vocab", "--words", words, "--out", out_path, "--alphabet", "abct")
    assert code == 0 and "sorted" in err and len(err.splitlines()) == 1
    assert out_path.read_text() == (GOLDEN / "bc_at.dump").read_text()
    words.write_text("ab\n")
    code, out, _ = run(capsys, "vocab", "--words", words, "--out", "-")
    assert out.count("ARC") == 2 + 3 + 2  # chain arcs, NaC arcs, twin copies


def test_bench_report(tmp_path, capsys, digits):
    words = tmp_path / "w.txt"
    words.write_text("\n".join(f"{i:03d}" for i in range(1000)) + "\n")
    reports = []
    for i in range(2):
        rpt = tmp_path / f"r{i}.tsv"
        code, out, _ = run(capsys, "bench", "--dir", digits, "--regex", "[0-9]{3,5}",
                           "--methods", "regex,vocab,beam,astar,greedy", "--vocab", words, "--report", rpt)
        assert code == 0 and out == ""
        rows = [l.split("\t") for l in rpt.read_text().splitlines()]
        assert rows[0] == ["method", "matrices", "mean_ms", "combinations_per_step", "mismatches", "infeasible"]
        reports.append([r[:2] + r[3:] for r in rows])
    assert reports[0] == reports[1]
    by = {r[0]: r for r in reports[0][1:]}
    assert by["regex"][3] == "0" and by["astar"][3] == "0"
    assert by["vocab"][3] == "3"  # planted 4-digit numbers are not in a 3-digit vocabulary


def test_bench_report_to_stdout(capsys, digits):
    code, out, _ = run(capsys, "bench", "--dir", digits, "--regex", "[0-9]{3,5}",
                       "--methods", "regex,greedy", "--report", "-")
    assert code == 0
    lines = out.splitlines()
    assert lines[0].startswith("method\tmatrices") and [l.split("\t")[0] for l in lines[1:]] == ["regex", "greedy"]


@pytest.mark.parametrize("argv, code", [
    (["decode", "--matrix", "missing.csv", "--regex", "1"], 3),
    (["decode"], 2),
    (["decode", "--matrix", "x", "--regex", "1", "--beam-width", "0"], 2),
    (["gen", "--digits", "3", "--text", "12", "--out", "o"], 2),
    (["bench", "--dir", ".", "--regex", "1", "--methods", "fast", "--report", "r"], 2),
    (["frobnicate"], 2),
])
def test_usage_and_io_errors(capsys, argv, code):
    got, out, err = run(capsys, *argv)
    assert got == code and out == "" and len(err.splitlines()) == 1 and err.startswith("ctcregex: error:")


def test_exit_codes(tmp_path, capsys, digits):
    m = digits / manifest(digits)[0][0]
    cases = [
        (["--regex", "[0-9"], 3),
        (["--regex", "[a-z]"], 3),
        (["--regex", "(12)*"], 5),
        (["--regex", "[0-9]{40}"], 4),
        (["--regex", "[0-9]{3,5}", "--method", "beam", "--beam-width", "1"], 0),
    ]
    for extra, code in cases:
        got, out, err = run(capsys, "decode", "--matrix", m, *extra)
        assert got == code, extra
        if code:
            assert out == "" and len(err.splitlines()) == 1
    bad = tmp_path / "bad.csv"
    bad.write_text("<nac>,a\n0.5,0.4\n")
    assert run(capsys, "decode", "--matrix", bad, "--regex", "a")[0] == 3


def test_beam_width_one_can_be_infeasible(tmp_path, capsys):
    # greedy reads "aaa..."; a width-one beam never reaches the required "b"
    ab = LabelAlphabet(tuple("ab"), 0)
    path = tmp_path / "adv.csv"
    with open(path, "w", newline="") as fh:
        write_matrix(PosteriorMatrix([[0.1, 0.8, 0.1]] * 3, ab), fh)
    code, out, err = run(capsys, "decode", "--matrix", path, "--regex", "b", "--method", "beam", "--beam-width", 1)
    assert code == 4 and out == "" and "beam" in err
    assert run(capsys, "decode", "--matrix", path, "--regex", "b")[0] == 0


def test_module_entry_point(digits):
    name = manifest(digits)[0][0]
    proc = subprocess.run([sys.executable, "-m", "ctcregex", "decode", "--matrix", str(digits / name),
                           "--regex", "[0-9]{3,5}"], capture_output=True, text=True)
    assert proc.returncode == 0 and json.loads(proc.stdout)["word"] == manifest(digits)[0][1]
    proc = subprocess.run([sys.executable, "-m", "ctcregex", "decode", "--matrix", str(digits / name),
                           "--regex", "(12)*"], capture_output=True, text=True)
    assert proc.returncode == 5 and proc.stdout == ""
