import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from ctcregex.core import LabelAlphabet, PosteriorMatrix

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

ABCD = LabelAlphabet(tuple("abcd"), 0)

# patterns over {a,b,c,d} whose automata have no cycles through two or more states
POOL = [
    "a", "ab", "a|b", "(a|b)c", "[abc]", "[abc]+", "a*b", "a?b?c", "[ab]{2,3}", ".",
    ".*a.*", "(?<x>a)b*(?<y>[cd])?", "", "a{2}", "(a|bc)d", "[^a]b", "b+a", "(aa|b)", "d?",
    "(?<k>ab)|c*",
]


@pytest.fixture
def abcd():
    return ABCD


def random_matrix(rng, T, alphabet=ABCD, concentration=0.5):
    y = rng.dirichlet(np.full(alphabet.size, concentration), size=T)
    y = np.maximum(y, 1e-12)
    return PosteriorMatrix(y / y.sum(axis=1, keepdims=True), alphabet)


# ---- acceptance summary lines --------------------------------------------------

ACCEPTANCE_LINES = {}


def record_criterion(number, ok, detail):
    line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES[number] = line
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[n])
