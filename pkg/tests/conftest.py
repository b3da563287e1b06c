from __future__ import annotations

import sys
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from sosforge import load_language
from sosforge.syntax import Node, Var

sys.path.insert(0, str(Path(__file__).parent))

settings.register_profile(
    "default", deadline=None, max_examples=150, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

GOLDEN = Path(__file__).parent / "golden"


def xcl_terms(max_leaves: int = 12, extra: tuple = ()):
    """Closed combinatory-logic terms; ``extra`` adds binary computation formers."""
    leaves = st.sampled_from([Node("S"), Node("K"), Node("I")])
    binary = ("app", *extra)

    def grow(children):
        return st.one_of(
            st.builds(lambda op, a, b: Node(op, (a, b)), st.sampled_from(binary), children, children),
            st.builds(lambda a: Node("K'", (a,)), children),
            st.builds(lambda a: Node("S'", (a,)), children),
            st.builds(lambda a, b: Node("S''", (a, b)), children, children),
        )

    return st.recursive(leaves, grow, max_leaves=max_leaves)


@st.composite
def lambda_terms(draw, depth: int = 0, budget: int = 8):
    """Closed de Bruijn terms; indices are drawn from the binders in scope."""
    choices = ["lam"]
    if depth:
        choices.append("var")
    if budget > 2:
        choices.append("app")
    kind = draw(st.sampled_from(choices))
    if kind == "var" or budget <= 1 and depth:
        return Node("ne", (Var(draw(st.integers(0, depth - 1))),))
    if kind == "lam" or budget <= 2:
        return Node("lam", (draw(lambda_terms(depth + 1, budget - 1)),))
    left = draw(st.integers(1, budget - 2))
    return Node("app", (draw(lambda_terms(depth, left)), draw(lambda_terms(depth, budget - 1 - left))))


@pytest.fixture(scope="session")
def xcl():
    return load_language("xcl_cbn")


@pytest.fixture(scope="session")
def lam():
    return load_language("lambda_cbn")


ACCEPTANCE: list[str] = []


def record(n: int, ok: bool, detail: str) -> bool:
    """Print and remember one acceptance verdict line."""
    line = f"[criterion {n}] {'PASS' if ok else 'FAIL'}: {detail}"
    ACCEPTANCE.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)
