from __future__ import annotations

import random

import pytest

from oracles import canonical, from_node, krivine, to_named
from sosforge import big_step, load_language, multi_step
from sosforge.fuzz import GenConfig, TermGenerator
from sosforge.languages import LANGUAGES, UnknownLanguage, corpus, run_case
from sosforge.syntax import well_sorted


def test_unknown_language():
    with pytest.raises(UnknownLanguage):
        load_language("cobol")


def test_xcl_signature(xcl):
    values = sorted(op.name for op in xcl.signature.value_ops)
    assert values == ["I", "K", "K'", "S", "S'", "S''"]
    assert [op.name for op in xcl.signature.computation_ops] == ["app"]


def test_pcf_and_counterexample_signatures():
    pcf = load_language("pcf").signature
    assert {"fix", "if", "true", "false"} <= {op.name for op in pcf.ops}
    fg = load_language("counterex_fg").signature
    assert sorted((op.name, len(op.args)) for op in fg.ops) == [("f", 1), ("g", 1), ("Ω", 0)]


@pytest.mark.parametrize("lang", LANGUAGES)
def test_corpus(lang):
    b = load_language(lang)
    cases = corpus(lang)
    assert all(c.provenance in {"published", "derived", "trivial"} for c in cases)
    for case in cases:
        out = run_case(b, case)
        assert out.ok, (case.term, out.problems)


def test_every_language_has_a_grammar():
    for lang in LANGUAGES:
        assert load_language(lang).grammar


def test_pcf_never_gets_stuck():
    pcf = load_language("pcf")
    gen = TermGenerator(pcf.ruleset, GenConfig(size=12))
    rng = random.Random(11)
    for _ in range(300):
        t = gen.generate(rng)
        assert well_sorted(pcf.signature, t)
        for run in (multi_step, big_step):
            assert not run(pcf.ruleset, t, 300).stuck


def test_lambda_agrees_with_an_environment_machine(lam):
    gen = TermGenerator(lam.ruleset, GenConfig(size=10))
    rng = random.Random(5)
    compared = 0
    for _ in range(300):
        t = gen.generate(rng)
        r = big_step(lam.ruleset, t, 500)
        theirs = krivine(to_named(from_node(t)), fuel=50_000)
        if r.converged and r.found.items:
            (v,) = r.found.items
            assert theirs is not None
            from oracles import to_debruijn

            assert canonical(from_node(v)) == to_debruijn(theirs)
            compared += 1
    assert compared > 200


def test_pretty_big_step_agrees_with_the_patched_rules():
    pretty = load_language("xcl_cbv_pretty")
    patched = load_language("xcl_cbv_patched")
    ops = frozenset(op.name for op in patched.signature.ops)
    gen = TermGenerator(pretty.ruleset, GenConfig(size=12, ops=ops))
    rng = random.Random(2)
    for _ in range(300):
        t = gen.generate(rng)
        a, b = big_step(pretty.ruleset, t, 1000), big_step(patched.ruleset, t, 1000)
        assert (a.converged, a.found) == (b.converged, b.found)
