from __future__ import annotations

import random

import pytest

from sosforge import load_language, multi_step
from sosforge.fuzz import DIVERGE, MATCH, MISMATCH, GenConfig, TermGenerator, compare, fuzz, mismatch_class, shrink
from sosforge.languages import LANGUAGES, omega
from sosforge.syntax import is_closed, well_sorted


@pytest.mark.parametrize("lang", LANGUAGES)
def test_generated_terms_are_closed_and_well_sorted(lang):
    b = load_language(lang)
    gen = TermGenerator(b.ruleset, GenConfig(size=9))
    rng = random.Random(0)
    for _ in range(100):
        t = gen.generate(rng)
        assert 1 <= t.size <= 9
        assert is_closed(t) and well_sorted(b.signature, t)


def test_ratio_knob_shifts_the_mix(xcl):
    def computations(ratio):
        gen = TermGenerator(xcl.ruleset, GenConfig(size=15, value_ratio=ratio))
        rng = random.Random(1)
        return sum(gen.generate(rng).op == "app" for _ in range(300))

    assert computations(0.1) > computations(0.9)


def test_restricted_and_required_operators():
    nd = load_language("xcl_nondet")
    gen = TermGenerator(nd.ruleset, GenConfig(size=8, require=frozenset({"choice"})))
    rng = random.Random(3)
    for _ in range(50):
        t = gen.generate(rng)
        assert "choice" in {u.op for u in _nodes(t)}
    pretty = load_language("xcl_cbv_pretty")
    gen = TermGenerator(pretty.ruleset, GenConfig(size=10, ops=frozenset({"S", "K", "I", "app"})))
    for _ in range(50):
        assert {u.op for u in _nodes(gen.generate(rng))} <= {"S", "K", "I", "app"}


def _nodes(t):
    yield t
    for a in t.args:
        if hasattr(a, "op"):
            yield from _nodes(a)


def test_compare_classifies(xcl):
    from sosforge.languages import omega

    assert compare(xcl.ruleset, xcl.parse("S K K I"), 100).verdict == MATCH
    assert compare(xcl.ruleset, xcl.parse(omega(1)), 100).verdict == DIVERGE
    fg = load_language("counterex_fg")
    res = compare(fg.ruleset, fg.parse("f(f(g(Ω)))"), 100)
    assert res.verdict == MISMATCH and mismatch_class(res) == "different-values"


def test_shrinker_finds_the_published_witness():
    fg = load_language("counterex_fg")
    t = fg.parse("f(f(f(g(f(Ω)))))")
    cls = mismatch_class(compare(fg.ruleset, t, 100))
    small = shrink(fg.ruleset, t, lambda u: mismatch_class(compare(fg.ruleset, u, 100)) == cls)
    assert fg.show(small) == "f(f(g(Ω)))"


def test_fuzz_reports_are_reproducible():
    fg = load_language("counterex_fg")
    a = fuzz(fg.ruleset, 200, 6, 100, seed=9).to_json(fg.ruleset)
    b = fuzz(fg.ruleset, 200, 6, 100, seed=9).to_json(fg.ruleset)
    assert a == b and a["mismatch"] > 0
    for cx in a["counterexamples"]:
        shrunk = fg.parse(cx["shrunk"])
        assert mismatch_class(compare(fg.ruleset, shrunk, 100)) == cx["class"]


def test_empty_fuzz_run(xcl):
    rep = fuzz(xcl.ruleset, 0, 15, 100, seed=1)
    assert sum(rep.counts.values()) == 0 and not rep.mismatches


@pytest.mark.parametrize("lang", ["xcl_cbn", "xtcl", "xcl_nondet", "lambda_cbn"])
def test_small_fuzz_runs_agree(lang):
    rs = load_language(lang).ruleset
    rep = fuzz(rs, 150, 10, 300, seed=4)
    assert rep.counts[MISMATCH] == 0


def test_size_cap_stops_small_step_unconverged():
    b = load_language("xcl_cbn")
    t = b.parse(omega(1))
    r = multi_step(b.ruleset, t, 10_000, max_size=40)
    assert not r.converged and r.fuel_used < 10_000
    assert any(u.size > 40 for u in r.frontier)


def test_proof_of_divergence_against_growth_is_not_a_mismatch():
    # big-step closes the loop; the small-step terms keep growing.
    b = load_language("xcl_cbv_pretty")
    t = b.parse("S''(S ⨟ S'(I), S'(S'(S))) ⨟ I")
    res = compare(b.ruleset, t, 200)
    assert res.big.converged and not res.big.found.items
    assert not res.small.converged
    assert res.verdict == DIVERGE and not res.escalated
