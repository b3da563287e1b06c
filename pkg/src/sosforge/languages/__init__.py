"""Bundled languages and their regression corpora.

Each language is a rule file in ``data/`` plus an optional corpus
``data/<id>.corpus.json`` whose cases carry a provenance tag.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources

from ..effects import EffectKind
from ..notation import parse_term, show
from ..ruledsl import RuleSet, parse_ruleset
from ..syntax import Node, SignatureSpec, sort_check

LANGUAGES = (
    "xcl_cbn",
    "xtcl",
    "pcf",
    "xcl_nondet",
    "xcl_cbv_direct",
    "xcl_cbv_patched",
    "xcl_cbv_pretty",
    "lambda_cbn",
    "counterex_fg",
)

# Verdict of the strong separation checker each bundle is expected to receive.
EXPECTED_SEPARATION = {
    "xcl_cbn": True,
    "xtcl": True,
    "pcf": True,
    "xcl_nondet": True,
    "xcl_cbv_direct": False,
    "xcl_cbv_patched": True,
    "xcl_cbv_pretty": True,
    "lambda_cbn": True,
    "counterex_fg": False,
}

GRAMMARS = {
    "xcl_cbn": "S | K | I | K'(t) | S'(t) | S''(t, t) | t t   (application is left-associative)",
    "xtcl": "as xcl_cbn; terms must be simply typable (operators are polymorphic schemas)",
    "pcf": "as xtcl plus fix | true | false | if(t, t, t)",
    "xcl_nondet": "as xcl_cbn plus t ⊕ t | t ∥ t | t ∥ᵥ t",
    "xcl_cbv_direct": "as xcl_cbn (both application arguments evaluated)",
    "xcl_cbv_patched": "as xcl_cbn (both application arguments evaluated)",
    "xcl_cbv_pretty": "as xcl_cbn plus t ◖ t | t ⨟ t",
    "lambda_cbn": "λ.t | i | i∗(t, ...) | t t   (i a de Bruijn index; \\ may be typed for λ)",
    "counterex_fg": "g(t) | f(t) | Ω",
}


class UnknownLanguage(KeyError):
    pass


@dataclass(frozen=True)
class CorpusCase:
    term: str
    expect: dict
    provenance: str
    note: str = ""


@dataclass
class LanguageBundle:
    id: str
    ruleset: RuleSet
    corpus: list[CorpusCase] = field(default_factory=list)
    notes: str = ""
    grammar: str = ""

    @property
    def signature(self) -> SignatureSpec:
        return self.ruleset.signature

    @property
    def kind(self) -> EffectKind:
        return self.ruleset.kind

    def parse(self, text: str) -> Node:
        """Parse and sort-check a closed term of this language."""
        t = parse_term(self.signature, text)
        sort_check(self.signature, t)
        return t

    def show(self, t, max_size: int | None = None) -> str:
        return show(self.signature, t, max_size=max_size)


def rule_text(lang_id: str) -> str:
    if lang_id not in LANGUAGES:
        raise UnknownLanguage(lang_id)
    return resources.files(__package__).joinpath("data", f"{lang_id}.sos").read_text(encoding="utf-8")


@lru_cache(maxsize=None)
def load_language(lang_id: str) -> LanguageBundle:
    rs = parse_ruleset(rule_text(lang_id))
    bundle = LanguageBundle(lang_id, rs, notes=rs.notes, grammar=GRAMMARS.get(lang_id, ""))
    bundle.corpus.extend(_load_corpus(lang_id))
    for case in bundle.corpus:
        bundle.parse(case.term)
    return bundle


def _load_corpus(lang_id: str) -> list[CorpusCase]:
    path = resources.files(__package__).joinpath("data", f"{lang_id}.corpus.json")
    if not path.is_file():
        return []
    data = json.loads(path.read_text(encoding="utf-8"))
    return [CorpusCase(c["term"], c["expect"], c["provenance"], c.get("note", "")) for c in data["cases"]]


def corpus(lang_id: str) -> list[CorpusCase]:
    return list(load_language(lang_id).corpus)


@dataclass
class CaseOutcome:
    case: CorpusCase
    ok: bool
    problems: list[str]


def run_case(bundle: LanguageBundle, case: CorpusCase, fuel: int = 1000) -> CaseOutcome:
    """Check one corpus case against both evaluators and the step function."""
    from ..semantics import big_step, multi_step, step

    rs = bundle.ruleset
    t = bundle.parse(case.term)
    fuel = case.expect.get("fuel", fuel)
    want = lambda key: {bundle.parse(v) for v in case.expect[key]}
    problems: list[str] = []
    small = multi_step(rs, t, fuel)
    big = big_step(rs, t, fuel)

    def check(label: str, res, expected: set) -> None:
        if not res.converged:
            problems.append(f"{label}: not converged at fuel {fuel}")
        elif set(res.found.items) != expected:
            got = ", ".join(bundle.show(v) for v in res.values)
            problems.append(f"{label}: got {{{got}}}")

    if "values" in case.expect:
        check("small-step", small, want("values"))
        check("big-step", big, want("values"))
    if "small" in case.expect:
        check("small-step", small, want("small"))
    if "big" in case.expect:
        check("big-step", big, want("big"))
    if "first_step" in case.expect and set(step(rs, t).items) != want("first_step"):
        problems.append("first step differs")
    if case.expect.get("diverges"):
        for label, res in (("small-step", small), ("big-step", big)):
            if res.found.items:
                problems.append(f"{label}: found a value")
    return CaseOutcome(case, not problems, problems)


def omega(k: int) -> str:
    """``(I^k(S I I)) (I^k(S I I))``: a term of combinatory logic with no reachable value."""
    inner = "S I I"
    for _ in range(k):
        inner = f"I ({inner})"
    return f"({inner}) ({inner})"
