"""Small-step and derived big-step semantics for separated rule sets."""

from __future__ import annotations

import sys

from .effects import Effect, EffectKind
from .languages import LanguageBundle, load_language
from .notation import parse_template, parse_term, show
from .ruledsl import RuleSet, check_strong_separation, check_totality, derive_bigstep_rules, lift_powerset, parse_ruleset
from .semantics import EvalResult, big_step, derive_xi, gamma_c, gamma_v, multi_step, step

# Term operations recurse structurally; evaluation can build deep terms.
if sys.getrecursionlimit() < 10_000:
    sys.setrecursionlimit(10_000)

__version__ = "0.1.0"

__all__ = [
    "Effect",
    "EffectKind",
    "EvalResult",
    "LanguageBundle",
    "RuleSet",
    "big_step",
    "check_strong_separation",
    "check_totality",
    "derive_bigstep_rules",
    "derive_xi",
    "gamma_c",
    "gamma_v",
    "lift_powerset",
    "load_language",
    "multi_step",
    "parse_ruleset",
    "parse_template",
    "parse_term",
    "show",
    "step",
]
