"""When small-step and derived big-step disagree.

The rule set below lets ``f`` rewrite its reducing argument into something
not headed by ``f``. The checker flags the rule, and the two evaluators then
disagree on a concrete term.
"""

from __future__ import annotations

from sosforge import check_strong_separation, load_language
from sosforge.fuzz import compare

fg = load_language("counterex_fg")
report = check_strong_separation(fg.ruleset)
print(report.to_text())

res = compare(fg.ruleset, fg.parse("f(f(g(Ω)))"), fuel=1000)
print("small-step:", [fg.show(v) for v in res.small.values])
print("big-step:  ", [fg.show(v) for v in res.big.values])
print("verdict:", res.verdict)
