"""Extended combinatory logic, call-by-name.

We load the bundled rule file, watch one term reduce step by step, and then
read the big-step rules the workbench derives from the small-step ones.
"""

from __future__ import annotations

from sosforge import big_step, derive_bigstep_rules, load_language, multi_step
from sosforge.semantics import render_derivation, trace_lines

xcl = load_language("xcl_cbn")
rs = xcl.ruleset

# S K K behaves as the identity, so applied to I it should give I back.
term = xcl.parse("S K K I")

# Small steps: every line names the rule that fired at the top.
small = multi_step(rs, term, fuel=100, trace=True)
print("\n".join(trace_lines(rs, small.trace)))
print("small-step values:", [xcl.show(v) for v in small.values], "after", small.fuel_used, "levels")

# The same term under the derived big-step semantics, with its derivation tree.
big = big_step(rs, term, fuel=100, record=True)
print(render_derivation(rs, big.derivation))

# The rule schemas themselves. Rules marked (*) have an evaluation premise
# that always succeeds on a value and can be folded away.
for rule in derive_bigstep_rules(rs):
    print(rule.render_full(rs) + ("  (*)" if rule.simplifiable else ""))
