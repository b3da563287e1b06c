"""Choice and parallel composition over the finite powerset effect."""

from __future__ import annotations

from sosforge import big_step, derive_bigstep_rules, load_language, multi_step, step

nd = load_language("xcl_nondet")
rs = nd.ruleset

# One step of a choice offers both branches.
print([nd.show(s) for s in step(rs, nd.parse("(I K) ⊕ S")).items])

# Parallel composition evaluates both sides and pairs up their values.
term = nd.parse("(K ⊕ S) ∥ (I I)")
print("small:", [nd.show(v) for v in multi_step(rs, term, 100).values])
print("big:  ", [nd.show(v) for v in big_step(rs, term, 100).values])

# The compact rule listing folds head-independent cases.
for rule in derive_bigstep_rules(rs, compact=True):
    print(rule.render(rs))
