"""Call-by-value application, three ways.

The direct rules step both sides of an application at once and fail the
separation check. The patched rules wait for the function side first. A third
variant adds two helper operators so the rules read more naturally; on terms
of the original signature it evaluates exactly like the patched one.
"""

from __future__ import annotations

import random

from sosforge import big_step, check_strong_separation, load_language, step
from sosforge.fuzz import GenConfig, TermGenerator

direct, patched, pretty = (load_language(x) for x in ("xcl_cbv_direct", "xcl_cbv_patched", "xcl_cbv_pretty"))
for b in (direct, patched, pretty):
    print(f"{b.id:16} separated: {check_strong_separation(b.ruleset).passed}")

t = "(I I)(I I)"
for b in (direct, patched):
    print(f"{b.id:16} first step of {t}:", [b.show(s) for s in step(b.ruleset, b.parse(t)).items])

# Compare the patched and pretty variants on random terms built from the shared operators.
gen = TermGenerator(pretty.ruleset, GenConfig(size=12, ops=frozenset({"S", "K", "I", "K'", "S'", "S''", "app"})))
rng = random.Random(3)
same = 0
for _ in range(500):
    u = gen.generate(rng)
    a, b = big_step(pretty.ruleset, u, 1000), big_step(patched.ruleset, u, 1000)
    same += (a.converged, a.found.items) == (b.converged, b.found.items)
print(f"pretty and patched agree on {same}/500 random terms")
