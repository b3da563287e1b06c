"""Untyped lambda calculus with de Bruijn indices, call-by-name.

Applying a value substitutes the argument into the body. Evaluation stops at
weak head normal form, so ``λ.(λ.0) 0`` is already a value.
"""

from __future__ import annotations

from sosforge import big_step, load_language, multi_step

lam = load_language("lambda_cbn")
rs = lam.ruleset

for text in ["(λ.λ.1) (λ.0) (λ.0 0)", "(λ.0 0) (λ.0)", "λ.(λ.0) 0"]:
    t = lam.parse(text)
    s, b = multi_step(rs, t, 100), big_step(rs, t, 100)
    print(f"{text:26} small {[lam.show(v) for v in s.values]}  big {[lam.show(v) for v in b.values]}")

# Self-application loops on itself. The small-step search sees the cycle and
# reports definite divergence rather than running out of fuel.
omega = multi_step(rs, lam.parse("(λ.0 0)(λ.0 0)"), 10_000)
print("omega: converged", omega.converged, "cyclic", omega.cyclic, "values", omega.values)
