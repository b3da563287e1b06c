"""Reference implementations that share no code with the library.

Terms are plain nested tuples. The only contact with library objects is the
conversion at the boundary (``from_node``), which reads ``op`` and ``args``.
"""

from __future__ import annotations

from collections import deque
from itertools import count

# ---------------------------------------------------------------------------
# boundary conversion


def from_node(t):
    """Library term -> nested tuple ``(op, *args)``; variables become ``("#", index)``."""
    if hasattr(t, "index"):
        return ("#", t.index)
    return (t.op, *(from_node(a) for a in t.args))


# ---------------------------------------------------------------------------
# combinatory logic, read straight off the rule table


COMBINATOR_VALUES = {"S", "K", "I", "K'", "S'", "S''", "parv"}


def is_value(t) -> bool:
    return t[0] in COMBINATOR_VALUES


def apply_value(f, r):
    """The labelled transition ``f --r--> result`` of a combinator value."""
    head = f[0]
    if head == "I":
        return r
    if head == "K":
        return ("K'", r)
    if head == "K'":
        return f[1]
    if head == "S":
        return ("S'", r)
    if head == "S'":
        return ("S''", f[1], r)
    if head == "S''":
        return ("app", ("app", f[1], r), ("app", f[2], r))
    if head == "parv":
        return ("par", ("app", f[1], r), ("app", f[2], r))
    raise ValueError(head)


def cbn_steps(t) -> list:
    """Successors under call-by-name application plus choice and lockstep parallel composition."""
    op = t[0]
    if op == "app":
        f, a = t[1], t[2]
        if is_value(f):
            return [apply_value(f, a)]
        return [("app", g, a) for g in cbn_steps(f)]
    if op == "choice":
        return [t[1], t[2]]
    if op == "par":
        left, right = t[1], t[2]
        lv, rv = is_value(left), is_value(right)
        if lv and rv:
            return [("parv", left, right)]
        if lv:
            return [("par", left, r) for r in cbn_steps(right)]
        if rv:
            return [("par", l, right) for l in cbn_steps(left)]
        return [("par", l, r) for l in cbn_steps(left) for r in cbn_steps(right)]
    raise ValueError(f"not a computation: {op}")


def cbv_steps(t) -> list:
    """Call-by-value application where both sides step together."""
    f, a = t[1], t[2]
    fv, av = is_value(f), is_value(a)
    if fv and av:
        return [apply_value(f, a)]
    if fv:
        return [("app", f, b) for b in cbv_steps(a)]
    if av:
        return [("app", g, a) for g in cbv_steps(f)]
    return [("app", g, b) for g in cbv_steps(f) for b in cbv_steps(a)]


def bfs(t, steps=cbn_steps, max_states: int = 20_000):
    """Explore every reachable state; returns the set of values, or ``None`` if the space is too large."""
    if is_value(t):
        return {t}
    seen = {t}
    queue = deque([t])
    found = set()
    while queue:
        u = queue.popleft()
        for v in steps(u):
            if is_value(v):
                found.add(v)
            elif v not in seen:
                if len(seen) >= max_states:
                    return None
                seen.add(v)
                queue.append(v)
    return found


def bfs_levels(t, depth: int, steps=cbn_steps):
    """Values reachable within ``depth`` reduction levels, and whether the search ran dry."""
    if is_value(t):
        return {t}, True
    seen = {t}
    level = [t]
    found = set()
    for _ in range(depth):
        if not level:
            break
        nxt = []
        for u in level:
            for v in steps(u):
                if is_value(v):
                    found.add(v)
                elif v not in seen:
                    seen.add(v)
                    nxt.append(v)
        level = nxt
    return found, not level


def normal_path(t, limit: int = 10_000) -> list:
    """The deterministic reduction sequence of a call-by-name term, ending at a value."""
    path = [t]
    while not is_value(path[-1]):
        if len(path) > limit:
            raise RuntimeError("no value within the limit")
        (nxt,) = cbn_steps(path[-1])
        path.append(nxt)
    return path


# ---------------------------------------------------------------------------
# lambda calculus with named variables


_fresh = count()


def to_named(t, names: tuple = ()):
    """De Bruijn tuple -> named term: ``("var", x) | ("lam", x, body) | ("app", f, a)``."""
    op = t[0]
    if op == "lam":
        x = f"x{next(_fresh)}"
        return ("lam", x, to_named(t[1], (x, *names)))
    if op == "ne":
        out = ("var", names[t[1][1]])
        for arg in t[2:]:
            out = ("app", out, to_named(arg, names))
        return out
    if op == "app":
        return ("app", to_named(t[1], names), to_named(t[2], names))
    raise ValueError(op)


def to_debruijn(t, names: tuple = ()):
    """Named term -> canonical de Bruijn tuple, with applications kept as ``app`` nodes."""
    op = t[0]
    if op == "var":
        return ("#", names.index(t[1]))
    if op == "lam":
        return ("lam", to_debruijn(t[2], (t[1], *names)))
    return ("app", to_debruijn(t[1], names), to_debruijn(t[2], names))


def canonical(t):
    """Library-shaped de Bruijn tuple -> the canonical form of :func:`to_debruijn`."""
    return to_debruijn(to_named(t))


def free_vars(t) -> set:
    if t[0] == "var":
        return {t[1]}
    if t[0] == "lam":
        return free_vars(t[2]) - {t[1]}
    return free_vars(t[1]) | free_vars(t[2])


def named_subst(t, x: str, s):
    """Capture-avoiding ``t[s/x]`` with renaming of binders."""
    op = t[0]
    if op == "var":
        return s if t[1] == x else t
    if op == "app":
        return ("app", named_subst(t[1], x, s), named_subst(t[2], x, s))
    y, body = t[1], t[2]
    if y == x:
        return t
    if y in free_vars(s):
        z = f"z{next(_fresh)}"
        body = named_subst(body, y, ("var", z))
        y = z
    return ("lam", y, named_subst(body, x, s))


def krivine(t, fuel: int = 100_000):
    """Weak head evaluation of a closed named term with an environment machine.

    Returns the value as a named term (the closure read back), or ``None``
    when ``fuel`` machine transitions do not suffice.
    """
    term, env, stack = t, {}, []
    for _ in range(fuel):
        op = term[0]
        if op == "app":
            stack.append((term[2], env))
            term = term[1]
        elif op == "var":
            term, env = env[term[1]]
        elif stack:
            env = {**env, term[1]: stack.pop()}
            term = term[2]
        else:
            return readback(term, env)
    return None


def readback(term, env):
    """Substitute the environment into a term; environment entries are closed."""
    for x in sorted(free_vars(term)):
        sub_term, sub_env = env[x]
        term = named_subst(term, x, readback(sub_term, sub_env))
    return term
