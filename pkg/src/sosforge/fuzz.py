"""Random closed terms and differential testing of the two evaluators."""

from __future__ import annotations

import random
from collections import Counter
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

from .ruledsl import RuleSet
from .semantics import EvalResult, big_step, multi_step
from .syntax import Node, Var, is_closed, iter_positions, replace_at, well_sorted

MATCH, MISMATCH, DIVERGE = "match", "mismatch", "diverge"


@dataclass
class GenConfig:
    size: int = 15
    value_ratio: float = 0.5
    ops: frozenset | None = None  # restrict generation to these operators
    require: frozenset = frozenset()  # every term must contain one of these
    max_tries: int = 2000


class TermGenerator:
    """Size-bounded random closed terms over a signature.

    Sizes are drawn uniformly from ``1..size``; a term of that size is built top
    down, choosing value or computation formers with ``value_ratio``. Typed
    signatures use rejection sampling on sort checking. Under a binding
    discipline variables are drawn from the binders in scope, so terms are
    closed by construction.
    """

    def __init__(self, rs: RuleSet, config: GenConfig | None = None) -> None:
        self.rs = rs
        self.sig = rs.signature
        self.config = config or GenConfig()
        allowed = self.config.ops
        ops = [op for op in self.sig.ops if allowed is None or op.name in allowed]
        self.ops = [op for op in ops if op.notation.kind != "neutral"]
        self.typed = self.sig.is_typed()

    def generate(self, rng: random.Random) -> Node:
        for _ in range(self.config.max_tries):
            n = rng.randint(1, self.config.size)
            t = self._build(rng, n, 0)
            if t is None:
                continue
            if self.config.require and not any(
                isinstance(u, Node) and u.op in self.config.require for _, u in iter_positions(t)
            ):
                continue
            if self.typed and not well_sorted(self.sig, t):
                continue
            return t
        raise RuntimeError("could not generate a term satisfying the constraints")

    def _min_size(self, op) -> int:
        return 1 + len(op.args) - (1 if op.variadic else 0)

    def _build(self, rng: random.Random, n: int, depth: int) -> Node | None:
        # An explicit work list keeps generation iterative: each entry fills
        # one argument slot of a parent under construction.
        root: list = [None]
        work = [(root, 0, n, depth)]
        while work:
            slot, idx, budget, d = work.pop()
            choice = self._choose(rng, budget, d)
            if choice is None:
                return None
            op, arg_budgets = choice
            if op == "var":
                slot[idx] = Node("ne", (Var(rng.randrange(d)),))
                continue
            node = [op.name, [None] * len(arg_budgets)]
            slot[idx] = node
            for i, b in enumerate(arg_budgets):
                work.append((node[1], i, b, d + op.arg_spec(i).binds))
        return _freeze(root[0])

    def _choose(self, rng: random.Random, budget: int, depth: int):
        cands = [op for op in self.ops if self._min_size(op) <= budget]
        exact = [op for op in cands if not op.args or op.variadic]
        if budget == 1:
            return (rng.choice(exact), []) if exact else None
        if budget == 2 and depth and self.sig.binding:
            return "var", []  # a variable occurrence is a neutral node over an index
        big = [op for op in cands if op.args and not op.variadic]
        if not big:
            return None
        values = [op for op in big if op.is_value]
        comps = [op for op in big if not op.is_value]
        if values and comps:
            group = values if rng.random() < self.config.value_ratio else comps
        else:
            group = values or comps
        op = rng.choice(group)
        k = len(op.args)
        cuts = sorted(rng.sample(range(1, budget - 1), k - 1)) if k > 1 else []
        parts = [b - a for a, b in zip([0, *cuts], [*cuts, budget - 1])]
        if any(p < 1 for p in parts):
            return None
        return op, parts


def _freeze(x):
    if isinstance(x, Node):
        return x
    # Iterative post-order conversion from nested lists to nodes.
    stack = [(x, False)]
    out: dict = {}
    while stack:
        item, done = stack.pop()
        if isinstance(item, Node):
            continue
        if done:
            out[id(item)] = Node(item[0], [a if isinstance(a, Node) else out[id(a)] for a in item[1]])
        else:
            stack.append((item, True))
            stack.extend((a, False) for a in item[1] if not isinstance(a, Node))
    return out[id(x)]


# ---------------------------------------------------------------------------
# differential testing


@dataclass
class CaseResult:
    term: Node
    verdict: str
    small: EvalResult
    big: EvalResult
    escalated: bool = False


SIZE_CAP = 20_000


def compare(rs: RuleSet, t: Node, fuel: int, escalate: int = 10, max_size: int | None = SIZE_CAP) -> CaseResult:
    """Run both evaluators and compare the values they find.

    If exactly one run converges and it found values, the other is retried
    with ``escalate`` times the fuel. Small-step runs whose terms outgrow
    ``max_size`` count as out of fuel. When neither run finds a value the
    verdict is ``diverge``: that covers a run proving divergence while the
    other runs out of resources.
    """
    small = multi_step(rs, t, fuel, max_size=max_size)
    big = big_step(rs, t, fuel)
    escalated = False
    if small.converged != big.converged and escalate > 1:
        done = small if small.converged else big
        if done.found.items:
            escalated = True
            if small.converged:
                big = big_step(rs, t, fuel * escalate)
            else:
                small = multi_step(rs, t, fuel * escalate, max_size=max_size)
    if small.converged and big.converged:
        verdict = MATCH if small.found.items == big.found.items else MISMATCH
    elif not small.found.items and not big.found.items:
        verdict = DIVERGE
    else:
        verdict = MISMATCH
    return CaseResult(t, verdict, small, big, escalated)


def mismatch_class(res: CaseResult) -> str | None:
    """Finer kind of a mismatch, kept fixed while shrinking."""
    if res.verdict != MISMATCH:
        return None
    if not (res.small.converged and res.big.converged):
        return "one-sided-convergence"
    if res.small.found.items and res.big.found.items:
        return "different-values"
    return "small-only" if res.small.found.items else "big-only"


@dataclass
class FuzzReport:
    language: str
    seed: int
    size: int
    count: int
    fuel: int
    counts: Counter = field(default_factory=Counter)
    mismatches: list = field(default_factory=list)  # (term, shrunk, small values, big values, class)
    fuel_ratio_max: float = 0.0

    def to_json(self, rs: RuleSet) -> dict:
        sh = lambda t: rs.show(t, max_size=400)
        return {
            "schema": "sosforge.fuzz/1",
            "language": self.language,
            "seed": self.seed,
            "size": self.size,
            "count": self.count,
            "fuel": self.fuel,
            "match": self.counts[MATCH],
            "mismatch": self.counts[MISMATCH],
            "diverge": self.counts[DIVERGE],
            "fuel_ratio_max": round(self.fuel_ratio_max, 4),
            "counterexamples": [
                {
                    "term": sh(m[0]),
                    "shrunk": sh(m[1]),
                    "small": [sh(v) for v in m[2]],
                    "big": [sh(v) for v in m[3]],
                    "class": m[4],
                }
                for m in self.mismatches
            ],
        }


def fuzz(
    rs: RuleSet,
    count: int,
    size: int,
    fuel: int,
    seed: int,
    config: GenConfig | None = None,
    shrink_limit: int = 3,
    on_case: Callable[[CaseResult], None] | None = None,
) -> FuzzReport:
    cfg = config or GenConfig()
    cfg.size = size
    gen = TermGenerator(rs, cfg)
    rng = random.Random(seed)
    report = FuzzReport(rs.name, seed, size, count, fuel)
    seen: set[str] = set()
    for _ in range(count):
        t = gen.generate(rng)
        res = compare(rs, t, fuel)
        report.counts[res.verdict] += 1
        if res.verdict == MATCH and res.small.fuel_used and res.big.fuel_used:
            ratio = res.big.fuel_used / res.small.fuel_used
            report.fuel_ratio_max = max(report.fuel_ratio_max, ratio, 1 / ratio)
        cls = mismatch_class(res)
        if cls is not None and cls not in seen and len(report.mismatches) < shrink_limit:
            # One shrunk witness per kind of mismatch.
            seen.add(cls)
            small = shrink(rs, t, lambda u: mismatch_class(compare(rs, u, fuel)) == cls)
            again = compare(rs, small, fuel)
            report.mismatches.append((t, small, again.small.values, again.big.values, cls))
        if on_case:
            on_case(res)
    return report


def shrink(rs: RuleSet, t: Node, keeps: Callable[[Node], bool], max_rounds: int = 50) -> Node:
    """Greedy shrinking: replace subterms by smaller closed, well-sorted terms while ``keeps`` holds."""
    sig = rs.signature
    nullary = [Node(op.name) for op in sig.value_ops if not op.args]
    for _ in range(max_rounds):
        improved = False
        for path, sub in iter_positions(t):
            if isinstance(sub, Var) or sub.size == 1:
                continue
            candidates = sorted(
                {a for a in _proper_subterms(sub)} | set(nullary), key=lambda u: (u.size, hash(u))
            )
            for cand in candidates:
                if cand.size >= sub.size:
                    continue
                new = replace_at(t, path, cand)
                if not is_closed(new) or not well_sorted(sig, new):
                    continue
                if keeps(new):
                    t = new
                    improved = True
                    break
            if improved:
                break
        if not improved:
            return t
    return t


def _proper_subterms(t: Node) -> Iterable[Node]:
    for path, u in iter_positions(t):
        if path and isinstance(u, Node):
            yield u


def classify_counts(results: Sequence[CaseResult]) -> Counter:
    return Counter(r.verdict for r in results)
