"""Operational model, fueled evaluators and the derived big-step law.

``step`` is one application of the operational model, ``multi_step`` iterates
it breadth-first (the Kleene chain of the multi-step semantics) and
``big_step`` evaluates strict arguments, applies the derived big-step law
``xi`` and recurses (the Kleene chain of the big-step semantics). Both
evaluators are iterative, so deep derivations do not hit the Python stack.

Evaluation results live in a pointed effect: a deterministic law is evaluated
in the partial effect, so a diverging term has an empty ``found`` set.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Sequence, Union

from .effects import Effect, EffectKind, bottom, dist_chi, leq, lift, of, sorted_items
from .ruledsl import (
    RED,
    CompRule,
    ConsumeBody,
    Consumes,
    ObsBody,
    Observes,
    Reduces,
    RuleSet,
    possible_shapes,
)
from .syntax import Meta, Node, OperatorDescriptor, TNode, TSubst, instantiate, substitute_template


class SemanticsError(Exception):
    pass


class NoValueRule(SemanticsError):
    pass


class NoMatchingRule(SemanticsError):
    """No computation rule applies; under the deterministic effect this breaks totality."""


class Inconclusive(SemanticsError):
    """A lemma check could not decide because an evaluation ran out of fuel."""


class FuelExhausted(SemanticsError):
    pass


# ---------------------------------------------------------------------------
# observations and behaviours


@dataclass(frozen=True)
class Structural:
    tag: str
    payload: tuple = ()


@dataclass(frozen=True)
class Consuming:
    """A value that consumes an argument: ``apply(a)`` instantiates ``body`` with ``label := a``."""

    label: str
    body: object
    env: tuple = ()

    def apply(self, arg) -> Node:
        env = dict(self.env)
        env[self.label] = arg
        return instantiate(self.body, env)


Observation = Union[Structural, Consuming]


@dataclass(frozen=True)
class Obs:
    effect: Effect


@dataclass(frozen=True)
class Red:
    effect: Effect


def shape_of(o) -> str:
    return "fun" if isinstance(o, Consuming) else "obs:" + o.tag


# ---------------------------------------------------------------------------
# helpers over a rule set


def eval_kind(law: RuleSet) -> EffectKind:
    """The pointed effect evaluation results live in."""
    return EffectKind.PARTIAL if law.kind is EffectKind.DET else law.kind


def is_value_term(law: RuleSet, t) -> bool:
    return law.signature.op(t.op).is_value


def _bind_metas(metas: Sequence[Meta], items: Sequence, env: dict) -> bool:
    """Bind argument metas (a trailing one may be a spread) to items; False on arity clash."""
    n = len(metas)
    if n and metas[-1].spread:
        if len(items) < n - 1:
            return False
        for m, x in zip(metas[:-1], items):
            env[m.name] = x
        env[metas[-1].name] = tuple(items[n - 1 :])
        return True
    if len(items) != n:
        return False
    for m, x in zip(metas, items):
        env[m.name] = x
    return True


def gamma_v(law: RuleSet, v: Node):
    """The observation of a value, by its unique value rule."""
    rule = law.value_rules.get(v.op)
    if rule is None:
        raise NoValueRule(v.op)
    env: dict = {}
    if not _bind_metas(rule.arg_metas, v.args, env):
        raise NoValueRule(f"{v.op} applied to {len(v.args)} arguments")
    body = rule.body
    if isinstance(body, ObsBody):
        payload: list = []
        for p in body.payload:
            if isinstance(p, Meta) and p.spread:
                payload.extend(env[p.name])
            else:
                payload.append(instantiate(p, env))
        return Structural(body.tag, tuple(payload))
    return Consuming(body.label, body.body, tuple(sorted(env.items())))


def _premise_env(rule: CompRule, t: Node, obs: dict[int, object], strict: Sequence[int]) -> dict | None:
    """Environment for a rule's argument metas and non-reducing premises, or None if it does not fire."""
    env: dict = {}
    if not _bind_metas(rule.arg_metas, t.args, env):
        return None
    for i, p in zip(strict, rule.premises):
        if isinstance(p, Observes):
            o = obs[i]
            if not isinstance(o, Structural) or o.tag != p.tag or not _bind_metas(p.payload, o.payload, env):
                return None
    for i, p in zip(strict, rule.premises):
        if isinstance(p, Consumes) and p.target is not None:
            env[p.target] = obs[i].apply(instantiate(p.label, env))
    return env


def _fire(law: RuleSet, t: Node, cache: dict) -> list[tuple[str, Node]]:
    """One application of the computation rules to ``t``; strict computation children must be cached."""
    op = law.signature.op(t.op)
    strict = op.strict_positions
    shapes = []
    obs: dict[int, object] = {}
    reds: dict[int, Effect] = {}
    for i in strict:
        c = t.args[i]
        if law.signature.op(c.op).is_value:
            o = gamma_v(law, c)
            obs[i] = o
            shapes.append(shape_of(o))
        else:
            reds[i] = cache[c]
            shapes.append(RED)
    rules = law.dispatch.get((t.op, tuple(shapes)))
    if rules is None:
        rules = [r for r in law.rules_for(t.op) if r.covers(shapes)]
    out: list[tuple[str, Node]] = []
    for r in rules:
        env = _premise_env(r, t, obs, strict)
        if env is None:
            continue
        red_prem = [(p.target, reds[i]) for i, p in zip(strict, r.premises) if isinstance(p, Reduces)]
        if not red_prem:
            out.append((r.name, instantiate(r.conclusion, env)))
            continue
        for combo in itertools.product(*(sorted_items(e) for _, e in red_prem)):
            env2 = dict(env)
            for (name, _), val in zip(red_prem, combo):
                env2[name] = val
            out.append((r.name, instantiate(r.conclusion, env2)))
    return out


def _collect(law: RuleSet, t: Node, fired: list[tuple[str, Node]]) -> Effect:
    results = {s for _, s in fired}
    if law.kind is EffectKind.DET:
        if not results:
            raise NoMatchingRule(f"no rule applies to {law.show(t, max_size=60)}")
        if len(results) > 1:
            raise NoMatchingRule(f"several rules apply to {law.show(t, max_size=60)} under the deterministic effect")
    return of(law.kind, results)


def gamma_c(law: RuleSet, c: Node, cache: dict | None = None) -> Effect:
    """The one-step reducts of a computation (effect of the law's kind)."""
    cache = {} if cache is None else cache
    hit = cache.get(c)
    if hit is not None:
        return hit
    sig = law.signature
    stack = [c]
    while stack:
        t = stack[-1]
        if t in cache:
            stack.pop()
            continue
        op = sig.op(t.op)
        pending = [
            t.args[i] for i in op.strict_positions if not sig.op(t.args[i].op).is_value and t.args[i] not in cache
        ]
        if pending:
            stack.extend(pending)
            continue
        cache[t] = _collect(law, t, _fire(law, t, cache))
        stack.pop()
    return cache[c]


def step(law: RuleSet, t: Node, cache: dict | None = None) -> Effect:
    """``unit(t)`` on values, the reducts on computations."""
    if is_value_term(law, t):
        return of(law.kind, [t])
    return gamma_c(law, t, cache)


def step_rules(law: RuleSet, t: Node, cache: dict | None = None) -> list[tuple[str, Node]]:
    """Like :func:`step` but names the top-level rule behind each successor."""
    if is_value_term(law, t):
        return []
    cache = {} if cache is None else cache
    sig = law.signature
    for i in sig.op(t.op).strict_positions:
        if not sig.op(t.args[i].op).is_value:
            gamma_c(law, t.args[i], cache)
    return sorted(set(_fire(law, t, cache)), key=lambda p: (p[0], p[1].size, hash(p[1])))


def behaviour(law: RuleSet, t: Node, cache: dict | None = None):
    if is_value_term(law, t):
        return Obs(of(law.kind, [gamma_v(law, t)]))
    return Red(gamma_c(law, t, cache))


# ---------------------------------------------------------------------------
# evaluation results


@dataclass(frozen=True)
class TraceRecord:
    term: Node
    rules: tuple[str, ...]
    successors: tuple[Node, ...]


@dataclass
class EvalResult:
    found: Effect
    frontier: frozenset
    fuel_used: int
    converged: bool
    cyclic: bool = False
    stuck: frozenset = frozenset()
    trace: list = field(default_factory=list, repr=False, compare=False)
    derivation: object = field(default=None, repr=False, compare=False)

    @property
    def values(self) -> list:
        return sorted_items(self.found)

    @property
    def diverged(self) -> bool:
        """Definite divergence: the reachable space was exhausted without a value."""
        return self.converged and not self.found.items and not self.stuck

    def require(self) -> Effect:
        if not self.converged:
            raise FuelExhausted(f"not converged after {self.fuel_used} fuel; frontier of {len(self.frontier)} terms")
        return self.found


# ---------------------------------------------------------------------------
# multi-step evaluation


def multi_step(
    law: RuleSet,
    t: Node,
    fuel: int,
    trace: bool = False,
    max_frontier: int | None = None,
    max_size: int | None = None,
) -> EvalResult:
    """Iterate the step function breadth-first, at most ``fuel`` levels deep.

    Values reached are collected in ``found``; computations already visited are
    not explored again, so a finite reachable state space is exhausted and the
    result is then exact even for looping terms (``cyclic``). ``max_frontier``
    and ``max_size`` are extra resource bounds: exceeding either stops the run
    unconverged, exactly as running out of fuel does.
    """
    if fuel < 0:
        raise ValueError("fuel must be non-negative")
    kind = eval_kind(law)
    if is_value_term(law, t):
        return EvalResult(of(kind, [t]), frozenset(), 0, True)
    visited = {t}
    frontier = [t]
    found: set = set()
    stuck: set = set()
    records: list[TraceRecord] = []
    cyclic = False
    used = 0
    cache: dict = {}
    while frontier and used < fuel:
        used += 1
        nxt: list = []
        for c in frontier:
            if trace:
                fired = step_rules(law, c, cache)
                succ = sorted({s for _, s in fired}, key=lambda s: (s.size, hash(s)))
                records.append(TraceRecord(c, tuple(sorted({r for r, _ in fired})), tuple(succ)))
                if law.kind is EffectKind.DET and len(succ) != 1:
                    _collect(law, c, fired)
            else:
                succ = sorted_items(gamma_c(law, c, cache))
            if not succ:
                stuck.add(c)
            for s in succ:
                if is_value_term(law, s):
                    found.add(s)
                elif s in visited:
                    cyclic = True
                else:
                    visited.add(s)
                    nxt.append(s)
        frontier = nxt
        if max_frontier is not None and len(frontier) > max_frontier:
            break
        if max_size is not None and any(s.size > max_size for s in frontier):
            break
        if len(cache) > 200_000:
            cache.clear()
    return EvalResult(
        of(kind, found),
        frozenset(frontier),
        used,
        not frontier,
        cyclic=cyclic,
        stuck=frozenset(stuck),
        trace=records,
    )


# ---------------------------------------------------------------------------
# the derived big-step law


@dataclass(frozen=True)
class XiSchema:
    op: str
    heads: tuple[str, ...]
    lhs: TNode  # f(x1, ..., xn) with canonical argument metas
    head_premises: tuple  # (strict argument meta, head pattern)
    head_metas: tuple  # per strict position: metas of the head's arguments
    lazy_metas: tuple  # (position, meta)
    bodies: Effect
    used_names: frozenset

    strict: tuple = ()
    # Bodies in which each place a strict argument's value is passed along
    # unchanged is wrapped in a marker node naming the argument position.
    marked_bodies: tuple = ()

    def bind(self, t: Node) -> dict | None:
        """Environment binding this schema's metas to the children of ``t``."""
        env: dict = {}
        for i, metas in zip(self.strict, self.head_metas):
            if not _bind_metas(metas, t.args[i].args, env):
                return None
        for i, m in self.lazy_metas:
            env[m.name] = t.args[i]
        return env


MARK = "@"


def unmark(tpl, replace: dict | None = None):
    """Drop position markers; ``replace`` maps positions to templates standing in for them."""
    if isinstance(tpl, TNode):
        if tpl.op.startswith(MARK):
            pos = int(tpl.op[len(MARK) :])
            if replace and pos in replace:
                return replace[pos]
            return unmark(tpl.args[0], replace)
        return TNode(tpl.op, tuple(unmark(a, replace) for a in tpl.args))
    if isinstance(tpl, TSubst):
        return TSubst(unmark(tpl.body, replace), unmark(tpl.arg, replace))
    return tpl


_POOL = ("r", "q", "p", "u", "w", "z", "a", "b", "c", "d", "e")


def _fresh(preferred: str, used: set[str]) -> str:
    if preferred not in used:
        return preferred
    for cand in _POOL:
        if cand not in used:
            return cand
    return next(f"{preferred}{i}" for i in itertools.count(1) if f"{preferred}{i}" not in used)


def canonical_arg_names(law: RuleSet, op: OperatorDescriptor) -> list[str]:
    """Argument metavariable names for an operator: the least naming used by its rules."""
    names = sorted(
        tuple(m.name for m in r.arg_metas) for r in law.rules_for(op.name) if len(r.arg_metas) == len(op.args)
    )
    if names and not any(m.spread for r in law.rules_for(op.name) for m in r.arg_metas):
        return list(names[0])
    return [f"x{i + 1}" for i in range(len(op.args))]


def head_tuples(law: RuleSet, op: OperatorDescriptor) -> list[tuple[str, ...]]:
    """Tuples of value formers that may head the strict arguments, sorted by name."""
    from .ruledsl import _compatible

    per_pos = []
    for i in op.strict_positions:
        want = op.args[i].sort
        per_pos.append(sorted(v.name for v in law.signature.value_ops if _compatible(v.result, want)))
    return list(itertools.product(*per_pos))


def xi_schema(law: RuleSet, op_name: str, heads: Sequence[str]) -> XiSchema:
    key = (op_name, tuple(heads))
    hit = law._xi_cache.get(key)
    if hit is not None:
        return hit
    sig = law.signature
    op = sig.op(op_name)
    strict = op.strict_positions
    if len(heads) != len(strict):
        raise SemanticsError(f"{op_name} has {len(strict)} strict arguments, got {len(heads)} heads")
    names = canonical_arg_names(law, op)
    used = set(names)
    head_tpls: dict[int, TNode] = {}
    head_metas = []
    sym_obs: dict[int, object] = {}
    premises = []
    for i, g in zip(strict, heads):
        vr = law.value_rules.get(g)
        if vr is None:
            raise NoValueRule(g)
        ren: dict = {}
        metas = []
        for m in vr.arg_metas:
            nm = _fresh(m.name, used)
            used.add(nm)
            new = Meta(nm, spread=m.spread)
            ren[m.name] = new
            metas.append(new)
        head_tpls[i] = TNode(g, tuple(metas))
        head_metas.append(tuple(metas))
        premises.append((Meta(names[i]), head_tpls[i]))
        body = vr.body
        if isinstance(body, ObsBody):
            sym_obs[i] = ObsBody(body.tag, tuple(substitute_template(p, ren) for p in body.payload))
        else:
            sym_obs[i] = (body, ren)
    lazy = tuple((i, Meta(names[i])) for i in op.lazy_positions)
    shapes = tuple(law.value_rules[g].shape for g in heads)
    marked: list = []
    for r in law.rules_for(op_name):
        if not r.covers(shapes):
            continue
        env: dict = {}
        for pos, m in enumerate(r.arg_metas):
            env[m.name] = TNode(f"{MARK}{pos}", (head_tpls[pos],)) if pos in head_tpls else Meta(names[pos])
        ok = True
        for i, p in zip(strict, r.premises):
            if isinstance(p, Observes):
                o = sym_obs[i]
                if not _bind_metas(p.payload, list(o.payload), env):
                    ok = False
        if not ok:
            continue
        for i, p in zip(strict, r.premises):
            if isinstance(p, Consumes) and p.target is not None:
                cbody, ren = sym_obs[i]
                label = substitute_template(p.label, env)
                env[p.target] = substitute_template(cbody.body, {**ren, cbody.label: label})
        marked.append(substitute_template(r.conclusion, _spread_env(env)))
    bodies = [unmark(b) for b in marked]
    kind = law.kind
    if kind is EffectKind.DET and len(set(bodies)) != 1:
        if not bodies:
            raise NoMatchingRule(f"no rule for {op_name} with heads {', '.join(heads)}")
        raise NoMatchingRule(f"several rules for {op_name} with heads {', '.join(heads)}")
    schema = XiSchema(
        op_name,
        tuple(heads),
        TNode(op_name, tuple(Meta(n) for n in names)),
        tuple(premises),
        tuple(head_metas),
        lazy,
        of(kind, bodies),
        frozenset(used),
        tuple(strict),
        tuple(sorted(set(marked), key=repr)),
    )
    law._xi_cache[key] = schema
    return schema


def _spread_env(env: dict) -> dict:
    # Spread metas bound to a tuple of templates splice as lists.
    return {k: (list(v) if isinstance(v, tuple) else v) for k, v in env.items()}


def derive_xi(law: RuleSet, comp_op, strict_heads: Sequence) -> Effect:
    """The big-step body templates for ``comp_op`` with the given value heads."""
    name = comp_op if isinstance(comp_op, str) else comp_op.name
    heads = [h if isinstance(h, str) else h.name for h in strict_heads]
    return xi_schema(law, name, heads).bodies


def xi_clause(law: RuleSet, op_name: str, heads: Sequence[str]) -> tuple[TNode, Effect]:
    """The left-hand side ``f(g1(...), ..., lazies)`` of a big-step clause and its bodies."""
    schema = xi_schema(law, op_name, heads)
    env = {}
    for meta, pattern in schema.head_premises:
        env[meta.name if isinstance(meta, Meta) else meta] = pattern
    return substitute_template(schema.lhs, env), schema.bodies


def xi_apply(law: RuleSet, t: Node) -> list[Node]:
    """Big-step bodies for a computation whose strict arguments are values (via the derived schema)."""
    op = law.signature.op(t.op)
    heads = tuple(t.args[i].op for i in op.strict_positions)
    schema = xi_schema(law, t.op, heads)
    env = schema.bind(t)
    if env is None:
        return []
    return [instantiate(b, env) for b in sorted_items_templates(schema.bodies)]


def xi_direct(law: RuleSet, t: Node) -> Effect:
    """The same bodies computed by firing the rules on the concrete value behaviours."""
    return _collect_partial(law, t, _fire(law, t, {}))


def _collect_partial(law: RuleSet, t: Node, fired) -> Effect:
    return of(eval_kind(law) if law.kind is EffectKind.DET else law.kind, {s for _, s in fired})


def sorted_items_templates(e: Effect) -> list:
    return sorted(e.items, key=repr)


# ---------------------------------------------------------------------------
# big-step evaluation


@dataclass
class DerivationNode:
    term: Node
    result: object
    rule: str  # "value" or "op[heads]"
    premises: list = field(default_factory=list)


class _BigStep:
    def __init__(self, law: RuleSet, fuel: int, approx: dict, record: bool) -> None:
        self.law = law
        self.sig = law.signature
        self.fuel = fuel
        self.used = 0
        self.approx = approx
        self.memo: dict = {}
        self.active: set = set()
        self.frontier: set = set()
        self.cut_terms: set = set()
        self.stuck: set = set()
        self.record = record
        self.derivations: dict = {}

    def run(self, root: Node) -> tuple[frozenset, bool]:
        stack: list = []
        result = self._enter(root, stack)
        while stack:
            gen, term = stack[-1]
            try:
                child = gen.send(result) if result is not None else next(gen)
                result = None
            except StopIteration as stop:
                stack.pop()
                self.active.discard(term)
                self.memo[term] = stop.value
                result = stop.value
                continue
            result = self._enter(child, stack)
        return self.memo[root] if root in self.memo else result

    def _enter(self, t: Node, stack: list):
        """Either an immediate result or None after pushing a frame."""
        if t in self.memo:
            return self.memo[t]
        if self.sig.op(t.op).is_value:
            res = (frozenset((t,)), True)
            self.memo[t] = res
            if self.record:
                self.derivations[t] = DerivationNode(t, t, "value")
            return res
        if t in self.active:
            self.cut_terms.add(t)
            return (self.approx.get(t, frozenset()), False)
        self.active.add(t)
        stack.append((self._frame(t), t))
        return None

    def _frame(self, t: Node):
        op = self.sig.op(t.op)
        strict = op.strict_positions
        complete = True
        arg_sets = []
        for i in strict:
            vals, ok = yield t.args[i]
            complete &= ok
            arg_sets.append(sorted(vals, key=lambda x: (x.size, hash(x))))
        found: set = set()
        for combo in itertools.product(*arg_sets):
            args = list(t.args)
            for i, v in zip(strict, combo):
                args[i] = v
            vt = Node(t.op, args) if combo else t
            if self.used >= self.fuel:
                self.frontier.add(vt)
                complete = False
                continue
            self.used += 1
            bodies = xi_apply(self.law, vt)
            if not bodies:
                if self.law.kind is EffectKind.DET:
                    raise NoMatchingRule(f"no big-step rule for {self.law.show(vt, max_size=60)}")
                self.stuck.add(vt)
            for b in bodies:
                vals, ok = yield b
                complete &= ok
                found |= vals
                if self.record and len(vals) == 1:
                    heads = ",".join(v.op for v in combo)
                    prem = [self.derivations.get(t.args[i]) for i in strict]
                    self.derivations[t] = DerivationNode(
                        t, next(iter(vals)), f"{t.op}[{heads}]", [p for p in prem if p] + [self.derivations.get(b)]
                    )
        return (frozenset(found), complete)


def big_step(law: RuleSet, t: Node, fuel: int, record: bool = False, max_passes: int = 6) -> EvalResult:
    """Evaluate with the derived big-step law; ``fuel`` bounds the number of ``xi`` applications.

    Re-entering a term that is still being evaluated (a loop) uses the current
    approximation of its value set; evaluation is repeated until those
    approximations are consistent, at which point the result is the exact least
    fixpoint (``cyclic`` and converged).
    """
    if fuel < 0:
        raise ValueError("fuel must be non-negative")
    kind = eval_kind(law)
    approx: dict = {}
    machine = None
    for _ in range(max_passes):
        machine = _BigStep(law, fuel, approx, record)
        found, complete = machine.run(t)
        if complete or machine.frontier:
            break
        # Only loop cuts made the result incomplete; check their approximations.
        new = {u: machine.memo[u][0] for u in machine.cut_terms if u in machine.memo}
        if all(new.get(u, frozenset()) == approx.get(u, frozenset()) for u in machine.cut_terms):
            return EvalResult(
                of(kind, found),
                frozenset(),
                machine.used,
                True,
                cyclic=True,
                stuck=frozenset(machine.stuck),
                derivation=machine.derivations.get(t) if record else None,
            )
        approx = {u: approx.get(u, frozenset()) | s for u, s in new.items()}
    frontier = frozenset(machine.frontier) if not complete else frozenset()
    if not complete and not frontier:
        frontier = frozenset(machine.cut_terms)
    return EvalResult(
        of(kind, found),
        frontier,
        machine.used,
        complete,
        cyclic=bool(machine.cut_terms),
        stuck=frozenset(machine.stuck),
        derivation=machine.derivations.get(t) if record else None,
    )


# ---------------------------------------------------------------------------
# lemma checks


def _require(r: EvalResult, what: str) -> frozenset:
    if not r.converged:
        raise Inconclusive(f"{what} did not converge")
    return r.found.items


def _order(kind: EffectKind, left: frozenset, right: frozenset) -> bool:
    return leq(Effect(EffectKind.FINSET, left), Effect(EffectKind.FINSET, right)) if kind is EffectKind.FINSET else (
        not left or left == right
    )


def check_lemma_5_1(law: RuleSet, c: Node, fuel: int) -> bool:
    """Evaluating strict arguments first, then one rule step, then multi-step is below multi-step."""
    sig = law.signature
    op = sig.op(c.op)
    strict = op.strict_positions
    kind = eval_kind(law)
    arg_sets = [sorted_items(Effect(EffectKind.FINSET, _require(multi_step(law, c.args[i], fuel), "argument"))) for i in strict]
    left: set = set()
    for combo in itertools.product(*arg_sets):
        args = list(c.args)
        for i, v in zip(strict, combo):
            args[i] = v
        for s in gamma_c(law, Node(c.op, args)).items:
            left |= _require(multi_step(law, s, fuel), "continuation")
    right = _require(multi_step(law, c, fuel), "multi-step")
    return _order(kind, frozenset(left), right)


def check_lemma_5_2(law: RuleSet, c: Node, fuel: int) -> bool:
    """Big-step evaluation after one small step is below big-step evaluation."""
    kind = eval_kind(law)
    left: set = set()
    for s in gamma_c(law, c).items:
        left |= _require(big_step(law, s, fuel), "big-step of a reduct")
    right = _require(big_step(law, c, fuel), "big-step")
    return _order(kind, frozenset(left), right)


def agree(a: EvalResult, b: EvalResult) -> bool | None:
    """Found-sets equal when both converged, None when either did not."""
    if not (a.converged and b.converged):
        return None
    return a.found.items == b.found.items


def trace_lines(law: RuleSet, records: Iterable[TraceRecord], max_size: int = 200) -> list[str]:
    out = []
    for rec in records:
        succ = " | ".join(law.show(s, max_size=max_size) for s in rec.successors) or "(stuck)"
        out.append(f"{law.show(rec.term, max_size=max_size)}  --[{', '.join(rec.rules)}]-->  {succ}")
    return out


def render_derivation(law: RuleSet, node: DerivationNode | None, max_size: int = 80) -> str:
    """Indented derivation tree, premises above their conclusion's children."""
    if node is None:
        return "(no derivation)"
    lines: list[str] = []
    stack = [(node, 0)]
    while stack:
        n, d = stack.pop()
        if n is None:
            continue
        lines.append("  " * d + f"{law.show(n.term, max_size=max_size)} ⇓ {law.show(n.result, max_size=max_size)}  [{n.rule}]")
        for p in reversed(n.premises):
            stack.append((p, d + 1))
    return "\n".join(lines)


__all__ = [
    "Consuming",
    "DerivationNode",
    "EvalResult",
    "FuelExhausted",
    "Inconclusive",
    "NoMatchingRule",
    "NoValueRule",
    "Obs",
    "Red",
    "Structural",
    "TraceRecord",
    "XiSchema",
    "agree",
    "xi_clause",
    "behaviour",
    "big_step",
    "check_lemma_5_1",
    "check_lemma_5_2",
    "derive_xi",
    "eval_kind",
    "gamma_c",
    "gamma_v",
    "head_tuples",
    "multi_step",
    "possible_shapes",
    "render_derivation",
    "step",
    "step_rules",
    "trace_lines",
    "xi_apply",
    "xi_direct",
    "xi_schema",
]
