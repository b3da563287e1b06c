"""Sorted split signatures, closed terms, templates and de Bruijn substitution.

Terms are immutable and hash-consed lightly: every node caches its hash and
size at construction, so sharing-heavy terms (the kind produced by duplicating
reducts such as ``(t r)(s r)``) stay cheap to hash, compare and store in sets.
"""

from __future__ import annotations

import itertools
import zlib
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Iterable, Iterator, Mapping, Sequence, Union


class SyntaxFault(Exception):
    """Base class for signature, sort and term errors."""


class UnknownOperator(SyntaxFault):
    pass


class ArityMismatch(SyntaxFault):
    pass


class SortMismatch(SyntaxFault):
    pass


class UnboundVariable(SyntaxFault):
    pass


class MissingBinding(SyntaxFault):
    pass


class DisciplineDisabled(SyntaxFault):
    pass


# ---------------------------------------------------------------------------
# sorts


@dataclass(frozen=True)
class Base:
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class Arrow:
    dom: "Sort"
    cod: "Sort"

    def __str__(self) -> str:
        left = f"({self.dom})" if isinstance(self.dom, Arrow) else str(self.dom)
        return f"{left} -> {self.cod}"


@dataclass(frozen=True)
class SortVar:
    name: str

    def __str__(self) -> str:
        return "'" + self.name


Sort = Union[Base, Arrow, SortVar]


def sort_vars(s) -> set[str]:
    if isinstance(s, SortVar):
        return {s.name}
    if isinstance(s, Arrow):
        return sort_vars(s.dom) | sort_vars(s.cod)
    return set()


def rename_sort(s, mapping: Mapping[str, object]):
    if isinstance(s, SortVar):
        return mapping.get(s.name, s)
    if isinstance(s, Arrow):
        return Arrow(rename_sort(s.dom, mapping), rename_sort(s.cod, mapping))
    return s


class Unifier:
    """Union-find free substitution on sort variables (occurs-checked)."""

    def __init__(self) -> None:
        self.subst: dict[str, object] = {}
        self._fresh = itertools.count()

    def fresh(self) -> SortVar:
        return SortVar(f"_{next(self._fresh)}")

    def instantiate(self, sorts: Sequence) -> list:
        names = set().union(*(sort_vars(s) for s in sorts)) if sorts else set()
        mapping = {n: self.fresh() for n in sorted(names)}
        return [rename_sort(s, mapping) for s in sorts]

    def resolve(self, s):
        while isinstance(s, SortVar) and s.name in self.subst:
            s = self.subst[s.name]
        return s

    def zonk(self, s):
        s = self.resolve(s)
        if isinstance(s, Arrow):
            return Arrow(self.zonk(s.dom), self.zonk(s.cod))
        return s

    def _occurs(self, name: str, s) -> bool:
        s = self.resolve(s)
        if isinstance(s, SortVar):
            return s.name == name
        if isinstance(s, Arrow):
            return self._occurs(name, s.dom) or self._occurs(name, s.cod)
        return False

    def unify(self, a, b) -> None:
        a, b = self.resolve(a), self.resolve(b)
        if a == b:
            return
        if isinstance(a, SortVar):
            if self._occurs(a.name, b):
                raise SortMismatch(f"cyclic sort {a} ~ {self.zonk(b)}")
            self.subst[a.name] = b
        elif isinstance(b, SortVar):
            self.unify(b, a)
        elif isinstance(a, Arrow) and isinstance(b, Arrow):
            self.unify(a.dom, b.dom)
            self.unify(a.cod, b.cod)
        else:
            raise SortMismatch(f"expected {self.zonk(b)}, found {self.zonk(a)}")


# ---------------------------------------------------------------------------
# signatures


class OpClass(str, Enum):
    VALUE = "value"
    COMPUTATION = "computation"


class Mode(str, Enum):
    PLAIN = "plain"
    STRICT = "strict"
    LAZY = "lazy"


@dataclass(frozen=True)
class ArgSpec:
    sort: object
    mode: Mode = Mode.PLAIN
    binds: int = 0


@dataclass(frozen=True)
class Notation:
    """How an operator is written in concrete syntax.

    kind is one of ``prefix`` (``name`` / ``name(a, b)``), ``juxt`` (binary
    application by juxtaposition), ``infix`` (``a SYM b``), ``binder``
    (``SYM.body``) and ``neutral`` (``i`` / ``i∗(a, b)`` with a de Bruijn head).
    """

    kind: str = "prefix"
    symbol: str = ""


@dataclass(frozen=True)
class OperatorDescriptor:
    name: str
    cls: OpClass
    args: tuple[ArgSpec, ...]
    result: object
    notation: Notation = Notation()
    variadic: bool = False  # last ArgSpec repeats zero or more times

    @cached_property
    def is_value(self) -> bool:
        return self.cls is OpClass.VALUE

    @cached_property
    def strict_positions(self) -> tuple[int, ...]:
        return tuple(i for i, a in enumerate(self.args) if a.mode is Mode.STRICT)

    @cached_property
    def lazy_positions(self) -> tuple[int, ...]:
        return tuple(i for i, a in enumerate(self.args) if a.mode is Mode.LAZY)

    def arity_ok(self, n: int) -> bool:
        if self.variadic:
            return n >= len(self.args) - 1
        return n == len(self.args)

    def arg_spec(self, i: int) -> ArgSpec:
        if self.variadic and i >= len(self.args) - 1:
            return self.args[-1]
        return self.args[i]


@dataclass
class SignatureSpec:
    sorts: frozenset
    ops: tuple[OperatorDescriptor, ...]
    binding: bool = False
    default_sort: object = None
    _by_name: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        self._by_name = {}
        for op in self.ops:
            if op.name in self._by_name:
                raise SyntaxFault(f"duplicate operator {op.name!r}")
            self._by_name[op.name] = op
        if not any(op.is_value for op in self.ops):
            raise SyntaxFault("a signature needs at least one value former")
        for op in self.ops:
            for a in op.args:
                if op.is_value and a.mode is not Mode.PLAIN:
                    raise SyntaxFault(f"value former {op.name} may only have plain arguments")
                if not op.is_value and a.mode is Mode.PLAIN:
                    raise SyntaxFault(f"computation former {op.name} needs strict/lazy arguments")
                if a.binds and not self.binding:
                    raise SyntaxFault(f"{op.name} binds variables but the signature has no binding discipline")
            for s in [op.result, *(a.sort for a in op.args)]:
                self._check_sort_declared(s, op.name)
        if self.binding:
            register_binders(self)
        if self.default_sort is None:
            bases = sorted(self.sorts, key=str)
            self.default_sort = bases[0] if bases else None

    def _check_sort_declared(self, s, where: str) -> None:
        if isinstance(s, Base) and s not in self.sorts:
            raise SyntaxFault(f"{where}: undeclared sort {s}")
        if isinstance(s, Arrow):
            self._check_sort_declared(s.dom, where)
            self._check_sort_declared(s.cod, where)

    def __contains__(self, name: str) -> bool:
        return name in self._by_name

    def op(self, name: str) -> OperatorDescriptor:
        try:
            return self._by_name[name]
        except KeyError:
            raise UnknownOperator(name) from None

    @property
    def value_ops(self) -> list[OperatorDescriptor]:
        return [op for op in self.ops if op.is_value]

    @property
    def computation_ops(self) -> list[OperatorDescriptor]:
        return [op for op in self.ops if not op.is_value]

    def is_typed(self) -> bool:
        return len(self.sorts) > 1 or any(
            isinstance(s, (Arrow, SortVar)) for op in self.ops for s in [op.result, *(a.sort for a in op.args)]
        )


# ---------------------------------------------------------------------------
# terms


_OP_CODES: dict[str, int] = {}


def _op_code(name: str) -> int:
    code = _OP_CODES.get(name)
    if code is None:
        code = _OP_CODES[name] = zlib.crc32(name.encode("utf-8"))
    return code


class Var:
    """A de Bruijn variable; only legal as the head of a neutral term."""

    __slots__ = ("index", "_hash")

    def __init__(self, index: int) -> None:
        if index < 0:
            raise ValueError("negative de Bruijn index")
        self.index = index
        self._hash = hash((-1, index))

    size = 1

    def __hash__(self) -> int:
        return self._hash

    def __eq__(self, other) -> bool:
        return isinstance(other, Var) and other.index == self.index

    def __repr__(self) -> str:
        return f"Var({self.index})"

    def __reduce__(self):
        return (Var, (self.index,))


class Node:
    __slots__ = ("op", "args", "_hash", "size")

    def __init__(self, op: str, args: Sequence["Term"] = ()) -> None:
        self.op = op
        self.args = tuple(args)
        self._hash = hash((_op_code(op), *(hash(a) for a in self.args)))
        self.size = 1 + sum(a.size for a in self.args)

    def __hash__(self) -> int:
        return self._hash

    def __eq__(self, other) -> bool:
        if self is other:
            return True
        if not isinstance(other, Node) or other._hash != self._hash:
            return False
        return other.op == self.op and other.args == self.args

    def __repr__(self) -> str:
        if not self.args:
            return f"Node({self.op!r})"
        return f"Node({self.op!r}, {list(self.args)!r})"

    def __reduce__(self):
        return (Node, (self.op, self.args))


Term = Union[Var, Node]


def subterms(t) -> Iterator:
    """Pre-order traversal (shared subterms are revisited)."""
    stack = [t]
    while stack:
        u = stack.pop()
        yield u
        if isinstance(u, Node):
            stack.extend(reversed(u.args))


def is_value(sig: SignatureSpec, t) -> bool:
    return isinstance(t, Node) and sig.op(t.op).is_value


def is_computation(sig: SignatureSpec, t) -> bool:
    return isinstance(t, Node) and not sig.op(t.op).is_value


# ---------------------------------------------------------------------------
# sort checking


def infer_sort(sig: SignatureSpec, t, ctx: Sequence = (), unifier: Unifier | None = None):
    """Principal sort of ``t`` with unsolved sort variables left in place.

    ``ctx[0]`` is the sort of de Bruijn index 0 (the innermost binder).
    """
    u = unifier or Unifier()
    result = _infer(sig, t, list(ctx), u)
    return u.zonk(result)


def _infer(sig: SignatureSpec, t, ctx: list, u: Unifier):
    if isinstance(t, Var):
        if not sig.binding:
            raise DisciplineDisabled("variables need a binding discipline")
        if t.index >= len(ctx):
            raise UnboundVariable(f"index {t.index} in a context of length {len(ctx)}")
        return ctx[t.index]
    op = sig.op(t.op)
    if not op.arity_ok(len(t.args)):
        raise ArityMismatch(f"{op.name} expects {len(op.args)} arguments, got {len(t.args)}")
    specs = [op.arg_spec(i) for i in range(len(t.args))]
    inst = u.instantiate([op.result, *(a.sort for a in specs)])
    result, arg_sorts = inst[0], inst[1:]
    for i, (child, spec, want) in enumerate(zip(t.args, specs, arg_sorts)):
        if op.notation.kind == "neutral" and i == 0:
            if not isinstance(child, Var):
                raise SortMismatch("a neutral term needs a variable head")
            got = _infer(sig, child, ctx, u)
            u.unify(got, want)
            continue
        if isinstance(child, Var) and op.notation.kind != "neutral":
            raise SortMismatch(f"bare variable under {op.name}; variables occur only as neutral heads")
        inner = [want] * spec.binds + ctx if spec.binds else ctx
        got = _infer(sig, child, inner, u)
        u.unify(got, want)
    return result


def sort_check(sig: SignatureSpec, t, ctx: Sequence = ()):
    """Sort of ``t``; unsolved sort variables are grounded to the default sort."""
    s = infer_sort(sig, t, ctx)
    if sig.default_sort is not None:
        s = rename_sort(s, {n: sig.default_sort for n in sort_vars(s)})
    return s


def well_sorted(sig: SignatureSpec, t, ctx: Sequence = ()) -> bool:
    try:
        infer_sort(sig, t, ctx)
    except SyntaxFault:
        return False
    return True


# ---------------------------------------------------------------------------
# de Bruijn machinery


def free_indices(t, depth: int = 0) -> set[int]:
    out: set[int] = set()
    _free(t, depth, out, {})
    return out


def _free(t, depth, out, seen) -> None:
    if isinstance(t, Var):
        if t.index >= depth:
            out.add(t.index - depth)
        return
    key = (id(t), depth)
    if key in seen:
        return
    seen[key] = True
    binds = _binds_of(t)
    for i, a in enumerate(t.args):
        _free(a, depth + binds[i], out, seen)


def is_closed(t) -> bool:
    return not free_indices(t)


_BINDERS: dict[str, tuple[int, ...]] = {}


def register_binders(sig: SignatureSpec) -> None:
    """Record per-argument binder counts so shifting works without a signature."""
    for op in sig.ops:
        if any(a.binds for a in op.args):
            _BINDERS[op.name] = tuple(a.binds for a in op.args)


def _binds_of(t: Node) -> Sequence[int]:
    b = _BINDERS.get(t.op)
    if b is None:
        return _ZEROS(len(t.args))
    return b


def _ZEROS(n: int) -> tuple[int, ...]:
    return (0,) * n


def shift(t, d: int, cutoff: int = 0):
    """Add ``d`` to every free index ``>= cutoff``."""
    if d == 0:
        return t
    memo: dict = {}

    def go(u, c):
        if isinstance(u, Var):
            if u.index >= c:
                if u.index + d < 0:
                    raise UnboundVariable("negative shift")
                return Var(u.index + d)
            return u
        if not u.args:
            return u
        key = (id(u), c)
        hit = memo.get(key)
        if hit is not None:
            return hit
        binds = _binds_of(u)
        out = Node(u.op, [go(a, c + binds[i]) for i, a in enumerate(u.args)])
        memo[key] = out
        return out

    return go(t, cutoff)


def subst(t, depth: int, s, binding: bool = True):
    """Capture-avoiding substitution ``t[s/depth]``.

    Replaces free index ``depth`` by ``s`` and decrements free indices above it;
    ``s`` is shifted as it passes under binders. A neutral term whose head is
    the substituted variable turns back into nested applications of ``s`` to
    its spine.
    """
    if not binding:
        raise DisciplineDisabled("substitution needs a binding discipline")
    memo: dict = {}

    def go(u, k):
        # k counts binders crossed; the target is index depth + k.
        if isinstance(u, Var):
            target = depth + k
            if u.index == target:
                return shift(s, k) if k else s
            if u.index > target:
                return Var(u.index - 1)
            return u
        if not u.args:
            return u
        key = (id(u), k)
        hit = memo.get(key)
        if hit is not None:
            return hit
        if u.op == NEUTRAL_OP:
            head = u.args[0]
            spine = [go(a, k) for a in u.args[1:]]
            new_head = go(head, k)
            if isinstance(new_head, Var):
                out = Node(u.op, [new_head, *spine])
            else:
                out = new_head
                for a in spine:
                    out = Node(APP_OP, (out, a))
        else:
            binds = _binds_of(u)
            out = Node(u.op, [go(a, k + binds[i]) for i, a in enumerate(u.args)])
        memo[key] = out
        return out

    return go(t, 0)


# Names fixed by the bundled binding instance; substitution needs to know how
# to rebuild an application when a neutral head is replaced.
NEUTRAL_OP = "ne"
APP_OP = "app"


# ---------------------------------------------------------------------------
# templates


class Tag(str, Enum):
    OLD = "old"
    NEW = "new"


@dataclass(frozen=True)
class Meta:
    name: str
    tag: Tag = Tag.OLD
    spread: bool = False  # binds a sequence of terms inside an argument list

    def __str__(self) -> str:
        return self.name + ("..." if self.spread else "")


@dataclass(frozen=True)
class TNode:
    op: str
    args: tuple = ()


@dataclass(frozen=True)
class TSubst:
    """Instantiates to ``subst(body, 0, arg)``."""

    body: object
    arg: object


Template = Union[Meta, TNode, TSubst, Var, Node]


def template_metas(tpl) -> list[Meta]:
    out: list[Meta] = []
    seen: set[str] = set()

    def go(x):
        if isinstance(x, Meta):
            if x.name not in seen:
                seen.add(x.name)
                out.append(x)
        elif isinstance(x, TNode):
            for a in x.args:
                go(a)
        elif isinstance(x, TSubst):
            go(x.body)
            go(x.arg)

    go(tpl)
    return out


def instantiate(tpl, env: Mapping[str, object]):
    """Replace metavariables by terms, forgetting their old/new tags.

    Spread metas map to sequences and are spliced into argument lists.
    Ground subterms (``Node``/``Var``) embedded in a template are kept as-is,
    which is how already-built terms are flattened into the result.
    """
    if isinstance(tpl, Meta):
        try:
            val = env[tpl.name]
        except KeyError:
            raise MissingBinding(tpl.name) from None
        if tpl.spread:
            raise SyntaxFault(f"spread metavariable {tpl.name} outside an argument list")
        return val
    if isinstance(tpl, TNode):
        args = []
        for a in tpl.args:
            if isinstance(a, Meta) and a.spread:
                try:
                    args.extend(env[a.name])
                except KeyError:
                    raise MissingBinding(a.name) from None
            else:
                args.append(instantiate(a, env))
        return Node(tpl.op, args)
    if isinstance(tpl, TSubst):
        return subst(instantiate(tpl.body, env), 0, instantiate(tpl.arg, env))
    return tpl


def substitute_template(tpl, env: Mapping[str, object]):
    """Template-to-template substitution (the Kleisli extension of the free monad)."""
    if isinstance(tpl, Meta):
        if tpl.name not in env:
            return tpl
        return env[tpl.name]
    if isinstance(tpl, TNode):
        args = []
        for a in tpl.args:
            if isinstance(a, Meta) and a.spread and a.name in env:
                val = env[a.name]
                args.extend(val if isinstance(val, (list, tuple)) else [val])
            else:
                args.append(substitute_template(a, env))
        return TNode(tpl.op, tuple(args))
    if isinstance(tpl, TSubst):
        return TSubst(substitute_template(tpl.body, env), substitute_template(tpl.arg, env))
    return tpl


def term_to_template(t):
    if isinstance(t, Node):
        return TNode(t.op, tuple(term_to_template(a) for a in t.args))
    return t


def alpha_equivalent(a, b) -> bool:
    """Equality of templates up to a bijective renaming of metavariables."""
    fwd: dict[str, str] = {}
    bwd: dict[str, str] = {}

    def go(x, y) -> bool:
        if isinstance(x, Meta) and isinstance(y, Meta):
            if x.spread != y.spread:
                return False
            if fwd.setdefault(x.name, y.name) != y.name:
                return False
            return bwd.setdefault(y.name, x.name) == x.name
        if isinstance(x, TNode) and isinstance(y, TNode):
            return x.op == y.op and len(x.args) == len(y.args) and all(go(p, q) for p, q in zip(x.args, y.args))
        if isinstance(x, TSubst) and isinstance(y, TSubst):
            return go(x.body, y.body) and go(x.arg, y.arg)
        if isinstance(x, (TNode, Meta, TSubst)) or isinstance(y, (TNode, Meta, TSubst)):
            return False
        return x == y

    return go(a, b)


def build_term(spec) -> object:
    """Tiny constructor helper: ``("app", "S", ("K'", "I"))`` -> Node tree."""
    if isinstance(spec, (Node, Var)):
        return spec
    if isinstance(spec, int):
        return Var(spec)
    if isinstance(spec, str):
        return Node(spec)
    op, *args = spec
    return Node(op, [build_term(a) for a in args])


def iter_positions(t, path: tuple = ()) -> Iterator[tuple[tuple, object]]:
    """(path, subterm) pairs in breadth-first order; paths index into args."""
    queue = [(path, t)]
    while queue:
        nxt = []
        for p, u in queue:
            yield p, u
            if isinstance(u, Node):
                nxt.extend((p + (i,), a) for i, a in enumerate(u.args))
        queue = nxt


def replace_at(t, path: Sequence[int], new):
    if not path:
        return new
    i, rest = path[0], path[1:]
    args = list(t.args)
    args[i] = replace_at(args[i], rest, new)
    return Node(t.op, args)


def depth(t) -> int:
    if isinstance(t, Var) or not t.args:
        return 1
    return 1 + max(depth(a) for a in t.args)


def flatten_ops(terms: Iterable) -> set[str]:
    return {u.op for t in terms for u in subterms(t) if isinstance(u, Node)}
