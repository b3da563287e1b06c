"""The effect layer: deterministic, partial and finite-powerset results.

All three instances share one representation, a frozenset payload whose
cardinality is constrained by the kind (exactly one for ``DET``, at most one
for ``PARTIAL``, anything finite for ``FINSET``). ``DET`` has no bottom.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Iterable, Sequence


class EffectKind(str, Enum):
    DET = "det"
    PARTIAL = "partial"
    FINSET = "finset"

    @property
    def pointed(self) -> bool:
        return self is not EffectKind.DET


class EffectError(Exception):
    pass


class MixedKinds(EffectError):
    """Two effects of different kinds met; always a bug in a rule set or caller."""


class NoBottom(EffectError):
    pass


class Nondeterminism(EffectError):
    """A deterministic effect was asked to hold more than one result."""


@dataclass(frozen=True)
class Effect:
    kind: EffectKind
    items: frozenset

    def __post_init__(self) -> None:
        n = len(self.items)
        if self.kind is EffectKind.DET and n != 1:
            raise Nondeterminism(f"deterministic effect with {n} results")
        if self.kind is EffectKind.PARTIAL and n > 1:
            raise Nondeterminism(f"partial effect with {n} results")

    @property
    def is_bottom(self) -> bool:
        return not self.items

    def only(self):
        """The unique result of a DET/PARTIAL effect (``None`` when diverged)."""
        if len(self.items) > 1:
            raise Nondeterminism("effect holds several results")
        return next(iter(self.items), None)

    def __iter__(self):
        return iter(self.items)

    def __len__(self) -> int:
        return len(self.items)

    def __repr__(self) -> str:
        if self.kind is EffectKind.PARTIAL and not self.items:
            return "Diverged"
        return f"{self.kind.value}{{{', '.join(sorted(map(repr, self.items)))}}}"


def unit(kind: EffectKind, a) -> Effect:
    return Effect(kind, frozenset((a,)))


def bottom(kind: EffectKind) -> Effect:
    if kind is EffectKind.DET:
        raise NoBottom("the deterministic effect has no least element")
    return Effect(kind, frozenset())


def of(kind: EffectKind, items: Iterable) -> Effect:
    """Collect results; for DET/PARTIAL more than one distinct result is an error."""
    return Effect(kind, frozenset(items))


def bind(e: Effect, f: Callable[[object], Effect]) -> Effect:
    out: set = set()
    for a in e.items:
        r = f(a)
        if r.kind is not e.kind:
            raise MixedKinds(f"bind of {e.kind.value} with {r.kind.value}")
        out |= r.items
    return Effect(e.kind, frozenset(out))


def fmap(f: Callable, e: Effect) -> Effect:
    return Effect(e.kind, frozenset(f(a) for a in e.items))


def join(kind: EffectKind, effects: Iterable[Effect]) -> Effect:
    """Multiplication of the monad, ``T T A -> T A``, given the outer items."""
    out: set = set()
    for e in effects:
        if e.kind is not kind:
            raise MixedKinds(f"join of {kind.value} with {e.kind.value}")
        out |= e.items
    return Effect(kind, frozenset(out))


def leq(e1: Effect, e2: Effect) -> bool:
    """The information order: equality for DET, flat order for PARTIAL, subset for FINSET."""
    if e1.kind is not e2.kind:
        raise MixedKinds(f"comparing {e1.kind.value} with {e2.kind.value}")
    if e1.kind is EffectKind.DET:
        return e1.items == e2.items
    if e1.kind is EffectKind.PARTIAL:
        return not e1.items or e1.items == e2.items
    return e1.items <= e2.items


def strength(a, e: Effect) -> Effect:
    """Canonical strength ``A x T B -> T (A x B)``."""
    return Effect(e.kind, frozenset((a, b) for b in e.items))


def dist_chi(args: Sequence[Effect], kind: EffectKind | None = None) -> Effect:
    """Distribute the effect over a tuple: the cartesian product of the components.

    ``kind`` is needed only for the empty tuple, which yields ``unit(())``.
    """
    if not args:
        if kind is None:
            raise EffectError("dist_chi of the empty tuple needs an explicit kind")
        return unit(kind, ())
    k = args[0].kind
    for e in args[1:]:
        if e.kind is not k:
            raise MixedKinds("dist_chi over mixed kinds")
    if kind is not None and kind is not k:
        raise MixedKinds("dist_chi kind disagrees with its components")
    return Effect(k, frozenset(itertools.product(*(sorted_items(e) for e in args))))


def lift(e: Effect, kind: EffectKind) -> Effect:
    """Reinterpret an effect in a richer kind (DET -> PARTIAL -> FINSET)."""
    order = [EffectKind.DET, EffectKind.PARTIAL, EffectKind.FINSET]
    if order.index(kind) < order.index(e.kind):
        raise EffectError(f"cannot narrow {e.kind.value} to {kind.value}")
    return Effect(kind, e.items)


def sorted_items(e: Effect) -> list:
    # Deterministic iteration order independent of hash randomization.
    return sorted(e.items, key=_order_key)


def _order_key(x):
    if isinstance(x, tuple):
        return tuple(_order_key(y) for y in x)
    return (getattr(x, "size", 0), hash(x))
