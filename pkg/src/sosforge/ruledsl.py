"""Rule sets in the separated format: data model, text format and static checks.

A rule file declares a signature and its small-step rules::

    language xcl_cbn
    effect det
    sort U

    value S : U
    value K'(U) : U
    computation app(strict U, lazy U) : U  juxt

    rule S
      S --t--> S'(t)

    rule app-red
      t --> t'
      ---
      t s --> t' s

Operator lines: ``value|computation NAME[(ARG, ...)] : SORT [NOTATION]`` where
an ``ARG`` is ``[strict|lazy] [bind N] SORT [*]`` (``*`` marks a repeated last
argument), sorts are base names, ``'a`` variables and ``->`` arrows, and
``NOTATION`` is ``juxt``, ``infix SYM``, ``binder SYM``, ``neutral`` or
``prefix`` (default). ``binding`` enables de Bruijn variables.

Rule blocks start with ``rule NAME`` (or ``rule NAME: CONCLUSION`` on one
line). Premises, one per line, are ``x --> x'`` (reduces), ``x --L--> x'``
(consumes the argument ``L``; ``_`` discards the label or the result) and
``x obs TAG(y, ys...)`` (also written ``x ↓TAG(...)``). A line of dashes
separates premises from the conclusion. Value-rule conclusions are
``g(x, ...) --l--> BODY`` or ``g(x, ...) obs TAG(...)``; computation-rule
conclusions are ``f(...) --> BODY``. ``t[s]`` in a body substitutes ``s`` for
the variable bound by ``t``. Lines starting with ``#`` are comments.
"""

from __future__ import annotations

import dataclasses
import itertools
import json
import re
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Iterable, Sequence

from .effects import EffectKind
from .notation import parse_template, show
from .syntax import (
    ArgSpec,
    Arrow,
    Base,
    Meta,
    Mode,
    Notation,
    OpClass,
    OperatorDescriptor,
    SignatureSpec,
    SortMismatch,
    SortVar,
    SyntaxFault,
    Tag,
    TNode,
    TSubst,
    Unifier,
    substitute_template,
    template_metas,
)


class RuleSyntaxError(SyntaxFault):
    def __init__(self, message: str, line: int | None = None) -> None:
        super().__init__(f"line {line}: {message}" if line else message)
        self.line = line


class UnknownOp(RuleSyntaxError):
    pass


class MetaReuse(RuleSyntaxError):
    pass


# ---------------------------------------------------------------------------
# rule data model


@dataclass(frozen=True)
class ObsBody:
    tag: str
    payload: tuple = ()


@dataclass(frozen=True)
class ConsumeBody:
    label: str
    body: object


@dataclass(frozen=True)
class ValueRule:
    name: str
    op: str
    arg_metas: tuple[Meta, ...]
    body: ObsBody | ConsumeBody

    @property
    def shape(self) -> str:
        return FUN if isinstance(self.body, ConsumeBody) else obs_shape(self.body.tag)


@dataclass(frozen=True)
class Reduces:
    target: str


@dataclass(frozen=True)
class Consumes:
    label: object = None  # template over the rule's argument metas, or None
    target: str | None = None


@dataclass(frozen=True)
class Observes:
    tag: str
    payload: tuple[Meta, ...] = ()


@dataclass(frozen=True)
class Passive:
    pass


RED, FUN = "red", "fun"


def obs_shape(tag: str) -> str:
    return "obs:" + tag


def premise_shapes(p) -> set[str] | None:
    """Shapes a premise accepts; ``None`` means any shape."""
    if isinstance(p, Reduces):
        return {RED}
    if isinstance(p, Consumes):
        return {FUN}
    if isinstance(p, Observes):
        return {obs_shape(p.tag)}
    return None


@dataclass(frozen=True)
class CompRule:
    name: str
    op: str
    arg_metas: tuple[Meta, ...]
    premises: tuple  # one entry per strict position, in order
    conclusion: object

    def covers(self, shapes: Sequence[str]) -> bool:
        for p, s in zip(self.premises, shapes):
            ok = premise_shapes(p)
            if ok is not None and s not in ok:
                return False
        return True


@dataclass
class RuleSet:
    """A separated law: signature, value rules, computation rules and effect kind."""

    name: str
    signature: SignatureSpec
    value_rules: dict[str, ValueRule]
    comp_rules: tuple[CompRule, ...]
    kind: EffectKind
    notes: str = ""
    source: str = ""
    rule_order: tuple[str, ...] = ()  # rule names in the order they were written

    def ordinal(self, rule_name: str | None) -> int | None:
        """1-based position of a rule in its source, or ``None``."""
        if rule_name in self.rule_order:
            return self.rule_order.index(rule_name) + 1
        return None

    def __post_init__(self) -> None:
        self._by_op: dict[str, list[CompRule]] = {}
        for r in self.comp_rules:
            self._by_op.setdefault(r.op, []).append(r)
        self._xi_cache: dict = {}

    @property
    def alphabet(self) -> frozenset[str]:
        return frozenset(r.body.tag for r in self.value_rules.values() if isinstance(r.body, ObsBody))

    def rules_for(self, op: str) -> list[CompRule]:
        return self._by_op.get(op, [])

    @cached_property
    def dispatch(self) -> dict:
        """(op, shape tuple) -> matching rules, precomputed over possible shapes."""
        table: dict = {}
        for op in self.signature.computation_ops:
            per_pos = [possible_shapes(self, op, i) for i in op.strict_positions]
            for shapes in itertools.product(*per_pos):
                table[(op.name, shapes)] = [r for r in self.rules_for(op.name) if r.covers(shapes)]
        return table

    def show(self, t, max_size: int | None = None) -> str:
        return show(self.signature, t, max_size=max_size)


# ---------------------------------------------------------------------------
# parsing

_ID = r"[^\W\d]\w*'*"


def parse_sort(text: str):
    toks = re.findall(r"->|\(|\)|'?" + _ID, text.replace("′", "'"))
    if "".join(toks) != re.sub(r"\s+", "", text.replace("′", "'")):
        raise RuleSyntaxError(f"bad sort {text!r}")
    pos = 0

    def sort():
        nonlocal pos
        left = atom()
        if pos < len(toks) and toks[pos] == "->":
            pos += 1
            return Arrow(left, sort())
        return left

    def atom():
        nonlocal pos
        if pos >= len(toks):
            raise RuleSyntaxError(f"truncated sort {text!r}")
        t = toks[pos]
        pos += 1
        if t == "(":
            s = sort()
            if pos >= len(toks) or toks[pos] != ")":
                raise RuleSyntaxError(f"unbalanced sort {text!r}")
            pos += 1
            return s
        if t.startswith("'"):
            return SortVar(t[1:])
        if t in ("->", ")"):
            raise RuleSyntaxError(f"bad sort {text!r}")
        return Base(t)

    s = sort()
    if pos != len(toks):
        raise RuleSyntaxError(f"trailing input in sort {text!r}")
    return s


_OP_LINE = re.compile(rf"^(value|computation)\s+({_ID})\s*(?:\((.*)\))?\s*:\s*(.+?)\s*$")
_NOTATIONS = ("juxt", "infix", "binder", "neutral", "prefix")


def _split_top(text: str, sep: str = ",") -> list[str]:
    out, depth, cur = [], 0, []
    for c in text:
        if c in "([":
            depth += 1
        elif c in ")]":
            depth -= 1
        if c == sep and depth == 0:
            out.append("".join(cur))
            cur = []
        else:
            cur.append(c)
    out.append("".join(cur))
    return [s.strip() for s in out if s.strip()]


def _parse_op_line(line: str, lineno: int) -> OperatorDescriptor:
    m = _OP_LINE.match(line)
    if not m:
        raise RuleSyntaxError(f"bad operator declaration {line!r}", lineno)
    cls, name, argtext, rest = m.groups()
    words = rest.split()
    notation = Notation()
    for i, w in enumerate(words):
        if w in _NOTATIONS:
            sym = words[i + 1] if w in ("infix", "binder") and i + 1 < len(words) else ""
            notation = Notation(w, sym)
            rest = " ".join(words[:i])
            break
    result = parse_sort(rest)
    args, variadic = [], False
    for j, a in enumerate(_split_top(argtext or "")):
        mode = Mode.PLAIN
        binds = 0
        parts = a.split()
        if parts and parts[0] in ("strict", "lazy"):
            mode = Mode(parts.pop(0))
        if parts and parts[0] == "bind":
            binds = int(parts[1])
            parts = parts[2:]
        st = " ".join(parts)
        if st.endswith("*"):
            variadic = True
            st = st[:-1]
        args.append(ArgSpec(parse_sort(st), mode, binds))
    if cls == "computation" and any(a.mode is Mode.PLAIN for a in args):
        raise RuleSyntaxError(f"{name}: computation arguments must be marked strict or lazy", lineno)
    return OperatorDescriptor(name, OpClass(cls), tuple(args), result, notation, variadic)


@dataclass
class _Block:
    name: str
    lines: list[tuple[int, str]] = field(default_factory=list)
    lineno: int = 0


def parse_ruleset(text: str, base: RuleSet | None = None, name: str | None = None) -> RuleSet:
    """Parse a rule file; with ``base``, declarations and rules extend that rule set."""
    header: dict[str, str] = {}
    sorts: set = set(base.signature.sorts) if base else set()
    ops: list[OperatorDescriptor] = list(base.signature.ops) if base else []
    binding = base.signature.binding if base else False
    blocks: list[_Block] = []
    notes: list[str] = []
    current: _Block | None = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].rstrip() if not raw.lstrip().startswith("#") else ""
        if raw.lstrip().startswith("#"):
            notes.append(raw.lstrip()[1:].strip())
        if not line.strip():
            current = None
            continue
        stripped = line.strip()
        if current is not None and raw[:1].isspace():
            current.lines.append((lineno, stripped))
            continue
        word = stripped.split()[0]
        if word == "rule":
            m = re.match(r"^rule\s+([^\s:]+)\s*(?::\s*(.*))?$", stripped)
            if not m:
                raise RuleSyntaxError(f"bad rule header {stripped!r}", lineno)
            current = _Block(m.group(1), lineno=lineno)
            blocks.append(current)
            if m.group(2):
                current.lines.append((lineno, m.group(2)))
            continue
        current = None
        if word in ("language", "effect", "default-sort"):
            header[word] = stripped.split(None, 1)[1].strip()
        elif word == "sort":
            for s in stripped.split()[1:]:
                sorts.add(Base(s))
        elif word == "binding":
            binding = True
        elif word in ("value", "computation"):
            op = _parse_op_line(stripped, lineno)
            if any(o.name == op.name for o in ops):
                raise RuleSyntaxError(f"operator {op.name} declared twice", lineno)
            ops.append(op)
        else:
            raise RuleSyntaxError(f"unknown declaration {word!r}", lineno)
    if not ops:
        raise RuleSyntaxError("empty rule set: at least one value former is required")
    default = Base(header["default-sort"]) if "default-sort" in header else (base.signature.default_sort if base else None)
    sig = SignatureSpec(frozenset(sorts), tuple(ops), binding=binding, default_sort=default)
    kind = EffectKind(header["effect"]) if "effect" in header else (base.kind if base else EffectKind.DET)
    value_rules = dict(base.value_rules) if base else {}
    comp_rules = list(base.comp_rules) if base else []
    seen_names = {r.name for r in value_rules.values()} | {r.name for r in comp_rules}
    order = list(base.rule_order) if base else []
    for b in blocks:
        if b.name in seen_names:
            raise RuleSyntaxError(f"duplicate rule name {b.name!r}", b.lineno)
        seen_names.add(b.name)
        order.append(b.name)
        rule = _parse_rule(sig, b)
        if isinstance(rule, ValueRule):
            if rule.op in value_rules:
                raise RuleSyntaxError(f"second value rule for {rule.op}", b.lineno)
            value_rules[rule.op] = rule
        else:
            comp_rules.append(rule)
    for op in sig.value_ops:
        if op.name not in value_rules:
            raise RuleSyntaxError(f"value former {op.name} has no value rule")
    rs_name = name or header.get("language") or (base.name if base else "anonymous")
    rs = RuleSet(
        rs_name, sig, value_rules, tuple(comp_rules), kind, notes="\n".join(notes), source=text, rule_order=tuple(order)
    )
    for r in rs.comp_rules:
        _check_rule_sorts(rs, r)
    return rs


_ARROW = re.compile(r"^(.*?)\s*--(?:(?!>)(.*?))?-->\s*(.*)$")
_OBS = re.compile(rf"^(.*?)\s*(?:↓|\bobs\s+)({_ID})\s*(?:\((.*)\))?\s*$")


def _split_arrow(text: str):
    i = text.find("--")
    if i < 0:
        return None
    if text.startswith("-->", i):
        return text[:i].strip(), None, text[i + 3 :].strip()
    j = text.find("-->", i + 2)
    if j < 0:
        return None
    return text[:i].strip(), text[i + 2 : j].strip(), text[j + 3 :].strip()


def _parse_rule(sig: SignatureSpec, block: _Block):
    lines = block.lines
    if not lines:
        raise RuleSyntaxError(f"rule {block.name} is empty", block.lineno)
    sep = [k for k, (_, l) in enumerate(lines) if re.fullmatch(r"-{3,}", l)]
    if sep:
        premises, conclusion = lines[: sep[0]], lines[sep[0] + 1 :]
    else:
        premises, conclusion = lines[:-1], lines[-1:]
    if len(conclusion) != 1:
        raise RuleSyntaxError(f"rule {block.name} needs exactly one conclusion", block.lineno)
    lineno, concl = conclusion[0]
    arrow = _split_arrow(concl)
    if arrow is not None:
        lhs_text = arrow[0]
    else:
        m = _OBS.match(concl)
        if not m:
            raise RuleSyntaxError(f"cannot read conclusion {concl!r}", lineno)
        lhs_text = m.group(1)
    lhs = _parse_pattern(sig, lhs_text, lineno)
    op = sig.op(lhs.op)
    if op.is_value:
        if premises:
            raise RuleSyntaxError(f"value rule {block.name} takes no premises", lineno)
        return _value_rule(sig, block.name, op, lhs, concl, lineno)
    return _comp_rule(sig, block.name, op, lhs, premises, concl, lineno)


def _parse_pattern(sig: SignatureSpec, text: str, lineno: int) -> TNode:
    pat = _template(sig, text, lineno)
    if not isinstance(pat, TNode):
        raise RuleSyntaxError(f"the left-hand side {text!r} must start with an operator", lineno)
    if pat.op not in sig:
        raise UnknownOp(f"unknown operator {pat.op!r}", lineno)
    names = []
    for a in pat.args:
        if not isinstance(a, Meta):
            raise RuleSyntaxError(f"arguments of {pat.op} on the left must be metavariables", lineno)
        names.append(a.name)
    if len(set(names)) != len(names):
        raise MetaReuse(f"metavariable repeated in {text!r}", lineno)
    if not sig.op(pat.op).arity_ok(len(pat.args)):
        raise RuleSyntaxError(f"{pat.op} applied to {len(pat.args)} arguments", lineno)
    return pat


def _payload_item(sig: SignatureSpec, text: str, lineno: int):
    m = re.fullmatch(rf"({_ID})\s*\.\.\.", text)
    if m:
        return Meta(m.group(1), spread=True)
    return _template(sig, text, lineno)


def _template(sig: SignatureSpec, text: str, lineno: int):
    try:
        return parse_template(sig, text)
    except SyntaxFault as e:
        # A name applied to an argument list that the signature lacks is the likely culprit.
        for m in re.finditer(rf"({_ID})\(", text):
            if m.group(1) not in sig:
                raise UnknownOp(f"unknown operator {m.group(1)!r}", lineno) from None
        raise RuleSyntaxError(str(e), lineno) from None


def _retag(tpl, new_names: set[str]):
    if isinstance(tpl, Meta):
        return replace(tpl, tag=Tag.NEW if tpl.name in new_names else Tag.OLD)
    if isinstance(tpl, TNode):
        return TNode(tpl.op, tuple(_retag(a, new_names) for a in tpl.args))
    if isinstance(tpl, TSubst):
        return TSubst(_retag(tpl.body, new_names), _retag(tpl.arg, new_names))
    return tpl


def _value_rule(sig, name, op, lhs, concl, lineno) -> ValueRule:
    args = tuple(lhs.args)
    arg_names = {a.name for a in args}
    arrow = _split_arrow(concl)
    if arrow is not None:
        _, label, body_text = arrow
        if not label or not re.fullmatch(_ID, label):
            raise RuleSyntaxError(f"value rule {name}: the label must be a single metavariable", lineno)
        if label in arg_names:
            raise MetaReuse(f"label {label} reuses an argument name", lineno)
        body = _template(sig, body_text, lineno)
        allowed = arg_names | {label}
        _check_metas(body, allowed, name, lineno)
        return ValueRule(name, op.name, args, ConsumeBody(label, body))
    m = _OBS.match(concl)
    payload = tuple(_payload_item(sig, p, lineno) for p in _split_top(m.group(3) or ""))
    for p in payload:
        _check_metas(p, arg_names, name, lineno)
    return ValueRule(name, op.name, args, ObsBody(m.group(2), payload))


def _check_metas(tpl, allowed: set[str], rule: str, lineno: int) -> None:
    for m in template_metas(tpl):
        if m.name not in allowed:
            raise RuleSyntaxError(f"rule {rule}: unbound metavariable {m.name}", lineno)


def _comp_rule(sig, name, op, lhs, premise_lines, concl, lineno) -> CompRule:
    arrow = _split_arrow(concl)
    if arrow is None or arrow[1]:
        raise RuleSyntaxError(f"computation rule {name} must conclude with an unlabelled step", lineno)
    args = tuple(lhs.args)
    arg_names = [a.name for a in args]
    strict = op.strict_positions
    premises: dict[int, object] = {}
    new_names: list[str] = []
    for pl, text in premise_lines:
        arrow_p = _split_arrow(text)
        if arrow_p is not None:
            src, label, tgt = arrow_p
        else:
            m = _OBS.match(text)
            if not m:
                raise RuleSyntaxError(f"cannot read premise {text!r}", pl)
            src = m.group(1)
        if src not in arg_names:
            raise RuleSyntaxError(f"premise source {src!r} is not an argument of {op.name}", pl)
        pos = arg_names.index(src)
        if pos not in strict:
            raise RuleSyntaxError(f"premise on {src}, which is not a strict argument", pl)
        if pos in premises:
            raise RuleSyntaxError(f"two premises on {src}", pl)
        if arrow_p is not None:
            target = None if tgt == "_" else tgt
            if target is not None:
                if not re.fullmatch(_ID, target):
                    raise RuleSyntaxError(f"premise target must be a metavariable, got {tgt!r}", pl)
                new_names.append(target)
            if label is None:
                if target is None:
                    raise RuleSyntaxError("a reduction premise needs a target", pl)
                premises[pos] = Reduces(target)
            else:
                lab = None if label == "_" else _template(sig, label, pl)
                if lab is not None:
                    _check_metas(lab, set(arg_names), name, pl)
                premises[pos] = Consumes(lab, target)
        else:
            payload = tuple(_payload_item(sig, p, pl) for p in _split_top(m.group(3) or ""))
            if not all(isinstance(p, Meta) for p in payload):
                raise RuleSyntaxError("observation payloads in premises must be metavariables", pl)
            new_names.extend(p.name for p in payload)
            premises[pos] = Observes(m.group(2), tuple(replace(p, tag=Tag.NEW) for p in payload))
    all_names = arg_names + new_names
    if len(set(all_names)) != len(all_names):
        raise MetaReuse(f"rule {name} reuses a metavariable", lineno)
    body = _template(sig, arrow[2], lineno)
    _check_metas(body, set(all_names), name, lineno)
    for pos, p in premises.items():
        if isinstance(p, Consumes) and p.label is None and p.target is not None:
            raise RuleSyntaxError(f"rule {name}: a result without a label is meaningless", lineno)
    body = _retag(body, set(new_names))
    prem = tuple(premises.get(i, Passive()) for i in strict)
    return CompRule(name, op.name, args, prem, body)


# ---------------------------------------------------------------------------
# sorts of rules and shapes


def _compatible(a, b) -> bool:
    u = Unifier()
    a2, b2 = u.instantiate([a]), u.instantiate([b])
    try:
        u.unify(a2[0], b2[0])
    except SortMismatch:
        return False
    return True


def possible_shapes(rs: RuleSet, op: OperatorDescriptor, pos: int) -> list[str]:
    """Behaviour shapes an argument at strict position ``pos`` can exhibit."""
    want = op.args[pos].sort
    shapes = [RED]
    for vop in rs.signature.value_ops:
        if _compatible(vop.result, want):
            s = rs.value_rules[vop.name].shape
            if s not in shapes:
                shapes.append(s)
    return shapes


def _check_rule_sorts(rs: RuleSet, rule: CompRule) -> None:
    """Infer sorts for the metavariables of a computation rule (typed languages)."""
    sig = rs.signature
    if not sig.is_typed():
        return
    u = Unifier()
    env: dict[str, object] = {}
    op = sig.op(rule.op)
    inst = u.instantiate([op.result, *(a.sort for a in op.args)])
    for m, s in zip(rule.arg_metas, inst[1:]):
        env[m.name] = s
    for pos, p in zip(op.strict_positions, rule.premises):
        src = env[rule.arg_metas[pos].name]
        if isinstance(p, Reduces):
            env[p.target] = src
        elif isinstance(p, Consumes):
            dom, cod = u.fresh(), u.fresh()
            u.unify(src, Arrow(dom, cod))
            if p.label is not None:
                u.unify(_template_sort(sig, p.label, env, u), dom)
            if p.target:
                env[p.target] = cod
        elif isinstance(p, Observes):
            for m in p.payload:
                env[m.name] = u.fresh()
    try:
        u.unify(_template_sort(sig, rule.conclusion, env, u), inst[0])
    except SortMismatch as e:
        raise RuleSyntaxError(f"rule {rule.name}: conclusion sort mismatch ({e})") from None


def _template_sort(sig: SignatureSpec, tpl, env: dict, u: Unifier):
    if isinstance(tpl, Meta):
        if tpl.name not in env:
            env[tpl.name] = u.fresh()
        return env[tpl.name]
    if isinstance(tpl, TSubst):
        return _template_sort(sig, tpl.body, env, u)
    op = sig.op(tpl.op)
    inst = u.instantiate([op.result, *(op.arg_spec(i).sort for i in range(len(tpl.args)))])
    for a, s in zip(tpl.args, inst[1:]):
        u.unify(_template_sort(sig, a, env, u), s)
    return inst[0]


# ---------------------------------------------------------------------------
# totality and strong separation


@dataclass
class TotalityReport:
    gaps: list[tuple[str, tuple[str, ...]]] = field(default_factory=list)
    overlaps: list[tuple[str, tuple[str, ...], tuple[str, ...]]] = field(default_factory=list)

    @property
    def exhaustive(self) -> bool:
        return not self.gaps and not self.overlaps

    def to_json(self) -> dict:
        return {
            "exhaustive": self.exhaustive,
            "gaps": [{"op": op, "shape": list(sh)} for op, sh in self.gaps],
            "overlaps": [{"op": op, "shape": list(sh), "rules": list(rs)} for op, sh, rs in self.overlaps],
        }


@dataclass(frozen=True)
class Violation:
    rule: str | None
    op: str
    position: int | None
    shape: tuple[str, ...]
    reason: str
    ordinal: int | None = None  # 1-based position of the rule in its source


@dataclass
class SeparationReport:
    language: str
    violations: list[Violation]
    totality: TotalityReport

    @property
    def verdict(self) -> str:
        return "pass" if not self.violations else "fail"

    @property
    def passed(self) -> bool:
        return not self.violations

    def to_json(self) -> dict:
        return {
            "language": self.language,
            "verdict": self.verdict,
            "violations": [
                {"rule": v.rule, "ordinal": v.ordinal, "op": v.op, "position": v.position, "shape": list(v.shape), "reason": v.reason}
                for v in self.violations
            ],
            "totality": self.totality.to_json(),
        }

    def to_text(self) -> str:
        lines = [f"{self.language}: strong separation {self.verdict.upper()}"]
        for v in self.violations:
            where = f"rule {v.rule} (rule #{v.ordinal} of the file)" if v.rule else f"operator {v.op}"
            pos = f", strict argument {v.position}" if v.position is not None else ""
            lines.append(f"  {where}{pos} at shape ({', '.join(v.shape)}): {v.reason}")
        t = self.totality
        lines.append(f"totality: {'exhaustive' if t.exhaustive else 'incomplete'}")
        for op, sh in t.gaps:
            lines.append(f"  gap: {op} at ({', '.join(sh)})")
        for op, sh, names in t.overlaps:
            lines.append(f"  overlap: {op} at ({', '.join(sh)}) by {', '.join(names)}")
        return "\n".join(lines)


def check_totality(rs: RuleSet) -> TotalityReport:
    rep = TotalityReport()
    for op in sorted(rs.signature.computation_ops, key=lambda o: o.name):
        for shapes in itertools.product(*(possible_shapes(rs, op, i) for i in op.strict_positions)):
            hits = [r.name for r in rs.rules_for(op.name) if r.covers(shapes)]
            if not hits:
                rep.gaps.append((op.name, shapes))
            elif len(hits) > 1 and rs.kind is not EffectKind.FINSET:
                rep.overlaps.append((op.name, shapes, tuple(hits)))
    return rep


def check_strong_separation(rs: RuleSet) -> SeparationReport:
    """Every rule firing on a tuple with a reducing strict argument must be a patience rule.

    The required conclusion is ``f(x1', ..., xn', lazies)`` where ``xi'`` is the
    reduct for reducing positions and the unchanged argument otherwise. A
    reducing tuple with no rule at all also breaks the condition, since the
    patience step would be missing.
    """
    violations: list[Violation] = []
    for op in sorted(rs.signature.computation_ops, key=lambda o: o.name):
        strict = op.strict_positions
        per_pos = [possible_shapes(rs, op, i) for i in strict]
        for shapes in itertools.product(*per_pos):
            if RED not in shapes:
                continue
            rules = [r for r in rs.rules_for(op.name) if r.covers(shapes)]
            if not rules:
                violations.append(Violation(None, op.name, None, shapes, "no rule propagates the reduction"))
            for r in rules:
                v = _patience_violation(op, r, shapes)
                if v is not None:
                    v = dataclasses.replace(v, ordinal=rs.ordinal(r.name))
                if v is not None and v not in violations:
                    violations.append(v)
    return SeparationReport(rs.name, violations, check_totality(rs))


def _patience_violation(op: OperatorDescriptor, rule: CompRule, shapes) -> Violation | None:
    strict = op.strict_positions
    c = rule.conclusion
    if not isinstance(c, TNode) or c.op != op.name or len(c.args) != len(rule.arg_metas):
        return Violation(rule.name, op.name, None, shapes, f"conclusion is not headed by {op.name}")
    for i, (meta, got) in enumerate(zip(rule.arg_metas, c.args)):
        want = meta.name
        if i in strict:
            k = strict.index(i)
            if shapes[k] == RED:
                p = rule.premises[k]
                if not isinstance(p, Reduces):
                    return Violation(rule.name, op.name, i, shapes, "the rule has no reduct for this reducing argument (a patience rule is missing)")
                want = p.target
        if not (isinstance(got, Meta) and got.name == want):
            mode = "reduct" if want != meta.name else "unchanged argument"
            return Violation(rule.name, op.name, i, shapes, f"expected the {mode} {want} in the conclusion")
    return None


def lift_powerset(rs: RuleSet) -> RuleSet:
    """Reinterpret a deterministic rule set in the finite powerset effect."""
    if rs.kind is EffectKind.FINSET:
        return rs
    return RuleSet(
        rs.name + "+P", rs.signature, dict(rs.value_rules), rs.comp_rules, EffectKind.FINSET, rs.notes, rs.source, rs.rule_order
    )


def extend_ruleset(rs: RuleSet, text: str, name: str | None = None) -> RuleSet:
    """Add operators and rules written in the rule format to an existing rule set."""
    return parse_ruleset(text, base=rs, name=name or rs.name)


# ---------------------------------------------------------------------------
# derived big-step rules


@dataclass(frozen=True)
class BigStepRule:
    op: str | None  # None for the value axiom
    heads: tuple[str, ...]
    lhs: object
    premises: tuple[tuple[object, object], ...]  # (strict argument meta, value pattern)
    body: object | None
    result: str
    simplifiable: bool

    def render(self, rs: RuleSet) -> str:
        sh = lambda t: show(rs.signature, t)
        if self.op is None:
            return f"{self.result} ⇓ {self.result}"
        prem = [f"{sh(a)} ⇓ {sh(p)}" for a, p in self.premises]
        if self.simplifiable:
            concl = f"{sh(self.lhs)} ⇓ {sh(self.body)}"
        else:
            concl = f"{sh(self.lhs)} ⇓ {self.result}"
            prem.append(f"{sh(self.body)} ⇓ {self.result}")
        mark = "  (*)" if self.simplifiable else ""
        return concl + (" ⇐ " + ", ".join(prem) if prem else "") + mark

    def render_full(self, rs: RuleSet) -> str:
        """The unsimplified form, as evaluation uses it."""
        return replace(self, simplifiable=False).render(rs)

    def to_json(self, rs: RuleSet) -> dict:
        sh = lambda t: show(rs.signature, t)
        return {
            "op": self.op,
            "heads": list(self.heads),
            "conclusion": sh(self.lhs) if self.lhs is not None else self.result,
            "premises": [[sh(a), sh(p)] for a, p in self.premises],
            "body": sh(self.body) if self.body is not None else None,
            "result": self.result,
            "simplifiable": self.simplifiable,
            "text": self.render(rs),
        }


def derive_bigstep_rules(rs: RuleSet, compact: bool = False) -> list[BigStepRule]:
    """One rule per computation former and tuple of value heads for its strict arguments.

    With ``compact``, strict positions whose body does not depend on the head
    (the head is passed along unchanged) are printed once with a variable
    standing for the value, as in hand-written big-step tables.
    """
    from .semantics import head_tuples, xi_schema

    out = [BigStepRule(None, (), None, (), None, "v", False)]
    for op in sorted(rs.signature.computation_ops, key=lambda o: o.name):
        entries = []
        for heads in head_tuples(rs, op):
            schema = xi_schema(rs, op.name, heads)
            for body in sorted(schema.bodies, key=lambda b: show(rs.signature, b)):
                entries.append((heads, schema, body))
        folded = _compact(rs, entries) if compact else None
        for heads, schema, body, premises in folded or [(h, sc, b, sc.head_premises) for h, sc, b in entries]:
            result = _fresh_result(schema.used_names | {m.name for m in template_metas(body)})
            simp = _is_value_template(rs, body, premises)
            out.append(BigStepRule(op.name, heads, schema.lhs, tuple(premises), body, result, simp))
    return out


def _is_value_template(rs: RuleSet, body, premises) -> bool:
    if isinstance(body, TNode):
        return rs.signature.op(body.op).is_value
    if isinstance(body, Meta):
        # A variable bound to the value of a strict argument.
        return any(isinstance(p, Meta) and p.name == body.name for _, p in premises)
    return False


def _compact(rs: RuleSet, entries: list) -> list | None:
    """Fold head-parametric strict positions; None when nothing folds.

    A strict position folds when, for every choice of the other heads, the
    body is the same template with the argument's value passed along as a
    whole, so one rule with a value variable covers all heads.
    """
    from .semantics import unmark

    if not entries:
        return None
    per_heads: dict = {}
    for heads, schema, body in entries:
        per_heads.setdefault(heads, []).append(schema)
    if any(len(v) != 1 or len(v[0].marked_bodies) != 1 for v in per_heads.values()):
        return None
    n = len(entries[0][0])
    if n == 0:
        return None
    reserved = set().union(*(sc.used_names for _, sc, _ in entries)) | {"v"}
    var_names = [c for c in ("w", "u", "z", "w'", "u'", "z'") if c not in reserved][:n]
    while len(var_names) < n:
        var_names.append(f"w{len(var_names)}")

    def abstracted(schema, positions, canonical: bool):
        repl = {schema.strict[k]: Meta(var_names[k]) for k in positions}
        out = unmark(schema.marked_bodies[0], repl)
        names = {m.name for m in template_metas(out)}
        ren: dict = {}
        for k, metas in enumerate(schema.head_metas):
            inner = {m.name for m in metas}
            if k in positions and inner & names:
                return None
            if canonical:
                for j, m in enumerate(metas):
                    ren[m.name] = Meta(f"#{k}.{j}", spread=m.spread)
        return _strip_tags(substitute_template(out, ren) if canonical else out)

    candidates = [len({h[k] for h in per_heads}) for k in range(n)]
    folded = []
    for k in range(n):
        if candidates[k] < 2:
            continue
        groups: dict = {}
        ok = True
        for heads, schema, _ in entries:
            a = abstracted(schema, [k], canonical=True)
            if a is None:
                ok = False
                break
            groups.setdefault(heads[:k] + heads[k + 1 :], set()).add(a)
        if ok and all(len(g) == 1 for g in groups.values()):
            folded.append(k)
    if not folded:
        return None
    groups: dict = {}
    for heads, schema, _ in entries:
        key = tuple(h for i, h in enumerate(heads) if i not in folded)
        groups.setdefault(key, []).append((heads, schema))
    out = []
    for key in sorted(groups):
        members = groups[key]
        if len({abstracted(sc, folded, canonical=True) for _, sc in members}) != 1:
            return None
        heads, schema = members[0]
        body = abstracted(schema, folded, canonical=False)
        premises = [
            (arg, Meta(var_names[k]) if k in folded else head) for k, (arg, head) in enumerate(schema.head_premises)
        ]
        shown = tuple("*" if k in folded else h for k, h in enumerate(heads))
        out.append((shown, schema, body, premises))
    return out


def _strip_tags(tpl):
    if isinstance(tpl, Meta):
        return Meta(tpl.name, spread=tpl.spread)
    if isinstance(tpl, TNode):
        return TNode(tpl.op, tuple(_strip_tags(a) for a in tpl.args))
    if isinstance(tpl, TSubst):
        return TSubst(_strip_tags(tpl.body), _strip_tags(tpl.arg))
    return tpl


def _fresh_result(used: Iterable[str]) -> str:
    used = set(used)
    for cand in ("v", "w", "u", "v'", "w'"):
        if cand not in used:
            return cand
    return next(f"v{i}" for i in itertools.count() if f"v{i}" not in used)


def render_bigstep_table(rs: RuleSet, rules: list[BigStepRule] | None = None, compact: bool = False) -> str:
    rules = derive_bigstep_rules(rs, compact=compact) if rules is None else rules
    return "\n".join(r.render(rs) for r in rules)


def bigstep_json(rs: RuleSet, rules: list[BigStepRule] | None = None, compact: bool = False) -> str:
    rules = derive_bigstep_rules(rs, compact=compact) if rules is None else rules
    return json.dumps({"language": rs.name, "rules": [r.to_json(rs) for r in rules]}, ensure_ascii=False, indent=2)
