"""Concrete syntax: a signature-driven parser and printer for terms and templates.

Grammar (per signature)::

    expr   := BINDER '.' expr | infix
    infix  := unary (SYMBOL unary)*            -- left-associative
    unary  := BINDER '.' expr | appl
    appl   := postfix postfix*                 -- juxtaposition, left-associative
    postfix:= atom ('[' expr ']')*             -- substitution marker, templates only
    atom   := NAME | NAME '(' expr, ... ')' | INT | INT '∗' '(' expr, ... ')'
            | NAME '...' | NAME '∗' '(' ... ')' | '(' expr ')'

Names not declared in the signature are metavariables (templates only).
``\\`` is accepted for ``λ``, ``*`` for ``∗``, and ``′``/``″`` for ``'``/``''``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .syntax import (
    ArityMismatch,
    Meta,
    Node,
    SignatureSpec,
    SyntaxFault,
    TNode,
    TSubst,
    Var,
)


class ParseError(SyntaxFault):
    def __init__(self, message: str, pos: int, text: str = "") -> None:
        super().__init__(f"{message} at position {pos}")
        self.pos = pos
        self.text = text


_NAME = re.compile(r"[^\W\d]\w*'*")
_INT = re.compile(r"\d+")


@dataclass
class Tok:
    kind: str  # name, int, sym, punct, eof
    text: str
    pos: int


def _normalize(text: str) -> str:
    return text.replace("′", "'").replace("″", "''").replace("\\", "λ").replace("*", "∗")


class _Lexer:
    def __init__(self, sig: SignatureSpec, text: str) -> None:
        self.text = _normalize(text)
        self.symbols = sorted(
            {op.notation.symbol for op in sig.ops if op.notation.kind == "infix"}, key=len, reverse=True
        )
        self.binders = {op.notation.symbol: op.name for op in sig.ops if op.notation.kind == "binder"}

    def tokens(self) -> list[Tok]:
        out: list[Tok] = []
        s, i = self.text, 0
        while i < len(s):
            c = s[i]
            if c.isspace():
                i += 1
                continue
            if s.startswith("...", i):
                out.append(Tok("punct", "...", i))
                i += 3
                continue
            matched = next((sym for sym in self.symbols if s.startswith(sym, i)), None)
            if matched:
                out.append(Tok("sym", matched, i))
                i += len(matched)
                continue
            if c in "(),.[]∗" or c in self.binders:
                out.append(Tok("punct", c, i))
                i += 1
                continue
            m = _INT.match(s, i)
            if m:
                out.append(Tok("int", m.group(), i))
                i = m.end()
                continue
            m = _NAME.match(s, i)
            if m:
                out.append(Tok("name", m.group(), i))
                i = m.end()
                continue
            raise ParseError(f"unexpected character {c!r}", i, text=s)
        out.append(Tok("eof", "", len(s)))
        return out


class _Parser:
    def __init__(self, sig: SignatureSpec, text: str, template: bool) -> None:
        lex = _Lexer(sig, text)
        self.sig = sig
        self.text = lex.text
        self.toks = lex.tokens()
        self.i = 0
        self.template = template
        self.binders = lex.binders
        self.infix = {op.notation.symbol: op.name for op in sig.ops if op.notation.kind == "infix"}
        juxt = [op.name for op in sig.ops if op.notation.kind == "juxt"]
        self.juxt = juxt[0] if juxt else None
        neutral = [op.name for op in sig.ops if op.notation.kind == "neutral"]
        self.neutral = neutral[0] if neutral else None

    # helpers
    @property
    def tok(self) -> Tok:
        return self.toks[self.i]

    def error(self, msg: str) -> ParseError:
        return ParseError(msg, self.tok.pos, text=self.text)

    def eat(self, text: str) -> Tok:
        if self.tok.text != text or self.tok.kind not in ("punct", "sym"):
            raise self.error(f"expected {text!r}, found {self.tok.text or 'end of input'!r}")
        t = self.tok
        self.i += 1
        return t

    def at(self, text: str) -> bool:
        return self.tok.kind in ("punct", "sym") and self.tok.text == text

    def node(self, op: str, args):
        if self.template:
            return TNode(op, tuple(args))
        return Node(op, args)

    # grammar
    def parse(self):
        e = self.expr()
        if self.tok.kind != "eof":
            raise self.error(f"unexpected {self.tok.text!r}")
        return e

    def expr(self):
        left = self.unary()
        while self.tok.kind == "sym":
            op = self.infix[self.eat(self.tok.text).text]
            right = self.unary()
            left = self.node(op, [left, right])
        return left

    def unary(self):
        if self.tok.kind == "punct" and self.tok.text in self.binders:
            op = self.binders[self.tok.text]
            self.i += 1
            self.eat(".")
            return self.node(op, [self.expr()])
        return self.appl()

    def _starts_atom(self) -> bool:
        t = self.tok
        return t.kind in ("name", "int") or (t.kind == "punct" and (t.text == "(" or t.text in self.binders))

    def appl(self):
        head = self.postfix()
        while self._starts_atom():
            if self.juxt is None:
                raise self.error("juxtaposition is not part of this language")
            if self.tok.kind == "punct" and self.tok.text in self.binders:
                arg = self.unary()
            else:
                arg = self.postfix()
            head = self.node(self.juxt, [head, arg])
        return head

    def postfix(self):
        a = self.atom()
        while self.at("["):
            if not self.template:
                raise self.error("substitution markers are only allowed in rule templates")
            self.eat("[")
            arg = self.expr()
            self.eat("]")
            a = TSubst(a, arg)
        return a

    def args(self):
        self.eat("(")
        out = []
        if not self.at(")"):
            out.append(self.arg())
            while self.at(","):
                self.eat(",")
                out.append(self.arg())
        self.eat(")")
        return out

    def arg(self):
        if self.template and self.tok.kind == "name" and self.toks[self.i + 1].text == "...":
            name = self.tok.text
            self.i += 2
            return Meta(name, spread=True)
        return self.expr()

    def atom(self):
        t = self.tok
        if t.kind == "punct" and t.text == "(":
            self.eat("(")
            e = self.expr()
            self.eat(")")
            return e
        if t.kind == "int":
            if not self.sig.binding or self.neutral is None:
                raise self.error("de Bruijn indices need a binding discipline")
            self.i += 1
            head = Var(int(t.text))
            spine = []
            if self.at("∗"):
                self.eat("∗")
                spine = self.args()
            return self.node(self.neutral, [head, *spine])
        if t.kind == "name":
            self.i += 1
            if t.text in self.sig:
                op = self.sig.op(t.text)
                if self.at("(") and (op.args or op.variadic):
                    args = self.args()
                    if not op.arity_ok(len(args)):
                        raise ArityMismatch(f"{op.name} expects {len(op.args)} arguments, got {len(args)} (position {t.pos})")
                elif op.args and not op.variadic:
                    raise ParseError(f"{t.text} expects {len(op.args)} arguments", t.pos, text=self.text)
                else:
                    args = []
                return self.node(t.text, args)
            if not self.template:
                raise ParseError(f"unknown operator {t.text!r}", t.pos, text=self.text)
            if self.at("∗"):
                self.eat("∗")
                if self.neutral is None:
                    raise self.error("no neutral former in this signature")
                return TNode(self.neutral, (Meta(t.text), *self.args()))
            return Meta(t.text)
        raise self.error(f"unexpected {t.text or 'end of input'!r}")


def parse_term(sig: SignatureSpec, text: str):
    return _Parser(sig, text, template=False).parse()


def parse_template(sig: SignatureSpec, text: str):
    return _Parser(sig, text, template=True).parse()


# ---------------------------------------------------------------------------
# printing

_BINDER, _INFIX, _APP, _ATOM = 0, 1, 2, 3


def show(sig: SignatureSpec, t, max_size: int | None = None) -> str:
    """Print a term or template; inverse of :func:`parse_term`/:func:`parse_template`."""
    if max_size is not None and getattr(t, "size", 0) > max_size:
        return f"<term of size {t.size}>"
    return _show(sig, t, _BINDER)


def _level(sig: SignatureSpec, t) -> int:
    if isinstance(t, (Node, TNode)):
        kind = sig.op(t.op).notation.kind if t.op in sig else "prefix"
        return {"binder": _BINDER, "infix": _INFIX, "juxt": _APP}.get(kind, _ATOM)
    return _ATOM


def _show(sig: SignatureSpec, t, need: int) -> str:
    if isinstance(t, Meta):
        return t.name + ("..." if t.spread else "")
    if isinstance(t, Var):
        return str(t.index)
    if isinstance(t, TSubst):
        return f"{_show(sig, t.body, _ATOM)}[{_show(sig, t.arg, _BINDER)}]"
    op = sig.op(t.op)
    kind = op.notation.kind
    if kind == "juxt":
        s = f"{_show(sig, t.args[0], _APP)} {_show(sig, t.args[1], _ATOM)}"
    elif kind == "infix":
        s = f"{_show(sig, t.args[0], _APP)} {op.notation.symbol} {_show(sig, t.args[1], _APP)}"
    elif kind == "binder":
        s = f"{op.notation.symbol}.{_show(sig, t.args[0], _BINDER)}"
    elif kind == "neutral":
        head = _show(sig, t.args[0], _ATOM)
        s = head if len(t.args) == 1 else head + "∗(" + ", ".join(_show(sig, a, _BINDER) for a in t.args[1:]) + ")"
    elif t.args:
        s = op.name + "(" + ", ".join(_show(sig, a, _BINDER) for a in t.args) + ")"
    else:
        s = op.name
    return f"({s})" if _level(sig, t) < need else s
