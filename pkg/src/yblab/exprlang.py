"""Expression mini-language for user-supplied parameter functions.

Families are parameterized by arbitrary scalar functions of the spectral
coordinates ("d(u)", "f_g(u)", ...).  Config files carry them as text in a
small grammar:

    expr    :=  term (('+'|'-') term)*
    term    :=  power (('*'|'/') power)*
    power   :=  unary ('^' power)?          # right-associative
    unary   :=  '-' unary | atom
    atom    :=  number | name | name '(' expr (',' expr)* ')' | '(' expr ')'

Builtins: sin cos tan sinh cosh tanh exp log sqrt (one argument, principal
branches) and sn cn dn (two arguments, real argument and real modulus).
Constants: pi and the imaginary unit i.  Variables are free identifiers and
are bound to real values at evaluation time.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Mapping, Union

from . import ellip
from .errors import ExprError

Expr = Union["Lit", "Var", "Unary", "Binary", "Call"]


@dataclass(frozen=True)
class Lit:
    value: complex


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Unary:
    op: str
    operand: Expr


@dataclass(frozen=True)
class Binary:
    op: str
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Call:
    fn: str
    args: tuple


_ONE_ARG = ("sin", "cos", "tan", "sinh", "cosh", "tanh", "exp", "log", "sqrt")
_TWO_ARG = ("sn", "cn", "dn")
ARITY = {name: 1 for name in _ONE_ARG} | {name: 2 for name in _TWO_ARG}
CONSTANTS = {"pi": complex(math.pi), "i": 1j}


# ---------------------------------------------------------------------------
# tokenizer


@dataclass(frozen=True)
class _Tok:
    kind: str  # num ident op lparen rparen comma end
    text: str
    pos: int


def _tokenize(text: str) -> list[_Tok]:
    toks = []
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch.isspace():
            i += 1
            continue
        if ch.isdigit() or (ch == "." and i + 1 < n and text[i + 1].isdigit()):
            j = i
            seen_exp = False
            while j < n:
                c = text[j]
                if c.isdigit() or c == ".":
                    j += 1
                elif c in "eE" and not seen_exp and j + 1 < n and (
                    text[j + 1].isdigit() or text[j + 1] in "+-"
                ):
                    seen_exp = True
                    j += 2 if text[j + 1] in "+-" else 1
                else:
                    break
            toks.append(_Tok("num", text[i:j], i))
            i = j
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            toks.append(_Tok("ident", text[i:j], i))
            i = j
            continue
        if ch in "+-*/^":
            toks.append(_Tok("op", ch, i))
        elif ch == "(":
            toks.append(_Tok("lparen", ch, i))
        elif ch == ")":
            toks.append(_Tok("rparen", ch, i))
        elif ch == ",":
            toks.append(_Tok("comma", ch, i))
        else:
            raise ExprError(f"unexpected character {ch!r}", i)
        i += 1
    toks.append(_Tok("end", "", n))
    return toks


# ---------------------------------------------------------------------------
# recursive-descent parser


class _Parser:
    def __init__(self, text: str):
        self.toks = _tokenize(text)
        self.pos = 0

    def peek(self) -> _Tok:
        return self.toks[self.pos]

    def advance(self) -> _Tok:
        tok = self.toks[self.pos]
        self.pos += 1
        return tok

    def expect(self, kind: str) -> _Tok:
        tok = self.advance()
        if tok.kind != kind:
            raise ExprError(f"expected {kind}, found {tok.text or 'end of input'!r}", tok.pos)
        return tok

    def expr(self) -> Expr:
        node = self.term()
        while self.peek().kind == "op" and self.peek().text in "+-":
            op = self.advance().text
            node = Binary(op, node, self.term())
        return node

    def term(self) -> Expr:
        node = self.power()
        while self.peek().kind == "op" and self.peek().text in "*/":
            op = self.advance().text
            node = Binary(op, node, self.power())
        return node

    def power(self) -> Expr:
        base = self.unary()
        if self.peek().kind == "op" and self.peek().text == "^":
            self.advance()
            return Binary("^", base, self.power())
        return base

    def unary(self) -> Expr:
        if self.peek().kind == "op" and self.peek().text == "-":
            self.advance()
            return Unary("-", self.unary())
        return self.atom()

    def atom(self) -> Expr:
        tok = self.advance()
        if tok.kind == "num":
            try:
                return Lit(complex(float(tok.text)))
            except ValueError:
                raise ExprError(f"bad numeric literal {tok.text!r}", tok.pos) from None
        if tok.kind == "ident":
            if self.peek().kind == "lparen":
                self.advance()
                args = [self.expr()]
                while self.peek().kind == "comma":
                    self.advance()
                    args.append(self.expr())
                self.expect("rparen")
                if tok.text not in ARITY:
                    raise ExprError(f"unknown function {tok.text!r}", tok.pos)
                if len(args) != ARITY[tok.text]:
                    raise ExprError(
                        f"{tok.text} takes {ARITY[tok.text]} argument(s), got {len(args)}",
                        tok.pos,
                    )
                return Call(tok.text, tuple(args))
            if tok.text in CONSTANTS:
                return Lit(CONSTANTS[tok.text])
            return Var(tok.text)
        if tok.kind == "lparen":
            node = self.expr()
            self.expect("rparen")
            return node
        raise ExprError(f"unexpected {tok.text or 'end of input'!r}", tok.pos)


def parse(text: str) -> Expr:
    if not text or not text.strip():
        raise ExprError("empty expression", 0)
    p = _Parser(text)
    node = p.expr()
    tok = p.peek()
    if tok.kind != "end":
        raise ExprError(f"trailing input {tok.text!r}", tok.pos)
    return node


# ---------------------------------------------------------------------------
# evaluation and utilities


def _real_arg(value: complex, what: str) -> float:
    if abs(value.imag) > 0.0:
        raise ExprError(f"{what} requires a real argument")
    return value.real


def eval_expr(e: Expr, env: Mapping[str, float]) -> complex:
    """Bottom-up evaluation.  Deterministic: identical env gives identical bits."""
    if isinstance(e, Lit):
        return e.value
    if isinstance(e, Var):
        if e.name not in env:
            raise ExprError(f"unbound variable {e.name!r}")
        return complex(env[e.name])
    if isinstance(e, Unary):
        return -eval_expr(e.operand, env)
    if isinstance(e, Binary):
        lhs = eval_expr(e.left, env)
        rhs = eval_expr(e.right, env)
        if e.op == "+":
            return lhs + rhs
        if e.op == "-":
            return lhs - rhs
        if e.op == "*":
            return lhs * rhs
        if e.op == "/":
            if rhs == 0:
                raise ExprError("division by zero")
            return lhs / rhs
        if e.op == "^":
            return lhs ** rhs
        raise ExprError(f"unknown operator {e.op!r}")
    if isinstance(e, Call):
        args = [eval_expr(a, env) for a in e.args]
        if e.fn in _TWO_ARG:
            x = _real_arg(args[0], e.fn)
            k = _real_arg(args[1], f"{e.fn} modulus")
            trip = ellip.jacobi(x, k)
            return complex(getattr(trip, e.fn))
        (z,) = args
        if e.fn == "sqrt":
            return cmath.sqrt(z)
        if e.fn == "log":
            if z == 0:
                raise ExprError("log of zero")
            return cmath.log(z)
        return getattr(cmath, e.fn)(z)
    raise TypeError(f"not an expression node: {e!r}")


def free_vars(e: Expr) -> frozenset[str]:
    if isinstance(e, Lit):
        return frozenset()
    if isinstance(e, Var):
        return frozenset((e.name,))
    if isinstance(e, Unary):
        return free_vars(e.operand)
    if isinstance(e, Binary):
        return free_vars(e.left) | free_vars(e.right)
    if isinstance(e, Call):
        out: frozenset[str] = frozenset()
        for a in e.args:
            out |= free_vars(a)
        return out
    raise TypeError(f"not an expression node: {e!r}")


def subst(e: Expr, name: str, replacement: Expr) -> Expr:
    """Substitute an expression for every occurrence of a variable."""
    if isinstance(e, Lit):
        return e
    if isinstance(e, Var):
        return replacement if e.name == name else e
    if isinstance(e, Unary):
        return Unary(e.op, subst(e.operand, name, replacement))
    if isinstance(e, Binary):
        return Binary(e.op, subst(e.left, name, replacement), subst(e.right, name, replacement))
    if isinstance(e, Call):
        return Call(e.fn, tuple(subst(a, name, replacement) for a in e.args))
    raise TypeError(f"not an expression node: {e!r}")


def to_text(e: Expr) -> str:
    """Fully parenthesized rendering; reparses to a structurally identical AST."""
    if isinstance(e, Lit):
        v = e.value
        if v.imag == 0:
            return repr(v.real)
        if v == 1j:
            return "i"
        if v.real == 0:
            return f"({repr(v.imag)}*i)"
        return f"({repr(v.real)}+{repr(v.imag)}*i)"
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Unary):
        return f"(-{to_text(e.operand)})"
    if isinstance(e, Binary):
        return f"({to_text(e.left)}{e.op}{to_text(e.right)})"
    if isinstance(e, Call):
        return f"{e.fn}({','.join(to_text(a) for a in e.args)})"
    raise TypeError(f"not an expression node: {e!r}")
