"""A small complex-analytic expression language for Q(z) and h(z).

Grammar (EBNF)::

    expr     = term { ("+" | "-") term } ;
    term     = unary { ("*" | "/") unary } ;
    unary    = "-" unary | power ;
    power    = atom [ "^" exponent ] ;
    exponent = [ "-" ] INT [ "^" exponent ] | "(" [ "-" ] INT ")" ;
    atom     = NUMBER | "z" | "i" | FUNC "(" expr ")" | "(" expr ")" ;
    NUMBER   = digits [ "." digits ] [ ("e" | "E") [ "+" | "-" ] digits ] [ "i" ] ;
    FUNC     = "exp" | "log" | "sin" | "cos" | "sinh" | "cosh" | "sqrt" ;

``^`` binds tighter than unary minus and is right associative; exponents
must be integers.  log and sqrt use the principal branch.
"""
import cmath
import re
from dataclasses import dataclass

import numpy as np

from .errors import ParseError, Pole

POLE_THRESHOLD = 1e-12
FUNCTIONS = ("exp", "log", "sin", "cos", "sinh", "cosh", "sqrt")


class Expr:
    __slots__ = ()


@dataclass(frozen=True)
class Num(Expr):
    value: complex


@dataclass(frozen=True)
class Var(Expr):
    pass


@dataclass(frozen=True)
class Neg(Expr):
    arg: Expr


@dataclass(frozen=True)
class BinOp(Expr):
    op: str
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Pow(Expr):
    base: Expr
    exponent: int


@dataclass(frozen=True)
class Call(Expr):
    name: str
    arg: Expr


# ---------------------------------------------------------------- tokenizer

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<number>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?i?)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*/^()])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class _Tok:
    kind: str
    text: str
    pos: int


def tokenize(text):
    toks = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", pos,
                             ["number", "z", "i", "function", "operator", "'('", "')'"])
        kind = m.lastgroup
        if kind != "ws":
            toks.append(_Tok(kind, m.group(), pos))
        pos = m.end()
    toks.append(_Tok("eof", "", len(text)))
    return toks


# ------------------------------------------------------------------- parser


class _Parser:
    def __init__(self, text):
        self.toks = tokenize(text)
        self.i = 0

    @property
    def tok(self):
        return self.toks[self.i]

    def advance(self):
        t = self.toks[self.i]
        self.i += 1
        return t

    def at(self, text):
        return self.tok.kind == "op" and self.tok.text == text

    def expect(self, text):
        if not self.at(text):
            raise ParseError(f"unexpected {self._describe()}", self.tok.pos, [repr(text)])
        return self.advance()

    def _describe(self):
        t = self.tok
        return "end of input" if t.kind == "eof" else f"token {t.text!r}"

    def parse(self):
        e = self.expr()
        if self.tok.kind != "eof":
            raise ParseError(f"unexpected {self._describe()}", self.tok.pos, ["'+'", "'-'", "'*'", "'/'", "'^'", "end of input"])
        return e

    def expr(self):
        e = self.term()
        while self.at("+") or self.at("-"):
            op = self.advance().text
            e = BinOp(op, e, self.term())
        return e

    def term(self):
        e = self.unary()
        while self.at("*") or self.at("/"):
            op = self.advance().text
            e = BinOp(op, e, self.unary())
        return e

    def unary(self):
        if self.at("-"):
            self.advance()
            return Neg(self.unary())
        return self.power()

    def power(self):
        base = self.atom()
        if self.at("^"):
            self.advance()
            return Pow(base, self.exponent())
        return base

    def _int_literal(self):
        sign = 1
        if self.at("-"):
            self.advance()
            sign = -1
        t = self.tok
        if t.kind != "number":
            raise ParseError(f"unexpected {self._describe()} in exponent", t.pos, ["integer"])
        if not t.text.isdigit():
            raise ParseError(f"non-integer exponent {t.text!r}", t.pos, ["integer"])
        self.advance()
        return sign * int(t.text)

    def exponent(self):
        if self.at("("):
            self.advance()
            n = self._int_literal()
            self.expect(")")
        else:
            n = self._int_literal()
        if self.at("^"):
            self.advance()
            m = self.exponent()
            if m < 0:
                raise ParseError("non-integer exponent (negative power of an integer)", self.tok.pos, ["integer"])
            n = n ** m
        return n

    def atom(self):
        t = self.tok
        if t.kind == "number":
            self.advance()
            if t.text.endswith("i"):
                return Num(complex(0.0, float(t.text[:-1])))
            return Num(complex(float(t.text), 0.0))
        if t.kind == "name":
            self.advance()
            if t.text == "z":
                return Var()
            if t.text == "i":
                return Num(1j)
            if t.text in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Call(t.text, arg)
            raise ParseError(f"unknown name {t.text!r}", t.pos, ["z", "i"] + list(FUNCTIONS))
        if self.at("("):
            self.advance()
            e = self.expr()
            self.expect(")")
            return e
        raise ParseError(f"unexpected {self._describe()}", t.pos, ["number", "z", "i", "function", "'('", "'-'"])


def parse(text):
    if not isinstance(text, str):
        raise TypeError("expression must be a string")
    return _Parser(text).parse()


# ------------------------------------------------------------------ printing

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2}


def _fmt_real(x):
    r = repr(float(x))
    if r.endswith(".0"):
        r = r[:-2]
    return r


def pretty(e):
    return _pretty(e)


def _prec(e):
    if isinstance(e, BinOp):
        return _PREC[e.op]
    if isinstance(e, Neg):
        return 3
    if isinstance(e, Pow):
        return 4
    return 5


def _pretty(e):
    if isinstance(e, Num):
        v = complex(e.value)
        if v.imag == 0.0:
            return _fmt_real(v.real)
        if v.real == 0.0:
            return _fmt_real(v.imag) + "i"
        return "(" + _fmt_real(v.real) + ("+" if v.imag >= 0 else "-") + _fmt_real(abs(v.imag)) + "i)"
    if isinstance(e, Var):
        return "z"
    if isinstance(e, Call):
        return f"{e.name}({_pretty(e.arg)})"
    if isinstance(e, Neg):
        inner = _pretty(e.arg)
        return "-" + (inner if _prec(e.arg) >= 3 else f"({inner})")
    if isinstance(e, Pow):
        base = _pretty(e.base)
        if _prec(e.base) < 5 or (isinstance(e.base, Num) and e.base.value.real and e.base.value.imag):
            base = f"({base})"
        return f"{base}^{e.exponent}"
    if isinstance(e, BinOp):
        p = _PREC[e.op]
        left, right = _pretty(e.left), _pretty(e.right)
        if _prec(e.left) < p:
            left = f"({left})"
        if _prec(e.right) <= p:
            right = f"({right})"
        return f"{left} {e.op} {right}"
    raise TypeError(f"not an expression node: {e!r}")


# ---------------------------------------------------------------- evaluation

_CMATH = {name: getattr(cmath, name) for name in FUNCTIONS}
_NUMPY = {"exp": np.exp, "log": np.log, "sin": np.sin, "cos": np.cos,
          "sinh": np.sinh, "cosh": np.cosh, "sqrt": np.sqrt}


def eval_expr(e, z, pole_threshold=POLE_THRESHOLD):
    """Evaluate at a complex point; raises :class:`Pole` at singularities."""
    z = complex(z)

    def ev(n):
        if isinstance(n, Num):
            return complex(n.value)
        if isinstance(n, Var):
            return z
        if isinstance(n, Neg):
            return 0 - ev(n.arg)  # keeps +0 imaginary parts on the branch cut
        if isinstance(n, BinOp):
            a, b = ev(n.left), ev(n.right)
            if n.op == "+":
                return a + b
            if n.op == "-":
                return a - b
            if n.op == "*":
                return a * b
            if abs(b) <= pole_threshold * (1.0 + abs(a)):
                raise Pole(z)
            return a / b
        if isinstance(n, Pow):
            b = ev(n.base)
            if n.exponent < 0 and abs(b) <= pole_threshold:
                raise Pole(z)
            return b ** n.exponent
        if isinstance(n, Call):
            a = ev(n.arg)
            if n.name == "log" and abs(a) <= pole_threshold:
                raise Pole(z, "logarithmic singularity")
            return _CMATH[n.name](a)
        raise TypeError(f"not an expression node: {n!r}")

    return ev(e)


def eval_array(e, z, pole_threshold=POLE_THRESHOLD):
    """Vectorised evaluation over an array of points.

    Returns ``(values, pole_mask)``; values at pole points are NaN.
    """
    z = np.asarray(z, dtype=np.complex128)
    poles = np.zeros(z.shape, dtype=bool)

    def ev(n):
        nonlocal poles
        if isinstance(n, Num):
            return np.full(z.shape, complex(n.value))
        if isinstance(n, Var):
            return z
        if isinstance(n, Neg):
            return 0 - ev(n.arg)  # keeps +0 imaginary parts on the branch cut
        if isinstance(n, BinOp):
            a, b = ev(n.left), ev(n.right)
            if n.op == "+":
                return a + b
            if n.op == "-":
                return a - b
            if n.op == "*":
                return a * b
            bad = np.abs(b) <= pole_threshold * (1.0 + np.abs(a))
            poles |= bad
            return a / np.where(bad, 1.0, b)
        if isinstance(n, Pow):
            b = ev(n.base)
            if n.exponent < 0:
                bad = np.abs(b) <= pole_threshold
                poles |= bad
                b = np.where(bad, 1.0, b)
            return b ** n.exponent
        if isinstance(n, Call):
            a = ev(n.arg)
            if n.name == "log":
                bad = np.abs(a) <= pole_threshold
                poles |= bad
                a = np.where(bad, 1.0, a)
            return _NUMPY[n.name](a)
        raise TypeError(f"not an expression node: {n!r}")

    with np.errstate(all="ignore"):
        vals = np.array(ev(e), dtype=np.complex128)
    vals = np.broadcast_to(vals, z.shape).copy()
    vals[poles] = np.nan
    return vals, poles
