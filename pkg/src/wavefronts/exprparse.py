"""Tiny arithmetic expression language for user-defined nonlinearities.

Grammar (precedence low to high): ``+ -``, ``* /``, unary ``-``, ``^``
(right associative), atoms.  Variables are ``u``, ``v``, ``x``; any other
identifier is a named parameter resolved from the binding environment.
Functions: exp, ln, sin, cos.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

VARIABLES = ("u", "v", "x")
FUNCTIONS = ("exp", "ln", "sin", "cos")

_MATH_FN = {"exp": math.exp, "ln": math.log, "sin": math.sin, "cos": math.cos}
_NP_FN = {"exp": np.exp, "ln": np.log, "sin": np.sin, "cos": np.cos}


class ExprSyntaxError(ValueError):
    """Malformed expression text; carries the byte offset of the problem."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset
        self.reason = message


class ExprEvalError(ValueError):
    """Evaluation failed (unbound name or domain error)."""

    def __init__(self, message: str, subexpr: "Expr"):
        super().__init__(f"{message} in '{to_str(subexpr)}'")
        self.subexpr = subexpr


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Name:
    ident: str


@dataclass(frozen=True)
class Neg:
    arg: "Expr"


@dataclass(frozen=True)
class BinOp:
    op: str  # one of + - * / ^
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Call:
    func: str
    arg: "Expr"


Expr = Num | Name | Neg | BinOp | Call


# ---------------------------------------------------------------- tokenizer

_SINGLE = set("+-*/^()")


def _tokenize(text: str):
    tokens = []
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch.isspace():
            i += 1
            continue
        if ch in _SINGLE:
            tokens.append((ch, ch, i))
            i += 1
            continue
        if ch.isdigit() or ch == ".":
            j = i
            while j < n and (text[j].isdigit() or text[j] == "."):
                j += 1
            if j < n and text[j] in "eE":
                k = j + 1
                if k < n and text[k] in "+-":
                    k += 1
                if k < n and text[k].isdigit():
                    j = k
                    while j < n and text[j].isdigit():
                        j += 1
            try:
                val = float(text[i:j])
            except ValueError:
                raise ExprSyntaxError(f"bad number '{text[i:j]}'", i) from None
            tokens.append(("num", val, i))
            i = j
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            tokens.append(("name", text[i:j], i))
            i = j
            continue
        raise ExprSyntaxError(f"unexpected character '{ch}'", i)
    tokens.append(("end", None, n))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.pos = 0

    def peek(self):
        return self.tokens[self.pos]

    def advance(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, kind: str):
        tok = self.peek()
        if tok[0] != kind:
            raise ExprSyntaxError(f"expected '{kind}'", tok[2])
        return self.advance()

    def parse(self) -> Expr:
        e = self.sum_()
        tok = self.peek()
        if tok[0] != "end":
            raise ExprSyntaxError("unexpected trailing input", tok[2])
        return e

    def sum_(self) -> Expr:
        e = self.term()
        while self.peek()[0] in ("+", "-"):
            op = self.advance()[0]
            e = BinOp(op, e, self.term())
        return e

    def term(self) -> Expr:
        e = self.factor()
        while self.peek()[0] in ("*", "/"):
            op = self.advance()[0]
            e = BinOp(op, e, self.factor())
        return e

    def factor(self) -> Expr:
        if self.peek()[0] == "-":
            self.advance()
            return Neg(self.factor())
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        if self.peek()[0] == "^":
            self.advance()
            # right associative; exponent may carry a unary minus
            return BinOp("^", base, self.factor())
        return base

    def atom(self) -> Expr:
        kind, val, off = self.peek()
        if kind == "num":
            self.advance()
            return Num(float(val))
        if kind == "name":
            self.advance()
            if val in FUNCTIONS:
                self.expect("(")
                arg = self.sum_()
                self.expect(")")
                return Call(val, arg)
            return Name(val)
        if kind == "(":
            self.advance()
            e = self.sum_()
            self.expect(")")
            return e
        raise ExprSyntaxError("expected expression", off)


def parse(text: str) -> Expr:
    """Parse expression text into an AST."""
    if not text or not text.strip():
        raise ExprSyntaxError("expected expression", 0)
    return _Parser(text).parse()


# ------------------------------------------------------------ pretty print

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "neg": 3, "^": 4}


def _prec(e: Expr) -> int:
    if isinstance(e, BinOp):
        return _PREC[e.op]
    if isinstance(e, Neg):
        return _PREC["neg"]
    if isinstance(e, Num) and e.value < 0:
        # negative literals (from constant folding) render with a minus sign
        return _PREC["neg"]
    return 9


def to_str(e: Expr) -> str:
    """Render so that parse(to_str(e)) is structurally equal to e."""
    if isinstance(e, Num):
        if e.value < 0:
            return f"-{fmt_num(-e.value)}"
        return fmt_num(e.value)
    if isinstance(e, Name):
        return e.ident
    if isinstance(e, Call):
        return f"{e.func}({to_str(e.arg)})"
    if isinstance(e, Neg):
        inner = to_str(e.arg)
        if _prec(e.arg) < _PREC["neg"]:
            inner = f"({inner})"
        return f"-{inner}"
    assert isinstance(e, BinOp)
    lp, rp = _prec(e.left), _prec(e.right)
    p = _PREC[e.op]
    ls = to_str(e.left)
    rs = to_str(e.right)
    if e.op == "^":
        # right associative: parenthesise a left operand of equal precedence
        if lp <= p:
            ls = f"({ls})"
        if rp < p and not isinstance(e.right, Neg):
            rs = f"({rs})"
    else:
        if lp < p:
            ls = f"({ls})"
        # left associative: equal precedence on the right needs parens
        if rp < p or (rp == p and isinstance(e.right, BinOp)):
            rs = f"({rs})"
    return f"{ls}{e.op}{rs}"


def fmt_num(v: float) -> str:
    if v == int(v) and abs(v) < 1e16:
        return str(int(v))
    return repr(v)


# ------------------------------------------------------------------- eval

def eval_expr(e: Expr, bindings: dict) -> float:
    """Evaluate at a scalar point, reporting the offending subexpression."""
    if isinstance(e, Num):
        return e.value
    if isinstance(e, Name):
        try:
            return float(bindings[e.ident])
        except KeyError:
            raise ExprEvalError(f"unbound name '{e.ident}'", e) from None
    if isinstance(e, Neg):
        return -eval_expr(e.arg, bindings)
    if isinstance(e, Call):
        x = eval_expr(e.arg, bindings)
        if e.func == "ln" and x <= 0.0:
            raise ExprEvalError(f"ln of non-positive value {x:g}", e)
        try:
            return _MATH_FN[e.func](x)
        except (ValueError, OverflowError) as exc:
            raise ExprEvalError(str(exc), e) from None
    assert isinstance(e, BinOp)
    a = eval_expr(e.left, bindings)
    b = eval_expr(e.right, bindings)
    if e.op == "+":
        return a + b
    if e.op == "-":
        return a - b
    if e.op == "*":
        return a * b
    if e.op == "/":
        if b == 0.0:
            raise ExprEvalError("division by zero", e)
        return a / b
    try:
        r = a ** b
        if isinstance(r, complex):
            raise ExprEvalError("fractional power of negative base", e)
        return float(r)
    except (ValueError, OverflowError, ZeroDivisionError) as exc:
        raise ExprEvalError(str(exc), e) from None


def compile_fn(e: Expr, var_order: tuple[str, ...], params: dict):
    """Compile to a numpy-broadcasting callable of the listed variables.

    Parameter names are baked in from `params`; unbound names raise here
    rather than at call time.
    """
    for name in free_names(e):
        if name not in var_order and name not in params:
            raise ExprEvalError(f"unbound name '{name}'", Name(name))

    def walk(node):
        if isinstance(node, Num):
            v = node.value
            return lambda args: v
        if isinstance(node, Name):
            if node.ident in var_order:
                idx = var_order.index(node.ident)
                return lambda args: args[idx]
            v = float(params[node.ident])
            return lambda args: v
        if isinstance(node, Neg):
            f = walk(node.arg)
            return lambda args: -f(args)
        if isinstance(node, Call):
            f = walk(node.arg)
            fn = _NP_FN[node.func]
            return lambda args: fn(f(args))
        fa, fb = walk(node.left), walk(node.right)
        op = node.op
        if op == "+":
            return lambda args: fa(args) + fb(args)
        if op == "-":
            return lambda args: fa(args) - fb(args)
        if op == "*":
            return lambda args: fa(args) * fb(args)
        if op == "/":
            return lambda args: fa(args) / fb(args)
        return lambda args: fa(args) ** fb(args)

    body = walk(e)

    def fn(*args):
        return body(args)

    return fn


def free_names(e: Expr) -> set[str]:
    if isinstance(e, Num):
        return set()
    if isinstance(e, Name):
        return {e.ident}
    if isinstance(e, Neg):
        return free_names(e.arg)
    if isinstance(e, Call):
        return free_names(e.arg)
    return free_names(e.left) | free_names(e.right)


# ----------------------------------------------------------------- derive

def _num(v: float) -> Num:
    return Num(float(v))


def _add(a: Expr, b: Expr) -> Expr:
    if isinstance(a, Num) and isinstance(b, Num):
        return _num(a.value + b.value)
    if isinstance(a, Num) and a.value == 0:
        return b
    if isinstance(b, Num) and b.value == 0:
        return a
    return BinOp("+", a, b)


def _sub(a: Expr, b: Expr) -> Expr:
    if isinstance(a, Num) and isinstance(b, Num):
        return _num(a.value - b.value)
    if isinstance(b, Num) and b.value == 0:
        return a
    if isinstance(a, Num) and a.value == 0:
        return Neg(b)
    return BinOp("-", a, b)


def _mul(a: Expr, b: Expr) -> Expr:
    if isinstance(a, Num) and isinstance(b, Num):
        return _num(a.value * b.value)
    if (isinstance(a, Num) and a.value == 0) or (isinstance(b, Num) and b.value == 0):
        return _num(0)
    if isinstance(a, Num) and a.value == 1:
        return b
    if isinstance(b, Num) and b.value == 1:
        return a
    return BinOp("*", a, b)


def _div(a: Expr, b: Expr) -> Expr:
    if isinstance(a, Num) and a.value == 0:
        return _num(0)
    if isinstance(b, Num) and b.value == 1:
        return a
    return BinOp("/", a, b)


def diff(e: Expr, var: str) -> Expr:
    """Symbolic derivative with respect to one of the variables."""
    if var not in VARIABLES:
        raise ValueError(f"cannot differentiate with respect to '{var}'")
    if isinstance(e, Num):
        return _num(0)
    if isinstance(e, Name):
        return _num(1 if e.ident == var else 0)
    if isinstance(e, Neg):
        d = diff(e.arg, var)
        if isinstance(d, Num):
            return _num(-d.value)
        return Neg(d)
    if isinstance(e, Call):
        inner = diff(e.arg, var)
        if e.func == "exp":
            outer = Call("exp", e.arg)
        elif e.func == "ln":
            return _div(inner, e.arg)
        elif e.func == "sin":
            outer = Call("cos", e.arg)
        else:  # cos
            outer = Neg(Call("sin", e.arg))
        return _mul(outer, inner)
    assert isinstance(e, BinOp)
    da = diff(e.left, var)
    db = diff(e.right, var)
    if e.op == "+":
        return _add(da, db)
    if e.op == "-":
        return _sub(da, db)
    if e.op == "*":
        return _add(_mul(da, e.right), _mul(e.left, db))
    if e.op == "/":
        num = _sub(_mul(da, e.right), _mul(e.left, db))
        return _div(num, BinOp("^", e.right, _num(2)))
    # power rule; general case via a^b = exp(b ln a)
    if isinstance(e.right, Num):
        p = e.right.value
        base_pow = BinOp("^", e.left, _num(p - 1))
        return _mul(_mul(_num(p), base_pow), da)
    ln_term = _mul(db, Call("ln", e.left))
    rat_term = _div(_mul(e.right, da), e.left)
    return _mul(e, _add(ln_term, rat_term))
