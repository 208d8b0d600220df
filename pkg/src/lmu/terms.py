"""Lukasiewicz mu-terms: AST, concrete syntax, negation and threshold macros.

Concrete syntax (loosest binding first)::

    mu x. t   nu x. t              binder, body extends maximally right
    t \\/ t    t (+) t              weak / strong disjunction
    t /\\ t    t (.) t              weak / strong conjunction
    q * t     P>0 t  P=1 t  P>q t  P>=q t
    x  0  1  q  ( t )

Operators of the same level may not be mixed without parentheses; chains of
one operator associate to the left.  A bare rational ``q`` other than the
integers ``0``/``1`` stands for the constant ``q * 1``.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator

from lmu.errors import ParseError

__all__ = [
    "Term", "Var", "Zero", "One", "Scalar", "Join", "Meet", "OPlus", "ODot",
    "Mu", "Nu", "const", "free_vars", "names", "negate", "threshold",
    "rename_bound", "parse_term", "to_text", "size", "fixpoint_count",
    "fresh_name", "THRESHOLD_KINDS",
]


@dataclass(frozen=True)
class Term:
    fv: frozenset = field(init=False, repr=False, compare=False)

    def __str__(self) -> str:
        return to_text(self)


@dataclass(frozen=True)
class Var(Term):
    name: str

    def __post_init__(self):
        object.__setattr__(self, "fv", frozenset((self.name,)))


@dataclass(frozen=True)
class Zero(Term):
    def __post_init__(self):
        object.__setattr__(self, "fv", frozenset())


@dataclass(frozen=True)
class One(Term):
    def __post_init__(self):
        object.__setattr__(self, "fv", frozenset())


@dataclass(frozen=True)
class Scalar(Term):
    q: Fraction
    body: Term

    def __post_init__(self):
        q = Fraction(self.q)
        if not 0 <= q <= 1:
            raise ValueError(f"scalar {q} outside [0,1]")
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "fv", self.body.fv)


@dataclass(frozen=True)
class _Binary(Term):
    left: Term
    right: Term

    def __post_init__(self):
        object.__setattr__(self, "fv", self.left.fv | self.right.fv)


class Join(_Binary):
    pass


class Meet(_Binary):
    pass


class OPlus(_Binary):
    pass


class ODot(_Binary):
    pass


@dataclass(frozen=True)
class _Binder(Term):
    var: str
    body: Term

    def __post_init__(self):
        object.__setattr__(self, "fv", self.body.fv - {self.var})


class Mu(_Binder):
    pass


class Nu(_Binder):
    pass


BINARY_OPS = {Join: "\\/", OPlus: "(+)", Meet: "/\\", ODot: "(.)"}
_LEVEL = {Join: 0, OPlus: 0, Meet: 1, ODot: 1}
_DUAL = {Join: Meet, Meet: Join, OPlus: ODot, ODot: OPlus, Mu: Nu, Nu: Mu}


def const(q) -> Term:
    """The constant term with value ``q``."""
    q = Fraction(q)
    return Scalar(q, One())


def free_vars(t: Term) -> frozenset:
    return t.fv


def subterms(t: Term) -> Iterator[Term]:
    """Pre-order, left to right."""
    stack = [t]
    while stack:
        u = stack.pop()
        yield u
        if isinstance(u, _Binary):
            stack.append(u.right)
            stack.append(u.left)
        elif getattr(u, "body", None) is not None:
            stack.append(u.body)


def names(t: Term) -> set:
    """Every variable name occurring in ``t``, free or bound."""
    out = set()
    for u in subterms(t):
        if isinstance(u, Var):
            out.add(u.name)
        elif isinstance(u, _Binder):
            out.add(u.var)
    return out


def size(t: Term) -> int:
    return sum(1 for _ in subterms(t))


def fixpoint_count(t: Term) -> int:
    return sum(1 for u in subterms(t) if isinstance(u, _Binder))


def fresh_name(base: str, used) -> str:
    if base not in used:
        return base
    for k in itertools.count(1):
        cand = f"{base}_{k}"
        if cand not in used:
            return cand


def negate(t: Term) -> Term:
    """Dualise every connective; on values ``negate(t)(r) = 1 - t(1 - r)``."""
    match t:
        case Var():
            return t
        case Zero():
            return One()
        case One():
            return Zero()
        case Scalar(q=q, body=body):
            return OPlus(Scalar(q, negate(body)), const(1 - q))
        case _Binary(left=l, right=r):
            return _DUAL[type(t)](negate(l), negate(r))
        case _Binder(var=v, body=body):
            return _DUAL[type(t)](v, negate(body))
    raise TypeError(f"not a term: {t!r}")


THRESHOLD_KINDS = (">0", "=1", ">", ">=")


def threshold(kind: str, r, t: Term, avoid=()) -> Term:
    """Expand the threshold modality ``P_{kind r} t`` into a fixed-point term.

    ``kind`` is one of ``">0"``, ``"=1"``, ``">"``, ``">="``; ``r`` is only
    consulted for the last two and must lie strictly between 0 and 1.
    """
    if kind not in THRESHOLD_KINDS:
        raise ValueError(f"unknown threshold kind {kind!r}")
    if kind in (">", ">="):
        r = Fraction(r)
        if not 0 < r < 1:
            raise ValueError(f"threshold {r} outside (0,1)")
    y = fresh_name("y", names(t) | set(avoid))
    if kind == ">0":
        return Mu(y, OPlus(Var(y), t))
    if kind == "=1":
        return Nu(y, ODot(Var(y), t))
    if kind == ">":
        return threshold(">0", None, ODot(t, const(1 - r)), avoid)
    return threshold("=1", None, OPlus(t, const(1 - r)), avoid)


def rename_bound(t: Term) -> Term:
    """Alpha-rename so that all binders are distinct and differ from free names.

    The first binder (pre-order) of each name keeps it when possible, which
    makes the operation idempotent.
    """
    used = names(t)
    taken = set(t.fv)

    def go(u: Term, env: dict) -> Term:
        match u:
            case Var(name=n):
                return Var(env.get(n, n))
            case Zero() | One():
                return u
            case Scalar(q=q, body=b):
                return Scalar(q, go(b, env))
            case _Binary(left=l, right=r):
                return type(u)(go(l, env), go(r, env))
            case _Binder(var=v, body=b):
                new = v
                if v in taken:
                    new = fresh_name(v, used | taken)
                    used.add(new)
                taken.add(new)
                return type(u)(new, go(b, {**env, v: new}))
        raise TypeError(f"not a term: {u!r}")

    return go(t, {})


# ---------------------------------------------------------------- printing


def _fmt_q(q: Fraction) -> str:
    return str(q)


def to_text(t: Term) -> str:
    """Render ``t`` in the concrete syntax accepted by :func:`parse_term`."""
    return _print(t, top=True)


def _print(t: Term, top: bool = False) -> str:
    match t:
        case Var(name=n):
            return n
        case Zero():
            return "0"
        case One():
            return "1"
        case Scalar(q=q, body=One()) if 0 < q < 1:
            return _fmt_q(q)
        case Scalar(q=q, body=b):
            inner = _print(b)
            if isinstance(b, (_Binary, _Binder)):
                inner = f"({inner})"
            return f"{_fmt_q(q)} * {inner}"
        case _Binary(left=l, right=r):
            op = BINARY_OPS[type(t)]
            lvl = _LEVEL[type(t)]
            ls = _print(l)
            if isinstance(l, _Binder) or (
                isinstance(l, _Binary) and (type(l) is not type(t) and _LEVEL[type(l)] <= lvl)
            ):
                ls = f"({ls})"
            rs = _print(r)
            if isinstance(r, _Binder) or (isinstance(r, _Binary) and _LEVEL[type(r)] <= lvl):
                rs = f"({rs})"
            return f"{ls} {op} {rs}"
        case _Binder(var=v, body=b):
            kw = "mu" if isinstance(t, Mu) else "nu"
            return f"{kw} {v}. {_print(b, top=True)}"
    if hasattr(t, "render"):
        return t.render()
    raise TypeError(f"not a term: {t!r}")


# ----------------------------------------------------------------- parsing

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<comment>\#[^\n]*)
  | (?P<thr>P(?:>=|>|=))
  | (?P<num>\d+(?:/\d+)?)
  | (?P<ident>[A-Za-z][A-Za-z0-9_]*)
  | (?P<op>\\/|/\\|\(\+\)|\(\.\)|<>|\[\]|~@|@|->|>=|[().*|!{},:=>\[\]])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    col: int


def tokenize(text: str) -> list[Token]:
    """Shared lexer for the term, modal and PCTL grammars."""
    out = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        if kind not in ("ws", "comment"):
            out.append(Token(kind, m.group(), line, pos - line_start + 1))
        chunk = m.group()
        nl = chunk.count("\n")
        if nl:
            line += nl
            line_start = pos + chunk.rindex("\n") + 1
        pos = m.end()
    out.append(Token("eof", "", line, pos - line_start + 1))
    return out


def parse_rational(tok: Token) -> Fraction:
    num, _, den = tok.text.partition("/")
    if den and int(den) == 0:
        raise ParseError("zero denominator", tok.line, tok.col)
    return Fraction(int(num), int(den) if den else 1)


class TokenStream:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.i = 0

    def peek(self, k: int = 0) -> Token:
        return self.tokens[min(self.i + k, len(self.tokens) - 1)]

    def next(self) -> Token:
        tok = self.peek()
        self.i += 1
        return tok

    def at(self, *texts: str) -> bool:
        tok = self.peek()
        return tok.kind != "eof" and tok.text in texts

    def expect(self, text: str) -> Token:
        tok = self.next()
        if tok.text != text or tok.kind == "eof":
            self.fail(f"expected {text!r}, found {tok.text or 'end of input'!r}", tok)
        return tok

    def expect_ident(self) -> Token:
        tok = self.next()
        if tok.kind != "ident" or tok.text in ("mu", "nu"):
            self.fail(f"expected identifier, found {tok.text or 'end of input'!r}", tok)
        return tok

    def fail(self, msg: str, tok: Token | None = None):
        tok = tok or self.peek()
        raise ParseError(msg, tok.line, tok.col)


class _BinaryGrammar:
    """Precedence-climbing core shared by the term and modal parsers."""

    levels: tuple = ()  # tuple of {op_text: constructor} dicts, loosest first
    mu = Mu
    nu = Nu

    def __init__(self, text: str):
        self.ts = TokenStream(tokenize(text))

    def parse(self):
        t = self.formula()
        if self.ts.peek().kind != "eof":
            self.ts.fail(f"unexpected {self.ts.peek().text!r}")
        return t

    def formula(self):
        if self.ts.at("mu", "nu"):
            return self.binder()
        return self.level(0)

    def binder(self):
        kw = self.ts.next().text
        var = self.ts.expect_ident().text
        self.ts.expect(".")
        body = self.formula()
        return (self.mu if kw == "mu" else self.nu)(var, body)

    def level(self, k: int):
        if k == len(self.levels):
            return self.unary()
        ops = self.levels[k]
        left = self.level(k + 1)
        chosen = None
        while self.ts.at(*ops):
            tok = self.ts.next()
            if chosen is not None and tok.text != chosen:
                self.ts.fail(f"mixing {chosen!r} and {tok.text!r} requires parentheses", tok)
            chosen = tok.text
            left = ops[chosen](left, self.level(k + 1))
        return left

    def unary(self):
        raise NotImplementedError

    def parenthesized(self):
        self.ts.expect("(")
        t = self.formula()
        self.ts.expect(")")
        return t

    def scalar_value(self, tok: Token) -> Fraction:
        q = parse_rational(tok)
        if not 0 <= q <= 1:
            raise ParseError(f"scalar {q} outside [0,1]", tok.line, tok.col)
        return q

    def threshold_args(self) -> tuple[str, Fraction | None]:
        tok = self.ts.next()
        num = self.ts.next()
        if num.kind != "num":
            self.ts.fail("expected a rational after threshold operator", num)
        q = parse_rational(num)
        rel = tok.text[1:]
        if rel == ">" and q == 0:
            return ">0", None
        if rel == "=":
            if q != 1:
                self.ts.fail("only P=1 is a threshold of the '=' kind", num)
            return "=1", None
        if not 0 < q < 1:
            self.ts.fail(f"threshold {q} outside (0,1)", num)
        return rel, q


class _TermParser(_BinaryGrammar):
    levels = ({r"\/": Join, "(+)": OPlus}, {"/\\": Meet, "(.)": ODot})

    def unary(self) -> Term:
        tok = self.ts.peek()
        if tok.kind == "num":
            self.ts.next()
            if self.ts.at("*"):
                self.ts.next()
                return Scalar(self.scalar_value(tok), self.unary())
            if tok.text == "0":
                return Zero()
            if tok.text == "1":
                return One()
            return const(self.scalar_value(tok))
        if tok.kind == "thr":
            kind, r = self.threshold_args()
            return threshold(kind, r, self.unary())
        if tok.kind == "ident" and tok.text in ("mu", "nu"):
            return self.binder()
        if tok.kind == "ident":
            self.ts.next()
            return Var(tok.text)
        if tok.text == "(":
            return self.parenthesized()
        self.ts.fail(f"unexpected {tok.text or 'end of input'!r}", tok)


def parse_term(text: str) -> Term:
    """Parse concrete syntax into a term with distinct bound names."""
    return rename_bound(_TermParser(text).parse())
