"""Lukasiewicz modal mu-calculus over finite PNTSs.

Modal formulas reuse the term nodes for variables, constants, scalars, the
four binary connectives and the binders, and add propositions ``@p``, their
complements ``~@p`` and the modalities ``<> phi`` / ``[] phi``.

Model checking works by reduction: :func:`reduce` turns a closed formula
and a state into a closed mu-term whose value is the formula's value at that
state, which either backend can then evaluate exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable

from lmu import direct, qe
from lmu.errors import InvariantViolation
from lmu.pnts import PNTS, Interpretation
from lmu.terms import (
    BINARY_OPS,
    Join,
    Meet,
    Mu,
    Nu,
    ODot,
    OPlus,
    One,
    Scalar,
    Term,
    Var,
    Zero,
    _BinaryGrammar,
    _Binary,
    _Binder,
    _LEVEL,
    _DUAL,
    _fmt_q,
    const,
    fresh_name,
    names,
    subterms,
    threshold,
)

BACKENDS = ("direct", "qe")


class _ModalNode(Term):
    def render(self) -> str:
        return to_text(self)


@dataclass(frozen=True)
class Prop(_ModalNode):
    name: str

    def __post_init__(self):
        object.__setattr__(self, "fv", frozenset())


@dataclass(frozen=True)
class CoProp(_ModalNode):
    """The complement ``~@p``, valued ``1 - rho(p)``."""

    name: str

    def __post_init__(self):
        object.__setattr__(self, "fv", frozenset())


@dataclass(frozen=True)
class _Modality(_ModalNode):
    body: Term

    def __post_init__(self):
        object.__setattr__(self, "fv", self.body.fv)


class Diamond(_Modality):
    pass


class Box(_Modality):
    pass


TOP = Nu("X", Var("X"))
BOTTOM = Mu("X", Var("X"))


# ---------------------------------------------------------------- syntax


def to_text(f: Term) -> str:
    match f:
        case Prop(name=n):
            return f"@{n}"
        case CoProp(name=n):
            return f"~@{n}"
        case _Modality(body=b):
            op = "<>" if isinstance(f, Diamond) else "[]"
            return f"{op} {_wrap_tight(b)}"
        case Var(name=n):
            return n
        case Zero():
            return "0"
        case One():
            return "1"
        case Scalar(q=q, body=One()) if 0 < q < 1:
            return _fmt_q(q)
        case Scalar(q=q, body=b):
            return f"{_fmt_q(q)} * {_wrap_tight(b)}"
        case _Binary(left=l, right=r):
            lvl = _LEVEL[type(f)]
            ls, rs = to_text(l), to_text(r)
            if isinstance(l, _Binder) or (
                isinstance(l, _Binary) and type(l) is not type(f) and _LEVEL[type(l)] <= lvl
            ):
                ls = f"({ls})"
            if isinstance(r, _Binder) or (isinstance(r, _Binary) and _LEVEL[type(r)] <= lvl):
                rs = f"({rs})"
            return f"{ls} {BINARY_OPS[type(f)]} {rs}"
        case _Binder(var=v, body=b):
            kw = "mu" if isinstance(f, Mu) else "nu"
            return f"{kw} {v}. {to_text(b)}"
    raise TypeError(f"not a modal formula: {f!r}")


def _wrap_tight(b: Term) -> str:
    s = to_text(b)
    return f"({s})" if isinstance(b, (_Binary, _Binder)) else s


class _ModalParser(_BinaryGrammar):
    levels = ({r"\/": Join, "(+)": OPlus}, {"/\\": Meet, "(.)": ODot})

    def unary(self) -> Term:
        ts = self.ts
        tok = ts.peek()
        if tok.kind == "num":
            ts.next()
            if ts.at("*"):
                ts.next()
                return Scalar(self.scalar_value(tok), self.unary())
            if tok.text == "0":
                return Zero()
            if tok.text == "1":
                return One()
            return const(self.scalar_value(tok))
        if tok.text in ("<>", "[]") and tok.kind == "op":
            ts.next()
            return (Diamond if tok.text == "<>" else Box)(self.unary())
        if tok.text in ("@", "~@") and tok.kind == "op":
            ts.next()
            name = ts.expect_ident().text
            return (Prop if tok.text == "@" else CoProp)(name)
        if tok.kind == "thr":
            kind, r = self.threshold_args()
            return threshold(kind, r, self.unary())
        if tok.kind == "ident" and tok.text in ("mu", "nu"):
            return self.binder()
        if tok.kind == "ident":
            ts.next()
            return Var(tok.text)
        if tok.text == "(":
            return self.parenthesized()
        ts.fail(f"unexpected {tok.text or 'end of input'!r}", tok)


def parse_modal(text: str) -> Term:
    """Parse a modal formula; binders are renamed apart."""
    return rename(_ModalParser(text).parse())


def rename(f: Term) -> Term:
    """Alpha-rename binders to be pairwise distinct and distinct from free names."""
    used = names(f)
    taken = set(f.fv)

    def go(u: Term, env: dict) -> Term:
        match u:
            case Var(name=n):
                return Var(env.get(n, n))
            case Zero() | One() | Prop() | CoProp():
                return u
            case Scalar(q=q, body=b):
                return Scalar(q, go(b, env))
            case _Modality(body=b):
                return type(u)(go(b, env))
            case _Binary(left=l, right=r):
                return type(u)(go(l, env), go(r, env))
            case _Binder(var=v, body=b):
                new = v
                if v in taken:
                    new = fresh_name(v, used | taken)
                    used.add(new)
                taken.add(new)
                return type(u)(new, go(b, {**env, v: new}))
        raise TypeError(f"not a modal formula: {u!r}")

    return go(f, {})


def negate_modal(f: Term) -> Term:
    """Dual formula; for closed ``f`` its value is ``1 - value(f)`` everywhere."""
    if f.fv:
        raise ValueError(f"negate_modal needs a closed formula, free: {sorted(f.fv)}")
    return _negate(f)


def _negate(f: Term) -> Term:
    match f:
        case Var():
            return f
        case Zero():
            return One()
        case One():
            return Zero()
        case Prop(name=n):
            return CoProp(n)
        case CoProp(name=n):
            return Prop(n)
        case Diamond(body=b):
            return Box(_negate(b))
        case Box(body=b):
            return Diamond(_negate(b))
        case Scalar(q=q, body=b):
            return OPlus(Scalar(q, _negate(b)), const(1 - q))
        case _Binary(left=l, right=r):
            return _DUAL[type(f)](_negate(l), _negate(r))
        case _Binder(var=v, body=b):
            return _DUAL[type(f)](v, _negate(b))
    raise TypeError(f"not a modal formula: {f!r}")


def modal_threshold(kind: str, r, f: Term) -> Term:
    """Threshold modality applied to a modal formula (same fixed-point shape as for terms)."""
    return threshold(kind, r, f)


# ------------------------------------------------------------- reduction


@dataclass(frozen=True)
class FixpointInfo:
    """Binders of a formula numbered 1..m in leftmost-innermost order."""

    index: dict  # variable name -> i
    binders: tuple  # i-1 -> binder node
    dominates: frozenset  # pairs (i, j) with X_i dominating X_j

    def kind(self, i: int):
        return type(self.binders[i - 1])

    def body(self, i: int) -> Term:
        return self.binders[i - 1].body


def fixpoints(f: Term) -> FixpointInfo:
    order: list = []

    def visit(u: Term):
        if isinstance(u, _Binary):
            visit(u.left)
            visit(u.right)
        elif getattr(u, "body", None) is not None:
            visit(u.body)
        if isinstance(u, _Binder):
            order.append(u)

    visit(f)
    index = {}
    for i, b in enumerate(order, start=1):
        if b.var in index:
            raise ValueError(f"binder {b.var!r} is not unique; rename first")
        index[b.var] = i
    dom = set()
    for i, b in enumerate(order, start=1):
        for u in subterms(b.body):
            if isinstance(u, _Binder):
                dom.add((i, index[u.var]))
    return FixpointInfo(index, tuple(order), frozenset(dom))


def domination(f: Term) -> frozenset:
    """Pairs of binder names ``(X, Y)`` such that ``X`` dominates ``Y``."""
    info = fixpoints(f)
    return frozenset((info.binders[i - 1].var, info.binders[j - 1].var) for i, j in info.dominates)


def reset(gamma: frozenset, i: int, s: str, info: FixpointInfo) -> frozenset:
    """``gamma`` with ``(i, s)`` added and every entry of a variable dominated by ``X_i`` dropped."""
    return frozenset((j, t) for j, t in gamma | {(i, s)} if (i, j) not in info.dominates)


def var_name(i: int, s: str) -> str:
    return f"x{i}_{s}"


def reduce(f: Term, m: PNTS, rho: Interpretation, s: str) -> Term:
    """Closed mu-term whose value is the value of closed ``f`` at state ``s``."""
    if f.fv:
        raise ValueError(f"formula has free variables {sorted(f.fv)}")
    if s not in m.states:
        raise ValueError(f"unknown state {s!r}")
    f = rename(f)
    info = fixpoints(f)
    order = {st: k for k, st in enumerate(m.states)}

    def modal(body: Term, gamma: frozenset, s: str, join: bool) -> Term:
        pieces = []
        for d in m.choices(s):
            summands = [
                Scalar(w, go(body, gamma, t))
                for t, w in sorted(d.weights, key=lambda tw: order[tw[0]])
            ]
            acc = summands[0]
            for x in summands[1:]:
                acc = OPlus(acc, x)
            pieces.append(acc)
        if not pieces:
            return Zero() if join else One()
        acc = pieces[0]
        for x in pieces[1:]:
            acc = (Join if join else Meet)(acc, x)
        return acc

    def go(u: Term, gamma: frozenset, s: str) -> Term:
        match u:
            case Var(name=n):
                i = info.index[n]
                if (i, s) in gamma:
                    return Var(var_name(i, s))
                return info.kind(i)(var_name(i, s), go(info.body(i), reset(gamma, i, s, info), s))
            case Prop(name=p):
                return _constant(rho(p, s))
            case CoProp(name=p):
                return _constant(rho.co(p, s))
            case Zero() | One():
                return u
            case Scalar(q=q, body=b):
                return Scalar(q, go(b, gamma, s))
            case _Binary(left=l, right=r):
                return type(u)(go(l, gamma, s), go(r, gamma, s))
            case Diamond(body=b):
                return modal(b, gamma, s, True)
            case Box(body=b):
                return modal(b, gamma, s, False)
            case _Binder(var=v, body=b):
                i = info.index[v]
                return type(u)(var_name(i, s), go(b, gamma | {(i, s)}, s))
        raise TypeError(f"not a modal formula: {u!r}")

    out = go(f, frozenset(), s)
    if out.fv:
        raise InvariantViolation(f"reduction left free variables {sorted(out.fv)}")
    return out


def _constant(v: Fraction) -> Term:
    if v == 0:
        return Zero()
    if v == 1:
        return One()
    return const(v)


def evaluate_closed(t: Term, backend: str = "direct") -> Fraction:
    if backend == "direct":
        return direct.value(t)
    if backend == "qe":
        return qe.value_via_qe(t)
    raise ValueError(f"unknown backend {backend!r}; choose from {BACKENDS}")


def model_check(
    f: Term, m: PNTS, rho: Interpretation, s: str, backend: str = "direct"
) -> Fraction:
    """Value of closed ``f`` at state ``s``."""
    return evaluate_closed(reduce(f, m, rho, s), backend)


def direct_semantics(f: Term, m: PNTS, rho: Interpretation) -> dict:
    """State-by-state value of a fixed-point-free closed formula, by structural recursion."""
    memo: dict = {}

    def val(u: Term) -> dict:
        key = id(u)
        if key in memo:
            return memo[key][1]
        out = compute(u)
        memo[key] = (u, out)
        return out

    def compute(u: Term) -> dict:
        S = m.states
        match u:
            case Prop(name=p):
                return {s: rho(p, s) for s in S}
            case CoProp(name=p):
                return {s: rho.co(p, s) for s in S}
            case Zero():
                return {s: Fraction(0) for s in S}
            case One():
                return {s: Fraction(1) for s in S}
            case Scalar(q=q, body=b):
                v = val(b)
                return {s: q * v[s] for s in S}
            case Join(left=l, right=r):
                a, b = val(l), val(r)
                return {s: max(a[s], b[s]) for s in S}
            case Meet(left=l, right=r):
                a, b = val(l), val(r)
                return {s: min(a[s], b[s]) for s in S}
            case OPlus(left=l, right=r):
                a, b = val(l), val(r)
                return {s: min(a[s] + b[s], Fraction(1)) for s in S}
            case ODot(left=l, right=r):
                a, b = val(l), val(r)
                return {s: max(a[s] + b[s] - 1, Fraction(0)) for s in S}
            case Diamond(body=b) | Box(body=b):
                v = val(b)
                pick = max if isinstance(u, Diamond) else min
                empty = Fraction(0) if isinstance(u, Diamond) else Fraction(1)
                return {
                    s: pick((sum(w * v[t] for t, w in d.weights) for d in m.choices(s)), default=empty)
                    for s in S
                }
            case _Binder() | Var():
                raise ValueError("direct_semantics handles fixed-point-free formulas only")
        raise TypeError(f"not a modal formula: {u!r}")

    if f.fv:
        raise ValueError(f"formula has free variables {sorted(f.fv)}")
    return val(f)


def states_values(
    f: Term, m: PNTS, rho: Interpretation, states: Iterable[str] | None = None, backend="direct"
) -> dict:
    return {s: model_check(f, m, rho, s, backend) for s in (states or m.states)}
