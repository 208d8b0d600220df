"""PCTL over PNTSs: syntax, the encoding into modal formulas, and a brute-force oracle.

Grammar (``|`` loosest; ``!`` and the path quantifiers bind tightest)::

    phi ::= true | @p | !phi | phi | phi | ( phi )
          | E X phi | A X phi | E [ phi U phi ] | A [ phi U phi ]
          | P{E,>q} path | P{E,>=q} path | P{A,>q} path | P{A,>=q} path
    path ::= X phi | [ phi U phi ]

:func:`pctl_check` decides a formula by encoding it and model-checking the
encoding; :func:`pctl_oracle` decides it directly from the semantics, by
graph search for the qualitative operators and by enumerating memoryless
deterministic schedulers with exact linear solves for the probabilistic
ones.  The two share no code beyond the system representation.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction

from lmu.errors import InvariantViolation, ParseError, ValidationError
from lmu.modal import Box, Diamond, Prop, model_check, negate_modal, rename
from lmu.pnts import PNTS, Interpretation, successors
from lmu.terms import Join, Meet, Mu, Nu, One, TokenStream, Var, Zero, parse_rational, threshold, tokenize

# ------------------------------------------------------------------ AST


class StateFormula:
    def __str__(self):
        return to_text(self)


class PathFormula:
    def __str__(self):
        return to_text(self)


@dataclass(frozen=True, repr=True)
class TrueF(StateFormula):
    pass


@dataclass(frozen=True)
class PProp(StateFormula):
    name: str


@dataclass(frozen=True)
class PNot(StateFormula):
    arg: StateFormula


@dataclass(frozen=True)
class POr(StateFormula):
    left: StateFormula
    right: StateFormula


@dataclass(frozen=True)
class ExistsPath(StateFormula):
    path: PathFormula


@dataclass(frozen=True)
class ForallPath(StateFormula):
    path: PathFormula


@dataclass(frozen=True)
class ProbE(StateFormula):
    rel: str  # ">" or ">="
    q: Fraction
    path: PathFormula


@dataclass(frozen=True)
class ProbA(StateFormula):
    rel: str
    q: Fraction
    path: PathFormula


@dataclass(frozen=True)
class Next(PathFormula):
    arg: StateFormula


@dataclass(frozen=True)
class Until(PathFormula):
    left: StateFormula
    right: StateFormula


RELATIONS = (">", ">=")


def to_text(f) -> str:
    match f:
        case TrueF():
            return "true"
        case PProp(name=n):
            return f"@{n}"
        case PNot(arg=a):
            return f"!{_tight(a)}"
        case POr(left=l, right=r):
            rs = to_text(r)
            return f"{to_text(l)} | " + (f"({rs})" if isinstance(r, POr) else rs)
        case ExistsPath(path=p):
            return f"E {to_text(p)}"
        case ForallPath(path=p):
            return f"A {to_text(p)}"
        case ProbE(rel=rel, q=q, path=p):
            return f"P{{E,{rel}{q}}} {to_text(p)}"
        case ProbA(rel=rel, q=q, path=p):
            return f"P{{A,{rel}{q}}} {to_text(p)}"
        case Next(arg=a):
            return f"X {_tight(a)}"
        case Until(left=l, right=r):
            return f"[ {to_text(l)} U {to_text(r)} ]"
    raise TypeError(f"not a PCTL formula: {f!r}")


def _tight(f) -> str:
    s = to_text(f)
    return f"({s})" if isinstance(f, POr) else s


class _Parser:
    def __init__(self, text: str):
        self.ts = TokenStream(tokenize(text))

    def parse(self) -> StateFormula:
        f = self.disj()
        if self.ts.peek().kind != "eof":
            self.ts.fail(f"unexpected {self.ts.peek().text!r}")
        return f

    def disj(self) -> StateFormula:
        left = self.unary()
        while self.ts.at("|"):
            self.ts.next()
            left = POr(left, self.unary())
        return left

    def _is_word(self, word: str) -> bool:
        tok = self.ts.peek()
        return tok.kind == "ident" and tok.text == word

    def unary(self) -> StateFormula:
        ts = self.ts
        tok = ts.peek()
        if ts.at("!"):
            ts.next()
            return PNot(self.unary())
        if ts.at("("):
            ts.next()
            f = self.disj()
            ts.expect(")")
            return f
        if ts.at("@"):
            ts.next()
            return PProp(ts.expect_ident().text)
        if self._is_word("true"):
            ts.next()
            return TrueF()
        if self._is_word("E") or self._is_word("A"):
            ts.next()
            path = self.path()
            return ExistsPath(path) if tok.text == "E" else ForallPath(path)
        if self._is_word("P") and ts.peek(1).text == "{":
            ts.next()
            ts.next()
            q_tok = ts.next()
            if q_tok.kind != "ident" or q_tok.text not in ("E", "A"):
                ts.fail("expected 'E' or 'A' in probability bound", q_tok)
            ts.expect(",")
            rel_tok = ts.next()
            if rel_tok.text not in RELATIONS:
                ts.fail("expected '>' or '>=' in probability bound", rel_tok)
            num = ts.next()
            if num.kind != "num":
                ts.fail("expected a rational bound", num)
            q = parse_rational(num)
            if not 0 <= q <= 1:
                raise ParseError(f"probability bound {q} outside [0,1]", num.line, num.col)
            ts.expect("}")
            path = self.path()
            cls = ProbE if q_tok.text == "E" else ProbA
            return cls(rel_tok.text, q, path)
        ts.fail(f"unexpected {tok.text or 'end of input'!r}", tok)

    def path(self) -> PathFormula:
        ts = self.ts
        if self._is_word("X"):
            ts.next()
            return Next(self.unary())
        if ts.at("["):
            ts.next()
            left = self.disj()
            if not self._is_word("U"):
                ts.fail("expected 'U'")
            ts.next()
            right = self.disj()
            ts.expect("]")
            return Until(left, right)
        ts.fail("expected a path formula 'X phi' or '[ phi U phi ]'")


def parse_pctl(text: str) -> StateFormula:
    return _Parser(text).parse()


def props(f) -> set:
    match f:
        case PProp(name=n):
            return {n}
        case TrueF():
            return set()
        case PNot(arg=a) | Next(arg=a):
            return props(a)
        case POr(left=l, right=r) | Until(left=l, right=r):
            return props(l) | props(r)
        case ExistsPath(path=p) | ForallPath(path=p) | ProbE(path=p) | ProbA(path=p):
            return props(p)
    raise TypeError(f"not a PCTL formula: {f!r}")


# -------------------------------------------------------------- encoding


def _top():
    return Nu("X", Var("X"))


def _bottom():
    return Mu("X", Var("X"))


def _box_strict(f):
    """Box that also demands a successor: ``[] f /\\ <> 1``."""
    return Meet(Box(f), Diamond(_top()))


def _prob(rel: str, q: Fraction, f):
    """Threshold modality for a PCTL bound, covering the endpoints of [0,1]."""
    if rel == ">":
        if q == 0:
            return threshold(">0", None, f)
        if q == 1:
            return _bottom()
        return threshold(">", q, f)
    if q == 1:
        return threshold("=1", None, f)
    if q == 0:
        return _top()
    return threshold(">=", q, f)


def encode(f: StateFormula):
    """Modal formula whose value is 1 where ``f`` holds and 0 elsewhere."""
    return rename(_encode(f))


def _until(l, r, step):
    x = "X"
    return Mu(x, Join(_encode(r), Meet(_encode(l), step(Var(x)))))


def _encode(f: StateFormula):
    match f:
        case PProp(name=n):
            return Prop(n)
        case TrueF():
            return _top()
        case POr(left=l, right=r):
            return Join(_encode(l), _encode(r))
        case PNot(arg=a):
            return negate_modal(rename(_encode(a)))
        case ExistsPath(path=Next(arg=a)):
            return threshold(">0", None, Diamond(_encode(a)))
        case ForallPath(path=Next(arg=a)):
            return threshold("=1", None, _box_strict(_encode(a)))
        case ExistsPath(path=Until(left=l, right=r)):
            return _until(l, r, lambda x: threshold(">0", None, Diamond(x)))
        case ForallPath(path=Until(left=l, right=r)):
            return _until(l, r, lambda x: threshold("=1", None, _box_strict(x)))
        case ProbE(rel=rel, q=q, path=Next(arg=a)):
            return _prob(rel, q, Diamond(_encode(a)))
        case ProbA(rel=rel, q=q, path=Next(arg=a)):
            return _prob(rel, q, _box_strict(_encode(a)))
        case ProbE(rel=rel, q=q, path=Until(left=l, right=r)):
            return _prob(rel, q, _until(l, r, Diamond))
        case ProbA(rel=rel, q=q, path=Until(left=l, right=r)):
            return _prob(rel, q, _until(l, r, _box_strict))
    raise TypeError(f"not a PCTL state formula: {f!r}")


def _check_boolean(rho: Interpretation):
    if not rho.is_boolean():
        raise ValidationError("PCTL needs proposition values in {0,1}")


def pctl_check(f: StateFormula, m: PNTS, rho: Interpretation, s: str, backend: str = "direct") -> bool:
    """Decide ``f`` at ``s`` by model-checking its encoding."""
    _check_boolean(rho)
    v = model_check(encode(f), m, rho, s, backend)
    if v not in (0, 1):
        raise InvariantViolation(f"encoded PCTL formula took value {v} at {s!r}")
    return v == 1


# ---------------------------------------------------------------- oracle

MAX_STATES = 5
MAX_CHOICES = 3


def solve_linear(a: list, b: list) -> list:
    """Solve ``a x = b`` exactly by Gauss-Jordan elimination; ``a`` must be nonsingular."""
    n = len(b)
    rows = [list(map(Fraction, a[i])) + [Fraction(b[i])] for i in range(n)]
    for col in range(n):
        pivot = next((r for r in range(col, n) if rows[r][col] != 0), None)
        if pivot is None:
            raise InvariantViolation("singular system in the PCTL oracle")
        rows[col], rows[pivot] = rows[pivot], rows[col]
        pv = rows[col][col]
        rows[col] = [v / pv for v in rows[col]]
        for r in range(n):
            if r != col and rows[r][col] != 0:
                k = rows[r][col]
                rows[r] = [x - k * y for x, y in zip(rows[r], rows[col])]
    return [rows[i][n] for i in range(n)]


def _schedulers(m: PNTS):
    live = [s for s in m.states if m.choices(s)]
    for pick in itertools.product(*(range(len(m.choices(s))) for s in live)):
        yield {s: m.choices(s)[k] for s, k in zip(live, pick)}


def until_probabilities(m: PNTS, sched: dict, sat1: set, sat2: set) -> dict:
    """Probability of ``sat1 U sat2`` from every state in the chain fixed by ``sched``."""
    # States that can reach sat2 through sat1 with positive probability.
    good = set(sat2)
    changed = True
    while changed:
        changed = False
        for s in m.states:
            if s in good or s not in sat1 or s not in sched:
                continue
            if any(t in good for t in sched[s].support):
                good.add(s)
                changed = True
    transient = [s for s in m.states if s in good and s not in sat2]
    pos = {s: k for k, s in enumerate(transient)}
    a = [[Fraction(0)] * len(transient) for _ in transient]
    b = [Fraction(0)] * len(transient)
    for s in transient:
        i = pos[s]
        a[i][i] += 1
        for t, w in sched[s].weights:
            if t in sat2:
                b[i] += w
            elif t in pos:
                a[i][pos[t]] -= w
    x = solve_linear(a, b) if transient else []
    out = {s: Fraction(0) for s in m.states}
    for s in sat2:
        out[s] = Fraction(1)
    for s in transient:
        out[s] = x[pos[s]]
    return out


def _compare(v: Fraction, rel: str, q: Fraction) -> bool:
    return v > q if rel == ">" else v >= q


def pctl_oracle(
    f: StateFormula,
    m: PNTS,
    rho: Interpretation,
    s: str,
    *,
    max_states: int = MAX_STATES,
    max_choices: int = MAX_CHOICES,
) -> bool:
    """Decide ``f`` at ``s`` straight from the PCTL semantics."""
    _check_boolean(rho)
    if len(m.states) > max_states:
        raise ValueError(f"oracle limited to {max_states} states")
    if any(len(m.choices(t)) > max_choices for t in m.states):
        raise ValueError(f"oracle limited to {max_choices} distributions per state")
    return s in satisfying(f, m, rho)


def satisfying(f: StateFormula, m: PNTS, rho: Interpretation) -> set:
    S = list(m.states)
    succ = {s: successors(m, s) for s in S}

    def sat(g) -> set:
        match g:
            case TrueF():
                return set(S)
            case PProp(name=n):
                return {s for s in S if rho(n, s) == 1}
            case PNot(arg=a):
                return set(S) - sat(a)
            case POr(left=l, right=r):
                return sat(l) | sat(r)
            case ExistsPath(path=Next(arg=a)):
                A = sat(a)
                return {s for s in S if succ[s] & A}
            case ForallPath(path=Next(arg=a)):
                A = sat(a)
                return {s for s in S if succ[s] and succ[s] <= A}
            case ExistsPath(path=Until(left=l, right=r)):
                A, B = sat(l), sat(r)
                return _lfp(S, lambda Z: B | {s for s in A if succ[s] & Z})
            case ForallPath(path=Until(left=l, right=r)):
                A, B = sat(l), sat(r)
                return _lfp(S, lambda Z: B | {s for s in A if succ[s] and succ[s] <= Z})
            case ProbE(rel=rel, q=q, path=p) | ProbA(rel=rel, q=q, path=p):
                best = max if isinstance(g, ProbE) else min
                probs = path_probabilities(p, best)
                return {s for s in S if _compare(probs[s], rel, q)}
        raise TypeError(f"not a PCTL state formula: {g!r}")

    def path_probabilities(p, best) -> dict:
        match p:
            case Next(arg=a):
                A = sat(a)
                return {
                    s: best((sum(w for t, w in d.weights if t in A) for d in m.choices(s)), default=Fraction(0))
                    for s in S
                }
            case Until(left=l, right=r):
                A, B = sat(l), sat(r)
                runs = [until_probabilities(m, sched, A, B) for sched in _schedulers(m)]
                return {s: best(run[s] for run in runs) for s in S}
        raise TypeError(f"not a path formula: {p!r}")

    return sat(f)


def _lfp(S, step) -> set:
    Z: set = set()
    while True:
        nxt = step(Z)
        if nxt == Z:
            return Z
        Z = nxt
