"""Finite rational probabilistic nondeterministic transition systems.

File format, one declaration per line (``#`` starts a comment)::

    states: s0 s1 s2
    trans s0 -> s1:1/2 s2:1/2
    prop @p: s1=1 s2=1/3

Each ``trans`` line adds one distribution to the source state's choices.
Propositions not listed at a state take value 0 there.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping

from lmu.errors import ParseError, ValidationError
from lmu.terms import parse_rational, tokenize


@dataclass(frozen=True)
class Distribution:
    """Probability distribution with finite support, as sorted ``(state, weight)`` pairs."""

    weights: tuple

    @staticmethod
    def of(mapping: Mapping[str, Fraction]) -> "Distribution":
        items = []
        for s, w in mapping.items():
            w = Fraction(w)
            if w < 0:
                raise ValidationError(f"negative weight {w} on {s!r}")
            if w > 0:
                items.append((s, w))
        total = sum(w for _, w in items)
        if total != 1:
            raise ValidationError(f"weights sum to {total}, not 1")
        return Distribution(tuple(sorted(items)))

    def __getitem__(self, s: str) -> Fraction:
        return dict(self.weights).get(s, Fraction(0))

    @property
    def support(self) -> tuple:
        return tuple(s for s, _ in self.weights)

    def __str__(self):
        return " ".join(f"{s}:{w}" for s, w in self.weights)


@dataclass(frozen=True)
class PNTS:
    """States in declaration order and, per state, its distinct distributions."""

    states: tuple
    trans: Mapping[str, tuple] = field(default_factory=dict)

    def __post_init__(self):
        if len(set(self.states)) != len(self.states):
            raise ValidationError("duplicate state")
        known = set(self.states)
        for s, ds in self.trans.items():
            if s not in known:
                raise ValidationError(f"transition from unknown state {s!r}")
            for d in ds:
                for t in d.support:
                    if t not in known:
                        raise ValidationError(f"distribution of {s!r} mentions unknown state {t!r}")

    @staticmethod
    def build(states: Iterable[str], trans: Mapping[str, Iterable]) -> "PNTS":
        """Construct from plain dicts, deduplicating distributions per state."""
        states = tuple(states)
        table = {}
        for s in states:
            seen = []
            for d in trans.get(s, ()):
                if not isinstance(d, Distribution):
                    d = Distribution.of(d)
                if d not in seen:
                    seen.append(d)
            table[s] = tuple(seen)
        extra = set(trans) - set(states)
        if extra:
            raise ValidationError(f"transitions from unknown states {sorted(extra)}")
        return PNTS(states, table)

    def choices(self, s: str) -> tuple:
        return self.trans.get(s, ())

    def is_deadlock(self, s: str) -> bool:
        return not self.choices(s)


@dataclass(frozen=True)
class Interpretation:
    """Proposition values per state; anything unlisted is 0."""

    values: Mapping[str, Mapping[str, Fraction]] = field(default_factory=dict)

    def __call__(self, prop: str, s: str) -> Fraction:
        return Fraction(self.values.get(prop, {}).get(s, 0))

    def co(self, prop: str, s: str) -> Fraction:
        return 1 - self(prop, s)

    def is_boolean(self) -> bool:
        return all(v in (0, 1) for m in self.values.values() for v in m.values())


def leadsto(m: PNTS) -> set:
    """Edges ``(s, t)`` of the underlying graph: some choice of ``s`` reaches ``t``."""
    return {(s, t) for s in m.states for d in m.choices(s) for t in d.support}


def successors(m: PNTS, s: str) -> set:
    return {t for d in m.choices(s) for t in d.support}


def _fail(msg: str, line: int, tok=None):
    raise ParseError(msg, line, tok.col if tok is not None else 1)


def parse_pnts(text: str) -> tuple[PNTS, Interpretation]:
    states: list[str] = []
    trans: dict[str, list] = {}
    props: dict[str, dict] = {}
    declared = False
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0]
        if not line.strip():
            continue
        try:
            toks = [t for t in tokenize(line) if t.kind != "eof"]
        except ParseError as e:
            raise ParseError(e.message, lineno, e.column) from None
        head = toks[0]
        if head.kind == "ident" and head.text == "states" and len(toks) > 1 and toks[1].text == ":":
            if declared:
                _fail("second 'states:' line", lineno, head)
            declared = True
            for t in toks[2:]:
                if t.kind != "ident":
                    _fail(f"expected a state name, found {t.text!r}", lineno, t)
                if t.text in states:
                    raise ValidationError(f"line {lineno}: duplicate state {t.text!r}")
                states.append(t.text)
        elif head.kind == "ident" and head.text in ("trans", "prop") and not declared:
            _fail("'states:' line must come first", lineno, head)
        elif head.kind == "ident" and head.text == "trans":
            src, dist = _parse_trans(toks, lineno)
            _check_known(states, [src, *dist], lineno)
            try:
                d = Distribution.of(dist)
            except ValidationError as e:
                raise ValidationError(f"line {lineno}: {e}") from None
            trans.setdefault(src, []).append(d)
        elif head.kind == "ident" and head.text == "prop":
            name, vals = _parse_prop(toks, lineno)
            if name in props:
                raise ValidationError(f"line {lineno}: proposition @{name} declared twice")
            _check_known(states, vals, lineno)
            props[name] = vals
        else:
            _fail(f"unexpected {head.text!r} at start of line", lineno, head)
    if not declared:
        raise ParseError("missing 'states:' line")
    return PNTS.build(states, trans), Interpretation(props)


def _check_known(states, names, lineno):
    for s in names:
        if s not in states:
            raise ValidationError(f"line {lineno}: unknown state {s!r}")


def _number(toks, i, lineno):
    if i >= len(toks) or toks[i].kind != "num":
        _fail("expected a rational", lineno, toks[i] if i < len(toks) else None)
    return parse_rational(toks[i])


def _parse_trans(toks, lineno):
    src = toks[1] if len(toks) > 1 else None
    if src is None or src.kind != "ident":
        _fail("expected source state after 'trans'", lineno, src)
    i = 2
    if i < len(toks) and toks[i].text == "->":
        i += 1
    else:
        _fail("expected '->'", lineno, toks[i] if i < len(toks) else None)
    dist: dict = {}
    if i >= len(toks):
        _fail("empty distribution", lineno, None)
    while i < len(toks):
        t = toks[i]
        if t.kind != "ident":
            _fail(f"expected a state name, found {t.text!r}", lineno, t)
        if i + 1 >= len(toks) or toks[i + 1].text != ":":
            _fail("expected ':' after state", lineno, toks[i + 1] if i + 1 < len(toks) else t)
        w = _number(toks, i + 2, lineno)
        if t.text in dist:
            raise ValidationError(f"line {lineno}: state {t.text!r} repeated in distribution")
        dist[t.text] = w
        i += 3
    return src.text, dist


def _parse_prop(toks, lineno):
    if len(toks) < 3 or toks[1].text != "@" or toks[2].kind != "ident":
        _fail("expected '@name' after 'prop'", lineno, toks[1] if len(toks) > 1 else None)
    name = toks[2].text
    if len(toks) < 4 or toks[3].text != ":":
        _fail("expected ':' after proposition name", lineno, toks[3] if len(toks) > 3 else None)
    vals: dict = {}
    i = 4
    while i < len(toks):
        t = toks[i]
        if t.kind != "ident":
            _fail(f"expected a state name, found {t.text!r}", lineno, t)
        if i + 1 >= len(toks) or toks[i + 1].text != "=":
            _fail("expected '=' after state", lineno, toks[i + 1] if i + 1 < len(toks) else t)
        v = _number(toks, i + 2, lineno)
        if not 0 <= v <= 1:
            raise ValidationError(f"line {lineno}: value {v} outside [0,1]")
        if t.text in vals:
            raise ValidationError(f"line {lineno}: state {t.text!r} listed twice")
        vals[t.text] = v
        i += 3
    return name, vals
