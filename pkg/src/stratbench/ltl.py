"""Linear-time objectives: syntax, parsing, and two evaluators.

Formulas are stored desugared over five constructors (proposition, negation,
conjunction, next, until) plus the boolean constants. ``eval_lasso`` decides
satisfaction exactly on ultimately periodic paths; ``eval_bounded`` gives the
weak three-valued verdict on a finite prefix, returning ``unknown`` unless
every infinite extension agrees. Surface syntax is ASCII::

    phi ::= prop | 'true' | 'false' | '!' phi | 'X' phi | 'F' phi | 'G' phi
          | phi 'U' phi | phi 'R' phi | phi '&' phi | phi '|' phi
          | phi '->' phi | '(' phi ')'

with precedence !,X,F,G > U,R > & > | > -> and U,R,-> right-associative.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum

from .model import Model, StateId


class Formula:
    pass


@dataclass(frozen=True)
class Prop(Formula):
    name: str

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class Const(Formula):
    value: bool

    def __str__(self):
        return "true" if self.value else "false"


@dataclass(frozen=True)
class Not(Formula):
    arg: Formula

    def __str__(self):
        return f"!({self.arg})"


@dataclass(frozen=True)
class And(Formula):
    left: Formula
    right: Formula

    def __str__(self):
        return f"({self.left} & {self.right})"


@dataclass(frozen=True)
class Next(Formula):
    arg: Formula

    def __str__(self):
        return f"X({self.arg})"


@dataclass(frozen=True)
class Until(Formula):
    left: Formula
    right: Formula

    def __str__(self):
        return f"({self.left} U {self.right})"


TRUE = Const(True)
FALSE = Const(False)


def neg(f: Formula) -> Formula:
    """Negation with one level of folding (constants, double negation)."""
    if isinstance(f, Not):
        return f.arg
    if isinstance(f, Const):
        return Const(not f.value)
    return Not(f)


def Or(a: Formula, b: Formula) -> Formula:
    return Not(And(Not(a), Not(b)))


def Implies(a: Formula, b: Formula) -> Formula:
    return Not(And(a, Not(b)))


def Release(a: Formula, b: Formula) -> Formula:
    return Not(Until(Not(a), Not(b)))


def Finally(a: Formula) -> Formula:
    return Until(TRUE, a)


def Globally(a: Formula) -> Formula:
    return Release(FALSE, a)


def propositions_of(f: Formula) -> set[str]:
    if isinstance(f, Prop):
        return {f.name}
    if isinstance(f, Const):
        return set()
    if isinstance(f, (Not, Next)):
        return propositions_of(f.arg)
    return propositions_of(f.left) | propositions_of(f.right)


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------

_TOKEN = re.compile(r"\s*(->|[!&|()]|[A-Za-z_][A-Za-z0-9_]*)")
_KEYWORDS = {"U", "R", "X", "F", "G", "true", "false"}


class FormulaSyntaxError(ValueError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at position {position})")
        self.position = position


class _Tokens:
    def __init__(self, text: str):
        self.text = text
        self.items: list[tuple[str, int]] = []
        pos = 0
        while pos < len(text):
            mt = _TOKEN.match(text, pos)
            if not mt:
                if text[pos:].strip():
                    raise FormulaSyntaxError(f"unexpected character {text[pos]!r}", pos)
                break
            self.items.append((mt.group(1), mt.start(1)))
            pos = mt.end()
        self.idx = 0

    def peek(self):
        return self.items[self.idx][0] if self.idx < len(self.items) else None

    def pos(self):
        return self.items[self.idx][1] if self.idx < len(self.items) else len(self.text)

    def take(self):
        tok = self.items[self.idx]
        self.idx += 1
        return tok


def parse_formula(text: str) -> Formula:
    toks = _Tokens(text)
    f = _parse_implies(toks)
    if toks.peek() is not None:
        raise FormulaSyntaxError(f"unexpected token {toks.peek()!r}", toks.pos())
    return f


def _parse_implies(toks) -> Formula:
    left = _parse_or(toks)
    if toks.peek() == "->":
        toks.take()
        return Implies(left, _parse_implies(toks))
    return left


def _parse_or(toks) -> Formula:
    left = _parse_and(toks)
    while toks.peek() == "|":
        toks.take()
        left = Or(left, _parse_and(toks))
    return left


def _parse_and(toks) -> Formula:
    left = _parse_until(toks)
    while toks.peek() == "&":
        toks.take()
        left = And(left, _parse_until(toks))
    return left


def _parse_until(toks) -> Formula:
    left = _parse_unary(toks)
    if toks.peek() in ("U", "R"):
        op, _ = toks.take()
        right = _parse_until(toks)
        return Until(left, right) if op == "U" else Release(left, right)
    return left


def _parse_unary(toks) -> Formula:
    tok = toks.peek()
    if tok == "!":
        toks.take()
        return Not(_parse_unary(toks))
    if tok == "X":
        toks.take()
        return Next(_parse_unary(toks))
    if tok == "F":
        toks.take()
        return Finally(_parse_unary(toks))
    if tok == "G":
        toks.take()
        return Globally(_parse_unary(toks))
    return _parse_atom(toks)


def _parse_atom(toks) -> Formula:
    tok = toks.peek()
    if tok is None:
        raise FormulaSyntaxError("unexpected end of formula", toks.pos())
    if tok == "(":
        toks.take()
        f = _parse_implies(toks)
        if toks.peek() != ")":
            raise FormulaSyntaxError("missing closing parenthesis", toks.pos())
        toks.take()
        return f
    if tok == "true":
        toks.take()
        return TRUE
    if tok == "false":
        toks.take()
        return FALSE
    if re.fullmatch(r"[A-Za-z_][A-Za-z0-9_]*", tok) and tok not in _KEYWORDS:
        toks.take()
        return Prop(tok)
    raise FormulaSyntaxError(f"unexpected token {tok!r}", toks.pos())


# ---------------------------------------------------------------------------
# Paths
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LassoPath:
    """Ultimately periodic path: finite stem, then the loop forever."""

    stem: tuple[StateId, ...]
    loop: tuple[StateId, ...]

    def __init__(self, stem, loop):
        stem, loop = tuple(stem), tuple(loop)
        if not loop:
            raise ValueError("loop must be nonempty")
        object.__setattr__(self, "stem", stem)
        object.__setattr__(self, "loop", loop)

    def state_at(self, i: int) -> StateId:
        if i < len(self.stem):
            return self.stem[i]
        return self.loop[(i - len(self.stem)) % len(self.loop)]

    def prefix(self, length: int) -> list[StateId]:
        return [self.state_at(i) for i in range(length)]

    def __str__(self):
        return "".join(f"{s}·" for s in self.stem) + "(" + "·".join(map(str, self.loop)) + ")^ω"


def _edge_set(m: Model) -> set[tuple[StateId, StateId]]:
    return {(q, q2) for (q, _joint), q2 in m.transitions.items()}


def validate_lasso(m: Model, path: LassoPath) -> None:
    seq = list(path.stem) + list(path.loop) + [path.loop[0]]
    edges = _edge_set(m)
    for a, b in zip(seq, seq[1:]):
        if a not in m.states or b not in m.states:
            raise ValueError(f"lasso mentions unknown state {a if a not in m.states else b}")
        if (a, b) not in edges:
            raise ValueError(f"no transition connects {m.state_names[a]} to {m.state_names[b]}")


class Verdict3(Enum):
    HOLDS = "holds"
    FAILS = "fails"
    UNKNOWN = "unknown"

    def negate(self):
        if self is Verdict3.HOLDS:
            return Verdict3.FAILS
        if self is Verdict3.FAILS:
            return Verdict3.HOLDS
        return Verdict3.UNKNOWN


def _bind(m: Model, f: Formula) -> None:
    unknown = [p for p in propositions_of(f) if p not in m.prop_names]
    if unknown:
        raise ValueError(f"unknown proposition(s) in formula: {', '.join(sorted(unknown))}")


# ---------------------------------------------------------------------------
# Exact evaluation on lassos
# ---------------------------------------------------------------------------


def eval_lasso(m: Model, path: LassoPath, f: Formula) -> bool:
    """Exact satisfaction at position 0 of the infinite path.

    Satisfaction sets of every subformula are loop-periodic beyond the stem,
    so each temporal operator is resolved by a backward fixpoint over the stem
    plus two sweeps of the loop.
    """
    validate_lasso(m, path)
    _bind(m, f)
    s, p = len(path.stem), len(path.loop)
    window = s + p
    states = [path.state_at(i) for i in range(window)]
    labels = [frozenset(m.prop_names[pr] for pr in m.labels_of(q)) for q in states]

    def nxt(i: int) -> int:
        j = i + 1
        return s + ((j - s) % p) if j >= window else j

    def sat(g: Formula) -> list[bool]:
        if isinstance(g, Const):
            return [g.value] * window
        if isinstance(g, Prop):
            return [g.name in labels[i] for i in range(window)]
        if isinstance(g, Not):
            inner = sat(g.arg)
            return [not v for v in inner]
        if isinstance(g, And):
            a, b = sat(g.left), sat(g.right)
            return [x and y for x, y in zip(a, b)]
        if isinstance(g, Next):
            inner = sat(g.arg)
            return [inner[nxt(i)] for i in range(window)]
        if isinstance(g, Until):
            a, b = sat(g.left), sat(g.right)
            out = list(b)
            # two backward sweeps of the loop reach the least fixpoint of
            # u = b or (a and X u); then one backward pass over the stem
            for _ in range(2):
                for i in range(window - 1, s - 1, -1):
                    out[i] = b[i] or (a[i] and out[nxt(i)])
            for i in range(s - 1, -1, -1):
                out[i] = b[i] or (a[i] and out[i + 1])
            return out
        raise TypeError(f"not a formula: {g!r}")

    return sat(f)[0]


# ---------------------------------------------------------------------------
# Three-valued evaluation on finite prefixes
# ---------------------------------------------------------------------------


def eval_bounded(m: Model, prefix: list[StateId], f: Formula) -> Verdict3:
    """Weak three-valued verdict on a finite prefix.

    ``HOLDS``/``FAILS`` only when every infinite continuation agrees; the
    frontier beyond the prefix contributes ``UNKNOWN``. No loop detection is
    attempted here.
    """
    if not prefix:
        raise ValueError("prefix must be nonempty")
    edges = _edge_set(m)
    for a, b in zip(prefix, prefix[1:]):
        if (a, b) not in edges:
            raise ValueError(f"prefix states {a} -> {b} are not connected")
    _bind(m, f)
    n = len(prefix)
    labels = [frozenset(m.prop_names[pr] for pr in m.labels_of(q)) for q in prefix]
    H, F, U = Verdict3.HOLDS, Verdict3.FAILS, Verdict3.UNKNOWN

    def and3(a, b):
        if a is F or b is F:
            return F
        if a is H and b is H:
            return H
        return U

    def or3(a, b):
        if a is H or b is H:
            return H
        if a is F and b is F:
            return F
        return U

    memo: dict[tuple[int, int], Verdict3] = {}

    def ev(g: Formula, i: int) -> Verdict3:
        key = (id(g), i)
        if key in memo:
            return memo[key]
        if isinstance(g, Const):
            out = H if g.value else F
        elif isinstance(g, Prop):
            out = H if g.name in labels[i] else F
        elif isinstance(g, Not):
            out = ev(g.arg, i).negate()
        elif isinstance(g, And):
            out = and3(ev(g.left, i), ev(g.right, i))
        elif isinstance(g, Next):
            out = ev(g.arg, i + 1) if i + 1 < n else U
        elif isinstance(g, Until):
            # backward: u(i) = b(i) or3 (a(i) and3 u(i+1)), frontier unknown
            out = U
            for j in range(n - 1, i - 1, -1):
                tail = out if j < n - 1 else U
                out = or3(ev(g.right, j), and3(ev(g.left, j), tail))
                memo[(id(g), j)] = out
        else:
            raise TypeError(f"not a formula: {g!r}")
        memo[key] = out
        return out

    return ev(f, 0)
