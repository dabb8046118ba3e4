"""Scalable model families, CNF ingestion, and the shipped strategies.

Registry-provided generators produce one explicit model per parameter value,
all sharing their agent/action/proposition registries across parameters:

* ``coffee``      - the Fibonacci sugar machine for n >= 2 cups,
* ``satgame``     - the verifier/refuter satisfiability game of a CNF,
* ``satunits``    - satgame of the unit-clause chain (x1)&...&(xk),
* ``satfamily``   - satgame of the i-th CNF in a canonical enumeration
                    (``satfamily_sat`` keeps only the satisfiable ones),
* ``tmrun_halt`` / ``tmrun_loop`` - run-trace chains of two shipped tape
  machines, truncated at a horizon.

Shipped strategies: Alice's constant skip (tape machine and VM program),
Bob's Fibonacci-parity strategies in naive / memoized / matrix-power
variants, and a brute-force verifier that searches assignments by playing
the game model read from tape 1.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from .machine import TapeConfig, TapeMachine, parse_program, parse_tape_machine
from .model import Model

# ---------------------------------------------------------------------------
# Fibonacci coffee machine
# ---------------------------------------------------------------------------


def fib(m: int) -> int:
    a, b = 0, 1
    for _ in range(m):
        a, b = b, a + b
    return a


def _tri(j: int) -> int:
    return j * (j + 1) // 2


def coffee_state_index(i: int, j: int) -> int:
    return _tri(j) + i


def gen_coffee(n: int) -> Model:
    """The n-cup sugar machine.

    States i/j track i requests after j decisions; Alice controls the first
    floor(n/2) decisions, Bob the rest, and whoever is not deciding is forced
    to skip. Terminal states i/n are absorbing and labeled from the binary
    digits of F(i): bit 0 gives sugar_Bob, bit floor(n/2) gives sugar_Alice.
    """
    if n < 2:
        raise ValueError("coffee machine needs n >= 2")
    REQUEST, SKIP = 0, 1
    ALICE, BOB = 0, 1
    cut = n // 2

    state_names = [f"{i}/{j}" for j in range(n + 1) for i in range(j + 1)]
    both, only_skip = (REQUEST, SKIP), (SKIP,)
    repertoire = {}
    transitions = {}
    for j in range(n + 1):
        for i in range(j + 1):
            q = coffee_state_index(i, j)
            alice_acts = both if j < cut else only_skip
            bob_acts = both if cut <= j < n else only_skip
            repertoire[(ALICE, q)] = alice_acts
            repertoire[(BOB, q)] = bob_acts
            for joint in itertools.product(alice_acts, bob_acts):
                if j == n:
                    transitions[(q, joint)] = q
                else:
                    inc = 1 if REQUEST in joint else 0
                    transitions[(q, joint)] = coffee_state_index(i + inc, j + 1)

    sugar_alice = set()
    sugar_bob = set()
    for m in range(n + 1):
        value = fib(m)
        q = coffee_state_index(m, n)
        if value & 1:
            sugar_bob.add(q)
        if (value >> (n // 2)) & 1:
            sugar_alice.add(q)

    return Model(
        agent_names=("Alice", "Bob"),
        state_names=state_names,
        initial=0,
        prop_names=("sugar_Alice", "sugar_Bob"),
        valuation={0: sugar_alice, 1: sugar_bob},
        action_names=("request", "skip"),
        repertoire=repertoire,
        transitions=transitions,
        indist=((), ()),
        scale_param=n,
        meta={"template": "coffee"},
    )


# ---------------------------------------------------------------------------
# CNF handling and the satisfiability game
# ---------------------------------------------------------------------------


class ClauseError(ValueError):
    pass


@dataclass(frozen=True)
class Cnf:
    """Normalized CNF: per clause at most one literal per variable, sorted."""

    k: int
    clauses: tuple[tuple[int, ...], ...]

    def __init__(self, k: int, clauses):
        norm = []
        for idx, clause in enumerate(clauses):
            by_var: dict[int, int] = {}
            for lit in clause:
                if lit == 0:
                    raise ClauseError(f"clause {idx + 1}: literal 0 is not allowed")
                var = abs(lit)
                if var > k:
                    raise ClauseError(f"clause {idx + 1}: variable x{var} exceeds declared count {k}")
                if var in by_var and by_var[var] != lit:
                    raise ClauseError(
                        f"clause {idx + 1}: opposite literals of x{var} cannot be represented "
                        "by the one-marker-per-variable scheme"
                    )
                by_var[var] = lit
            if not by_var:
                raise ClauseError(f"clause {idx + 1}: empty clause")
            norm.append(tuple(sorted(by_var.values(), key=abs)))
        if not norm:
            raise ClauseError("formula has no clauses")
        object.__setattr__(self, "k", k)
        object.__setattr__(self, "clauses", tuple(norm))

    def marker(self, clause_idx: int, var: int) -> int:
        """+1 / -1 / 0 for a positive / negated / absent occurrence."""
        for lit in self.clauses[clause_idx]:
            if abs(lit) == var:
                return 1 if lit > 0 else -1
        return 0

    def satisfied_by(self, assignment: int) -> bool:
        """Truth-table check; bit j-1 of ``assignment`` is the value of xj."""
        for clause in self.clauses:
            ok = False
            for lit in clause:
                value = (assignment >> (abs(lit) - 1)) & 1
                if (lit > 0) == bool(value):
                    ok = True
                    break
            if not ok:
                return False
        return True

    def satisfiable(self) -> bool:
        return any(self.satisfied_by(a) for a in range(1 << self.k))


def parse_dimacs(text: str) -> Cnf:
    """Standard DIMACS cnf, with line-numbered errors and normalization."""
    k = None
    n_clauses = None
    clauses: list[list[int]] = []
    current: list[int] = []
    current_line = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("c"):
            continue
        if line.startswith("p"):
            parts = line.split()
            if len(parts) != 4 or parts[1] != "cnf":
                raise ClauseError(f"line {lineno}: malformed problem header {line!r}")
            try:
                k, n_clauses = int(parts[2]), int(parts[3])
            except ValueError:
                raise ClauseError(f"line {lineno}: malformed problem header {line!r}") from None
            continue
        if k is None:
            raise ClauseError(f"line {lineno}: clause before the problem header")
        for tok in line.split():
            try:
                lit = int(tok)
            except ValueError:
                raise ClauseError(f"line {lineno}: bad literal {tok!r}") from None
            if lit == 0:
                if not current:
                    raise ClauseError(f"line {lineno}: empty clause")
                clauses.append(current)
                current = []
                current_line = None
            else:
                current.append(lit)
                current_line = lineno
    if current:
        raise ClauseError(f"line {current_line}: clause not terminated by 0")
    if k is None:
        raise ClauseError("missing problem header")
    if n_clauses is not None and len(clauses) != n_clauses:
        raise ClauseError(f"header declares {n_clauses} clauses, found {len(clauses)}")
    try:
        return Cnf(k, clauses)
    except ClauseError:
        raise


TOP, BOT, NOOP = 0, 1, 2
VERIFIER, REFUTER = 0, 1


def gen_satgame(cnf: Cnf) -> Model:
    """Two-player game whose sure winner decides satisfiability.

    The refuter secretly picks a clause at q0; the verifier then declares
    truth values variable by variable, seeing only which variable is up. A
    declaration matching the clause's literal jumps to the winning sink,
    otherwise play advances; falling off the last variable loses.
    """
    k, n = cnf.k, len(cnf.clauses)
    if k < 1 or n < 1:
        raise ValueError("satgame needs at least one variable and one clause")

    state_names = ["q0"]
    for i in range(n):
        for j in range(1, k + 1):
            state_names.append(f"q{i + 1}_{j}")
    state_names += ["qtop", "qbot"]
    q_top, q_bot = 1 + n * k, 2 + n * k

    def lit_state(i: int, j: int) -> int:
        return 1 + i * k + (j - 1)

    action_names = ["top", "bot", "noop"] + [f"C{i + 1}" for i in range(n)]
    clause_actions = tuple(range(3, 3 + n))

    repertoire = {}
    transitions = {}
    # initial state: refuter picks a clause
    repertoire[(VERIFIER, 0)] = (NOOP,)
    repertoire[(REFUTER, 0)] = clause_actions
    for i, act in enumerate(clause_actions):
        transitions[(0, (NOOP, act))] = lit_state(i, 1)
    # literal states: verifier declares
    for i in range(n):
        for j in range(1, k + 1):
            q = lit_state(i, j)
            repertoire[(VERIFIER, q)] = (TOP, BOT)
            repertoire[(REFUTER, q)] = (NOOP,)
            marker = cnf.marker(i, j)
            for decl in (TOP, BOT):
                if (marker > 0 and decl == TOP) or (marker < 0 and decl == BOT):
                    dst = q_top
                elif j < k:
                    dst = lit_state(i, j + 1)
                else:
                    dst = q_bot
                transitions[(q, (decl, NOOP))] = dst
    for q in (q_top, q_bot):
        repertoire[(VERIFIER, q)] = (NOOP,)
        repertoire[(REFUTER, q)] = (NOOP,)
        transitions[(q, (NOOP, NOOP))] = q

    # verifier only sees which variable is up
    v_classes = [tuple(lit_state(i, j) for i in range(n)) for j in range(1, k + 1)]

    return Model(
        agent_names=("v", "r"),
        state_names=state_names,
        initial=0,
        prop_names=("win",),
        valuation={0: {q_top}},
        action_names=action_names,
        repertoire=repertoire,
        transitions=transitions,
        indist=(tuple(v_classes), ()),
        scale_param=k,
        meta={"template": "satgame", "clauses": cnf.clauses, "vars": k},
    )


def gen_satunits(k: int) -> Model:
    """satgame of (x1) & (x2) & ... & (xk); the lone satisfying assignment is
    all-true, which an ascending brute-force search finds last."""
    if k < 1:
        raise ValueError("satunits needs k >= 1")
    return gen_satgame(Cnf(k, [(j,) for j in range(1, k + 1)]))


def _clause_markers(k: int):
    """All non-empty marker rows over {+,-,absent}^k, lexicographically."""
    for row in itertools.product((0, 1, -1), repeat=k):
        if any(row):
            yield tuple(j * m for j, m in zip(range(1, k + 1), row) if m)


def enumerate_cnfs():
    """Canonical infinite enumeration of normalized CNFs.

    Diagonal over (variables + clauses); for each (k, c) all multisets of c
    clauses over k variables in lexicographic marker order.
    """
    for total in itertools.count(2):
        for k in range(1, total):
            c = total - k
            rows = list(_clause_markers(k))
            for combo in itertools.combinations_with_replacement(rows, c):
                yield Cnf(k, combo)


def gen_satfamily(index: int, satisfiable_only: bool = False) -> Model:
    if index < 1:
        raise ValueError("family index starts at 1")
    seen = 0
    for cnf in enumerate_cnfs():
        if satisfiable_only and not cnf.satisfiable():
            continue
        seen += 1
        if seen == index:
            m = gen_satgame(cnf)
            m.scale_param = index
            return m
    raise AssertionError("unreachable")


# ---------------------------------------------------------------------------
# Run-trace models of tape machines
# ---------------------------------------------------------------------------

HALTING_TM_TEXT = """\
# writes two work symbols, then halts in the accepting state
work: 1
start: s0
halt: acc
accept: acc
s0 * * * -> s1 1 . S S R
s1 * * * -> acc 0 . S S R
"""

LOOPING_TM_TEXT = """\
# walks its work tape to the right forever, never accepting
work: 1
start: s0
halt:
s0 * * * -> s1 . . S S R
s1 * * * -> s0 . . S S R
"""


def halting_machine() -> TapeMachine:
    return parse_tape_machine(HALTING_TM_TEXT, name="tm_halt")


def looping_machine() -> TapeMachine:
    return parse_tape_machine(LOOPING_TM_TEXT, name="tm_loop")


def gen_tmrun(tm: TapeMachine, horizon: int) -> Model:
    """Chain model of the machine's run from blank tapes.

    One state per visited configuration, in order, connected by the sole
    action ``idle``; the last explored configuration is absorbing. States
    whose control state is accepting carry the proposition ``accepting``.
    """
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    cfg = TapeConfig(tm, "", "")
    accepting = set()
    count = 0
    controls = []
    while count < horizon:
        controls.append(cfg.state)
        if cfg.is_accepting():
            accepting.add(count)
        count += 1
        if cfg.is_halted() or not cfg.step():
            break

    states = [f"c{t}" for t in range(count)]
    transitions = {}
    for t in range(count):
        transitions[(t, (0,))] = t + 1 if t + 1 < count else t
    return Model(
        agent_names=("runner",),
        state_names=states,
        initial=0,
        prop_names=("accepting",),
        valuation={0: accepting},
        action_names=("idle",),
        repertoire={(0, t): (0,) for t in range(count)},
        transitions=transitions,
        indist=((),),
        scale_param=horizon,
        meta={"template": "tmrun", "machine": tm.name, "horizon_truncated": horizon},
    )


# ---------------------------------------------------------------------------
# Shipped strategies
# ---------------------------------------------------------------------------

ALICE_SKIP_TM_TEXT = """\
# constant strategy: always skip, never reads the input
start: s0
halt: h
s0 * * * * -> h . . 1 S S S S
"""

ALICE_SKIP_VM_TEXT = """\
# constant strategy: always skip
emit 1
"""

# Shared prologue for Bob's strategies: find the current state, recover the
# cup count n from the state count N = (n+1)(n+2)/2, split the state index
# into (requests i, decisions j), and skip unless this is decision n-1.
_BOB_PROLOGUE = """\
hcount t
beq t, 0, emit_skip
sub t, t, 1
hobs s, t
nstates N
set mm, 0
set T2, 0
findn:
bge T2, N, foundn
add mm, mm, 1
add T2, T2, mm
jmp findn
foundn:
sub n, mm, 1
set j, 0
set base, 0
findj:
add nxt, base, j
add nxt, nxt, 1
bgt nxt, s, foundj
add j, j, 1
set base, nxt
jmp findj
foundj:
sub i, s, base
sub d, n, 1
bne j, d, emit_skip
"""

_BOB_EPILOGUE = """\
mod par, f, 2
beq par, 1, emit_skip
emit 0
emit_skip:
emit 1
"""

BOB_FIB_NAIVE_TEXT = (
    _BOB_PROLOGUE
    + """\
# naive recursion via an explicit call stack: fib(m) = fib(m-1) + fib(m-2)
set sp, 0
astore stkm, 0, i
astore stkph, 0, 0
set ret, 0
callloop:
blt sp, 0, calldone
aload mreg, stkm, sp
aload ph, stkph, sp
blt mreg, 2, basecase
beq ph, 0, phase0
beq ph, 1, phase1
aload pa, stkpa, sp
add ret, pa, ret
sub sp, sp, 1
jmp callloop
phase0:
astore stkph, sp, 1
add sp, sp, 1
sub t3, mreg, 1
astore stkm, sp, t3
astore stkph, sp, 0
jmp callloop
phase1:
astore stkpa, sp, ret
astore stkph, sp, 2
add sp, sp, 1
sub t3, mreg, 2
astore stkm, sp, t3
astore stkph, sp, 0
jmp callloop
basecase:
set ret, mreg
sub sp, sp, 1
jmp callloop
calldone:
set f, ret
"""
    + _BOB_EPILOGUE
)

BOB_FIB_MEMO_TEXT = (
    _BOB_PROLOGUE
    + """\
# memoized recursion, laid out bottom-up: one pass over 0..i
set fa, 0
set fb, 1
set kk, 0
fibloop:
bge kk, i, fibdone
add fc, fa, fb
set fa, fb
set fb, fc
add kk, kk, 1
jmp fibloop
fibdone:
set f, fa
"""
    + _BOB_EPILOGUE
)

# Matrix-power variant: needs the explicit scale parameter and recovers the
# decision index via integer square root, so the whole decision is O(log n).
BOB_FIB_MATRIX_TEXT = """\
hcount t
beq t, 0, emit_skip
sub t, t, 1
hobs s, t
param n
mul v8, s, 8
add v8, v8, 1
set x, v8
blt x, 2, isqdone
div y, v8, x
add y, y, x
div y, y, 2
isq:
bge y, x, isqdone
set x, y
div y, v8, x
add y, y, x
div y, y, 2
jmp isq
isqdone:
sub j, x, 1
div j, j, 2
add base, j, 1
mul base, base, j
div base, base, 2
sub i, s, base
sub d, n, 1
bne j, d, emit_skip
set v, i
set len, 0
bitloop:
beq v, 0, bitsdone
mod b2, v, 2
astore bits, len, b2
div v, v, 2
add len, len, 1
jmp bitloop
bitsdone:
set fa, 0
set fb, 1
set bi, len
dbl:
beq bi, 0, dbldone
sub bi, bi, 1
mul t1, fb, 2
sub t1, t1, fa
mul c, fa, t1
mul t2, fa, fa
mul t3, fb, fb
add d2, t2, t3
aload b2, bits, bi
beq b2, 1, dblodd
set fa, c
set fb, d2
jmp dbl
dblodd:
set fa, d2
add fb, c, d2
jmp dbl
dbldone:
set f, fa
mod par, f, 2
beq par, 1, emit_skip
emit 0
emit_skip:
emit 1
"""

# Brute-force verifier: searches assignments in ascending order, testing each
# one by replaying the game graph from every clause start, then plays the
# first surely-winning assignment at the observed variable.
VERIFIER_BRUTEFORCE_TEXT = """\
hcount t
beq t, 0, emit_noop
sub t, t, 1
hobs s, t
nstates NS
sub lim, NS, 2
bge s, lim, emit_noop
beq s, 0, emit_noop
repsize nc, 1, 0
sub k, NS, 3
div k, k, nc
set A, 0
set twok, 1
set cnt, 0
pow2:
bge cnt, k, pow2done
mul twok, twok, 2
add cnt, cnt, 1
jmp pow2
pow2done:
tryA:
bge A, twok, fallback
set ci, 0
clauseloop:
bge ci, nc, Awins
mul w, ci, k
add w, w, 1
set jj, 1
walk:
sub sh, jj, 1
set tmp, A
set c2, 0
shloop:
bge c2, sh, shdone
div tmp, tmp, 2
add c2, c2, 1
jmp shloop
shdone:
mod bitv, tmp, 2
set act, 1
beq bitv, 0, actset
set act, 0
actset:
astore jarr, 0, act
astore jarr, 1, 2
succ w2, w, jarr
sub limw, NS, 2
beq w2, limw, clausewon
sub limb, NS, 1
beq w2, limb, Afails
set w, w2
add jj, jj, 1
jmp walk
clausewon:
add ci, ci, 1
jmp clauseloop
Afails:
add A, A, 1
jmp tryA
Awins:
sub sh, s, 1
mod sh, sh, k
set tmp, A
set c2, 0
shloop2:
bge c2, sh, shdone2
div tmp, tmp, 2
add c2, c2, 1
jmp shloop2
shdone2:
mod bitv, tmp, 2
set act, 1
beq bitv, 0, emitact
set act, 0
emitact:
emit act
fallback:
emit 0
emit_noop:
emit 2
"""


@dataclass(frozen=True)
class BuiltinStrategy:
    name: str
    role: str  # agent display name the machine is written for
    machine: object
    description: str


def builtin_strategies() -> dict[str, BuiltinStrategy]:
    """The shipped strategy machines, keyed by name."""
    return {
        "alice_skip": BuiltinStrategy(
            "alice_skip", "Alice", parse_tape_machine(ALICE_SKIP_TM_TEXT, "alice_skip"),
            "constant skip (tape machine)",
        ),
        "alice_skip_vm": BuiltinStrategy(
            "alice_skip_vm", "Alice", parse_program(ALICE_SKIP_VM_TEXT, "alice_skip_vm"),
            "constant skip (VM program)",
        ),
        "bob_fib_naive": BuiltinStrategy(
            "bob_fib_naive", "Bob", parse_program(BOB_FIB_NAIVE_TEXT, "bob_fib_naive"),
            "decide at the last step by naive-recursive Fibonacci parity",
        ),
        "bob_fib_memo": BuiltinStrategy(
            "bob_fib_memo", "Bob", parse_program(BOB_FIB_MEMO_TEXT, "bob_fib_memo"),
            "decide at the last step by memoized (linear) Fibonacci parity",
        ),
        "bob_fib_matrix": BuiltinStrategy(
            "bob_fib_matrix", "Bob", parse_program(BOB_FIB_MATRIX_TEXT, "bob_fib_matrix"),
            "decide at the last step by matrix-power Fibonacci parity (logarithmic)",
        ),
        "verifier_bruteforce": BuiltinStrategy(
            "verifier_bruteforce", "v", parse_program(VERIFIER_BRUTEFORCE_TEXT, "verifier_bruteforce"),
            "search all assignments by replaying the game model, then play the first winner",
        ),
    }


def verifier_from_assignment(cnf: Cnf, assignment: dict[int, bool]):
    """Memoryless verifier playing a fixed assignment (one memory state)."""
    from .outcome import FiniteMemoryStrategy

    k = cnf.k

    def act(mem, obs):
        s = obs.canonical
        if s == 0 or s > k * len(cnf.clauses):
            return NOOP
        var = (s - 1) % k + 1
        return TOP if assignment.get(var, False) else BOT

    return FiniteMemoryStrategy(initial=0, update=lambda mem, obs: 0, act=act, size=1)


@dataclass(frozen=True)
class Template:
    """A named generator over positive integer parameters."""

    name: str
    generator: object
    min_param: int = 1
    description: str = ""

    def __call__(self, param: int) -> Model:
        if param < self.min_param:
            raise ValueError(f"template {self.name} needs parameter >= {self.min_param}")
        return self.generator(param)


def registry() -> dict[str, Template]:
    return {
        "coffee": Template("coffee", gen_coffee, 2, "n-cup Fibonacci sugar machine"),
        "satunits": Template("satunits", gen_satunits, 1, "satgame of (x1)&...&(xk)"),
        "satfamily": Template("satfamily", gen_satfamily, 1, "satgame of the i-th CNF"),
        "satfamily_sat": Template(
            "satfamily_sat", lambda i: gen_satfamily(i, satisfiable_only=True), 1,
            "satgame of the i-th satisfiable CNF",
        ),
        "tmrun_halt": Template(
            "tmrun_halt", lambda h: gen_tmrun(halting_machine(), h), 1,
            "run trace of the halting+accepting machine",
        ),
        "tmrun_loop": Template(
            "tmrun_loop", lambda h: gen_tmrun(looping_machine(), h), 1,
            "run trace of the looping machine",
        ),
    }
