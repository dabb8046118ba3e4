"""Step-counted strategy machines.

Two realizations of the same contract: read an encoded model (tape 1) and an
encoded observation history (tape 2), emit one action index, count every step.

* :class:`TapeMachine` is a faithful multi-tape machine over {0,1,#,blank}:
  two read-only input tapes, one write-only output tape (head advances right
  after each write), and a configurable number of work tapes. One applied
  transition is one step.

* :class:`StrategyProgram` is a small register/array assembly executed by a
  deterministic VM; besides raw symbol reads of both input words it has
  accessor instructions over the *parsed* model and history (state index at a
  history position, repertoire and transition lookups). One executed
  instruction is one step. The VM exists because authoring nontrivial
  strategies as raw tape transitions is prohibitive; its cost model charges a
  unit per instruction, so step-count verdicts for programs are VM-cost-model
  verdicts (equivalent to tape cost up to a fixed polynomial overhead).

Totality of a machine is undecidable, so it is enforced operationally: every
run carries a step budget and exceeding it raises :class:`BudgetExceeded`.
"""

from __future__ import annotations

import itertools
import os
from dataclasses import dataclass

from .encoding import TapeWord, decode_history, decode_model, encode_history, encode_index, encode_model
from .model import AgentId, Coalition, Model, Observation, observation_of

DEFAULT_BUDGET = 10_000_000
BUDGET_ENV_VAR = "STRATBENCH_BUDGET"


def default_budget() -> int:
    raw = os.environ.get(BUDGET_ENV_VAR)
    if raw:
        try:
            value = int(raw)
            if value > 0:
                return value
        except ValueError:
            pass
    return DEFAULT_BUDGET


class MachineError(Exception):
    """Base for run failures."""


class BudgetExceeded(MachineError):
    def __init__(self, budget: int):
        super().__init__(f"step budget of {budget} exceeded")
        self.budget = budget


class MalformedOutput(MachineError):
    pass


class IllegalAction(MachineError):
    pass


@dataclass(frozen=True)
class RunResult:
    action: int
    steps: int
    output: str = ""


# ---------------------------------------------------------------------------
# Tape machines
# ---------------------------------------------------------------------------

BLANK = "_"
TAPE_SYMBOLS = "01#" + BLANK
MOVES = "LRS"


class TapeMachine:
    """Deterministic multi-tape machine.

    ``rules`` maps (state, read symbols over input+work tapes) to
    (next state, work writes, output symbol or None, moves over input+work
    tapes). Input tapes are never written; the output head advances exactly
    when a symbol is written.
    """

    def __init__(self, name, start, halting, rules, work_tapes=2, accepting=()):
        self.name = name
        self.start = start
        self.halting = frozenset(halting)
        self.accepting = frozenset(accepting)
        self.work_tapes = work_tapes
        self.rules = dict(rules)

    @property
    def read_tapes(self) -> int:
        return 2 + self.work_tapes

    def rule_for(self, state, syms):
        return self.rules.get((state, syms))


def parse_tape_machine(text: str, name: str = "machine") -> TapeMachine:
    """Load the line-oriented transition-table format.

    Header lines: ``work: <int>``, ``start: <state>``, ``halt: <states...>``,
    ``accept: <states...>``. Every other nonblank line is one rule::

        <state> <read syms> -> <state'> <work writes> <out> <moves>

    with one read symbol per readable tape (2 inputs then work tapes), ``*``
    matching any symbol, ``.`` for "write nothing" (out) / "keep symbol"
    (work), and moves over the readable tapes from {L,R,S}. Wildcards expand
    over the alphabet; expansions must stay deterministic.
    """
    work = 2
    start = None
    halting: set[str] = set()
    accepting: set[str] = set()
    raw_rules = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        # '#' is a tape symbol, so comments are whole lines starting with '#'
        # or suffixes introduced by ' //'.
        line = raw.split("//", 1)[0].strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("work:"):
            work = int(line.split(":", 1)[1])
            continue
        if line.startswith("start:"):
            start = line.split(":", 1)[1].strip()
            continue
        if line.startswith("halt:"):
            halting.update(line.split(":", 1)[1].split())
            continue
        if line.startswith("accept:"):
            accepting.update(line.split(":", 1)[1].split())
            continue
        raw_rules.append((lineno, line))

    if start is None:
        raise ValueError(f"{name}: missing start state")

    n_read = 2 + work
    rules = {}
    for lineno, line in raw_rules:
        toks = line.split()
        if "->" not in toks:
            raise ValueError(f"{name}:{lineno}: rule missing '->'")
        arrow = toks.index("->")
        lhs, rhs = toks[:arrow], toks[arrow + 1 :]
        if len(lhs) != 1 + n_read:
            raise ValueError(f"{name}:{lineno}: expected state + {n_read} read symbols")
        if len(rhs) != 1 + work + 1 + n_read:
            raise ValueError(f"{name}:{lineno}: expected state + {work} writes + out + {n_read} moves")
        state, reads = lhs[0], lhs[1:]
        nxt = rhs[0]
        writes = rhs[1 : 1 + work]
        out = rhs[1 + work]
        moves = rhs[2 + work :]
        for s in reads:
            if s != "*" and s not in TAPE_SYMBOLS:
                raise ValueError(f"{name}:{lineno}: bad read symbol {s!r}")
        for s in writes:
            if s != "." and s not in TAPE_SYMBOLS:
                raise ValueError(f"{name}:{lineno}: bad work write {s!r}")
        if out != "." and out not in "01#":
            raise ValueError(f"{name}:{lineno}: bad output symbol {out!r}")
        for mv in moves:
            if mv not in MOVES:
                raise ValueError(f"{name}:{lineno}: bad move {mv!r}")
        # expand wildcards; reject nondeterministic overlaps
        slots = [TAPE_SYMBOLS if s == "*" else s for s in reads]
        for combo in itertools.product(*slots):
            key = (state, tuple(combo))
            concrete_writes = tuple(
                combo[2 + wi] if w == "." else w for wi, w in enumerate(writes)
            )
            val = (nxt, concrete_writes, None if out == "." else out, tuple(moves))
            if key in rules and rules[key] != val:
                raise ValueError(f"{name}:{lineno}: conflicting rule for {key}")
            rules[key] = val

    return TapeMachine(name, start, halting, rules, work_tapes=work, accepting=accepting)


class TapeConfig:
    """Mutable run configuration of a tape machine (used by the run-trace
    model generator as well as the runner)."""

    def __init__(self, machine: TapeMachine, enc_model: str, enc_history: str):
        self.machine = machine
        self.state = machine.start
        self.inputs = (enc_model, enc_history)
        self.in_heads = [0, 0]
        self.work = [[] for _ in range(machine.work_tapes)]
        self.work_heads = [0] * machine.work_tapes
        self.output: list[str] = []

    def read_syms(self) -> tuple:
        syms = []
        for t in range(2):
            pos = self.in_heads[t]
            word = self.inputs[t]
            syms.append(word[pos] if pos < len(word) else BLANK)
        for t in range(self.machine.work_tapes):
            tape = self.work[t]
            pos = self.work_heads[t]
            syms.append(tape[pos] if pos < len(tape) else BLANK)
        return tuple(syms)

    def is_halted(self) -> bool:
        return self.state in self.machine.halting

    def is_accepting(self) -> bool:
        return self.state in self.machine.accepting

    def step(self) -> bool:
        """Apply one transition; False when no rule matches."""
        rule = self.machine.rule_for(self.state, self.read_syms())
        if rule is None:
            return False
        nxt, writes, out, moves = rule
        for t in range(self.machine.work_tapes):
            tape = self.work[t]
            pos = self.work_heads[t]
            while len(tape) <= pos:
                tape.append(BLANK)
            tape[pos] = writes[t]
        if out is not None:
            self.output.append(out)
        for t in range(2):
            mv = moves[t]
            if mv == "R":
                self.in_heads[t] += 1
            elif mv == "L":
                self.in_heads[t] = max(0, self.in_heads[t] - 1)
        for t in range(self.machine.work_tapes):
            mv = moves[2 + t]
            if mv == "R":
                self.work_heads[t] += 1
            elif mv == "L":
                self.work_heads[t] = max(0, self.work_heads[t] - 1)
        self.state = nxt
        return True

    def snapshot(self) -> tuple:
        """Hashable view of the configuration (for run-trace models)."""
        return (
            self.state,
            tuple(self.in_heads),
            tuple(tuple(t) for t in self.work),
            tuple(self.work_heads),
            tuple(self.output),
        )


def _run_tape_machine(machine: TapeMachine, enc_model, enc_history, budget) -> tuple[str, int]:
    cfg = TapeConfig(machine, enc_model, enc_history)
    steps = 0
    while not cfg.is_halted():
        if steps >= budget:
            raise BudgetExceeded(budget)
        if not cfg.step():
            raise MalformedOutput(f"{machine.name}: no transition from state {cfg.state!r}")
        steps += 1
    return "".join(cfg.output), steps


# ---------------------------------------------------------------------------
# Strategy VM
# ---------------------------------------------------------------------------

_BINOPS = {"add", "sub", "mul", "div", "mod"}
_BRANCHES = {"beq", "bne", "blt", "ble", "bgt", "bge"}
_ACCESSORS = {
    "mlen": 0, "msym": 1, "hlen": 0, "hsym": 1,
    "hcount": 0, "hobs": 1,
    "nagents": 0, "nstates": 0, "nactions": 0, "nprops": 0, "ntrans": 0,
    "initstate": 0, "param": 0,
    "hasprop": 2, "repsize": 2, "repget": 3,
    "tsrc": 1, "tdst": 1, "tact": 2,
    "indist": 3, "succ": 2,
}


class VMFault(Exception):
    pass


@dataclass
class _Instr:
    op: str
    dst: int = -1
    args: tuple = ()
    target: int = -1


class StrategyProgram:
    """A parsed strategy-VM program."""

    def __init__(self, name: str, instructions, n_regs: int, n_arrays: int, source: str = ""):
        self.name = name
        self.instructions = instructions
        self.n_regs = n_regs
        self.n_arrays = n_arrays
        self.source = source


def parse_program(text: str, name: str = "program") -> StrategyProgram:
    """Assemble the line-oriented strategy-VM format.

    ``label:`` lines define jump targets; operands are registers (bare
    identifiers), integer literals, or array names (first operand of aload /
    astore). ``#`` starts a comment. See docs/formats.md for the instruction
    reference.
    """
    regs: dict[str, int] = {}
    arrays: dict[str, int] = {}
    labels: dict[str, int] = {}
    lines = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.endswith(":") and " " not in line:
            labels[line[:-1]] = len(lines)
            continue
        lines.append((lineno, line))

    def reg(tok: str) -> int:
        if tok not in regs:
            regs[tok] = len(regs)
        return regs[tok]

    def arr(tok: str) -> int:
        if tok not in arrays:
            arrays[tok] = len(arrays)
        return arrays[tok]

    def operand(tok: str):
        # ('r', slot) or ('i', value)
        try:
            return ("i", int(tok))
        except ValueError:
            return ("r", reg(tok))

    instrs: list[_Instr] = []
    pending: list[tuple[int, int, str]] = []  # (instr idx, lineno, label)
    for lineno, line in lines:
        head, _, rest = line.partition(" ")
        ops = [t.strip() for t in rest.split(",")] if rest.strip() else []
        op = head.strip()
        try:
            if op == "set":
                instrs.append(_Instr("set", dst=reg(ops[0]), args=(operand(ops[1]),)))
            elif op in _BINOPS:
                instrs.append(_Instr(op, dst=reg(ops[0]), args=(operand(ops[1]), operand(ops[2]))))
            elif op == "jmp":
                pending.append((len(instrs), lineno, ops[0]))
                instrs.append(_Instr("jmp"))
            elif op in _BRANCHES:
                pending.append((len(instrs), lineno, ops[2]))
                instrs.append(_Instr(op, args=(operand(ops[0]), operand(ops[1]))))
            elif op == "aload":
                instrs.append(_Instr("aload", dst=reg(ops[0]), args=(arr(ops[1]), operand(ops[2]))))
            elif op == "astore":
                instrs.append(_Instr("astore", args=(arr(ops[0]), operand(ops[1]), operand(ops[2]))))
            elif op == "emit":
                instrs.append(_Instr("emit", args=(operand(ops[0]),)))
            elif op in _ACCESSORS:
                arity = _ACCESSORS[op]
                if op == "succ":
                    instrs.append(_Instr("succ", dst=reg(ops[0]), args=(operand(ops[1]), arr(ops[2]))))
                else:
                    instrs.append(_Instr(op, dst=reg(ops[0]), args=tuple(operand(t) for t in ops[1 : 1 + arity])))
            else:
                raise ValueError(f"unknown opcode {op!r}")
        except (IndexError, ValueError) as exc:
            raise ValueError(f"{name}:{lineno}: {exc}") from None

    for idx, lineno, label in pending:
        if label not in labels:
            raise ValueError(f"{name}:{lineno}: undefined label {label!r}")
        instrs[idx].target = labels[label]

    return StrategyProgram(name, instrs, len(regs), len(arrays), source=text)


class _VMContext:
    """Parsed inputs an executing program can query."""

    __slots__ = ("model", "enc_model", "enc_history", "history", "trans_list")

    def __init__(self, model: Model, enc_model: str, enc_history: str):
        self.model = model
        self.enc_model = enc_model
        self.enc_history = enc_history
        self.history = decode_history(enc_history)
        self.trans_list = model.meta.get("_trans_list")
        if self.trans_list is None:
            self.trans_list = sorted(model.transitions.items())
            model.meta["_trans_list"] = self.trans_list


_SYMCODE = {"0": 0, "1": 1, "#": 2}


def _run_program(prog: StrategyProgram, ctx: _VMContext, budget: int) -> tuple[int, int]:
    regs = [0] * prog.n_regs
    arrays: list[dict[int, int]] = [dict() for _ in range(prog.n_arrays)]
    m = ctx.model
    hist = ctx.history
    trans = ctx.trans_list
    instrs = prog.instructions
    pc = 0
    steps = 0
    n = len(instrs)

    def val(opnd):
        return opnd[1] if opnd[0] == "i" else regs[opnd[1]]

    while pc < n:
        if steps >= budget:
            raise BudgetExceeded(budget)
        ins = instrs[pc]
        op = ins.op
        steps += 1
        pc += 1
        try:
            if op == "set":
                regs[ins.dst] = val(ins.args[0])
            elif op == "add":
                regs[ins.dst] = val(ins.args[0]) + val(ins.args[1])
            elif op == "sub":
                regs[ins.dst] = val(ins.args[0]) - val(ins.args[1])
            elif op == "mul":
                regs[ins.dst] = val(ins.args[0]) * val(ins.args[1])
            elif op == "div":
                b = val(ins.args[1])
                if b == 0:
                    raise VMFault("division by zero")
                regs[ins.dst] = val(ins.args[0]) // b
            elif op == "mod":
                b = val(ins.args[1])
                if b == 0:
                    raise VMFault("modulo by zero")
                regs[ins.dst] = val(ins.args[0]) % b
            elif op == "jmp":
                pc = ins.target
            elif op == "beq":
                if val(ins.args[0]) == val(ins.args[1]):
                    pc = ins.target
            elif op == "bne":
                if val(ins.args[0]) != val(ins.args[1]):
                    pc = ins.target
            elif op == "blt":
                if val(ins.args[0]) < val(ins.args[1]):
                    pc = ins.target
            elif op == "ble":
                if val(ins.args[0]) <= val(ins.args[1]):
                    pc = ins.target
            elif op == "bgt":
                if val(ins.args[0]) > val(ins.args[1]):
                    pc = ins.target
            elif op == "bge":
                if val(ins.args[0]) >= val(ins.args[1]):
                    pc = ins.target
            elif op == "aload":
                regs[ins.dst] = arrays[ins.args[0]].get(val(ins.args[1]), 0)
            elif op == "astore":
                arrays[ins.args[0]][val(ins.args[1])] = val(ins.args[2])
            elif op == "emit":
                return val(ins.args[0]), steps
            # -- raw word access
            elif op == "mlen":
                regs[ins.dst] = len(ctx.enc_model)
            elif op == "hlen":
                regs[ins.dst] = len(ctx.enc_history)
            elif op == "msym":
                i = val(ins.args[0])
                regs[ins.dst] = _SYMCODE[ctx.enc_model[i]] if 0 <= i < len(ctx.enc_model) else -1
            elif op == "hsym":
                i = val(ins.args[0])
                regs[ins.dst] = _SYMCODE[ctx.enc_history[i]] if 0 <= i < len(ctx.enc_history) else -1
            # -- parsed views
            elif op == "hcount":
                regs[ins.dst] = len(hist)
            elif op == "hobs":
                t = val(ins.args[0])
                if not (0 <= t < len(hist)):
                    raise VMFault(f"history position {t} out of range")
                regs[ins.dst] = hist[t]
            elif op == "nagents":
                regs[ins.dst] = len(m.agent_names)
            elif op == "nstates":
                regs[ins.dst] = len(m.state_names)
            elif op == "nactions":
                regs[ins.dst] = len(m.action_names)
            elif op == "nprops":
                regs[ins.dst] = len(m.prop_names)
            elif op == "ntrans":
                regs[ins.dst] = len(trans)
            elif op == "initstate":
                regs[ins.dst] = m.initial
            elif op == "param":
                if m.scale_param is None:
                    raise VMFault("model carries no explicit scale parameter")
                regs[ins.dst] = m.scale_param
            elif op == "hasprop":
                p, q = val(ins.args[0]), val(ins.args[1])
                if not (0 <= p < len(m.prop_names)) or not (0 <= q < len(m.state_names)):
                    raise VMFault("hasprop index out of range")
                regs[ins.dst] = 1 if q in m.valuation[p] else 0
            elif op == "repsize":
                a, q = val(ins.args[0]), val(ins.args[1])
                rep = m.repertoire.get((a, q))
                if rep is None:
                    raise VMFault("repsize index out of range")
                regs[ins.dst] = len(rep)
            elif op == "repget":
                a, q, i = (val(x) for x in ins.args)
                rep = m.repertoire.get((a, q))
                if rep is None or not (0 <= i < len(rep)):
                    raise VMFault("repget index out of range")
                regs[ins.dst] = rep[i]
            elif op == "tsrc":
                i = val(ins.args[0])
                if not (0 <= i < len(trans)):
                    raise VMFault("transition index out of range")
                regs[ins.dst] = trans[i][0][0]
            elif op == "tdst":
                i = val(ins.args[0])
                if not (0 <= i < len(trans)):
                    raise VMFault("transition index out of range")
                regs[ins.dst] = trans[i][1]
            elif op == "tact":
                i, a = val(ins.args[0]), val(ins.args[1])
                if not (0 <= i < len(trans)) or not (0 <= a < len(m.agent_names)):
                    raise VMFault("tact index out of range")
                regs[ins.dst] = trans[i][0][1][a]
            elif op == "indist":
                a, q1, q2 = (val(x) for x in ins.args)
                if not (0 <= a < len(m.agent_names)):
                    raise VMFault("indist agent out of range")
                if not (0 <= q1 < len(m.state_names)) or not (0 <= q2 < len(m.state_names)):
                    raise VMFault("indist state out of range")
                regs[ins.dst] = 1 if m._class_of[a][q1] is m._class_of[a][q2] else 0
            elif op == "succ":
                q = val(ins.args[0])
                joint_arr = arrays[ins.args[1]]
                joint = tuple(joint_arr.get(i, 0) for i in range(len(m.agent_names)))
                dst = m.transitions.get((q, joint))
                if dst is None:
                    raise VMFault(f"no transition from {q} under {joint}")
                regs[ins.dst] = dst
            else:  # pragma: no cover - parser rejects unknown ops
                raise VMFault(f"unknown opcode {op}")
        except VMFault:
            raise
        except (IndexError, KeyError, TypeError) as exc:
            raise VMFault(str(exc)) from None
    raise VMFault("program ended without emit")


# ---------------------------------------------------------------------------
# Unified runner
# ---------------------------------------------------------------------------


def run(
    machine,
    enc_model: TapeWord,
    enc_history: TapeWord,
    budget: int,
    agent: AgentId | None = None,
    model: Model | None = None,
) -> RunResult:
    """Execute a strategy machine on encoded inputs.

    ``model`` may pass the already-parsed structure matching ``enc_model`` to
    skip re-decoding; behaviour is identical. When ``agent`` is given, the
    emitted action is checked against that agent's repertoire at the last
    observation of the history (the initial state's class for an empty
    history), raising :class:`IllegalAction` on violation.
    """
    if budget <= 0:
        raise ValueError("budget must be positive")
    if model is None:
        model = decode_model(enc_model)

    if isinstance(machine, TapeMachine):
        out, steps = _run_tape_machine(machine, enc_model, enc_history, budget)
        action = _decode_action(out, machine.name)
        result = RunResult(action=action, steps=steps, output=out)
    elif isinstance(machine, StrategyProgram):
        ctx = _VMContext(model, enc_model, enc_history)
        try:
            action, steps = _run_program(machine, ctx, budget)
        except VMFault as exc:
            raise MalformedOutput(f"{machine.name}: {exc}") from None
        result = RunResult(action=action, steps=steps, output=encode_index(action) if action >= 0 else "")
    else:
        raise TypeError(f"not a strategy machine: {machine!r}")

    if not (0 <= result.action < len(model.action_names)):
        raise MalformedOutput(
            f"{machine.name}: output {result.output!r} decodes to no action of the model"
        )
    if agent is not None:
        hist = decode_history(enc_history)
        anchor = hist[-1] if hist else observation_of(model, agent, model.initial).canonical
        if result.action not in model.rep(agent, anchor):
            raise IllegalAction(
                f"{machine.name}: action {model.action_names[result.action]} outside repertoire "
                f"of {model.agent_names[agent]} at {model.state_names[anchor]}"
            )
    return result


def _decode_action(out: str, name: str) -> int:
    if not out or any(c not in "01" for c in out) or (len(out) > 1 and out[0] == "0"):
        raise MalformedOutput(f"{name}: output word {out!r} is not a canonical binary index")
    return int(out, 2)


@dataclass(frozen=True)
class GeneralStrategy:
    """One machine per coalition agent, applicable to any model."""

    coalition: Coalition
    machines: dict
    name: str = "strategy"

    def __post_init__(self):
        missing = [a for a in self.coalition if a not in self.machines]
        extra = [a for a in self.machines if a not in self.coalition]
        if missing or extra:
            raise ValueError("machines must cover exactly the coalition agents")


class ComputationalStrategy:
    """A general strategy machine with tape 1 fixed to one model's encoding."""

    def __init__(self, machine, agent: AgentId, m: Model, enc_model: TapeWord | None = None):
        if agent not in m.agents:
            raise ValueError(f"unknown agent {agent}")
        self.machine = machine
        self.agent = agent
        self.model = m
        self.enc_model = enc_model if enc_model is not None else encode_model(m)

    def run_word(self, enc_history: TapeWord, budget: int, check_repertoire: bool = True) -> RunResult:
        return run(
            self.machine,
            self.enc_model,
            enc_history,
            budget,
            agent=self.agent if check_repertoire else None,
            model=self.model,
        )

    def decide(self, obs: list[Observation], budget: int) -> RunResult:
        return self.run_word(encode_history(self.model, self.agent, obs), budget)


def instantiate(gs: GeneralStrategy, m: Model) -> dict[AgentId, ComputationalStrategy]:
    """Fix tape 1 to ``encode_model(m)`` for every machine of the strategy."""
    for a in gs.coalition:
        if a not in m.agents:
            raise ValueError(f"unknown agent {a}")
    enc = encode_model(m)
    return {a: ComputationalStrategy(gs.machines[a], a, m, enc) for a in gs.coalition}


def measure_steps(gs: GeneralStrategy, m: Model, histories, budget: int) -> dict:
    """Worst observed steps per (|enc(M)|, |enc(history)|) bucket.

    ``histories`` is a list of state sequences; each agent of the coalition
    sees its own observation sequence of the same play. Collective cost per
    bucket is the max over member agents, an empirical lower bound on the
    pessimistic complexity. Run errors are recorded, not raised.
    """
    strategies = instantiate(gs, m)
    n = len(strategies[next(iter(gs.coalition))].enc_model)
    buckets: dict[tuple[int, int], int] = {}
    errors: list[tuple] = []
    for states in histories:
        for a in gs.coalition:
            obs = [observation_of(m, a, q) for q in states]
            word = encode_history(m, a, obs)
            try:
                res = strategies[a].run_word(word, budget)
            except MachineError as exc:
                errors.append((a, tuple(states), exc))
                continue
            key = (n, len(word))
            buckets[key] = max(buckets.get(key, 0), res.steps)
    return {"buckets": buckets, "errors": errors}
