"""Strategy synthesis for the decidable fragments.

Single-agent synthesis under imperfect information goes through the classical
knowledge-subset construction: a perfect-information two-player game whose
protagonist nodes are the sets of states the agent considers possible. Sure
reachability is solved by attractor iteration, sure safety by a greatest
fixpoint; both yield canonical memoryless strategies (smallest-action
tie-break) that compile to strategy-VM programs replaying the observation
history in time linear in its length.

Counter-extended models expand to explicit finite models by capping every
counter, and family-level verdicts for the capped hierarchy reduce to the
tightest cap.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from .ltl import Formula
from .machine import StrategyProgram, parse_program
from .model import AgentId, Model, StateId
from .outcome import classify_fragment, eval_state_predicate

KnowledgeSet = tuple  # sorted tuple of StateId


@dataclass
class KnowledgeGame:
    """Perfect-information two-player split of one agent's view.

    Protagonist nodes are knowledge sets (nonempty, inside one observation
    class). From (K, action) the antagonist resolves the opponents' joint
    actions and the successor observation: the successor knowledge set is the
    image of K under the chosen action and all opponent joints, split by the
    protagonist's observation classes.
    """

    model: Model
    agent: AgentId
    nodes: list  # KnowledgeSet, discovery (BFS) order
    node_index: dict
    actions_at: dict  # KnowledgeSet -> tuple of ActionId
    successors: dict  # (KnowledgeSet, ActionId) -> tuple of KnowledgeSet
    initial: KnowledgeSet


def knowledge_game(m: Model, agent: AgentId) -> KnowledgeGame:
    if agent not in m.agents:
        raise ValueError(f"unknown agent {agent}")
    opponents = tuple(a for a in m.agents if a != agent)

    def split_by_observation(states) -> list[KnowledgeSet]:
        groups: dict[StateId, set] = {}
        for q in states:
            canon = m._class_of[agent][q][0]
            groups.setdefault(canon, set()).add(q)
        return [tuple(sorted(groups[c])) for c in sorted(groups)]

    initial = (m.initial,)
    nodes = [initial]
    node_index = {initial: 0}
    actions_at = {}
    successors = {}
    queue = [initial]
    while queue:
        K = queue.pop(0)
        acts = m.rep(agent, K[0])
        if any(m.rep(agent, q) != acts for q in K):
            raise ValueError("knowledge set spans states with differing repertoires")
        actions_at[K] = acts
        for act in acts:
            image = set()
            for q in K:
                for opp_joint in itertools.product(*(m.rep(a, q) for a in opponents)):
                    full = [0] * len(m.agent_names)
                    full[agent] = act
                    for a, oa in zip(opponents, opp_joint):
                        full[a] = oa
                    image.add(m.transitions[(q, tuple(full))])
            succs = split_by_observation(image)
            successors[(K, act)] = tuple(succs)
            for K2 in succs:
                if K2 not in node_index:
                    node_index[K2] = len(nodes)
                    nodes.append(K2)
                    queue.append(K2)
    return KnowledgeGame(
        model=m,
        agent=agent,
        nodes=nodes,
        node_index=node_index,
        actions_at=actions_at,
        successors=successors,
        initial=initial,
    )


def lift_state_predicate(m: Model, pred: Formula):
    """Universal lift: a knowledge node satisfies the predicate only when
    every member state does (sure satisfaction under imperfect information)."""

    def lifted(K: KnowledgeSet) -> bool:
        return all(eval_state_predicate(m, pred, q) for q in K)

    return lifted


@dataclass
class SynthesisResult:
    winning: bool
    strategy: dict | None  # KnowledgeSet -> ActionId, present iff winning
    region: set
    game: KnowledgeGame
    objective: str = ""
    ranks: dict = field(default_factory=dict)
    region_strategy: dict = field(default_factory=dict)  # always defined on the region


def solve_reachability(game: KnowledgeGame, target) -> SynthesisResult:
    """Classical attractor to the target nodes.

    A protagonist node wins if some action sends every antagonist resolution
    into the attractor; the memoryless strategy picks, at entry, the smallest
    such action, so synthesized strategies are canonical and rank-decreasing.
    """
    region: set = set()
    ranks: dict = {}
    strategy: dict = {}
    frontier = [K for K in game.nodes if target(K)]
    for K in frontier:
        region.add(K)
        ranks[K] = 0
        strategy[K] = game.actions_at[K][0]
    rank = 0
    changed = True
    while changed:
        changed = False
        rank += 1
        added = []
        for K in game.nodes:
            if K in region:
                continue
            for act in game.actions_at[K]:
                if all(K2 in region for K2 in game.successors[(K, act)]):
                    added.append((K, act))
                    break
        for K, act in added:
            region.add(K)
            ranks[K] = rank
            strategy[K] = act
            changed = True
    winning = game.initial in region
    return SynthesisResult(
        winning=winning,
        strategy=strategy if winning else None,
        region=region,
        game=game,
        objective="reachability",
        ranks=ranks,
        region_strategy=strategy,
    )


def solve_safety(game: KnowledgeGame, safe) -> SynthesisResult:
    """Greatest fixpoint of the controllable predecessors inside the safe set."""
    region = {K for K in game.nodes if safe(K)}
    changed = True
    while changed:
        changed = False
        for K in list(region):
            if not any(
                all(K2 in region for K2 in game.successors[(K, act)])
                for act in game.actions_at[K]
            ):
                region.discard(K)
                changed = True
    strategy = {}
    for K in region:
        for act in game.actions_at[K]:
            if all(K2 in region for K2 in game.successors[(K, act)]):
                strategy[K] = act
                break
    winning = game.initial in region
    return SynthesisResult(
        winning=winning,
        strategy=strategy if winning else None,
        region=region,
        game=game,
        objective="safety",
        region_strategy=strategy,
    )


def synthesize(m: Model, agent: AgentId, f: Formula) -> SynthesisResult:
    """Fragment dispatch: F pred via attractor, G pred via safety fixpoint,
    bare predicates as zero-step reachability."""
    kind, pred = classify_fragment(f)
    game = knowledge_game(m, agent)
    lifted = lift_state_predicate(m, pred)
    if kind in ("F", "now"):
        return solve_reachability(game, lifted)
    return solve_safety(game, lifted)


# ---------------------------------------------------------------------------
# Compilation to a strategy-VM program
# ---------------------------------------------------------------------------


def compile_knowledge_strategy(m: Model, agent: AgentId, sr: SynthesisResult) -> StrategyProgram:
    """Emit a program that replays the observation history once.

    The program tracks the current knowledge set online against the model on
    tape 1 (one sweep over the transition table per observation) and emits
    the synthesized action at the final set, hence runs in time linear in the
    history length for a fixed model. Off-strategy histories fall back to the
    first action available at the observed class, keeping the machine total.
    """
    if not sr.winning or sr.strategy is None:
        raise ValueError("cannot compile a non-winning synthesis result")
    n_states = len(m.state_names)

    entries = sorted(
        (sum(1 << q for q in K), act) for K, act in sr.strategy.items()
    )
    lines = [f"set agent, {agent}", f"set NTBL, {len(entries)}"]
    for idx, (mask, act) in enumerate(entries):
        lines.append(f"astore tmask, {idx}, {mask}")
        lines.append(f"astore tact, {idx}, {act}")
    lines += [
        "nstates NS",
        "hcount hc",
        "initstate cq",
        "astore kf, cq, 1",
        "ntrans NT",
        "set t, 1",
        "mainloop:",
        "bge t, hc, replay_done",
    ]
    lines += _emit_mask("a")
    lines += _emit_lookup("a", anchor=["sub pv, t, 1", "hobs anch, pv"])
    lines += [
        "hobs ob, t",
        "set q, 0",
        "clear:",
        "bge q, NS, cleared",
        "astore nk, q, 0",
        "add q, q, 1",
        "jmp clear",
        "cleared:",
        "set e, 0",
        "eloop:",
        "bge e, NT, edone",
        "tsrc src, e",
        "aload f1, kf, src",
        "beq f1, 0, enext",
        "tact ea, e, agent",
        "bne ea, act, enext",
        "tdst dd, e",
        "indist ii, agent, dd, ob",
        "beq ii, 0, enext",
        "astore nk, dd, 1",
        "enext:",
        "add e, e, 1",
        "jmp eloop",
        "edone:",
        "set q, 0",
        "copy:",
        "bge q, NS, copied",
        "aload f1, nk, q",
        "astore kf, q, f1",
        "add q, q, 1",
        "jmp copy",
        "copied:",
        "add t, t, 1",
        "jmp mainloop",
        "replay_done:",
    ]
    lines += _emit_mask("b")
    lines += _emit_lookup(
        "b",
        anchor=[
            "set anch, cq",
            "beq hc, 0, anchored_b",
            "sub pv, hc, 1",
            "hobs anch, pv",
            "anchored_b:",
        ],
    )
    lines.append("emit act")
    return parse_program("\n".join(lines), name=f"knowledge_{m.meta.get('template', 'model')}_{agent}")


def _emit_mask(suffix: str) -> list[str]:
    return [
        "set mreg, 0",
        "set q, NS",
        f"mask_{suffix}:",
        f"beq q, 0, maskdone_{suffix}",
        "sub q, q, 1",
        "mul mreg, mreg, 2",
        "aload f1, kf, q",
        "add mreg, mreg, f1",
        f"jmp mask_{suffix}",
        f"maskdone_{suffix}:",
    ]


def _emit_lookup(suffix: str, anchor: list[str]) -> list[str]:
    return [
        "set li, 0",
        f"lk_{suffix}:",
        f"bge li, NTBL, lkfail_{suffix}",
        "aload lm, tmask, li",
        f"beq lm, mreg, lkhit_{suffix}",
        "add li, li, 1",
        f"jmp lk_{suffix}",
        f"lkhit_{suffix}:",
        "aload act, tact, li",
        f"jmp lkdone_{suffix}",
        f"lkfail_{suffix}:",
        *anchor,
        "repget act, agent, anch, 0",
        f"lkdone_{suffix}:",
    ]


# ---------------------------------------------------------------------------
# Counter-extended models
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CounterTransition:
    state: int
    joint: tuple
    guard: tuple  # DNF: tuple of conjunctions, each a tuple of counter ids; () = true
    updates: tuple  # (counter id, +1 | -1), each counter at most once
    successor: int


@dataclass
class CounterModel:
    """Game skeleton whose transitions carry counter guards and updates.

    Guards are positive boolean combinations of "counter > 0" atoms, stored
    in disjunctive normal form; the empty DNF means unconditionally enabled.
    """

    agent_names: tuple
    state_names: tuple
    initial: int
    prop_names: tuple
    valuation: dict
    action_names: tuple
    repertoire: dict
    n_counters: int
    transitions: tuple  # CounterTransition, declaration order matters
    indist: tuple = ()  # per agent, classes of base states; () = identity

    def __post_init__(self):
        for t in self.transitions:
            seen = set()
            for c, delta in t.updates:
                if c in seen:
                    raise ValueError("an update may touch each counter at most once")
                if delta not in (1, -1):
                    raise ValueError("updates are ++ or -- only")
                seen.add(c)
            for conj in t.guard:
                for c in conj:
                    if not (0 <= c < self.n_counters):
                        raise ValueError(f"guard mentions unknown counter {c}")


def _guard_holds(guard: tuple, values: tuple) -> bool:
    if not guard:
        return True
    return any(all(values[c] > 0 for c in conj) for conj in guard)


def expand_counter_model(cm: CounterModel, n0: int, k: int) -> Model:
    """Explicit model over (state, counter vector) with counters capped.

    Increments saturate at the cap; an entry whose guard fails, or that would
    take a counter below zero, is disabled; the first enabled entry for a
    (state, joint) fires; a joint with no enabled entry self-loops on its
    configuration.
    """
    if n0 < 0 or k < 0:
        raise ValueError("bounds must be nonnegative")
    cap = n0 + k
    n = cm.n_counters
    vectors = list(itertools.product(range(cap + 1), repeat=n))
    index = {}
    state_names = []
    for q, qname in enumerate(cm.state_names):
        for vec in vectors:
            index[(q, vec)] = len(state_names)
            state_names.append(qname + ("" if n == 0 else "[" + ",".join(map(str, vec)) + "]"))

    by_key: dict = {}
    for t in cm.transitions:
        by_key.setdefault((t.state, t.joint), []).append(t)

    transitions = {}
    repertoire = {}
    valuation = {p: set() for p in range(len(cm.prop_names))}
    for q in range(len(cm.state_names)):
        for vec in vectors:
            cfg = index[(q, vec)]
            for p in range(len(cm.prop_names)):
                if q in cm.valuation.get(p, ()):
                    valuation[p].add(cfg)
            for a in range(len(cm.agent_names)):
                repertoire[(a, cfg)] = cm.repertoire[(a, q)]
            for joint in itertools.product(*(cm.repertoire[(a, q)] for a in range(len(cm.agent_names)))):
                fired = None
                for t in by_key.get((q, joint), ()):
                    if not _guard_holds(t.guard, vec):
                        continue
                    if any(delta < 0 and vec[c] == 0 for c, delta in t.updates):
                        continue
                    fired = t
                    break
                if fired is None:
                    transitions[(cfg, joint)] = cfg
                else:
                    new_vec = list(vec)
                    for c, delta in fired.updates:
                        new_vec[c] = min(new_vec[c] + delta, cap) if delta > 0 else new_vec[c] - 1
                    transitions[(cfg, joint)] = index[(fired.successor, tuple(new_vec))]

    # counters are observable: configurations are indistinguishable exactly
    # when their base states are and their counter vectors agree
    indist = []
    for a in range(len(cm.agent_names)):
        classes = []
        base_classes = cm.indist[a] if a < len(cm.indist) else ()
        for cls in base_classes:
            if len(cls) < 2:
                continue
            for vec in vectors:
                classes.append(tuple(index[(q, vec)] for q in cls))
        indist.append(tuple(classes))
    indist = tuple(indist)
    zero_init = index[(cm.initial, tuple([0] * n))]
    return Model(
        agent_names=cm.agent_names,
        state_names=tuple(state_names),
        initial=zero_init,
        prop_names=cm.prop_names,
        valuation=valuation,
        action_names=cm.action_names,
        repertoire=repertoire,
        transitions=transitions,
        indist=indist,
        scale_param=k,
        meta={"template": "counter", "n0": n0, "k": k},
    )


# -- textual counter-model format -----------------------------------------
#
#   agents: ctrl            counters: 2
#   states: s0 s1           rep ctrl s0: inc go
#   init: s0                ctrans s0 inc [] {++c0} -> s0
#   actions: inc go         ctrans s0 go [c0>0 & c1>0 | c0>0] {--c0} -> s1
#   props: win
#   label win: s1
#
# Guards are positive DNF over counter>0 atoms, [] meaning true; updates are
# comma-separated ++cN / --cN inside braces.


def serialize_counter_model(cm: CounterModel) -> str:
    lines = [
        "agents: " + " ".join(cm.agent_names),
        "states: " + " ".join(cm.state_names),
        "init: " + cm.state_names[cm.initial],
        "actions: " + " ".join(cm.action_names),
        "props: " + " ".join(cm.prop_names),
    ]
    for p, name in enumerate(cm.prop_names):
        members = sorted(cm.valuation.get(p, ()))
        if members:
            lines.append(f"label {name}: " + " ".join(cm.state_names[q] for q in members))
    lines.append(f"counters: {cm.n_counters}")
    for a, agent in enumerate(cm.agent_names):
        for q, state in enumerate(cm.state_names):
            acts = cm.repertoire[(a, q)]
            lines.append(f"rep {agent} {state}: " + " ".join(cm.action_names[x] for x in acts))
    for t in cm.transitions:
        guard = " | ".join(" & ".join(f"c{c}>0" for c in conj) for conj in t.guard)
        ups = ", ".join(("++" if d > 0 else "--") + f"c{c}" for c, d in t.updates)
        lines.append(
            f"ctrans {cm.state_names[t.state]} "
            + " ".join(cm.action_names[x] for x in t.joint)
            + f" [{guard}] {{{ups}}} -> {cm.state_names[t.successor]}"
        )
    return "\n".join(lines) + "\n"


def parse_counter_model(text: str) -> CounterModel:
    import re

    agents = states = actions = props = None
    init_name = None
    labels: dict[str, list[str]] = {}
    reps: dict[tuple[str, str], list[str]] = {}
    n_counters = 0
    raw_trans: list[tuple[int, str]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("agents:"):
            agents = line.split(":", 1)[1].split()
        elif line.startswith("states:"):
            states = line.split(":", 1)[1].split()
        elif line.startswith("init:"):
            init_name = line.split(":", 1)[1].strip()
        elif line.startswith("actions:"):
            actions = line.split(":", 1)[1].split()
        elif line.startswith("props:"):
            props = line.split(":", 1)[1].split()
        elif line.startswith("label "):
            head, _, rest = line.partition(":")
            labels[head.split()[1]] = rest.split()
        elif line.startswith("counters:"):
            n_counters = int(line.split(":", 1)[1])
        elif line.startswith("rep "):
            head, _, rest = line.partition(":")
            _, agent, state = head.split()
            reps[(agent, state)] = rest.split()
        elif line.startswith("ctrans "):
            raw_trans.append((lineno, line))
        else:
            raise ValueError(f"line {lineno}: unrecognized line {line!r}")
    for name, value in (("agents", agents), ("states", states), ("actions", actions), ("init", init_name)):
        if value is None:
            raise ValueError(f"missing required section {name!r}")
    props = props or []
    s_idx = {n: i for i, n in enumerate(states)}
    act_idx = {n: i for i, n in enumerate(actions)}
    p_idx = {n: i for i, n in enumerate(props)}

    pattern = re.compile(r"^ctrans\s+(\S+)\s+(.*?)\s*\[(.*?)\]\s*\{(.*?)\}\s*->\s*(\S+)$")
    transitions = []
    for lineno, line in raw_trans:
        mt = pattern.match(line)
        if not mt:
            raise ValueError(f"line {lineno}: malformed ctrans line")
        src, joint_text, guard_text, ups_text, dst = mt.groups()
        joint = tuple(act_idx[x] for x in joint_text.split())
        guard = []
        if guard_text.strip():
            for conj in guard_text.split("|"):
                atoms = []
                for atom in conj.split("&"):
                    am = re.fullmatch(r"\s*c(\d+)\s*>\s*0\s*", atom)
                    if not am:
                        raise ValueError(f"line {lineno}: bad guard atom {atom!r}")
                    atoms.append(int(am.group(1)))
                guard.append(tuple(sorted(atoms)))
        updates = []
        if ups_text.strip():
            for up in ups_text.split(","):
                um = re.fullmatch(r"\s*(\+\+|--)c(\d+)\s*", up)
                if not um:
                    raise ValueError(f"line {lineno}: bad update {up!r}")
                updates.append((int(um.group(2)), 1 if um.group(1) == "++" else -1))
        transitions.append(
            CounterTransition(s_idx[src], joint, tuple(guard), tuple(updates), s_idx[dst])
        )
    return CounterModel(
        agent_names=tuple(agents),
        state_names=tuple(states),
        initial=s_idx[init_name],
        prop_names=tuple(props),
        valuation={p_idx[n]: {s_idx[s] for s in members} for n, members in labels.items()},
        action_names=tuple(actions),
        repertoire={
            (agents.index(a), s_idx[s]): tuple(act_idx[x] for x in acts)
            for (a, s), acts in reps.items()
        },
        n_counters=n_counters,
        transitions=tuple(transitions),
    )


@dataclass
class EnergyVerdict:
    winning: bool
    n0: int
    result: SynthesisResult
    note: str


def energy_reduce_check(cm: CounterModel, n0: int, agent: AgentId, f: Formula) -> EnergyVerdict:
    """Family-level verdict for every cap n0+k, decided at the tightest cap.

    Any transition sequence feasible under the tight cap stays feasible under
    looser ones, so the k=0 verdict is declared for the whole family.
    """
    kind, _pred = classify_fragment(f)  # fragment gate; raises outside it
    m0 = expand_counter_model(cm, n0, 0)
    result = synthesize(m0, agent, f)
    return EnergyVerdict(
        winning=result.winning,
        n0=n0,
        result=result,
        note=f"decided on the cap-{n0} expansion; declared for every larger cap",
    )
