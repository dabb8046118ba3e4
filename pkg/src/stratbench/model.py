"""Finite imperfect-information concurrent game structures.

A game structure is a finite multi-agent arena with synchronous joint moves:
every agent simultaneously picks an action from its per-state repertoire, a
deterministic transition function resolves the joint choice, and each agent
observes the current state only up to its indistinguishability relation.
Agents, states, actions and propositions are dense integer indices into name
registries, so all orderings reduce to numeric index order.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

AgentId = int
StateId = int
ActionId = int
Proposition = int

JointAction = tuple  # one ActionId per agent, in agent order


@dataclass(frozen=True)
class Observation:
    """One equivalence class of an agent's indistinguishability relation.

    The class is identified by its minimal member (``canonical``), which is
    what strategy machines get to see.
    """

    agent: AgentId
    canonical: StateId
    members: frozenset[StateId]


@dataclass(frozen=True)
class Coalition:
    """Nonempty set of agents acting together, stored sorted."""

    agents: tuple[AgentId, ...]

    def __init__(self, agents):
        agents = tuple(sorted(set(agents)))
        if not agents:
            raise ValueError("coalition must be nonempty")
        object.__setattr__(self, "agents", agents)

    def __contains__(self, a: AgentId) -> bool:
        return a in self.agents

    def __iter__(self):
        return iter(self.agents)


@dataclass(frozen=True)
class Diagnostic:
    """A single validation finding: which invariant broke, and where."""

    code: str
    message: str

    def __str__(self):  # pragma: no cover - cosmetic
        return f"[{self.code}] {self.message}"


class Model:
    """Explicit finite game structure.

    Construction arguments name everything; indices are positions in the
    registries. ``transitions`` maps (state, joint action tuple) -> state and
    must be total over the product of per-agent repertoires at each state.
    ``indist`` gives, per agent, the partition of states into observation
    classes; singleton classes may be omitted. Instances are treated as
    immutable after construction.
    """

    def __init__(
        self,
        agent_names,
        state_names,
        initial: StateId,
        prop_names,
        valuation,
        action_names,
        repertoire,
        transitions,
        indist,
        scale_param: int | None = None,
        meta: dict | None = None,
    ):
        self.agent_names = tuple(agent_names)
        self.state_names = tuple(state_names)
        self.initial = initial
        self.prop_names = tuple(prop_names)
        # valuation: prop -> frozenset of states
        self.valuation = tuple(frozenset(valuation.get(p, ())) for p in range(len(self.prop_names)))
        self.action_names = tuple(action_names)
        # repertoire[(a, q)] -> sorted tuple of actions
        self.repertoire = {
            (a, q): tuple(sorted(repertoire[(a, q)]))
            for a in range(len(self.agent_names))
            for q in range(len(self.state_names))
            if (a, q) in repertoire
        }
        self.transitions = dict(transitions)
        self.indist = self._normalize_indist(indist)
        self.scale_param = scale_param
        self.meta = dict(meta or {})
        # class_of[a][q] -> sorted tuple of the class members
        self._class_of: list[dict[StateId, tuple[StateId, ...]]] = []
        for a in range(len(self.agent_names)):
            lookup: dict[StateId, tuple[StateId, ...]] = {}
            for cls in self.indist[a]:
                for q in cls:
                    lookup[q] = cls
            self._class_of.append(lookup)

    def _normalize_indist(self, indist) -> tuple[tuple[tuple[StateId, ...], ...], ...]:
        n_states = len(self.state_names)
        out = []
        for a in range(len(self.agent_names)):
            classes = [tuple(sorted(set(c))) for c in (indist[a] if a < len(indist) else [])]
            covered = set(itertools.chain.from_iterable(classes))
            classes += [(q,) for q in range(n_states) if q not in covered]
            out.append(tuple(sorted(classes, key=lambda c: c[0] if c else -1)))
        return tuple(out)

    # -- basic accessors -------------------------------------------------

    @property
    def agents(self) -> range:
        return range(len(self.agent_names))

    @property
    def states(self) -> range:
        return range(len(self.state_names))

    @property
    def actions(self) -> range:
        return range(len(self.action_names))

    @property
    def propositions(self) -> range:
        return range(len(self.prop_names))

    def rep(self, a: AgentId, q: StateId) -> tuple[ActionId, ...]:
        return self.repertoire.get((a, q), ())

    def state_index(self, name: str) -> StateId:
        return self.state_names.index(name)

    def agent_index(self, name: str) -> AgentId:
        return self.agent_names.index(name)

    def action_index(self, name: str) -> ActionId:
        return self.action_names.index(name)

    def prop_index(self, name: str) -> Proposition:
        return self.prop_names.index(name)

    def labels_of(self, q: StateId) -> frozenset[Proposition]:
        return frozenset(p for p in self.propositions if q in self.valuation[p])

    def __eq__(self, other):
        if not isinstance(other, Model):
            return NotImplemented
        return (
            self.agent_names == other.agent_names
            and self.state_names == other.state_names
            and self.initial == other.initial
            and self.prop_names == other.prop_names
            and self.valuation == other.valuation
            and self.action_names == other.action_names
            and self.repertoire == other.repertoire
            and self.transitions == other.transitions
            and self.indist == other.indist
            and self.scale_param == other.scale_param
        )

    def __hash__(self):  # identity hashing; structural equality is explicit
        return id(self)


# -- operations ----------------------------------------------------------


def validate_model(m: Model) -> list[Diagnostic]:
    """Check every structural invariant; empty list means the model is valid."""
    diags: list[Diagnostic] = []
    n_agents, n_states = len(m.agent_names), len(m.state_names)

    if n_agents == 0:
        diags.append(Diagnostic("no-agents", "model has no agents"))
    if n_states == 0:
        diags.append(Diagnostic("no-states", "model has no states"))
        return diags
    if len(m.action_names) == 0:
        diags.append(Diagnostic("no-actions", "model has no actions"))
    if not (0 <= m.initial < n_states):
        diags.append(Diagnostic("bad-initial", f"initial state {m.initial} out of range"))
    for names, what in (
        (m.agent_names, "agent"),
        (m.state_names, "state"),
        (m.action_names, "action"),
        (m.prop_names, "proposition"),
    ):
        if len(set(names)) != len(names):
            diags.append(Diagnostic("dup-names", f"duplicate {what} names"))

    for p in m.propositions:
        for q in m.valuation[p]:
            if not (0 <= q < n_states):
                diags.append(
                    Diagnostic("bad-valuation", f"proposition {m.prop_names[p]} labels unknown state {q}")
                )

    for a in m.agents:
        for q in m.states:
            rep = m.rep(a, q)
            if not rep:
                diags.append(
                    Diagnostic(
                        "empty-repertoire",
                        f"agent {m.agent_names[a]} has no actions at state {m.state_names[q]}",
                    )
                )
            for act in rep:
                if not (0 <= act < len(m.action_names)):
                    diags.append(
                        Diagnostic(
                            "bad-action",
                            f"agent {m.agent_names[a]} at {m.state_names[q]} lists unknown action {act}",
                        )
                    )

    # transition totality and closure
    seen = set()
    for q in m.states:
        for joint in itertools.product(*(m.rep(a, q) for a in m.agents)):
            seen.add((q, joint))
            if (q, joint) not in m.transitions:
                diags.append(
                    Diagnostic(
                        "missing-transition",
                        f"no successor for state {m.state_names[q]} under joint {joint}",
                    )
                )
    for (q, joint), q2 in m.transitions.items():
        if (q, joint) not in seen:
            diags.append(
                Diagnostic(
                    "spurious-transition",
                    f"transition from {q} under {joint} not in the joint repertoire",
                )
            )
        if not (0 <= q2 < n_states):
            diags.append(Diagnostic("bad-successor", f"transition from {q} leads to unknown state {q2}"))

    # indistinguishability: true partition plus uniformity
    for a in m.agents:
        covered: list[StateId] = []
        for cls in m.indist[a]:
            covered.extend(cls)
            reps = {m.rep(a, q) for q in cls if 0 <= q < n_states}
            if len(reps) > 1:
                diags.append(
                    Diagnostic(
                        "uniformity",
                        f"agent {m.agent_names[a]} has differing repertoires on the class "
                        f"{{{', '.join(m.state_names[q] for q in cls)}}}",
                    )
                )
        if sorted(covered) != list(range(n_states)):
            diags.append(
                Diagnostic(
                    "bad-partition",
                    f"observation classes of agent {m.agent_names[a]} do not partition the states",
                )
            )
    return diags


def observation_of(m: Model, a: AgentId, q: StateId) -> Observation:
    """The observation class of state ``q`` for agent ``a``."""
    if a not in m.agents:
        raise ValueError(f"unknown agent {a}")
    if q not in m.states:
        raise ValueError(f"unknown state {q}")
    members = m._class_of[a][q]
    return Observation(agent=a, canonical=members[0], members=frozenset(members))


def joint_repertoire(m: Model, coalition: Coalition, q: StateId) -> list[JointAction]:
    """All joint actions of the coalition at ``q``, in lexicographic order."""
    if q not in m.states:
        raise ValueError(f"unknown state {q}")
    for a in coalition:
        if a not in m.agents:
            raise ValueError(f"unknown agent {a}")
    return list(itertools.product(*(m.rep(a, q) for a in coalition)))


def successor(m: Model, q: StateId, joint: JointAction) -> StateId:
    """Resolve a full joint action; the joint must be inside every repertoire."""
    if q not in m.states:
        raise ValueError(f"unknown state {q}")
    if len(joint) != len(m.agent_names):
        raise ValueError(f"joint action needs {len(m.agent_names)} entries, got {len(joint)}")
    for a, act in enumerate(joint):
        if act not in m.rep(a, q):
            raise ValueError(
                f"action {act} not in repertoire of agent {m.agent_names[a]} at {m.state_names[q]}"
            )
    return m.transitions[(q, tuple(joint))]


def abstract_size(m: Model) -> int:
    """States + transition entries + nontrivial unordered indistinguishability pairs."""
    pairs = 0
    for a in m.agents:
        for cls in m.indist[a]:
            k = len(cls)
            pairs += k * (k - 1) // 2
    return len(m.state_names) + len(m.transitions) + pairs
