"""Outcome-set computation and enforcement checking.

For machine strategies the artifact explores the outcome tree breadth-first
to a depth bound: the coalition's actions come from running its machines on
each agent's encoded observation history, adversaries branch over their full
joint repertoires. Pure self-loop sinks are closed into lassos, which makes
verdicts exact on terminal-phase games; everything else gets the weak
three-valued verdict on the explored prefix. Finite-memory strategies get
exact reachability/safety verdicts instead, via an explicit product.
"""

from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass, field

from . import ltl
from .ltl import Formula, LassoPath, Verdict3, eval_bounded, eval_lasso
from .machine import ComputationalStrategy, GeneralStrategy, MachineError, instantiate
from .model import Coalition, Model, StateId, observation_of


class UnsupportedObjective(ValueError):
    """Raised by the exact checker outside its safety/reachability fragment;
    use the bounded checker for general objectives."""


def default_depth(m: Model) -> int:
    return 2 * len(m.state_names) + 2


def is_absorbing(m: Model, q: StateId) -> bool:
    """True when every available joint action loops on the state itself."""
    reps = [m.rep(a, q) for a in m.agents]
    return all(m.transitions[(q, joint)] == q for joint in itertools.product(*reps))


@dataclass
class OutcomeNode:
    state: StateId
    depth: int
    histories: dict  # coalition agent -> tuple of Observation
    parent: "OutcomeNode | None" = None
    children: list = field(default_factory=list)
    kind: str = "inner"  # inner | frontier | absorbing | error
    error: str | None = None

    def path_states(self) -> list[StateId]:
        states = []
        node = self
        while node is not None:
            states.append(node.state)
            node = node.parent
        return states[::-1]


@dataclass
class OutcomeTree:
    model: Model
    coalition: Coalition
    root: OutcomeNode
    depth: int
    node_count: int

    def leaves(self) -> list[OutcomeNode]:
        out = []
        stack = [self.root]
        while stack:
            node = stack.pop()
            if node.children:
                stack.extend(reversed(node.children))
            else:
                out.append(node)
        return out

    def paths(self):
        """(states, kind, error) per maximal tree path, in branch order."""
        return [(leaf.path_states(), leaf.kind, leaf.error) for leaf in self.leaves()]


def simulate_outcomes(
    m: Model,
    coalition: Coalition,
    strategies: dict,
    depth: int,
    budget: int,
) -> OutcomeTree:
    """Breadth-first outcome tree of the coalition's machines.

    ``strategies`` maps each coalition agent to its machine (instantiated
    lazily here). Adversary branching enumerates the joint repertoire of the
    complement in lexicographic order; machine failures mark their node and
    stop that branch.
    """
    if depth < 1:
        raise ValueError("depth must be >= 1")
    if set(strategies) != set(coalition.agents):
        raise ValueError("strategies must cover exactly the coalition")

    compiled: dict[int, ComputationalStrategy] = {}
    for a, machine in strategies.items():
        if isinstance(machine, ComputationalStrategy):
            compiled[a] = machine
        else:
            gs = GeneralStrategy(Coalition([a]), {a: machine})
            compiled[a] = instantiate(gs, m)[a]

    adversaries = tuple(a for a in m.agents if a not in coalition)
    root = OutcomeNode(
        state=m.initial,
        depth=0,
        histories={a: (observation_of(m, a, m.initial),) for a in coalition},
    )
    queue = deque([root])
    count = 1
    while queue:
        node = queue.popleft()
        if is_absorbing(m, node.state):
            node.kind = "absorbing"
            continue
        if node.depth >= depth:
            node.kind = "frontier"
            continue
        # coalition actions from the machines
        joint_fixed = {}
        failure = None
        for a in coalition:
            try:
                res = compiled[a].decide(list(node.histories[a]), budget)
            except MachineError as exc:
                failure = f"agent {m.agent_names[a]}: {exc}"
                break
            joint_fixed[a] = res.action
        if failure is not None:
            node.kind = "error"
            node.error = failure
            continue
        adv_reps = [m.rep(a, node.state) for a in adversaries]
        for adv_joint in itertools.product(*adv_reps):
            full = [0] * len(m.agent_names)
            for a, act in joint_fixed.items():
                full[a] = act
            for a, act in zip(adversaries, adv_joint):
                full[a] = act
            dst = m.transitions[(node.state, tuple(full))]
            child = OutcomeNode(
                state=dst,
                depth=node.depth + 1,
                histories={
                    a: node.histories[a] + (observation_of(m, a, dst),) for a in coalition
                },
                parent=node,
            )
            node.children.append(child)
            queue.append(child)
            count += 1
    return OutcomeTree(model=m, coalition=coalition, root=root, depth=depth, node_count=count)


# ---------------------------------------------------------------------------
# Enforcement
# ---------------------------------------------------------------------------


@dataclass
class EnforcementReport:
    verdict: str  # enforced | violated | inconclusive
    evidence: dict | None
    depth: int
    paths: int
    caveats: list = field(default_factory=list)
    errors: list = field(default_factory=list)

    @property
    def exit_code(self) -> int:
        return {"enforced": 0, "violated": 1}.get(self.verdict, 2)

    def pretty_evidence(self, m: Model) -> str:
        if not self.evidence:
            return ""
        names = [m.state_names[q] for q in self.evidence["states"]]
        if self.evidence.get("loop"):
            loop = [m.state_names[q] for q in self.evidence["loop"]]
            return "·".join(names) + "·(" + "·".join(loop) + ")^ω"
        return "·".join(names) + "·…"


def _model_caveats(m: Model) -> list[str]:
    caveats = []
    if m.meta.get("horizon_truncated"):
        caveats.append(
            f"model is a run trace truncated at horizon {m.meta['horizon_truncated']}; "
            "verdicts are bounded evidence about the untruncated family"
        )
    return caveats


def enforce_bounded(
    m: Model,
    coalition: Coalition,
    strategies: dict,
    f: Formula,
    depth: int,
    budget: int,
) -> EnforcementReport:
    """Three-valued enforcement over the bounded outcome tree.

    Absorbing tails are closed into lassos and judged exactly; frontier
    prefixes use the weak three-valued semantics. A single failing path
    yields ``violated`` with that path as evidence; ``enforced`` needs every
    path to conclusively hold.
    """
    tree = simulate_outcomes(m, coalition, strategies, depth, budget)
    all_hold = True
    unknowns = 0
    errors = []
    evidence = None
    n_paths = 0
    for states, kind, error in tree.paths():
        n_paths += 1
        if kind == "error":
            errors.append({"states": states, "error": error})
            all_hold = False
            continue
        if kind == "absorbing":
            lasso = LassoPath(states[:-1], (states[-1],))
            if eval_lasso(m, lasso, f):
                continue
            evidence = {"type": "lasso", "states": list(lasso.stem), "loop": list(lasso.loop)}
            break
        verdict = eval_bounded(m, states, f)
        if verdict is Verdict3.FAILS:
            evidence = {"type": "prefix", "states": states, "loop": []}
            break
        if verdict is Verdict3.UNKNOWN:
            unknowns += 1
            all_hold = False

    caveats = _model_caveats(m)
    if evidence is not None:
        return EnforcementReport("violated", evidence, depth, n_paths, caveats, errors)
    if all_hold and not errors:
        return EnforcementReport("enforced", None, depth, n_paths, caveats, errors)
    caveats = caveats + [
        f"bounded evidence: {unknowns} path(s) undecided at depth {depth}"
        + (f", {len(errors)} machine failure(s)" if errors else "")
    ]
    return EnforcementReport("inconclusive", None, depth, n_paths, caveats, errors)


# ---------------------------------------------------------------------------
# Finite-memory strategies and exact checking
# ---------------------------------------------------------------------------


@dataclass
class FiniteMemoryStrategy:
    """Observation-driven automaton strategy.

    On observing ``obs`` the memory advances first (``update``), then ``act``
    picks an action from the repertoire of the observed class. ``size`` is a
    declared memory bound used for reporting only; memoryless strategies have
    size 1.
    """

    initial: object
    update: object  # callable(memory, Observation) -> memory
    act: object  # callable(memory, Observation) -> ActionId
    size: int = 1


@dataclass
class ProductSystem:
    """Explicit transition system of model x coalition memories."""

    model: Model
    coalition: Coalition
    nodes: list  # (state, memory vector)
    edges: list  # node index -> sorted list of successor indices
    initial: int

    def base_state(self, idx: int) -> StateId:
        return self.nodes[idx][0]


def build_product(m: Model, coalition: Coalition, fms: dict) -> ProductSystem:
    """Fix the coalition's finite-memory strategies inside the model.

    Nodes are (state, memory vector) pairs reachable from the initial state;
    adversaries branch over their joint repertoires.
    """
    if set(fms) != set(coalition.agents):
        raise ValueError("strategies must cover exactly the coalition")
    adversaries = tuple(a for a in m.agents if a not in coalition)

    def advance(mems, q):
        out = []
        for a, mem in zip(coalition.agents, mems):
            out.append(fms[a].update(mem, observation_of(m, a, q)))
        return tuple(out)

    init_mems = advance(tuple(fms[a].initial for a in coalition), m.initial)
    init = (m.initial, init_mems)
    index = {init: 0}
    nodes = [init]
    edges: list[list[int]] = []
    queue = deque([init])
    while queue:
        q, mems = queue.popleft()
        fixed = {}
        for a, mem in zip(coalition.agents, mems):
            obs = observation_of(m, a, q)
            act = fms[a].act(mem, obs)
            if act not in m.rep(a, q):
                raise ValueError(
                    f"finite-memory strategy of {m.agent_names[a]} picked illegal action "
                    f"{act} at {m.state_names[q]}"
                )
            fixed[a] = act
        succs = []
        for adv_joint in itertools.product(*(m.rep(a, q) for a in adversaries)):
            full = [0] * len(m.agent_names)
            for a, act in fixed.items():
                full[a] = act
            for a, act in zip(adversaries, adv_joint):
                full[a] = act
            dst = m.transitions[(q, tuple(full))]
            node = (dst, advance(mems, dst))
            if node not in index:
                index[node] = len(nodes)
                nodes.append(node)
                queue.append(node)
            succs.append(index[node])
        edges.append(sorted(set(succs)))
    return ProductSystem(model=m, coalition=coalition, nodes=nodes, edges=edges, initial=0)


def _propositional(f: Formula) -> bool:
    if isinstance(f, (ltl.Prop, ltl.Const)):
        return True
    if isinstance(f, ltl.Not):
        return _propositional(f.arg)
    if isinstance(f, ltl.And):
        return _propositional(f.left) and _propositional(f.right)
    return False


def _is_true_const(f: Formula) -> bool:
    if isinstance(f, ltl.Const):
        return f.value
    if isinstance(f, ltl.Not):
        return isinstance(f.arg, ltl.Const) and not f.arg.value
    return False


def classify_fragment(f: Formula):
    """Split a formula into ('now'|'F'|'G', state predicate) or raise."""
    if _propositional(f):
        return "now", f
    if isinstance(f, ltl.Until) and _is_true_const(f.left) and _propositional(f.right):
        return "F", f.right
    if (
        isinstance(f, ltl.Not)
        and isinstance(f.arg, ltl.Until)
        and _is_true_const(f.arg.left)
        and _propositional(f.arg.right)
    ):
        return "G", ltl.neg(f.arg.right)
    raise UnsupportedObjective(
        "exact checking covers only boolean state predicates, F <pred>, and G <pred>; "
        "use the bounded checker for general objectives"
    )


def eval_state_predicate(m: Model, f: Formula, q: StateId) -> bool:
    labels = {m.prop_names[p] for p in m.labels_of(q)}
    def ev(g: Formula) -> bool:
        if isinstance(g, ltl.Const):
            return g.value
        if isinstance(g, ltl.Prop):
            if g.name not in m.prop_names:
                raise ValueError(f"unknown proposition {g.name}")
            return g.name in labels
        if isinstance(g, ltl.Not):
            return not ev(g.arg)
        if isinstance(g, ltl.And):
            return ev(g.left) and ev(g.right)
        raise UnsupportedObjective("predicate must be propositional")
    return ev(f)


def _lasso_from(product: ProductSystem, start_path: list[int]) -> dict:
    """Extend a node path to a lasso by following first successors."""
    seen = {node: i for i, node in enumerate(start_path)}
    path = list(start_path)
    current = path[-1]
    while True:
        nxt = product.edges[current][0]
        if nxt in seen:
            cut = seen[nxt]
            stem = [product.base_state(i) for i in path[:cut]]
            loop = [product.base_state(i) for i in path[cut:]]
            return {"type": "lasso", "states": stem, "loop": loop}
        seen[nxt] = len(path)
        path.append(nxt)
        current = nxt


def enforce_exact(product: ProductSystem, f: Formula) -> EnforcementReport:
    """Exact verdict on the product for the safety/reachability fragment."""
    m = product.model
    kind, pred = classify_fragment(f)
    holds = [eval_state_predicate(m, pred, product.base_state(i)) for i in range(len(product.nodes))]
    caveats = _model_caveats(m)

    def bfs_tree(allowed):
        """Parent pointers of the reachable subgraph induced by ``allowed``."""
        parents = {product.initial: None}
        order = [product.initial]
        for node in order:
            for nxt in product.edges[node]:
                if allowed(nxt) and nxt not in parents:
                    parents[nxt] = node
                    order.append(nxt)
        return parents, order

    def path_to(node, parents):
        out = []
        while node is not None:
            out.append(node)
            node = parents[node]
        return out[::-1]

    if kind == "now":
        if holds[product.initial]:
            return EnforcementReport("enforced", None, 0, 1, caveats)
        evidence = _lasso_from(product, [product.initial])
        return EnforcementReport("violated", evidence, 0, 1, caveats)

    if kind == "G":
        parents, order = bfs_tree(lambda i: True)
        for node in order:
            if not holds[node]:
                evidence = _lasso_from(product, path_to(node, parents))
                return EnforcementReport("violated", evidence, len(order), len(order), caveats)
        return EnforcementReport("enforced", None, len(order), len(order), caveats)

    # kind == "F": violated iff a predicate-avoiding cycle is reachable
    # through predicate-avoiding states
    if holds[product.initial]:
        return EnforcementReport("enforced", None, 0, 1, caveats)
    parents, order = bfs_tree(lambda i: not holds[i])
    avoid = set(parents)
    color: dict[int, int] = {}

    def find_cycle(start):
        stack = [(start, iter(product.edges[start]))]
        trail = [start]
        color[start] = 1
        while stack:
            node, it = stack[-1]
            advanced = False
            for nxt in it:
                if nxt not in avoid:
                    continue
                if color.get(nxt) == 1:
                    return trail[trail.index(nxt):]
                if color.get(nxt) != 2:
                    color[nxt] = 1
                    stack.append((nxt, iter(product.edges[nxt])))
                    trail.append(nxt)
                    advanced = True
                    break
            if not advanced:
                color[node] = 2
                trail.pop()
                stack.pop()
        return None

    for start in order:
        if color.get(start) is None:
            cycle = find_cycle(start)
            if cycle is not None:
                stem_nodes = path_to(cycle[0], parents)[:-1]
                evidence = {
                    "type": "lasso",
                    "states": [product.base_state(i) for i in stem_nodes],
                    "loop": [product.base_state(i) for i in cycle],
                }
                return EnforcementReport("violated", evidence, len(order), len(order), caveats)
    return EnforcementReport("enforced", None, len(order), len(order), caveats)
