"""Human-editable textual model format.

Sectioned plain text mirroring the canonical encoding's eight fields, with
display names instead of indices. Serialization is canonical (fixed ordering
everywhere), so generate -> parse -> serialize is the identity byte-wise.

    # comment
    agents: Alice Bob
    states: 0/0 0/1 1/1
    init: 0/0
    actions: request skip
    props: sugar_Alice sugar_Bob
    label sugar_Bob: 1/3 2/3
    rep Alice 0/0: request skip
    trans 0/0 request skip -> 1/1
    indist v: { q1_1 q2_1 } { q1_2 q2_2 }
    param: 3

``trans`` lists one action per agent in declaration order; ``indist`` lists
only classes with two or more members (everything else is identity);
``param`` is the optional scalability parameter.
"""

from __future__ import annotations

from .model import Model


def serialize_model(m: Model) -> str:
    lines = []
    lines.append("agents: " + " ".join(m.agent_names))
    lines.append("states: " + " ".join(m.state_names))
    lines.append("init: " + m.state_names[m.initial])
    lines.append("actions: " + " ".join(m.action_names))
    lines.append("props: " + " ".join(m.prop_names))
    for p in m.propositions:
        members = sorted(m.valuation[p])
        if members:
            lines.append(f"label {m.prop_names[p]}: " + " ".join(m.state_names[q] for q in members))
    for a in m.agents:
        for q in m.states:
            lines.append(
                f"rep {m.agent_names[a]} {m.state_names[q]}: "
                + " ".join(m.action_names[x] for x in m.rep(a, q))
            )
    for (q, joint), dst in sorted(m.transitions.items()):
        lines.append(
            f"trans {m.state_names[q]} "
            + " ".join(m.action_names[x] for x in joint)
            + f" -> {m.state_names[dst]}"
        )
    for a in m.agents:
        classes = [cls for cls in m.indist[a] if len(cls) > 1]
        if classes:
            lines.append(
                f"indist {m.agent_names[a]}: "
                + " ".join("{ " + " ".join(m.state_names[q] for q in cls) + " }" for cls in classes)
            )
    if m.scale_param is not None:
        lines.append(f"param: {m.scale_param}")
    return "\n".join(lines) + "\n"


class ModelFormatError(ValueError):
    pass


def parse_model(text: str) -> Model:
    agents = states = actions = props = None
    init_name = None
    labels: dict[str, list[str]] = {}
    reps: dict[tuple[str, str], list[str]] = {}
    trans: list[tuple[str, list[str], str]] = []
    indist: dict[str, list[list[str]]] = {}
    param = None

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        try:
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
            elif line.startswith("rep "):
                head, _, rest = line.partition(":")
                _, agent, state = head.split()
                reps[(agent, state)] = rest.split()
            elif line.startswith("trans "):
                body, _, dst = line.partition("->")
                toks = body.split()[1:]
                trans.append((toks[0], toks[1:], dst.strip()))
            elif line.startswith("indist "):
                head, _, rest = line.partition(":")
                agent = head.split()[1]
                classes: list[list[str]] = []
                current: list[str] | None = None
                for tok in rest.split():
                    if tok == "{":
                        current = []
                    elif tok == "}":
                        if current is None:
                            raise ModelFormatError("unbalanced '}'")
                        classes.append(current)
                        current = None
                    elif current is not None:
                        current.append(tok)
                    else:
                        raise ModelFormatError(f"stray token {tok!r}")
                if current is not None:
                    raise ModelFormatError("unterminated '{'")
                indist[agent] = classes
            elif line.startswith("param:"):
                param = int(line.split(":", 1)[1])
            else:
                raise ModelFormatError(f"unrecognized line {line!r}")
        except (IndexError, ValueError) as exc:
            raise ModelFormatError(f"line {lineno}: {exc}") from None

    for name, value in (("agents", agents), ("states", states), ("actions", actions), ("init", init_name)):
        if value is None:
            raise ModelFormatError(f"missing required section {name!r}")
    props = props or []

    s_idx = {name: i for i, name in enumerate(states)}
    a_idx = {name: i for i, name in enumerate(agents)}
    act_idx = {name: i for i, name in enumerate(actions)}
    p_idx = {name: i for i, name in enumerate(props)}

    def need(mapping, key, what):
        if key not in mapping:
            raise ModelFormatError(f"unknown {what} {key!r}")
        return mapping[key]

    valuation = {
        need(p_idx, pname, "proposition"): {need(s_idx, s, "state") for s in members}
        for pname, members in labels.items()
    }
    repertoire = {
        (need(a_idx, ag, "agent"), need(s_idx, st, "state")): tuple(
            need(act_idx, x, "action") for x in acts
        )
        for (ag, st), acts in reps.items()
    }
    transitions = {}
    for src, joint, dst in trans:
        if len(joint) != len(agents):
            raise ModelFormatError(f"transition from {src} needs {len(agents)} actions")
        transitions[(need(s_idx, src, "state"), tuple(need(act_idx, x, "action") for x in joint))] = need(
            s_idx, dst, "state"
        )
    indist_idx = tuple(
        tuple(tuple(need(s_idx, s, "state") for s in cls) for cls in indist.get(agent, []))
        for agent in agents
    )
    return Model(
        agent_names=agents,
        state_names=states,
        initial=need(s_idx, init_name, "state"),
        prop_names=props,
        valuation=valuation,
        action_names=actions,
        repertoire=repertoire,
        transitions=transitions,
        indist=indist_idx,
        scale_param=param,
    )
