"""Canonical bit-exact encoding of models and observation histories.

Everything strategy machines read is a word over the ternary alphabet
{0, 1, #}. Nonnegative integers are standard binary without leading zeros;
sets, tuples and sequences are all encoded alike, by enumerating already
encoded elements separated by '#' between the opening bracket '#00#' and the
closing bracket '#01#' (no separator after the last element).

A model becomes the concatenation of eight fields, each itself a sequence:

  1. agent count            5. action count
  2. state count            6. repertoires: (agent, state, action list)*
  3. initial state index    7. transitions: (state, joint tuple, successor)*
  4. valuation: (prop, member state list)*
  8. indistinguishability: per agent, list of classes, each a state list

Sets are enumerated in ascending index order, repertoire entries agent-major
then state, transitions state-major then lexicographic joint, classes by
minimal member. Equal models therefore produce equal words, and the layout
decodes unambiguously.
"""

from __future__ import annotations

from dataclasses import dataclass

from .model import Model, Observation

TapeWord = str

ALPHABET = frozenset("01#")
OPEN = "#00#"
CLOSE = "#01#"


@dataclass(frozen=True)
class EncodingSizes:
    enc_model_len: int
    enc_history_len: int
    abstract_model_size: int
    history_len: int


def encode_index(i: int) -> TapeWord:
    """Standard binary, '0' for zero, no leading zeros otherwise."""
    if i < 0:
        raise ValueError("indices are nonnegative")
    return format(i, "b")


def encode_sequence(items: list[TapeWord]) -> TapeWord:
    """Bracketed enumeration: '#00#' item ('#' item)* '#01#'."""
    return OPEN + "#".join(items) + CLOSE


def encode_model(m: Model) -> TapeWord:
    from .model import validate_model

    diags = validate_model(m)
    if diags:
        raise ValueError(f"cannot encode invalid model: {diags[0]}")

    def scalar(v: int) -> TapeWord:
        return encode_sequence([encode_index(v)])

    def index_list(xs) -> TapeWord:
        return encode_sequence([encode_index(x) for x in xs])

    fields = [
        scalar(len(m.agent_names)),
        scalar(len(m.state_names)),
        scalar(m.initial),
        encode_sequence(
            [
                encode_sequence([encode_index(p), index_list(sorted(m.valuation[p]))])
                for p in m.propositions
            ]
        ),
        scalar(len(m.action_names)),
        encode_sequence(
            [
                encode_sequence([encode_index(a), encode_index(q), index_list(m.rep(a, q))])
                for a in m.agents
                for q in m.states
            ]
        ),
        encode_sequence(
            [
                encode_sequence([encode_index(q), index_list(joint), encode_index(dst)])
                for (q, joint), dst in sorted(m.transitions.items())
            ]
        ),
        encode_sequence(
            [
                encode_sequence([index_list(cls) for cls in m.indist[a]])
                for a in m.agents
            ]
        ),
    ]
    return "".join(fields)


def encode_history(m: Model, a: int, obs: list[Observation]) -> TapeWord:
    """Sequence of the canonical state indices of an agent's observations."""
    for o in obs:
        if o.agent != a:
            raise ValueError(f"observation of agent {o.agent} in a history for agent {a}")
        if o.canonical not in m.states:
            raise ValueError(f"observation canonical state {o.canonical} unknown in model")
    return encode_sequence([encode_index(o.canonical) for o in obs])


def measure_sizes(m: Model, obs: list[Observation]) -> EncodingSizes:
    from .model import abstract_size

    agent = obs[0].agent if obs else 0
    return EncodingSizes(
        enc_model_len=len(encode_model(m)),
        enc_history_len=len(encode_history(m, agent, obs)),
        abstract_model_size=abstract_size(m),
        history_len=len(obs),
    )


# -- decoding ------------------------------------------------------------
#
# The layout is schema-directed: the decoder always knows whether the next
# element is an atom (binary integer) or a nested sequence, so parsing is
# deterministic. decode_model is the round-trip witness for encode_model and
# the parsing backbone for machines running on raw tapes.


class _Cursor:
    def __init__(self, word: str):
        self.word = word
        self.pos = 0

    def expect(self, token: str):
        if not self.word.startswith(token, self.pos):
            raise ValueError(f"expected {token!r} at position {self.pos}")
        self.pos += len(token)

    def peek_close(self) -> bool:
        return self.word.startswith(CLOSE, self.pos)

    def sep_or_close(self) -> bool:
        """Consume an element separator; True when the sequence closes instead."""
        if self.word.startswith(CLOSE, self.pos):
            self.pos += len(CLOSE)
            return True
        self.expect("#")
        return False

    def atom(self) -> int:
        start = self.pos
        while self.pos < len(self.word) and self.word[self.pos] in "01":
            self.pos += 1
        text = self.word[start : self.pos]
        if not text or (len(text) > 1 and text[0] == "0"):
            raise ValueError(f"malformed binary atom at position {start}")
        return int(text, 2)


def decode_sequence(cur: _Cursor, element):
    """Parse one bracketed sequence, decoding each element with ``element``."""
    cur.expect(OPEN)
    items = []
    if cur.peek_close():
        cur.pos += len(CLOSE)
        return items
    while True:
        items.append(element(cur))
        if cur.sep_or_close():
            return items


def decode_index_list(cur: _Cursor) -> list[int]:
    return decode_sequence(cur, _Cursor.atom)


def decode_history(word: TapeWord) -> list[int]:
    """Canonical state indices of an encoded observation history."""
    cur = _Cursor(word)
    out = decode_index_list(cur)
    if cur.pos != len(word):
        raise ValueError("trailing garbage after history")
    return out


def _parse_val_entry(cur: _Cursor):
    cur.expect(OPEN)
    p = cur.atom()
    cur.expect("#")
    members = decode_index_list(cur)
    cur.expect(CLOSE)
    return p, members


def _parse_rep_entry(cur: _Cursor):
    cur.expect(OPEN)
    a = cur.atom()
    cur.expect("#")
    q = cur.atom()
    cur.expect("#")
    acts = decode_index_list(cur)
    cur.expect(CLOSE)
    return a, q, acts


def _parse_trans_entry(cur: _Cursor):
    cur.expect(OPEN)
    q = cur.atom()
    cur.expect("#")
    joint = decode_index_list(cur)
    cur.expect("#")
    q2 = cur.atom()
    cur.expect(CLOSE)
    return q, tuple(joint), q2


def decode_model(word: TapeWord, names: Model | None = None) -> Model:
    """Parse the eight-field layout back into a model.

    Indices carry no display names; ``names`` optionally donates registries
    from a sibling model (used by round-trip checks), otherwise synthetic
    names are minted.
    """
    cur = _Cursor(word)

    def scalar() -> int:
        items = decode_index_list(cur)
        if len(items) != 1:
            raise ValueError("scalar field must hold exactly one atom")
        return items[0]

    n_agents = scalar()
    n_states = scalar()
    initial = scalar()
    val_entries = decode_sequence(cur, _parse_val_entry)
    n_actions = scalar()
    rep_entries = decode_sequence(cur, _parse_rep_entry)
    trans_entries = decode_sequence(cur, _parse_trans_entry)
    indist_entries = decode_sequence(cur, lambda c: decode_sequence(c, decode_index_list))
    if cur.pos != len(word):
        raise ValueError("trailing garbage after model encoding")
    if len(indist_entries) != n_agents:
        raise ValueError("indistinguishability field does not cover every agent")

    valuation = {p: set(members) for p, members in val_entries}
    repertoire = {(a, q): tuple(acts) for a, q, acts in rep_entries}
    transitions = {(q, joint): q2 for q, joint, q2 in trans_entries}

    if names is not None:
        agent_names = names.agent_names
        state_names = names.state_names
        action_names = names.action_names
        prop_names = names.prop_names
        scale_param = names.scale_param
    else:
        agent_names = tuple(f"a{i}" for i in range(n_agents))
        state_names = tuple(f"q{i}" for i in range(n_states))
        action_names = tuple(f"act{i}" for i in range(n_actions))
        prop_names = tuple(f"p{i}" for i in range(len(valuation)))
        scale_param = None

    return Model(
        agent_names=agent_names,
        state_names=state_names,
        initial=initial,
        prop_names=prop_names,
        valuation={i: valuation[p] for i, p in enumerate(sorted(valuation))},
        action_names=action_names,
        repertoire=repertoire,
        transitions=transitions,
        indist=indist_entries,
        scale_param=scale_param,
    )
