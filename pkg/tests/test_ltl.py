import random

import pytest

from stratbench.ltl import (
    And,
    Const,
    FormulaSyntaxError,
    LassoPath,
    Next,
    Not,
    Prop,
    Release,
    Until,
    Verdict3,
    eval_bounded,
    eval_lasso,
    parse_formula,
)
from conftest import make_random_model

TRUE = Const(True)


class TestParsing:
    def test_f_desugars_to_until(self):
        assert parse_formula("F sugar_Bob") == Until(TRUE, Prop("sugar_Bob"))

    def test_g_desugars_to_negated_until(self):
        f = parse_formula("G !sugar_Alice")
        # bottom-release form: !(!false U !!sugar_Alice)
        assert f == Release(Const(False), Not(Prop("sugar_Alice")))
        assert isinstance(f, Not) and isinstance(f.arg, Until)

    def test_until_right_associative(self):
        assert parse_formula("p U q U r") == Until(Prop("p"), Until(Prop("q"), Prop("r")))

    def test_release_right_associative(self):
        assert parse_formula("p R q R r") == Release(Prop("p"), Release(Prop("q"), Prop("r")))

    def test_precedence_chain(self):
        # -> binds loosest, & over |? no: & > | > ->
        f = parse_formula("a & b | c -> X d")
        or_part = parse_formula("(a & b) | c")
        assert f == parse_formula("((a & b) | c) -> (X d)")
        assert parse_formula("a | b & c") == parse_formula("a | (b & c)")
        assert or_part == parse_formula("(a & b) | c")

    def test_unary_stack(self):
        assert parse_formula("!X p") == Not(Next(Prop("p")))
        assert parse_formula("X !p") == Next(Not(Prop("p")))
        assert parse_formula("F G p") == parse_formula("F (G p)")

    def test_syntax_error_carries_position(self):
        with pytest.raises(FormulaSyntaxError) as exc:
            parse_formula("p U )")
        assert exc.value.position == 4

    def test_dangling_operator(self):
        with pytest.raises(FormulaSyntaxError):
            parse_formula("p &")

    def test_keywords_not_propositions(self):
        with pytest.raises(FormulaSyntaxError):
            parse_formula("U")


def lasso(stem, loop):
    return LassoPath(tuple(stem), tuple(loop))


def oracle_eval(m, path: LassoPath, f, pos: int = 0, _memo=None) -> bool:
    """Independent enumeration-based evaluator.

    Positions are canonicalized into the stem + one loop unrolling; U is
    decided by scanning forward through stem + full loop (a witness, if any,
    appears within one period past the stem).
    """
    s, p = len(path.stem), len(path.loop)

    def canon(i):
        return i if i < s else s + ((i - s) % p)

    if _memo is None:
        _memo = {}
    key = (id(f), canon(pos))
    if key in _memo:
        return _memo[key]
    _memo[key] = False  # cycle breaker: U/F default to the least solution
    if isinstance(f, Const):
        out = f.value
    elif isinstance(f, Prop):
        q = path.state_at(pos)
        out = q in m.valuation[m.prop_names.index(f.name)]
    elif isinstance(f, Not):
        out = not oracle_eval(m, path, f.arg, pos, _memo)
    elif isinstance(f, And):
        out = oracle_eval(m, path, f.left, pos, _memo) and oracle_eval(m, path, f.right, pos, _memo)
    elif isinstance(f, Next):
        out = oracle_eval(m, path, f.arg, canon(pos + 1), _memo)
    elif isinstance(f, Until):
        out = False
        i = canon(pos)
        horizon = s + 2 * p  # a period past every canonical position
        j = i
        scanned = []
        while j < horizon:
            if oracle_eval(m, path, f.right, canon(j), _memo):
                out = True
                break
            if not oracle_eval(m, path, f.left, canon(j), _memo):
                out = False
                break
            scanned.append(j)
            j += 1
        else:
            out = False
    else:
        raise TypeError(f)
    _memo[key] = out
    return out


def random_formula(rng, props, depth=3):
    if depth == 0 or rng.random() < 0.3:
        if props and rng.random() < 0.85:
            return Prop(rng.choice(props))
        return Const(rng.random() < 0.5)
    pick = rng.randrange(5)
    if pick == 0:
        return Not(random_formula(rng, props, depth - 1))
    if pick == 1:
        return And(random_formula(rng, props, depth - 1), random_formula(rng, props, depth - 1))
    if pick == 2:
        return Next(random_formula(rng, props, depth - 1))
    return Until(random_formula(rng, props, depth - 1), random_formula(rng, props, depth - 1))


def random_lasso(rng, m):
    """Random walk split into stem + a loop closed over a revisited state."""
    edges = {}
    for (q, _j), dst in m.transitions.items():
        edges.setdefault(q, []).append(dst)
    walk = [m.initial]
    seen = {m.initial: 0}
    while True:
        nxt = rng.choice(sorted(edges[walk[-1]]))
        if nxt in seen:
            cut = seen[nxt]
            return lasso(walk[:cut], walk[cut:])
        seen[nxt] = len(walk)
        walk.append(nxt)


class TestEvalLasso:
    def test_coffee_outcome_satisfies_f_sugar_bob(self, coffee3):
        m = coffee3
        path = lasso([m.state_index(s) for s in ("0/0", "0/1", "0/2")], [m.state_index("1/3")])
        assert eval_lasso(m, path, parse_formula("F sugar_Bob")) is True

    def test_coffee_outcome_satisfies_g_not_sugar_alice(self, coffee3):
        m = coffee3
        path = lasso([m.state_index(s) for s in ("0/0", "0/1", "0/2")], [m.state_index("1/3")])
        # only 3/3 carries sugar_Alice and this path never visits it
        assert eval_lasso(m, path, parse_formula("G !sugar_Alice")) is True

    def test_p_until_p_is_p_now(self, coffee3):
        m = coffee3
        f = Until(Prop("sugar_Bob"), Prop("sugar_Bob"))
        for terminal in ("0/3", "1/3"):
            path = lasso([], [m.state_index(terminal)])
            assert eval_lasso(m, path, f) == eval_lasso(m, path, Prop("sugar_Bob"))

    def test_invalid_path_rejected(self, coffee3):
        m = coffee3
        with pytest.raises(ValueError):
            eval_lasso(m, lasso([m.state_index("0/0")], [m.state_index("3/3")]), TRUE)

    def test_unknown_proposition_rejected(self, coffee3):
        path = lasso([], [coffee3.state_index("0/3")])
        with pytest.raises(ValueError):
            eval_lasso(coffee3, path, Prop("nonexistent"))

    def test_agrees_with_enumeration_oracle(self):
        rng = random.Random(2024)
        agree = 0
        for _ in range(200):
            m = make_random_model(rng)
            path = random_lasso(rng, m)
            f = random_formula(rng, list(m.prop_names))
            assert eval_lasso(m, path, f) == oracle_eval(m, path, f)
            agree += 1
        assert agree == 200

    def test_deep_nesting_agrees_with_oracle(self):
        rng = random.Random(777)
        for _ in range(100):
            m = make_random_model(rng)
            path = random_lasso(rng, m)
            f = random_formula(rng, list(m.prop_names), depth=5)
            assert eval_lasso(m, path, f) == oracle_eval(m, path, f)

    def test_duality(self):
        rng = random.Random(555)
        for _ in range(200):
            m = make_random_model(rng)
            path = random_lasso(rng, m)
            phi = random_formula(rng, list(m.prop_names), depth=2)
            psi = random_formula(rng, list(m.prop_names), depth=2)
            released = Release(phi, psi)
            manual = Not(Until(Not(phi), Not(psi)))
            assert eval_lasso(m, path, released) == eval_lasso(m, path, manual)

    def test_loop_rotation_invariance(self):
        rng = random.Random(31)
        for _ in range(100):
            m = make_random_model(rng)
            path = random_lasso(rng, m)
            f = random_formula(rng, list(m.prop_names))
            base = eval_lasso(m, path, f)
            # rotate: push the first loop state onto the stem
            rotated = LassoPath(path.stem + (path.loop[0],), path.loop[1:] + (path.loop[0],))
            assert eval_lasso(m, rotated, f) == base

    def test_loop_doubling_invariance(self):
        rng = random.Random(32)
        for _ in range(100):
            m = make_random_model(rng)
            path = random_lasso(rng, m)
            f = random_formula(rng, list(m.prop_names))
            doubled = LassoPath(path.stem, path.loop + path.loop)
            assert eval_lasso(m, doubled, f) == eval_lasso(m, path, f)


class TestEvalBounded:
    def test_witnessed_eventuality_holds(self, coffee3):
        m = coffee3
        prefix = [m.state_index(s) for s in ("0/0", "0/1", "0/2", "1/3")]
        assert eval_bounded(m, prefix, parse_formula("F sugar_Bob")) is Verdict3.HOLDS

    def test_refuted_safety_fails(self, coffee3):
        m = coffee3
        prefix = [m.state_index(s) for s in ("0/0", "1/1", "2/2", "3/3")]
        assert eval_bounded(m, prefix, parse_formula("G !sugar_Alice")) is Verdict3.FAILS

    def test_open_eventuality_unknown(self, coffee3):
        m = coffee3
        prefix = [m.state_index(s) for s in ("0/0", "0/1")]
        assert eval_bounded(m, prefix, parse_formula("F sugar_Bob")) is Verdict3.UNKNOWN

    def test_next_at_frontier_unknown(self, coffee3):
        m = coffee3
        assert eval_bounded(m, [m.state_index("0/0")], Next(TRUE)) is Verdict3.UNKNOWN

    def test_empty_prefix_rejected(self, coffee3):
        with pytest.raises(ValueError):
            eval_bounded(coffee3, [], TRUE)

    def test_disconnected_prefix_rejected(self, coffee3):
        m = coffee3
        with pytest.raises(ValueError):
            eval_bounded(m, [m.state_index("0/0"), m.state_index("3/3")], TRUE)

    def test_consistency_with_lasso(self):
        # a decided prefix verdict must agree with the full lasso evaluation
        rng = random.Random(909)
        decided = 0
        for _ in range(300):
            m = make_random_model(rng)
            path = random_lasso(rng, m)
            f = random_formula(rng, list(m.prop_names))
            for cut in (1, len(path.stem) + 1, len(path.stem) + len(path.loop)):
                prefix = path.prefix(max(cut, 1))
                verdict = eval_bounded(m, prefix, f)
                if verdict is Verdict3.HOLDS:
                    assert eval_lasso(m, path, f) is True
                    decided += 1
                elif verdict is Verdict3.FAILS:
                    assert eval_lasso(m, path, f) is False
                    decided += 1
        assert decided > 100  # the suite actually exercises decided verdicts
