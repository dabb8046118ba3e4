"""Empirical step-count profiling and ability checking.

The profiler measures worst observed machine steps per template instance over
a documented, seeded history sampler, fits the per-parameter maxima against
five growth classes, and combines enforcement verdicts with the fitted class
into ability reports. Positive verdicts are bounded evidence by construction
(the sampler cannot exhaust all inputs); refutations carry a concrete,
re-checkable witness.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .encoding import encode_model
from .ltl import Formula
from .machine import BudgetExceeded, GeneralStrategy, MachineError, instantiate
from .model import Coalition, Model, abstract_size, observation_of
from .outcome import default_depth, enforce_bounded, is_absorbing


@dataclass(frozen=True)
class ProfileRow:
    param: int
    enc_model_len: int
    abstract_size: int
    max_steps: int
    histories: int
    budget_hits: int


@dataclass
class ComplexityProfile:
    strategy: str
    template: str
    rows: list
    budget: int
    seed: int
    history_cap: int

    def params(self):
        return [r.param for r in self.rows]

    def maxima(self):
        return [r.max_steps for r in self.rows]


def sample_histories(m: Model, coalition: Coalition, strategies, depth: int, budget: int, cap: int):
    """Closed-loop histories: the coalition plays its machines, adversaries
    branch fully; every visited node contributes its state-sequence prefix.

    Enumeration is depth-first in lexicographic joint order and truncates
    deterministically at ``cap`` histories. Depth-first keeps the deepest
    (decision-carrying) branches in the sample even under a tight cap, since
    the lexicographically first branch runs to the horizon before any
    sibling is considered.
    """
    adversaries = tuple(a for a in m.agents if a not in coalition)
    histories = []
    stack = [(m.initial,)]
    while stack and len(histories) < cap:
        states = stack.pop()
        histories.append(states)
        q = states[-1]
        if is_absorbing(m, q) or len(states) > depth:
            continue
        fixed = {}
        failed = False
        for a in coalition:
            obs = [observation_of(m, a, s) for s in states]
            try:
                res = strategies[a].decide(obs, budget)
            except MachineError:
                failed = True
                break
            fixed[a] = res.action
        if failed:
            continue
        children = []
        for adv_joint in itertools.product(*(m.rep(a, q) for a in adversaries)):
            full = [0] * len(m.agent_names)
            for a, act in fixed.items():
                full[a] = act
            for a, act in zip(adversaries, adv_joint):
                full[a] = act
            children.append(states + (m.transitions[(q, tuple(full))],))
        stack.extend(reversed(children))
    return histories


def profile_strategy(
    template,
    gs: GeneralStrategy,
    params,
    budget: int,
    history_cap: int = 10_000,
    seed: int = 0,
    depth=None,
) -> ComplexityProfile:
    """Worst observed steps per template instance.

    ``depth`` defaults to each instance's natural horizon (twice the state
    count plus two, which covers every terminal-phase game in the registry).
    Budget overruns are counted per row, not raised.
    """
    rows = []
    for param in params:
        m = template(param)
        strategies = instantiate(gs, m)
        inst_depth = depth(m) if callable(depth) else (depth or default_depth(m))
        histories = sample_histories(m, gs.coalition, strategies, inst_depth, budget, history_cap)
        max_steps = 0
        hits = 0
        enc_len = len(strategies[gs.coalition.agents[0]].enc_model)
        for states in histories:
            for a in gs.coalition:
                obs = [observation_of(m, a, s) for s in states]
                try:
                    res = strategies[a].decide(obs, budget)
                except BudgetExceeded:
                    hits += 1
                    continue
                except MachineError:
                    continue
                if res.steps > max_steps:
                    max_steps = res.steps
        rows.append(
            ProfileRow(
                param=param,
                enc_model_len=enc_len,
                abstract_size=abstract_size(m),
                max_steps=max_steps,
                histories=len(histories),
                budget_hits=hits,
            )
        )
    return ComplexityProfile(
        strategy=gs.name,
        template=getattr(template, "name", getattr(template, "__name__", "template")),
        rows=rows,
        budget=budget,
        seed=seed,
        history_cap=history_cap,
    )


# ---------------------------------------------------------------------------
# Growth classification
# ---------------------------------------------------------------------------

R2_THRESHOLD = 0.98
CONSTANT_SPREAD = 0.10
MIN_POINTS = 6


@dataclass(frozen=True)
class GrowthVerdict:
    klass: str  # constant | logarithmic | polynomial | exponential | inconclusive
    degree: int | None
    fit: float
    points: int

    def label(self) -> str:
        if self.klass == "polynomial":
            return f"polynomial({self.degree})"
        return self.klass

    def rank(self) -> float:
        return _class_rank(self.klass, self.degree)


def _class_rank(klass: str, degree=None) -> float:
    if klass == "constant":
        return 0.0
    if klass == "logarithmic":
        return 0.5
    if klass == "polynomial":
        return max(float(degree or 0), 0.0)
    if klass == "exponential":
        return math.inf
    raise ValueError(f"no rank for class {klass!r}")


def parse_bound(text: str) -> tuple[str, int | None]:
    """Named growth classes accepted on the CLI: constant, logarithmic,
    linear, polynomial:d, exponential."""
    text = text.strip().lower()
    if text in ("constant", "o(1)"):
        return "constant", None
    if text in ("logarithmic", "log"):
        return "logarithmic", None
    if text == "linear":
        return "polynomial", 1
    if text.startswith("polynomial"):
        _, _, d = text.partition(":")
        return "polynomial", int(d) if d else 1
    if text in ("exponential", "exp"):
        return "exponential", None
    raise ValueError(f"unknown growth class {text!r}")


def _r2(x: np.ndarray, y: np.ndarray) -> tuple[float, float, float]:
    """Least-squares line fit; returns (r2, slope, intercept)."""
    if len(set(x.tolist())) < 2:
        return 0.0, 0.0, float(y[0])
    slope, intercept = np.polyfit(x, y, 1)
    pred = slope * x + intercept
    ss_res = float(np.sum((y - pred) ** 2))
    ss_tot = float(np.sum((y - np.mean(y)) ** 2))
    if ss_tot == 0.0:
        return 1.0, float(slope), float(intercept)
    return 1.0 - ss_res / ss_tot, float(slope), float(intercept)


def classify_growth(profile: ComplexityProfile) -> GrowthVerdict:
    """Fit the per-parameter maxima, first match wins.

    Order: constant (relative spread <= 10%), logarithmic (steps vs log n),
    polynomial (log-log line, degree = rounded slope), exponential (log steps
    vs n); each needs R^2 >= 0.98, otherwise the verdict is inconclusive.
    """
    rows = [r for r in profile.rows]
    if len(rows) < MIN_POINTS:
        raise ValueError(f"need at least {MIN_POINTS} data points, got {len(rows)}")
    n = np.array([r.param for r in rows], dtype=float)
    steps = np.array([max(r.max_steps, 1) for r in rows], dtype=float)
    points = len(rows)

    spread = float((steps.max() - steps.min()) / max(steps.mean(), 1.0))
    if spread <= CONSTANT_SPREAD:
        return GrowthVerdict("constant", None, 1.0 - spread, points)

    r2_log, _, _ = _r2(np.log(n), steps)
    if r2_log >= R2_THRESHOLD:
        return GrowthVerdict("logarithmic", None, r2_log, points)

    r2_poly, slope, _ = _r2(np.log(n), np.log(steps))
    if r2_poly >= R2_THRESHOLD:
        degree = int(math.floor(slope + 0.5))
        return GrowthVerdict("polynomial", degree, r2_poly, points)

    r2_exp, _, _ = _r2(n, np.log(steps))
    if r2_exp >= R2_THRESHOLD:
        return GrowthVerdict("exponential", None, r2_exp, points)

    return GrowthVerdict("inconclusive", None, max(r2_log, r2_poly, r2_exp), points)


def verdict_within(verdict: GrowthVerdict, bound: tuple[str, int | None]) -> bool:
    if verdict.klass == "inconclusive":
        return False
    return verdict.rank() <= _class_rank(*bound)


# ---------------------------------------------------------------------------
# Ability checks
# ---------------------------------------------------------------------------


@dataclass
class AbilityInstance:
    param: int
    enforcement: str
    max_steps: int
    enc_model_len: int
    abstract_size: int
    histories: int
    note: str = ""


@dataclass
class AbilityReport:
    """Evidence-graded verdict for one template/coalition/objective triple.

    ``supported`` means every sampled instance enforced the objective and the
    fitted growth class stays within the named bound; it is bounded evidence,
    not proof. ``refuted`` carries a concrete witness (a violated instance
    with its counterexample path). Anything else is ``inconclusive``.
    """

    mode: str  # uniform | adaptive
    template: str
    coalition: tuple
    formula: str
    bound: str
    instances: list
    growth: GrowthVerdict | None
    verdict: str
    witness: dict | None
    caveat: str = "supported verdicts are bounded evidence over sampled instances and histories"

    @property
    def exit_code(self) -> int:
        return {"supported": 0, "refuted": 1}.get(self.verdict, 2)


def check_uniform_ability(
    template,
    coalition: Coalition,
    gs: GeneralStrategy,
    f: Formula,
    formula_text: str,
    bound: tuple[str, int | None],
    params,
    budget: int,
    depth=None,
    history_cap: int = 10_000,
    seed: int = 0,
) -> AbilityReport:
    """One general strategy against every instance of the family.

    Enforcement failures refute the ability outright (a single counterexample
    refutes it for every complexity class); the step profile is measured
    against the encoded model size axis and classified against the bound.
    """
    instances = []
    witness = None
    for param in params:
        m = template(param)
        strategies = instantiate(gs, m)
        inst_depth = depth(m) if callable(depth) else (depth or default_depth(m))
        report = enforce_bounded(m, coalition, strategies, f, inst_depth, budget)
        instances.append(
            AbilityInstance(
                param=param,
                enforcement=report.verdict,
                max_steps=0,
                enc_model_len=len(strategies[coalition.agents[0]].enc_model),
                abstract_size=abstract_size(m),
                histories=0,
            )
        )
        if report.verdict == "violated" and witness is None:
            witness = {"param": param, "evidence": report.evidence}

    profile = profile_strategy(template, gs, params, budget, history_cap=history_cap, seed=seed, depth=depth)
    for inst, row in zip(instances, profile.rows):
        inst.max_steps = row.max_steps
        inst.histories = row.histories
    growth = classify_growth(profile) if len(profile.rows) >= MIN_POINTS else None

    if witness is not None:
        verdict = "refuted"
    elif (
        all(i.enforcement == "enforced" for i in instances)
        and growth is not None
        and verdict_within(growth, bound)
    ):
        verdict = "supported"
    else:
        verdict = "inconclusive"
    return AbilityReport(
        mode="uniform",
        template=getattr(template, "name", "template"),
        coalition=tuple(coalition.agents),
        formula=formula_text,
        bound=f"{bound[0]}" + (f":{bound[1]}" if bound[1] is not None else ""),
        instances=instances,
        growth=growth,
        verdict=verdict,
        witness=witness,
    )


def constant_provider(gs: GeneralStrategy):
    """The strategy mapping that returns the same general strategy everywhere."""

    def provide(param: int, m: Model) -> GeneralStrategy:
        return gs

    return provide


def check_adaptive_ability(
    template,
    coalition: Coalition,
    provider,
    f: Formula,
    formula_text: str,
    bound: tuple[str, int | None],
    params,
    budget: int,
    depth=None,
    history_cap: int = 10_000,
    seed: int = 0,
) -> AbilityReport:
    """Per-instance strategies from a provider; complexity measured against
    the abstract model size axis. Provider failures leave the verdict
    inconclusive rather than refuted."""
    instances = []
    witness = None
    provider_failed = False
    maxima = []
    for param in params:
        m = template(param)
        inst_depth = depth(m) if callable(depth) else (depth or default_depth(m))
        try:
            gs = provider(param, m)
        except Exception as exc:  # recorded, not fatal
            gs = None
            note = f"provider failed: {exc}"
        else:
            note = ""
        if gs is None:
            provider_failed = True
            instances.append(
                AbilityInstance(
                    param=param,
                    enforcement="no-strategy",
                    max_steps=0,
                    enc_model_len=len(encode_model(m)),
                    abstract_size=abstract_size(m),
                    histories=0,
                    note=note or "provider yielded no strategy",
                )
            )
            continue
        strategies = instantiate(gs, m)
        report = enforce_bounded(m, coalition, strategies, f, inst_depth, budget)
        histories = sample_histories(m, coalition, strategies, inst_depth, budget, history_cap)
        max_steps = 0
        for states in histories:
            for a in coalition:
                obs = [observation_of(m, a, s) for s in states]
                try:
                    res = strategies[a].decide(obs, budget)
                except MachineError:
                    continue
                max_steps = max(max_steps, res.steps)
        instances.append(
            AbilityInstance(
                param=param,
                enforcement=report.verdict,
                max_steps=max_steps,
                enc_model_len=len(strategies[coalition.agents[0]].enc_model),
                abstract_size=abstract_size(m),
                histories=len(histories),
            )
        )
        maxima.append((param, max_steps))
        if report.verdict == "violated" and witness is None:
            witness = {"param": param, "evidence": report.evidence}

    # adaptive complexity is measured against the abstract model size: the
    # pessimistic cost at size s is the max over sampled instances of that
    # size, and the growth fit runs over the size axis
    growth = None
    measured = [i for i in instances if i.enforcement != "no-strategy"]
    by_size: dict[int, AbilityInstance] = {}
    for inst in measured:
        best = by_size.get(inst.abstract_size)
        if best is None or inst.max_steps > best.max_steps:
            by_size[inst.abstract_size] = inst
    if len(by_size) >= MIN_POINTS:
        pseudo = ComplexityProfile(
            strategy="adaptive",
            template=getattr(template, "name", "template"),
            rows=[
                ProfileRow(size, i.enc_model_len, size, i.max_steps, i.histories, 0)
                for size, i in sorted(by_size.items())
            ],
            budget=budget,
            seed=seed,
            history_cap=history_cap,
        )
        growth = classify_growth(pseudo)

    if witness is not None:
        verdict = "refuted"
    elif (
        not provider_failed
        and instances
        and all(i.enforcement == "enforced" for i in instances)
        and growth is not None
        and verdict_within(growth, bound)
    ):
        verdict = "supported"
    else:
        verdict = "inconclusive"
    return AbilityReport(
        mode="adaptive",
        template=getattr(template, "name", "template"),
        coalition=tuple(coalition.agents),
        formula=formula_text,
        bound=f"{bound[0]}" + (f":{bound[1]}" if bound[1] is not None else ""),
        instances=instances,
        growth=growth,
        verdict=verdict,
        witness=witness,
    )
