"""Batch command-line front end.

Subcommands: validate, generate, encode, simulate, check, synthesize,
profile, ability. Exit codes: 0 success / supported / enforced, 1 refuted /
violated / not winning, 2 inconclusive, 3 usage or parse errors. All
randomness is seed-controlled and the seed is echoed in every report; report
JSON carries the tool version and a hash of the resolved experiment inputs.
Profile and ability reports write a PNG figure next to the CSV unless
--no-plot is given.
"""

from __future__ import annotations

import argparse
import csv
import datetime
import hashlib
import json
import os
import sys
from dataclasses import dataclass, field

from . import __version__
from .encoding import encode_model
from .ltl import FormulaSyntaxError, parse_formula
from .machine import GeneralStrategy, default_budget, parse_program, parse_tape_machine
from .model import Coalition, Model, validate_model
from .modeltext import ModelFormatError, parse_model, serialize_model
from .outcome import UnsupportedObjective, default_depth, enforce_bounded, simulate_outcomes
from .profiler import (
    check_adaptive_ability,
    check_uniform_ability,
    classify_growth,
    constant_provider,
    parse_bound,
    profile_strategy,
)
from .synthesis import compile_knowledge_strategy, synthesize
from .templates import ClauseError, builtin_strategies, parse_dimacs, registry

EXIT_OK = 0
EXIT_NEGATIVE = 1
EXIT_INCONCLUSIVE = 2
EXIT_USAGE = 3


class UsageError(ValueError):
    pass


@dataclass
class ExperimentSpec:
    """Resolved experiment inputs (one model source, mode-specific fields)."""

    mode: str
    template: str | None = None
    params: list = field(default_factory=list)
    model_file: str | None = None
    dimacs: str | None = None
    coalition: list = field(default_factory=list)
    strategies: list = field(default_factory=list)
    formula: str | None = None
    agent: str | None = None
    reach: str | None = None
    safe: str | None = None
    bound: str | None = None
    provider: str = "constant"
    depth: int | None = None
    budget: int | None = None
    seed: int = 0
    history_cap: int = 10_000

    def digest(self) -> str:
        payload = json.dumps(self.__dict__, sort_keys=True, default=str).encode()
        return hashlib.sha256(payload).hexdigest()[:16]


def _parse_params(text: str) -> list[int]:
    """'3' | '2..12' | '4,8,16' (comma lists may mix ranges)."""
    out: list[int] = []
    for part in text.split(","):
        part = part.strip()
        if ".." in part:
            lo, hi = part.split("..", 1)
            out.extend(range(int(lo), int(hi) + 1))
        elif part:
            out.append(int(part))
    if not out:
        raise UsageError(f"no parameters in {text!r}")
    return out


def load_model(spec: ExperimentSpec) -> Model:
    sources = [s for s in (spec.template, spec.model_file, spec.dimacs) if s]
    if len(sources) != 1:
        raise UsageError("exactly one model source required (--template, --model, or --dimacs)")
    if spec.model_file:
        with open(spec.model_file) as fh:
            return parse_model(fh.read())
    if spec.dimacs:
        from .templates import gen_satgame

        with open(spec.dimacs) as fh:
            return gen_satgame(parse_dimacs(fh.read()))
    tpl = _template(spec.template)
    if len(spec.params) != 1:
        raise UsageError("this command takes exactly one --param value")
    return tpl(spec.params[0])


def _template(name: str):
    reg = registry()
    if name not in reg:
        raise UsageError(f"unknown template {name!r}; available: {', '.join(sorted(reg))}")
    return reg[name]


def resolve_strategies(spec: ExperimentSpec, m: Model) -> tuple[Coalition, GeneralStrategy]:
    if not spec.coalition:
        raise UsageError("--coalition is required")
    try:
        agent_ids = [m.agent_index(name) for name in spec.coalition]
    except ValueError:
        raise UsageError(
            f"coalition {spec.coalition} not among agents {list(m.agent_names)}"
        ) from None
    coalition = Coalition(agent_ids)
    if len(spec.strategies) != len(spec.coalition):
        raise UsageError("need exactly one --strategy per coalition member")
    builtins = builtin_strategies()
    machines = {}
    for agent_name, ref in zip(spec.coalition, spec.strategies):
        a = m.agent_index(agent_name)
        if ref in builtins:
            machines[a] = builtins[ref].machine
        elif ref.endswith(".tm"):
            with open(ref) as fh:
                machines[a] = parse_tape_machine(fh.read(), name=os.path.basename(ref))
        elif ref.endswith(".svm"):
            with open(ref) as fh:
                machines[a] = parse_program(fh.read(), name=os.path.basename(ref))
        else:
            raise UsageError(
                f"unknown strategy {ref!r}: not a builtin ({', '.join(sorted(builtins))}) "
                "and not a .tm/.svm file"
            )
    return coalition, GeneralStrategy(coalition, machines, name="+".join(spec.strategies))


# ---------------------------------------------------------------------------
# Report emission
# ---------------------------------------------------------------------------


def emit_report(payload: dict, spec: ExperimentSpec, args, csv_rows=None, csv_header=None, figure=None):
    """Write text to stdout and optional JSON/CSV/PNG artifacts.

    The timestamp is the only non-seed-determined field in the JSON.
    """
    payload = dict(payload)
    payload["tool_version"] = __version__
    payload["seed"] = spec.seed
    payload["spec_hash"] = spec.digest()
    payload["generated_at"] = datetime.datetime.now(datetime.timezone.utc).isoformat()
    if getattr(args, "json", None):
        with open(args.json, "w") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True, default=str)
            fh.write("\n")
    if csv_rows is not None and getattr(args, "csv", None):
        with open(args.csv, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(csv_header)
            writer.writerows(csv_rows)
        if figure is not None and not getattr(args, "no_plot", False):
            plot_path = getattr(args, "plot", None) or os.path.splitext(args.csv)[0] + ".png"
            figure(plot_path)
    elif figure is not None and getattr(args, "plot", None):
        figure(args.plot)


def _print(line: str = ""):
    sys.stdout.write(line + "\n")


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def cmd_validate(spec: ExperimentSpec, args) -> int:
    m = load_model(spec)
    diags = validate_model(m)
    for d in diags:
        _print(str(d))
    _print(f"{'valid' if not diags else 'invalid'}: {len(diags)} diagnostic(s)")
    emit_report(
        {"command": "validate", "diagnostics": [str(d) for d in diags], "valid": not diags},
        spec,
        args,
    )
    return EXIT_OK if not diags else EXIT_NEGATIVE


def cmd_generate(spec: ExperimentSpec, args) -> int:
    m = load_model(spec)
    text = serialize_model(m)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
        _print(f"wrote {args.out}")
    else:
        sys.stdout.write(text)
    if args.enc:
        word = encode_model(m)
        with open(args.enc, "w") as fh:
            fh.write(word + "\n")
        _print(f"wrote {args.enc} ({len(word)} symbols)")
    return EXIT_OK


def cmd_encode(spec: ExperimentSpec, args) -> int:
    m = load_model(spec)
    word = encode_model(m)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(word + "\n")
        _print(f"wrote {args.out} ({len(word)} symbols)")
    else:
        _print(word)
    return EXIT_OK


def cmd_simulate(spec: ExperimentSpec, args) -> int:
    m = load_model(spec)
    coalition, gs = resolve_strategies(spec, m)
    depth = spec.depth or default_depth(m)
    budget = spec.budget or default_budget()
    tree = simulate_outcomes(m, coalition, gs.machines, depth, budget)
    paths = tree.paths()
    _print(f"{len(paths)} outcome path(s) at depth {depth}:")
    rows = []
    for states, kind, error in paths:
        names = [m.state_names[q] for q in states]
        if kind == "absorbing":
            shown = "·".join(names[:-1] + [f"({names[-1]})^ω"])
        elif kind == "error":
            shown = "·".join(names) + f"  [machine error: {error}]"
        else:
            shown = "·".join(names) + "·…"
        _print("  " + shown)
        rows.append([kind, " ".join(names), error or ""])
    emit_report(
        {"command": "simulate", "depth": depth, "paths": [
            {"kind": k, "states": [m.state_names[q] for q in s], "error": e} for s, k, e in paths
        ]},
        spec,
        args,
        csv_rows=rows,
        csv_header=["kind", "states", "error"],
    )
    return EXIT_OK if all(k != "error" for _, k, _ in paths) else EXIT_INCONCLUSIVE


def cmd_check(spec: ExperimentSpec, args) -> int:
    m = load_model(spec)
    coalition, gs = resolve_strategies(spec, m)
    if not spec.formula:
        raise UsageError("--formula is required for check")
    f = parse_formula(spec.formula)
    depth = spec.depth or default_depth(m)
    budget = spec.budget or default_budget()
    report = enforce_bounded(m, coalition, gs.machines, f, depth, budget)
    _print(f"verdict: {report.verdict} ({report.paths} path(s), depth {report.depth})")
    if report.evidence:
        _print("counterexample: " + report.pretty_evidence(m))
    for c in report.caveats:
        _print("note: " + c)
    emit_report(
        {
            "command": "check",
            "formula": spec.formula,
            "verdict": report.verdict,
            "evidence": report.evidence,
            "depth": report.depth,
            "paths": report.paths,
            "caveats": report.caveats,
        },
        spec,
        args,
    )
    return report.exit_code


def cmd_synthesize(spec: ExperimentSpec, args) -> int:
    if bool(spec.reach) == bool(spec.safe):
        raise UsageError("exactly one of --reach/--safe is required")
    f = parse_formula(f"F ({spec.reach})" if spec.reach else f"G ({spec.safe})")
    if getattr(args, "counter_model", None):
        # energy route: decide the whole capped family at the tightest cap
        from .synthesis import energy_reduce_check, parse_counter_model

        with open(args.counter_model) as fh:
            cm = parse_counter_model(fh.read())
        if not spec.agent:
            raise UsageError("--agent is required for synthesize")
        if spec.agent not in cm.agent_names:
            raise UsageError(f"unknown agent {spec.agent!r}")
        verdict = energy_reduce_check(cm, args.n0, cm.agent_names.index(spec.agent), f)
        _print(f"winning: {verdict.winning} for every cap >= {verdict.n0}")
        _print("note: " + verdict.note)
        emit_report(
            {
                "command": "synthesize",
                "objective": "F " + spec.reach if spec.reach else "G " + spec.safe,
                "winning": verdict.winning,
                "n0": verdict.n0,
                "note": verdict.note,
            },
            spec,
            args,
        )
        return EXIT_OK if verdict.winning else EXIT_NEGATIVE
    m = load_model(spec)
    if not spec.agent:
        raise UsageError("--agent is required for synthesize")
    try:
        agent = m.agent_index(spec.agent)
    except ValueError:
        raise UsageError(f"unknown agent {spec.agent!r}") from None
    result = synthesize(m, agent, f)
    _print(f"winning: {result.winning} ({len(result.game.nodes)} knowledge node(s))")
    if result.winning and args.compile_to:
        program = compile_knowledge_strategy(m, agent, result)
        with open(args.compile_to, "w") as fh:
            fh.write(program.source if program.source else "")
        _print(f"wrote {args.compile_to}")
    emit_report(
        {
            "command": "synthesize",
            "objective": "F " + spec.reach if spec.reach else "G " + spec.safe,
            "winning": result.winning,
            "knowledge_nodes": len(result.game.nodes),
            "region_size": len(result.region),
        },
        spec,
        args,
    )
    return EXIT_OK if result.winning else EXIT_NEGATIVE


def cmd_profile(spec: ExperimentSpec, args) -> int:
    if not spec.template:
        raise UsageError("profile needs --template")
    tpl = _template(spec.template)
    probe = tpl(spec.params[0])
    coalition, gs = resolve_strategies(spec, probe)
    budget = spec.budget or default_budget()
    profile = profile_strategy(
        tpl, gs, spec.params, budget, history_cap=spec.history_cap, seed=spec.seed
    )
    verdict = classify_growth(profile) if len(profile.rows) >= 6 else None
    _print(f"profiled {gs.name} on {spec.template} over {len(profile.rows)} instance(s)")
    for r in profile.rows:
        _print(
            f"  n={r.param}: enc={r.enc_model_len} |M|={r.abstract_size} "
            f"max_steps={r.max_steps} histories={r.histories} budget_hits={r.budget_hits}"
        )
    if verdict:
        _print(f"growth: {verdict.label()} (R²={verdict.fit:.4f}, {verdict.points} points)")

    def figure(path):
        from .plots import render_profile

        render_profile(profile, verdict, path)
        _print(f"wrote {path}")

    emit_report(
        {
            "command": "profile",
            "strategy": gs.name,
            "template": spec.template,
            "rows": [r.__dict__ for r in profile.rows],
            "growth": verdict.label() if verdict else None,
            "fit": verdict.fit if verdict else None,
            "budget": budget,
            "history_cap": spec.history_cap,
        },
        spec,
        args,
        csv_rows=[
            [r.param, r.enc_model_len, r.abstract_size, r.max_steps, r.histories, r.budget_hits]
            for r in profile.rows
        ],
        csv_header=["param", "enc_size", "abstract_size", "max_steps", "histories", "budget_hits"],
        figure=figure,
    )
    return EXIT_OK


def cmd_ability(spec: ExperimentSpec, args) -> int:
    if not spec.template:
        raise UsageError("ability needs --template")
    if not spec.formula:
        raise UsageError("--formula is required for ability")
    if not spec.bound:
        raise UsageError("--bound is required for ability")
    tpl = _template(spec.template)
    f = parse_formula(spec.formula)
    bound = parse_bound(spec.bound)
    budget = spec.budget or default_budget()
    probe = tpl(spec.params[0])
    coalition_names = spec.coalition
    if args.mode == "uniform" or spec.provider == "constant":
        coalition, gs = resolve_strategies(spec, probe)
        if args.mode == "uniform":
            report = check_uniform_ability(
                tpl, coalition, gs, f, spec.formula, bound, spec.params, budget,
                history_cap=spec.history_cap, seed=spec.seed,
            )
        else:
            report = check_adaptive_ability(
                tpl, coalition, constant_provider(gs), f, spec.formula, bound, spec.params,
                budget, history_cap=spec.history_cap, seed=spec.seed,
            )
    else:
        # synthesis provider: per-instance knowledge-game synthesis + compile
        if len(coalition_names) != 1:
            raise UsageError("the synthesis provider needs a singleton coalition")
        try:
            agent = probe.agent_index(coalition_names[0])
        except ValueError:
            raise UsageError(f"unknown agent {coalition_names[0]!r}") from None
        coalition = Coalition([agent])

        def provider(param, m):
            result = synthesize(m, agent, f)
            if not result.winning:
                return None
            program = compile_knowledge_strategy(m, agent, result)
            return GeneralStrategy(coalition, {agent: program}, name=f"synth@{param}")

        report = check_adaptive_ability(
            tpl, coalition, provider, f, spec.formula, bound, spec.params, budget,
            history_cap=spec.history_cap, seed=spec.seed,
        )

    _print(f"{report.mode} ability verdict: {report.verdict}")
    if report.growth:
        _print(f"growth: {report.growth.label()} (R²={report.growth.fit:.4f}) vs bound {report.bound}")
    if report.witness:
        _print(f"witness instance: param={report.witness['param']}")
    _print("note: " + report.caveat)

    def figure(path):
        from .plots import render_ability

        render_ability(report, path)
        _print(f"wrote {path}")

    emit_report(
        {
            "command": "ability",
            "mode": report.mode,
            "template": report.template,
            "coalition": list(report.coalition),
            "formula": report.formula,
            "bound": report.bound,
            "verdict": report.verdict,
            "growth": report.growth.label() if report.growth else None,
            "witness": report.witness,
            "caveat": report.caveat,
            "instances": [i.__dict__ for i in report.instances],
        },
        spec,
        args,
        csv_rows=[
            [i.param, i.enforcement, i.max_steps, i.enc_model_len, i.abstract_size, i.histories]
            for i in report.instances
        ],
        csv_header=["param", "enforcement", "max_steps", "enc_size", "abstract_size", "histories"],
        figure=figure,
    )
    return report.exit_code


# ---------------------------------------------------------------------------
# Argument wiring
# ---------------------------------------------------------------------------


def _add_common(p: argparse.ArgumentParser, model_source=True):
    if model_source:
        p.add_argument("--template", help="template name from the registry")
        p.add_argument("--param", dest="params", help="parameter (or range a..b / list) for the template")
        p.add_argument("--model", dest="model_file", help="model text file")
        p.add_argument("--dimacs", help="DIMACS cnf file (builds the satisfiability game)")
    p.add_argument("--spec", help="JSON experiment file preloading any of these options")
    p.add_argument("--coalition", help="comma-separated agent names")
    p.add_argument("--strategy", dest="strategies", help="comma list: builtin name or .tm/.svm file per agent")
    p.add_argument("--formula", help="objective formula")
    p.add_argument("--depth", type=int, help="exploration depth (default 2|St|+2)")
    p.add_argument("--budget", type=int, help=f"step budget (default {default_budget()})")
    p.add_argument("--seed", type=int, help="sampler seed, echoed in reports (default 0)")
    p.add_argument("--history-cap", type=int, help="max sampled histories per instance (default 10000)")
    p.add_argument("--json", help="write a JSON report here")
    p.add_argument("--csv", help="write a CSV report here")
    p.add_argument("--plot", help="write the report figure here (default: next to --csv)")
    p.add_argument("--no-plot", action="store_true", help="suppress the report figure")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stratbench",
        description="workbench for step-counted machine strategies in finite games",
    )
    parser.add_argument("--version", action="version", version=f"stratbench {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check model invariants")
    _add_common(p)

    p = sub.add_parser("generate", help="emit a model file and/or canonical encoding")
    _add_common(p)
    p.add_argument("--out", help="model text output path (stdout otherwise)")
    p.add_argument("--enc", help="also write the canonical {0,1,#} word here")

    p = sub.add_parser("encode", help="canonical {0,1,#} encoding of a model")
    _add_common(p)
    p.add_argument("--out", help="output path (stdout otherwise)")

    p = sub.add_parser("simulate", help="bounded outcome tree of a coalition strategy")
    _add_common(p)

    p = sub.add_parser("check", help="bounded enforcement check of a formula")
    _add_common(p)

    p = sub.add_parser("synthesize", help="knowledge-game synthesis for one agent")
    _add_common(p)
    p.add_argument("--agent", help="protagonist agent name")
    p.add_argument("--reach", help="reachability predicate (propositional formula)")
    p.add_argument("--safe", help="safety predicate (propositional formula)")
    p.add_argument("--compile-to", help="write the compiled strategy program here")
    p.add_argument("--counter-model", help="counter-model file: decide the whole capped family")
    p.add_argument("--n0", type=int, default=2, help="tightest counter cap for --counter-model")

    p = sub.add_parser("profile", help="step-count profile across template instances")
    _add_common(p)

    p = sub.add_parser("ability", help="uniform/adaptive ability check across instances")
    _add_common(p)
    p.add_argument("--mode", choices=["uniform", "adaptive"], default="uniform")
    p.add_argument("--bound", help="growth bound: constant|logarithmic|linear|polynomial:d|exponential")
    p.add_argument("--provider", choices=["constant", "synthesis"], default=None,
                   help="adaptive mode: reuse --strategy everywhere (default), or synthesize per instance")

    return parser


def spec_from_args(args) -> ExperimentSpec:
    preset = {}
    if getattr(args, "spec", None):
        with open(args.spec) as fh:
            preset = json.load(fh)
    mode = args.command
    if mode == "ability":
        mode = f"ability-{getattr(args, 'mode', 'uniform')}"
    spec = ExperimentSpec(mode=mode)
    for key in (
        "template", "model_file", "dimacs", "formula", "agent", "reach", "safe",
        "bound", "provider", "depth", "budget", "seed", "history_cap",
    ):
        value = getattr(args, key, None)
        if value is None and key in preset:
            value = preset[key]
        if value is not None:
            setattr(spec, key, value)
    params = getattr(args, "params", None) or preset.get("params")
    if params:
        spec.params = _parse_params(str(params)) if not isinstance(params, list) else list(params)
    coalition = getattr(args, "coalition", None) or preset.get("coalition")
    if coalition:
        spec.coalition = coalition.split(",") if isinstance(coalition, str) else list(coalition)
    strategies = getattr(args, "strategies", None) or preset.get("strategies")
    if strategies:
        spec.strategies = strategies.split(",") if isinstance(strategies, str) else list(strategies)
    return spec


_COMMANDS = {
    "validate": cmd_validate,
    "generate": cmd_generate,
    "encode": cmd_encode,
    "simulate": cmd_simulate,
    "check": cmd_check,
    "synthesize": cmd_synthesize,
    "profile": cmd_profile,
    "ability": cmd_ability,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        spec = spec_from_args(args)
        if spec.mode in ("profile", "ability") and not spec.params:
            raise UsageError("--param is required")
        if spec.mode in ("validate", "generate", "encode", "simulate", "check") and spec.template and not spec.params:
            raise UsageError("--param is required with --template")
        return _COMMANDS[args.command](spec, args)
    except (UsageError, FormulaSyntaxError, ModelFormatError, ClauseError, UnsupportedObjective) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_USAGE
    except FileNotFoundError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_USAGE
    except ValueError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
