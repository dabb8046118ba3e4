import json
import random

import pytest

from stratbench.cli import main
from stratbench.modeltext import ModelFormatError, parse_model, serialize_model
from stratbench.templates import gen_coffee

from conftest import make_random_model


class TestModelText:
    def test_roundtrip_identity_on_corpus(self):
        rng = random.Random(404)
        for _ in range(40):
            m = make_random_model(rng)
            text = serialize_model(m)
            m2 = parse_model(text)
            assert m2 == m
            assert serialize_model(m2) == text

    def test_roundtrip_templates(self, coffee3, satgame_demo):
        for m in (coffee3, satgame_demo, gen_coffee(5)):
            assert parse_model(serialize_model(m)) == m

    def test_unknown_name_rejected(self):
        with pytest.raises(ModelFormatError, match="unknown state"):
            parse_model("agents: a\nstates: q0\ninit: q9\nactions: x\nrep a q0: x\ntrans q0 x -> q0\n")

    def test_missing_section_rejected(self):
        with pytest.raises(ModelFormatError, match="missing required"):
            parse_model("agents: a\n")


def run_cli(*argv):
    return main(list(argv))


class TestCli:
    def test_generate_matches_library(self, tmp_path, capsys):
        out = tmp_path / "coffee3.model"
        assert run_cli("generate", "--template", "coffee", "--param", "3", "--out", str(out)) == 0
        assert parse_model(out.read_text()) == gen_coffee(3)

    def test_generate_encoding_artifact(self, tmp_path):
        out = tmp_path / "m.model"
        enc = tmp_path / "m.enc"
        run_cli("generate", "--template", "coffee", "--param", "2", "--out", str(out), "--enc", str(enc))
        from stratbench.encoding import encode_model

        assert enc.read_text().strip() == encode_model(gen_coffee(2))

    def test_validate_roundtrip_file(self, tmp_path):
        out = tmp_path / "m.model"
        run_cli("generate", "--template", "coffee", "--param", "3", "--out", str(out))
        assert run_cli("validate", "--model", str(out)) == 0

    def test_check_exit_codes(self, tmp_path):
        assert run_cli(
            "check", "--template", "coffee", "--param", "5",
            "--coalition", "Bob", "--strategy", "bob_fib_memo",
            "--formula", "F sugar_Bob",
        ) == 0
        assert run_cli(
            "check", "--template", "coffee", "--param", "5",
            "--coalition", "Alice", "--strategy", "alice_skip",
            "--formula", "F sugar_Alice",
        ) == 1  # Bob can push the count away from Alice's bit

    def test_synthesize_exit_codes(self, tmp_path):
        unsat = tmp_path / "u.cnf"
        unsat.write_text("p cnf 1 2\n1 0\n-1 0\n")
        assert run_cli("synthesize", "--dimacs", str(unsat), "--agent", "v", "--reach", "win") == 1
        sat = tmp_path / "s.cnf"
        sat.write_text("p cnf 3 2\n1 -2 0\n-1 3 0\n")
        assert run_cli("synthesize", "--dimacs", str(sat), "--agent", "v", "--reach", "win") == 0

    def test_usage_errors_exit_3(self, tmp_path):
        assert run_cli("check", "--template", "coffee", "--param", "3") == 3  # no coalition
        assert run_cli("generate", "--template", "nope", "--param", "3") == 3
        assert run_cli("check", "--template", "coffee", "--param", "3",
                       "--coalition", "Bob", "--strategy", "bob_fib_memo",
                       "--formula", "F (") == 3
        bad = tmp_path / "bad.cnf"
        bad.write_text("p cnf 1 1\n0\n")
        assert run_cli("synthesize", "--dimacs", str(bad), "--agent", "v", "--reach", "win") == 3

    def test_simulate_lists_lassos(self, capsys):
        assert run_cli(
            "simulate", "--template", "coffee", "--param", "3",
            "--coalition", "Bob", "--strategy", "bob_fib_naive", "--depth", "4",
        ) == 0
        out = capsys.readouterr().out
        assert "(1/3)^ω" in out
        assert out.count("0/0") == 2

    def test_profile_csv_schema_and_plot(self, tmp_path):
        csv_path = tmp_path / "profile.csv"
        code = run_cli(
            "profile", "--template", "coffee", "--param", "4..10",
            "--coalition", "Bob", "--strategy", "bob_fib_memo",
            "--csv", str(csv_path), "--history-cap", "80",
        )
        assert code == 0
        header = csv_path.read_text().splitlines()[0]
        assert header == "param,enc_size,abstract_size,max_steps,histories,budget_hits"
        assert (tmp_path / "profile.png").exists()  # figure lands next to the CSV

    def test_profile_no_plot(self, tmp_path):
        csv_path = tmp_path / "p.csv"
        run_cli(
            "profile", "--template", "coffee", "--param", "4..10",
            "--coalition", "Bob", "--strategy", "bob_fib_memo",
            "--csv", str(csv_path), "--no-plot", "--history-cap", "80",
        )
        assert not (tmp_path / "p.png").exists()

    def test_ability_verdict_exit(self):
        assert run_cli(
            "ability", "--mode", "uniform", "--template", "coffee", "--param", "2..12",
            "--coalition", "Alice", "--strategy", "alice_skip",
            "--formula", "G !sugar_Alice", "--bound", "constant", "--no-plot",
            "--history-cap", "60",
        ) == 0

    def test_report_determinism_modulo_timestamp(self, tmp_path):
        reports = []
        for i in range(2):
            path = tmp_path / f"r{i}.json"
            run_cli(
                "check", "--template", "coffee", "--param", "3",
                "--coalition", "Bob", "--strategy", "bob_fib_memo",
                "--formula", "F sugar_Bob", "--seed", "7", "--json", str(path),
            )
            data = json.loads(path.read_text())
            data.pop("generated_at")
            reports.append(json.dumps(data, sort_keys=True))
        assert reports[0] == reports[1]

    def test_report_carries_version_seed_and_hash(self, tmp_path):
        path = tmp_path / "r.json"
        run_cli(
            "check", "--template", "coffee", "--param", "3",
            "--coalition", "Bob", "--strategy", "bob_fib_memo",
            "--formula", "F sugar_Bob", "--seed", "13", "--json", str(path),
        )
        data = json.loads(path.read_text())
        assert data["seed"] == 13
        assert data["tool_version"]
        assert data["spec_hash"]

    def test_counterexample_printed_in_text_mode(self, capsys):
        run_cli(
            "check", "--template", "coffee", "--param", "2",
            "--coalition", "Alice", "--strategy", "alice_skip",
            "--formula", "F sugar_Alice",
        )
        out = capsys.readouterr().out
        assert "counterexample:" in out

    def test_spec_file_preloads_options(self, tmp_path):
        spec = tmp_path / "exp.json"
        spec.write_text(json.dumps({
            "template": "coffee",
            "params": [5],
            "coalition": ["Bob"],
            "strategies": ["bob_fib_memo"],
            "formula": "F sugar_Bob",
        }))
        assert run_cli("check", "--spec", str(spec)) == 0

    def test_strategy_file_loading(self, tmp_path):
        prog = tmp_path / "skip.svm"
        prog.write_text("emit 1\n")
        assert run_cli(
            "check", "--template", "coffee", "--param", "3",
            "--coalition", "Alice", "--strategy", str(prog),
            "--formula", "G !sugar_Alice",
        ) == 0

    def test_ability_adaptive_synthesis_provider(self):
        assert run_cli(
            "ability", "--mode", "adaptive", "--provider", "synthesis",
            "--template", "satunits", "--param", "2..9",
            "--coalition", "v", "--formula", "F win", "--bound", "polynomial:1",
            "--no-plot", "--history-cap", "150",
        ) == 0


class TestMoreExitPaths:
    def test_inconclusive_check_exits_2(self):
        # a depth too shallow to decide the eventuality
        assert run_cli(
            "check", "--template", "coffee", "--param", "5",
            "--coalition", "Bob", "--strategy", "bob_fib_memo",
            "--formula", "F sugar_Bob", "--depth", "2",
        ) == 2

    def test_budget_env_var_respected(self, monkeypatch):
        from stratbench.machine import default_budget

        monkeypatch.setenv("STRATBENCH_BUDGET", "123456")
        assert default_budget() == 123456
        monkeypatch.setenv("STRATBENCH_BUDGET", "garbage")
        assert default_budget() == 10_000_000

    def test_counter_model_energy_route(self, tmp_path):
        cmfile = tmp_path / "m.cm"
        cmfile.write_text(
            "agents: ctrl\nstates: s goal\ninit: s\nactions: inc go\n"
            "props: win\nlabel win: goal\ncounters: 1\n"
            "rep ctrl s: inc go\nrep ctrl goal: inc\n"
            "ctrans s inc [] {++c0} -> s\n"
            "ctrans s go [c0>0] {} -> goal\n"
            "ctrans goal inc [] {} -> goal\n"
        )
        assert run_cli(
            "synthesize", "--counter-model", str(cmfile), "--n0", "2",
            "--agent", "ctrl", "--reach", "win",
        ) == 0
