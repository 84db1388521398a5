import io

import pytest

from cflr.cli import (
    EXIT_DIVERGENCE,
    EXIT_INPUT,
    EXIT_OK,
    EXIT_TIMEOUT,
    EXIT_USAGE,
    main,
    run_check,
)
from cflr.grammar import ensure_wcnf, preset
from cflr.graph import load_graph
from cflr.solver import solve


@pytest.fixture
def dyck_path_graph(tmp_path):
    p = tmp_path / "path.txt"
    p.write_text("0 a 1\n1 a 2\n2 b 3\n3 b 4\n")
    return p


@pytest.fixture
def dyck_grammar_file(tmp_path):
    p = tmp_path / "dyck.cfg"
    p.write_text("S -> a S b | a b\n")
    return p


def read(path):
    return path.read_text()


class TestSolveCommand:
    def test_pairs_output(self, tmp_path, dyck_path_graph, dyck_grammar_file):
        out = tmp_path / "pairs.txt"
        rep = tmp_path / "report.txt"
        rc = main(
            [
                "solve",
                "--graph", str(dyck_path_graph),
                "--grammar", str(dyck_grammar_file),
                "--variant", "ma",
                "--output", str(out),
                "--report", str(rep),
            ]
        )
        assert rc == EXIT_OK
        assert read(out) == "0 4\n1 3\n"
        report = dict(
            line.split("=", 1) for line in read(rep).strip().splitlines()
        )
        assert report["variant"] == "ma"
        assert report["pairs.S"] == "2"
        assert int(report["pairs_total"]) == int(report["pairs.S"]) + int(
            report["pairs.a#t"]
        ) + int(report["pairs.b#t"]) + int(report["pairs.S#1"])
        assert int(report["iterations"]) > 0
        assert float(report["wall_seconds"]) >= 0

    def test_unknown_variant_is_usage_error(self, dyck_path_graph, dyck_grammar_file):
        with pytest.raises(SystemExit) as exc:
            main(
                [
                    "solve",
                    "--graph", str(dyck_path_graph),
                    "--grammar", str(dyck_grammar_file),
                    "--variant", "ma9",
                ]
            )
        assert exc.value.code == EXIT_USAGE

    def test_ma12345_selects_opt_preset(self, tmp_path):
        graph = tmp_path / "g.txt"
        graph.write_text("0 alloc 1\n")
        out = tmp_path / "pairs.txt"
        rep = tmp_path / "rep.txt"
        rc = main(
            [
                "solve",
                "--graph", str(graph),
                "--preset", "fsjpt",
                "--variant", "ma12345",
                "--output", str(out),
                "--report", str(rep),
            ]
        )
        assert rc == EXIT_OK
        assert "grammar=fsjpt-opt" in read(rep)
        assert read(out) == "0 1\n"  # PT -> alloc in the tuned grammar

    def test_ma12345_with_grammar_file_rejected(self, dyck_path_graph, dyck_grammar_file):
        rc = main(
            [
                "solve",
                "--graph", str(dyck_path_graph),
                "--grammar", str(dyck_grammar_file),
                "--variant", "ma12345",
            ]
        )
        assert rc == EXIT_INPUT

    def test_missing_grammar(self, dyck_path_graph):
        rc = main(["solve", "--graph", str(dyck_path_graph), "--variant", "ma"])
        assert rc == EXIT_INPUT

    def test_synthetic_instance_defaults_to_dyck(self, tmp_path):
        out = tmp_path / "pairs.txt"
        rc = main(
            [
                "solve",
                "--graph", "chain(4)",
                "--variant", "ma1",
                "--output", str(out),
                "--report", str(tmp_path / "r.txt"),
            ]
        )
        assert rc == EXIT_OK
        assert read(out) == "0 4\n1 3\n"

    def test_nonterminal_selection(self, tmp_path):
        graph = tmp_path / "g.txt"
        graph.write_text("0 call_f1 1\n1 ret_f1 2\n")
        out = tmp_path / "pairs.txt"
        rc = main(
            [
                "solve",
                "--graph", str(graph),
                "--preset", "cscvf-wcnf",
                "--variant", "ma14",
                "--nonterminal", "AR_f1",
                "--output", str(out),
                "--report", str(tmp_path / "r.txt"),
            ]
        )
        assert rc == EXIT_OK
        # only A(1,1) reaches the ret_f1 edge, so the family member holds (1,2)
        assert read(out) == "1 2\n"

    def test_unknown_nonterminal(self, tmp_path, dyck_path_graph, dyck_grammar_file):
        rc = main(
            [
                "solve",
                "--graph", str(dyck_path_graph),
                "--grammar", str(dyck_grammar_file),
                "--variant", "ma",
                "--nonterminal", "Bogus",
                "--output", str(tmp_path / "p.txt"),
                "--report", str(tmp_path / "r.txt"),
            ]
        )
        assert rc == EXIT_INPUT

    def test_timeout_exit_code(self, tmp_path):
        rc = main(
            [
                "solve",
                "--graph", "chain(512)",
                "--variant", "ma",
                "--timeout-secs", "0",
                "--output", str(tmp_path / "p.txt"),
                "--report", str(tmp_path / "r.txt"),
            ]
        )
        assert rc == EXIT_TIMEOUT

    def test_thread_count_does_not_change_bytes(self, tmp_path, dyck_path_graph, dyck_grammar_file):
        outputs = []
        reports = []
        for threads in ("1", "4"):
            out = tmp_path / f"pairs{threads}.txt"
            rep = tmp_path / f"rep{threads}.txt"
            rc = main(
                [
                    "solve",
                    "--graph", str(dyck_path_graph),
                    "--grammar", str(dyck_grammar_file),
                    "--variant", "ma1234",
                    "--threads", threads,
                    "--output", str(out),
                    "--report", str(rep),
                ]
            )
            assert rc == EXIT_OK
            outputs.append(read(out).encode())
            counters = {
                k: v
                for k, v in (
                    line.split("=", 1) for line in read(rep).strip().splitlines()
                )
                if k in ("spgemm_calls", "scalar_ops", "union_entries", "iterations")
            }
            reports.append(counters)
        assert outputs[0] == outputs[1]
        assert reports[0] == reports[1]


class TestCheckCommand:
    def test_all_variants_agree(self, dyck_path_graph, dyck_grammar_file):
        rc = main(
            [
                "check",
                "--graph", str(dyck_path_graph),
                "--grammar", str(dyck_grammar_file),
            ]
        )
        assert rc == EXIT_OK

    def test_empty_graph_ok(self, tmp_path, dyck_grammar_file):
        graph = tmp_path / "empty.txt"
        graph.write_text("# nothing here\n")
        rc = main(
            ["check", "--graph", str(graph), "--grammar", str(dyck_grammar_file)]
        )
        assert rc == EXIT_OK

    def test_corrupted_solver_reports_divergence(self):
        g = ensure_wcnf(preset("dyck"))
        graph = load_graph("0 a 1\n1 a 2\n2 b 3\n3 b 4\n", g)

        def corrupted(graph, g, flags, threads=1):
            result = solve(graph, g, flags, threads=threads)
            victim = sorted(result.triples(), key=lambda t: (t[0].name(), t[1], t[2]))[0]

            class Fake:
                def triples(self):
                    return frozenset(t for t in result.triples() if t != victim)

            return Fake()

        buf = io.StringIO()
        rc = run_check(graph, g, ["ma1"], solve_fn=corrupted, out=buf)
        assert rc == EXIT_DIVERGENCE
        text = buf.getvalue()
        assert "divergence:" in text and "pair=(" in text and "oracle=present" in text

    def test_oracle_guard(self, tmp_path, dyck_grammar_file):
        graph = tmp_path / "big.txt"
        graph.write_text("\n".join(f"{i} a {i + 1}" for i in range(600)))
        args = ["check", "--graph", str(graph), "--grammar", str(dyck_grammar_file)]
        assert main(args) == EXIT_INPUT
        assert main(args + ["--oracle-limit", "1000"]) == EXIT_OK


class TestBenchCommand:
    def _records(self, text):
        records = []
        for block in text.strip().split("\n\n"):
            records.append(
                dict(line.split("=", 1) for line in block.strip().splitlines())
            )
        return records

    def test_single_rep_has_no_std(self, tmp_path):
        rep = tmp_path / "bench.txt"
        rc = main(
            [
                "bench",
                "--graph", "chain(16)",
                "--variants", "ma,ma1",
                "--reps", "1",
                "--report", str(rep),
            ]
        )
        assert rc == EXIT_OK
        for rec in self._records(read(rep)):
            assert rec["std_seconds"] == "n/a"
            assert rec["reps"] == "1"

    def test_variants_report_identical_pair_counts(self, tmp_path):
        rep = tmp_path / "bench.txt"
        rc = main(
            [
                "bench",
                "--graph", "chain(16)",
                "--variants", "ma,ma1,ma14,ma1234",
                "--reps", "2",
                "--report", str(rep),
            ]
        )
        assert rc == EXIT_OK
        records = self._records(read(rep))
        assert len(records) == 4
        pair_keys = [
            {k: v for k, v in rec.items() if k.startswith("pairs")} for rec in records
        ]
        assert all(pk == pair_keys[0] for pk in pair_keys)
        assert all("mean_seconds" in rec for rec in records)

    def test_counter_ratio_visible_in_bench(self, tmp_path):
        rep = tmp_path / "bench.txt"
        rc = main(
            [
                "bench",
                "--graph", "chain(128)",
                "--variants", "ma,ma1",
                "--reps", "1",
                "--report", str(rep),
            ]
        )
        assert rc == EXIT_OK
        rec = {r["variant"]: r for r in self._records(read(rep))}
        assert int(rec["ma"]["scalar_ops"]) > int(rec["ma1"]["scalar_ops"])
