import importlib.util
import json
import os
import unittest

from tests.base import TWO_SOURCES_FACTS, BaseTestCase


def stdout_lines(result):
    # summaries and proof trees go to stderr with a leading "#"
    return [line for line in result.output.splitlines() if line and not line.startswith("#")]


class EvalCommandTests(BaseTestCase):
    def test_prints_derived_facts(self):
        program, facts = self.accessibility_files()
        result = self.invoke("eval", program, facts)
        self.assertEqual(result.exit_code, 0, result.output)
        self.assertEqual(stdout_lines(result), ["A(a)", "A(b)", "A(c)", "A(d)"])

    def test_json_output(self):
        program, facts = self.accessibility_files()
        result = self.invoke("eval", program, facts, "--predicate", "A", "--output", "json")
        self.assertEqual(result.exit_code, 0, result.output)
        payload = json.loads(result.output)
        self.assertEqual(payload["answers"], {"A": [["a"], ["b"], ["c"], ["d"]]})
        self.assertEqual(payload["facts"], 9)
        self.assertFalse(payload["linear"])

    def test_empty_database(self):
        program, facts = self.accessibility_files("")
        result = self.invoke("eval", program, facts)
        self.assertEqual(result.exit_code, 0)
        self.assertEqual(stdout_lines(result), [])

    def test_syntax_error(self):
        program = self.write("broken.dl", "A(x) :- S(x)\n")
        facts = self.write("db.facts", "S(a)\n")
        result = self.invoke("eval", program, facts)
        self.assertEqual(result.exit_code, 2)

    def test_unknown_predicate(self):
        program, facts = self.accessibility_files()
        result = self.invoke("eval", program, facts, "-p", "S")
        self.assertEqual(result.exit_code, 2)

    def test_idb_fact_in_database(self):
        program, facts = self.accessibility_files("A(a)\n")
        result = self.invoke("eval", program, facts)
        self.assertEqual(result.exit_code, 2)


class ExplainCommandTests(BaseTestCase):
    def test_two_sources(self):
        program, facts = self.accessibility_files(TWO_SOURCES_FACTS)
        result = self.invoke("explain", program, facts, "A(d)")
        self.assertEqual(result.exit_code, 0, result.output)
        self.assertEqual(
            sorted(stdout_lines(result)),
            ["S(a); T(a,a,c); T(c,c,d)", "S(b); T(b,b,c); T(c,c,d)"],
        )
        self.assertIn("# members=2 status=Exhausted", result.output)

    def test_limit(self):
        program, facts = self.accessibility_files(TWO_SOURCES_FACTS)
        result = self.invoke("explain", program, facts, "A(d)", "--limit", "1", "--acyclicity", "tc")
        self.assertEqual(result.exit_code, 0, result.output)
        self.assertEqual(len(stdout_lines(result)), 1)
        self.assertIn("status=LimitReached", result.output)

    def test_not_an_answer(self):
        program, facts = self.accessibility_files()
        result = self.invoke("explain", program, facts, "A(zzz)")
        self.assertEqual(result.exit_code, 3)

    def test_not_an_answer_json_envelope(self):
        program, facts = self.accessibility_files()
        result = self.invoke("explain", program, facts, "A(zzz)", "--output", "json")
        self.assertEqual(result.exit_code, 3)
        self.assertEqual(json.loads(result.output)["error"], "tuple_not_answer")

    def test_goal_arity(self):
        program, facts = self.accessibility_files()
        result = self.invoke("explain", program, facts, "A(a,b)")
        self.assertEqual(result.exit_code, 2)

    def test_json_with_witness(self):
        program, facts = self.accessibility_files()
        result = self.invoke("explain", program, facts, "A(d)", "--output", "json", "--witness")
        self.assertEqual(result.exit_code, 0, result.output)
        payload = json.loads(result.output)
        self.assertEqual(payload["goal"], "A(d)")
        self.assertEqual([m["facts"] for m in payload["members"]], [["S(a)", "T(a,a,d)"]])
        self.assertTrue(payload["members"][0]["tree"].startswith("digraph proof {"))
        self.assertEqual(payload["summary"]["status"], "Exhausted")

    def test_witness_text(self):
        program, facts = self.accessibility_files()
        result = self.invoke("explain", program, facts, "A(d)", "--witness")
        self.assertEqual(result.exit_code, 0, result.output)
        self.assertEqual(stdout_lines(result), ["S(a); T(a,a,d)"])


class CheckCommandTests(BaseTestCase):
    def test_member(self):
        program, facts = self.accessibility_files()
        subset = self.write("subset.facts", "S(a)\nT(a,a,d)\n")
        result = self.invoke("check", program, facts, "A(d)", subset)
        self.assertEqual(result.exit_code, 0, result.output)
        self.assertEqual(stdout_lines(result), ["MEMBER"])

    def test_empty_subset(self):
        program, facts = self.accessibility_files()
        subset = self.write("subset.facts", "")
        result = self.invoke("check", program, facts, "A(d)", subset)
        self.assertEqual(result.exit_code, 1)
        self.assertEqual(stdout_lines(result), ["NOT-MEMBER"])

    def test_ambiguous_support(self):
        program, facts = self.accessibility_files(TWO_SOURCES_FACTS)
        result = self.invoke("check", program, facts, "A(d)", facts)
        self.assertEqual(result.exit_code, 1)

    def test_foreign_fact(self):
        program, facts = self.accessibility_files()
        subset = self.write("subset.facts", "S(z)\n")
        result = self.invoke("check", program, facts, "A(d)", subset)
        self.assertEqual(result.exit_code, 2)


class ExportDimacsCommandTests(BaseTestCase):
    def test_stdout(self):
        program, facts = self.accessibility_files()
        result = self.invoke("export-dimacs", program, facts, "A(d)")
        self.assertEqual(result.exit_code, 0, result.output)
        self.assertTrue(any(line.startswith("p cnf ") for line in result.output.splitlines()))

    def test_file_and_var_map(self):
        program, facts = self.accessibility_files()
        out = os.path.join(self.tmpdir, "a_d.cnf")
        contents = []
        for _ in range(2):
            result = self.invoke("export-dimacs", program, facts, "A(d)", "-o", out, "--acyclicity", "tc")
            self.assertEqual(result.exit_code, 0, result.output)
            with open(out, "rb") as fh:
                contents.append(fh.read())
        self.assertEqual(contents[0], contents[1])
        self.assertIn(b"c acyclicity transitive_closure", contents[0])
        with open(out + ".vars", encoding="utf-8") as fh:
            self.assertEqual(fh.readline(), "var 1 node A(a)\n")

    def test_not_derivable(self):
        program, facts = self.accessibility_files()
        result = self.invoke("export-dimacs", program, facts, "A(zzz)")
        self.assertEqual(result.exit_code, 3)


class BenchCommandTests(BaseTestCase):
    def run_bench(self, *extra):
        result = self.invoke("bench", "--nodes", "8", "--edges", "12", "--tuples", "2", "--seed", "1", *extra)
        self.assertEqual(result.exit_code, 0, result.output)
        return json.loads(result.output)

    def test_records(self):
        payload = self.run_bench("--limit", "5")
        self.assertEqual(len(payload["records"]), 2)
        self.assertEqual(payload["scenario"]["facts"], 12)
        for record in payload["records"]:
            self.assertLessEqual(record["members"], 5)
            self.assertIn(record["status"], ("Exhausted", "LimitReached"))

    def test_tuple_sample_is_seeded(self):
        first = [r["tuple"] for r in self.run_bench("--limit", "1")["records"]]
        again = [r["tuple"] for r in self.run_bench("--limit", "1", "--workers", "2")["records"]]
        self.assertEqual(first, again)

    def test_limit_zero_times_encoding_only(self):
        payload = self.run_bench("--limit", "0")
        for record in payload["records"]:
            self.assertEqual(record["members"], 0)
            self.assertIsNotNone(record["encoding"])

    def test_edges_file(self):
        path = self.write("graph.edges", "# source target\n1 2\n2 3\n3 1\n")
        result = self.invoke("bench", "--edges-file", path, "--tuples", "3", "--limit", "10")
        self.assertEqual(result.exit_code, 0, result.output)
        payload = json.loads(result.output)
        self.assertEqual(payload["answers"], 9)
        self.assertEqual(len(payload["records"]), 3)


class SweepCommandTests(BaseTestCase):
    def test_rank_depth(self):
        result = self.invoke("sweep", "rank-depth", "-n", "3")
        self.assertEqual(result.exit_code, 0, result.output)
        report = json.loads(result.output)
        self.assertTrue(report["passed"])
        self.assertEqual(report["instances"], 3)

    def test_unwhy_single_profile(self):
        result = self.invoke("sweep", "unwhy", "-n", "2", "--profile", "tiny-linear")
        self.assertEqual(result.exit_code, 0, result.output)
        self.assertEqual(json.loads(result.output)["instances"], 3)

    @unittest.skipUnless(importlib.util.find_spec("pysat"), "python-sat is not installed")
    def test_unwhy_with_compare_backend(self):
        result = self.invoke(
            "sweep", "unwhy", "-n", "2", "--profile", "tiny-nonlinear", "--compare-backend", "pysat:glucose4"
        )
        self.assertEqual(result.exit_code, 0, result.output)
        self.assertTrue(json.loads(result.output)["passed"])
