import itertools
import random
import unittest

from whyprov.errors import ExternalSolverError, SolverTimeout
from whyprov.services.satcore import (
    SolveStatus,
    SolverState,
    _luby,
    make_solver,
    parse_solver_output,
    solve_clauses,
)


def pigeonhole(pigeons, holes):
    var = lambda p, h: p * holes + h + 1  # noqa: E731
    clauses = [[var(p, h) for h in range(holes)] for p in range(pigeons)]
    for h in range(holes):
        for p, q in itertools.combinations(range(pigeons), 2):
            clauses.append([-var(p, h), -var(q, h)])
    return clauses


def brute_force(clauses, n):
    for bits in itertools.product((False, True), repeat=n):
        if all(any(bits[abs(l) - 1] == (l > 0) for l in c) for c in clauses):
            return True
    return False


def random_clauses(rng, n, count):
    return [
        [rng.choice((-1, 1)) * rng.randint(1, n) for _ in range(rng.randint(1, 3))]
        for _ in range(count)
    ]


def satisfies(model, clauses):
    return all(any(model[abs(l)] == (l > 0) for l in c) for c in clauses)


class SolverStateTests(unittest.TestCase):
    def test_agrees_with_truth_tables(self):
        rng = random.Random(11)
        for _ in range(300):
            n = rng.randint(1, 7)
            clauses = random_clauses(rng, n, rng.randint(1, 25))
            result = solve_clauses(clauses, n)
            self.assertEqual(result.satisfiable, brute_force(clauses, n), clauses)
            if result.satisfiable:
                self.assertTrue(satisfies(result.model, clauses))

    def test_agrees_with_pysat_up_to_sixteen_variables(self):
        rng = random.Random(5)
        for _ in range(1000):
            n = rng.randint(1, 16)
            clauses = random_clauses(rng, n, rng.randint(1, 5 * n))
            result = solve_clauses(clauses, n)
            reference = solve_clauses(clauses, n, backend="pysat:minisat22")
            self.assertEqual(result.satisfiable, reference.satisfiable, clauses)
            if result.satisfiable:
                self.assertTrue(satisfies(result.model, clauses))

    def test_random_3cnf_at_ratio_two(self):
        rng = random.Random(50)
        clauses = [
            [v if rng.random() < 0.5 else -v for v in rng.sample(range(1, 51), 3)]
            for _ in range(100)
        ]
        result = solve_clauses(clauses, 50)
        self.assertTrue(result.satisfiable)
        self.assertTrue(satisfies(result.model, clauses))
        self.assertTrue(solve_clauses(clauses, 50, backend="pysat:glucose4").satisfiable)

    def test_pigeonhole_is_unsatisfiable(self):
        self.assertEqual(solve_clauses(pigeonhole(4, 3)).status, SolveStatus.UNSAT)
        self.assertTrue(solve_clauses(pigeonhole(3, 3)).satisfiable)

    def test_incremental_clauses(self):
        solver = SolverState()
        solver.add_clause([1, 2])
        seen = []
        while True:
            result = solver.solve()
            if not result.satisfiable:
                break
            seen.append((result.model[1], result.model[2]))
            solver.add_clause([-1 if result.model[1] else 1, -2 if result.model[2] else 2])
        self.assertEqual(sorted(seen), [(False, True), (True, False), (True, True)])

    def test_empty_clause(self):
        solver = SolverState(2)
        solver.add_clause([])
        self.assertFalse(solver.solve().satisfiable)

    def test_contradictory_units(self):
        self.assertFalse(solve_clauses([[1], [-1]]).satisfiable)

    def test_tautology_is_ignored(self):
        result = solve_clauses([[1, -1], [-2]], 2)
        self.assertTrue(result.satisfiable)
        self.assertFalse(result.model[2])

    def test_zero_literal_rejected(self):
        with self.assertRaises(ValueError):
            SolverState().add_clause([1, 0])

    def test_model_covers_declared_variables(self):
        result = solve_clauses([[1]], 4)
        self.assertEqual(sorted(result.model), [1, 2, 3, 4])

    def test_conflict_budget(self):
        solver = SolverState(conflict_budget=1)
        for clause in pigeonhole(6, 5):
            solver.add_clause(clause)
        with self.assertRaises(SolverTimeout):
            solver.solve()

    def test_luby_sequence(self):
        self.assertEqual([_luby(2, i) for i in range(7)], [1, 1, 2, 1, 1, 2, 4])


class BackendTests(unittest.TestCase):
    def test_unknown_backend(self):
        with self.assertRaises(ValueError):
            make_solver("minisat-by-hand")

    def test_external_requires_command(self):
        with self.assertRaises(ExternalSolverError):
            make_solver("external")
        with self.assertRaises(ExternalSolverError):
            make_solver("external", external_command="   ")

    def test_internal_is_default(self):
        self.assertIsInstance(make_solver(), SolverState)


class SolverOutputTests(unittest.TestCase):
    def test_exit_code_ten_with_model(self):
        result = parse_solver_output("s SATISFIABLE\nv 1 -2\nv 3 0\n", 10, 3)
        self.assertTrue(result.satisfiable)
        self.assertEqual(result.model, {1: True, 2: False, 3: True})

    def test_exit_code_twenty(self):
        self.assertEqual(parse_solver_output("", 20, 3).status, SolveStatus.UNSAT)

    def test_status_line_without_exit_code(self):
        self.assertEqual(parse_solver_output("s UNSATISFIABLE\n", 0, 1).status, SolveStatus.UNSAT)
        self.assertTrue(parse_solver_output("s SATISFIABLE\nv -1 0\n", 0, 1).satisfiable)

    def test_missing_values_default_to_false(self):
        result = parse_solver_output("s SATISFIABLE\nv 2 0\n", 10, 3)
        self.assertEqual(result.model, {1: False, 2: True, 3: False})

    def test_unknown_status(self):
        with self.assertRaises(ExternalSolverError):
            parse_solver_output("s UNKNOWN\n", 0, 2)


if __name__ == "__main__":
    unittest.main()
