import random
import unittest

from whyprov.errors import GoalNotDerivable
from whyprov.models import Atom, Fact, Program, Rule, Variable
from whyprov.services.closure import (
    Hyperedge,
    build_gri,
    closure_for,
    downward_closure,
    render_closure,
)
from whyprov.services.engine import fixpoint
from whyprov.services.generators import PROFILES, gen_3sat_instance, gen_random_instance, random_3cnf
from tests.base import TWO_SOURCES_FACTS, fact, instance


def _cur(predicate: str) -> str:
    return f"CurNode_{predicate}"


def rewritten_closure(p: Program, db, goal: Fact):
    """Downward closure computed by Datalog itself: CurNode_P marks reached facts and
    HEdge_i records every instantiation of rule i whose head is reached."""
    rules = list(p.rules)
    hedge_vars = []
    for i, rule in enumerate(p.rules):
        names = sorted(rule.variables())
        hedge_vars.append(names)
        hedge = Atom(f"HEdge_{i}", tuple(Variable(v) for v in names))
        rules.append(Rule(hedge, (Atom(_cur(rule.head.predicate), rule.head.args),) + rule.body))
        for atom in rule.body:
            rules.append(Rule(Atom(_cur(atom.predicate), atom.args), (hedge,)))
    seed_vars = tuple(Variable(f"g{i}") for i in range(goal.arity))
    rules.append(Rule(Atom(_cur(goal.predicate), seed_vars), (Atom("Goal", seed_vars),)))

    fix = fixpoint(Program(tuple(rules)), db.union([Fact("Goal", goal.args)]))
    nodes = {
        Fact(f.predicate[len("CurNode_"):], f.args)
        for f in fix.facts
        if f.predicate.startswith("CurNode_")
    }
    edges = set()
    for f in fix.facts:
        if not f.predicate.startswith("HEdge_"):
            continue
        i = int(f.predicate[len("HEdge_"):])
        h = dict(zip(hedge_vars[i], f.args))
        rule = p.rules[i]
        edges.add(Hyperedge.of(rule.head.ground(h), [a.ground(h) for a in rule.body]))
    return nodes, edges


class ClosureTests(unittest.TestCase):
    def test_accessibility_closure_of_d(self):
        q, db = instance()
        dc = closure_for(fixpoint(q.program, db), fact("A(d)"))
        self.assertEqual(dc.graph.stats(), {"nodes": 9, "hyperedges": 5, "edges": 10})
        self.assertEqual(
            dc.database_facts(db),
            sorted(db.facts),
        )

    def test_render_closure(self):
        q, db = instance(TWO_SOURCES_FACTS)
        dc = closure_for(fixpoint(q.program, db), fact("A(c)"))
        self.assertEqual(
            render_closure(dc).splitlines(),
            [
                "A(a) <- S(a)",
                "A(b) <- S(b)",
                "A(c) <- A(a), T(a,a,c)",
                "A(c) <- A(b), T(b,b,c)",
            ],
        )

    def test_hyperedge_body_is_a_set(self):
        edge = Hyperedge.of(fact("A(b)"), [fact("A(a)"), fact("A(a)"), fact("T(a,a,b)")])
        self.assertEqual(edge.body, (fact("A(a)"), fact("T(a,a,b)")))

    def test_goal_not_derivable(self):
        q, db = instance()
        fix = fixpoint(q.program, db)
        with self.assertRaises(GoalNotDerivable):
            closure_for(fix, fact("A(zzz)"))
        with self.assertRaises(GoalNotDerivable):
            downward_closure(build_gri(q.program, db, fix), fact("A(zzz)"))

    def test_on_demand_matches_full_grounding(self):
        cases = [instance(), instance(TWO_SOURCES_FACTS)]
        cases += [gen_random_instance(profile, seed) for profile in sorted(PROFILES) for seed in range(10)]
        for q, db in cases:
            fix = fixpoint(q.program, db)
            gri = build_gri(q.program, db, fix)
            for goal in sorted(fix.facts.by_predicate.get(q.answer_predicate, ())):
                full = downward_closure(gri, goal)
                lazy = closure_for(fix, goal)
                self.assertEqual(full.nodes, lazy.nodes)
                self.assertEqual(full.hyperedges, lazy.hyperedges)

    def test_matches_datalog_rewriting(self):
        cases = [instance(), instance(TWO_SOURCES_FACTS)]
        cases += [gen_random_instance(profile, seed) for profile in sorted(PROFILES) for seed in range(10)]
        rng = random.Random(5)
        for _ in range(3):
            q, db, _ = gen_3sat_instance(random_3cnf(2, 2, rng))
            cases.append((q, db))
        for q, db in cases:
            fix = fixpoint(q.program, db)
            for goal in sorted(fix.facts.by_predicate.get(q.answer_predicate, ())):
                nodes, edges = rewritten_closure(q.program, db, goal)
                dc = closure_for(fix, goal)
                self.assertEqual(set(dc.nodes), nodes)
                self.assertEqual(set(dc.hyperedges), edges)


if __name__ == "__main__":
    unittest.main()
