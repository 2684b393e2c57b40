import unittest

from whyprov.errors import NotASubset, OracleTooLarge
from whyprov.models import Database
from whyprov.services.encoder import TRANSITIVE_CLOSURE
from whyprov.services.generators import PROFILES, gen_random_instance
from whyprov.services.prooftrees import (
    is_unambiguous,
    oracle_unwhy,
    support,
    validate_compressed_dag,
    validate_tree,
)
from whyprov.services.provenance import (
    ProvenanceContext,
    SessionStatus,
    check_membership,
    enumerate_provenance,
    format_member_text,
    members_to_json,
)
from tests.base import TWO_SOURCES_FACTS, fact, facts, instance

LEFT = facts("S(a)", "T(a,a,c)", "T(c,c,d)")
RIGHT = facts("S(b)", "T(b,b,c)", "T(c,c,d)")


class EnumerationTests(unittest.TestCase):
    def setUp(self):
        self.q, self.db = instance(TWO_SOURCES_FACTS)

    def test_two_sources_members(self):
        session = enumerate_provenance(self.q, self.db, ("d",))
        members = session.collect()
        self.assertEqual({m.facts for m in members}, {LEFT, RIGHT})
        self.assertEqual([m.ordinal for m in members], [0, 1])
        self.assertEqual(session.status, SessionStatus.EXHAUSTED)

    def test_members_never_repeat(self):
        for strategy in ("tc", "ve"):
            session = enumerate_provenance(self.q, self.db, ("c",), acyclicity=strategy)
            found = [m.facts for m in session]
            self.assertEqual(len(found), len(set(found)))
            self.assertEqual(set(found), {facts("S(a)", "T(a,a,c)"), facts("S(b)", "T(b,b,c)")})

    def test_limit(self):
        session = enumerate_provenance(self.q, self.db, ("d",), max_members=1)
        self.assertEqual(len(session.collect()), 1)
        self.assertEqual(session.status, SessionStatus.LIMIT_REACHED)

    def test_limit_equal_to_count_still_reports_limit(self):
        session = enumerate_provenance(self.q, self.db, ("d",), max_members=2)
        session.collect()
        self.assertEqual(session.status, SessionStatus.LIMIT_REACHED)

    def test_not_an_answer(self):
        session = enumerate_provenance(self.q, self.db, ("zzz",))
        self.assertFalse(session.is_answer)
        self.assertEqual(session.collect(), [])
        self.assertEqual(session.status, SessionStatus.EXHAUSTED)
        self.assertIsNone(session.summary()["closure"])

    def test_accessibility_single_member(self):
        q, db = instance()
        session = enumerate_provenance(q, db, ("d",), acyclicity=TRANSITIVE_CLOSURE)
        self.assertEqual([m.facts for m in session], [facts("S(a)", "T(a,a,d)")])
        self.assertEqual(session.strategy, TRANSITIVE_CLOSURE)

    def test_witnesses(self):
        session = enumerate_provenance(self.q, self.db, ("d",), decode_witness=True)
        for member in session:
            self.assertTrue(validate_compressed_dag(member.witness, self.q.program, self.db, fact("A(d)")))
            tree = member.unravel(self.q.program)
            self.assertTrue(validate_tree(tree, self.q.program, self.db, fact("A(d)")))
            self.assertTrue(is_unambiguous(tree))
            self.assertEqual(support(tree), member.facts)

    def test_unravel_needs_witness(self):
        member = next(iter(enumerate_provenance(self.q, self.db, ("d",))))
        with self.assertRaises(ValueError):
            member.unravel(self.q.program)

    def test_summary(self):
        session = enumerate_provenance(self.q, self.db, ("d",))
        session.collect()
        summary = session.summary()
        self.assertEqual(summary["members"], 2)
        self.assertEqual(summary["status"], "Exhausted")
        self.assertEqual(summary["closure"], {"nodes": 9, "hyperedges": 5, "edges": 8})
        self.assertLessEqual(summary["delay"]["min"], summary["delay"]["max"])

    def test_matches_oracle_on_random_instances(self):
        for profile in sorted(PROFILES):
            for seed in range(8):
                q, db = gen_random_instance(profile, seed)
                ctx = ProvenanceContext(q, db)
                for answer in ctx.answers():
                    try:
                        expected = oracle_unwhy(q, db, answer, fix=ctx.fix)
                    except OracleTooLarge:
                        continue
                    got = {m.facts for m in ctx.session(answer)}
                    self.assertEqual(got, expected, (profile, seed, answer))


class MembershipTests(unittest.TestCase):
    def test_accessibility(self):
        q, db = instance()
        self.assertTrue(check_membership(q, db, ("d",), Database(facts("S(a)", "T(a,a,d)"))))
        self.assertFalse(check_membership(q, db, ("d",), Database()))
        self.assertFalse(check_membership(q, db, ("d",), db))

    def test_ambiguous_support_is_not_a_member(self):
        q, db = instance(TWO_SOURCES_FACTS)
        self.assertTrue(check_membership(q, db, ("d",), Database(RIGHT)))
        self.assertFalse(check_membership(q, db, ("d",), db))

    def test_foreign_fact(self):
        q, db = instance()
        with self.assertRaises(NotASubset):
            check_membership(q, db, ("d",), Database(facts("S(z)")))

    def test_not_an_answer(self):
        q, db = instance()
        self.assertFalse(check_membership(q, db, ("zzz",), Database(facts("S(a)"))))

    def test_context_check(self):
        q, db = instance(TWO_SOURCES_FACTS)
        ctx = ProvenanceContext(q, db, max_members=1, decode_witness=True)
        self.assertTrue(ctx.check(("d",), Database(LEFT)))
        self.assertEqual(ctx.answers(), [("a",), ("b",), ("c",), ("d",)])
        self.assertEqual(len(ctx.session(("d",)).collect()), 1)


class FormattingTests(unittest.TestCase):
    def test_text_and_json(self):
        q, db = instance(TWO_SOURCES_FACTS)
        members = enumerate_provenance(q, db, ("d",)).collect()
        lines = sorted(format_member_text(m) for m in members)
        self.assertEqual(lines, ["S(a); T(a,a,c); T(c,c,d)", "S(b); T(b,b,c); T(c,c,d)"])
        self.assertEqual(
            sorted(members_to_json(members)),
            [["S(a)", "T(a,a,c)", "T(c,c,d)"], ["S(b)", "T(b,b,c)", "T(c,c,d)"]],
        )


if __name__ == "__main__":
    unittest.main()
