"""Why-provenance relative to unambiguous proof trees: membership checks and incremental
enumeration of members by adding a blocking clause after every model."""
from __future__ import annotations

import statistics
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, Iterable, Iterator, List, Optional, Sequence, Tuple

from ..errors import NotASubset, SolverTimeout
from ..models import Database, Fact, Program, Query
from ..parser import render_fact
from .closure import DownwardClosure, closure_for
from .encoder import DEFAULT_MAX_CLAUSES, VERTEX_ELIMINATION, CnfInstance, VarMap, encode
from .engine import DEFAULT_MAX_FACTS, FixpointResult, fixpoint
from .logging_service import log_event
from .prooftrees import ProofDag, ProofTree, Support, unravel
from .satcore import make_solver


class SessionStatus(str, Enum):
    EXHAUSTED = "Exhausted"
    LIMIT_REACHED = "LimitReached"
    TIMEOUT = "Timeout"


@dataclass(frozen=True)
class ProvenanceMember:
    facts: Support
    ordinal: int
    witness: Optional[ProofDag] = field(default=None, compare=False)
    delay: float = field(default=0.0, compare=False)

    def sorted_facts(self) -> List[Fact]:
        return sorted(self.facts)

    def unravel(self, program: Program) -> ProofTree:
        if self.witness is None:
            raise ValueError("member was enumerated without witness decoding")
        return unravel(self.witness, program)


def db_of_assignment(model: Dict[int, bool], vm: VarMap, db: Database) -> Support:
    return frozenset(f for f, var in vm.node_vars.items() if model.get(var) and f in db)


def decode_witness(model: Dict[int, bool], cnf: CnfInstance) -> ProofDag:
    edges = [pair for pair, var in cnf.var_map.edge_vars.items() if model.get(var)]
    return ProofDag.compressed(cnf.goal, edges)


def _delay_stats(delays: Sequence[float]) -> Dict[str, Optional[float]]:
    if not delays:
        return {"min": None, "median": None, "max": None}
    return {"min": min(delays), "median": statistics.median(delays), "max": max(delays)}


class EnumerationSession:
    """One answer tuple's enumeration. Iterate it to stream members; ``status`` is set
    once the stream ends (Exhausted, LimitReached or Timeout)."""

    def __init__(
        self,
        query: Query,
        db: Database,
        answer: Sequence[str],
        *,
        fix: Optional[FixpointResult] = None,
        closure: Optional[DownwardClosure] = None,
        acyclicity: str = VERTEX_ELIMINATION,
        backend: str = "internal",
        seed: int = 0,
        conflict_budget: int = 0,
        external_command: Optional[str] = None,
        max_members: int = 0,
        timeout: float = 0.0,
        decode_witness: bool = False,
        max_clauses: int = DEFAULT_MAX_CLAUSES,
        max_facts: int = DEFAULT_MAX_FACTS,
    ):
        self.query = query
        self.db = db
        self.answer = tuple(answer)
        self.goal = query.fact(self.answer)
        self.max_members = max_members
        self.timeout = timeout
        self.decode_witness = decode_witness
        self.status: Optional[SessionStatus] = None
        self.members: List[ProvenanceMember] = []
        self.delays: List[float] = []
        self.closure_seconds = 0.0
        self.encode_seconds = 0.0
        self.closure: Optional[DownwardClosure] = None
        self.cnf: Optional[CnfInstance] = None
        self.solver = None

        fix = fix or fixpoint(query.program, db, max_facts=max_facts)
        self.is_answer = self.goal in fix
        if not self.is_answer:
            return
        started = time.perf_counter()
        self.closure = closure or closure_for(fix, self.goal)
        self.closure_seconds = time.perf_counter() - started
        self.cnf = encode(self.closure, self.goal, acyclicity, max_clauses=max_clauses)
        self.encode_seconds = self.cnf.elapsed
        self.solver = make_solver(
            backend, seed=seed, conflict_budget=conflict_budget, external_command=external_command
        )
        for clause in self.cnf.clauses:
            self.solver.add_clause(clause)

    @property
    def strategy(self) -> Optional[str]:
        return self.cnf.strategy if self.cnf else None

    def __iter__(self) -> Iterator[ProvenanceMember]:
        return self.run()

    def run(self) -> Iterator[ProvenanceMember]:
        if self.status is not None:
            return
        if not self.is_answer:
            self._finish(SessionStatus.EXHAUSTED)
            return
        started = last = time.monotonic()
        try:
            while True:
                if self.max_members and len(self.members) >= self.max_members:
                    self._finish(SessionStatus.LIMIT_REACHED)
                    return
                remaining = 0.0
                if self.timeout:
                    remaining = self.timeout - (time.monotonic() - started)
                    if remaining <= 0:
                        raise SolverTimeout("wall clock")
                result = self.solver.solve(remaining)
                if not result.satisfiable:
                    self._finish(SessionStatus.EXHAUSTED)
                    return
                facts = db_of_assignment(result.model, self.cnf.var_map, self.db)
                now = time.monotonic()
                member = ProvenanceMember(
                    facts=facts,
                    ordinal=len(self.members),
                    witness=decode_witness(result.model, self.cnf) if self.decode_witness else None,
                    delay=now - last,
                )
                last = now
                self.members.append(member)
                self.delays.append(member.delay)
                self.solver.add_clause(self.cnf.blocking_clause(facts))
                yield member
        except SolverTimeout:
            self._finish(SessionStatus.TIMEOUT)

    def collect(self) -> List[ProvenanceMember]:
        for _ in self.run():
            pass
        return self.members

    def supports(self) -> set:
        return {m.facts for m in self.members}

    def _finish(self, status: SessionStatus) -> None:
        self.status = status
        if self.solver is not None:
            self.solver.delete()
        log_event(
            "enumeration_finished",
            meta={
                "goal": str(self.goal),
                "status": status.value,
                "members": len(self.members),
                "delay": _delay_stats(self.delays),
            },
        )

    def summary(self) -> Dict[str, Any]:
        return {
            "goal": str(self.goal),
            "members": len(self.members),
            "status": self.status.value if self.status else None,
            "delay": _delay_stats(self.delays),
            "closure_seconds": self.closure_seconds,
            "encode_seconds": self.encode_seconds,
            "closure": self.closure.graph.stats() if self.closure else None,
            "encoding": dict(self.cnf.stats) if self.cnf else None,
        }


def enumerate_provenance(q: Query, db: Database, answer: Sequence[str], **options) -> EnumerationSession:
    """Members of the unambiguous why-provenance of ``answer``, streamed by iterating the
    returned session. A tuple that is not an answer gives an empty Exhausted stream."""
    return EnumerationSession(q, db, answer, **options)


class ProvenanceContext:
    """Evaluates the program once and opens enumeration sessions per answer tuple."""

    def __init__(self, query: Query, db: Database, *, max_facts: int = DEFAULT_MAX_FACTS, max_iterations: int = 0, **options):
        self.query = query
        self.db = db
        self.options = options
        self.fix = fixpoint(query.program, db, max_facts=max_facts, max_iterations=max_iterations)

    def answers(self) -> List[Tuple[str, ...]]:
        return sorted(f.args for f in self.fix.facts.by_predicate.get(self.query.answer_predicate, ()))

    def closure(self, answer: Sequence[str]) -> DownwardClosure:
        return closure_for(self.fix, self.query.fact(tuple(answer)))

    def session(self, answer: Sequence[str], **overrides) -> EnumerationSession:
        return EnumerationSession(self.query, self.db, answer, fix=self.fix, **{**self.options, **overrides})

    def check(self, answer: Sequence[str], d_sub: Database, **overrides) -> bool:
        opts = {**self.options, **overrides}
        opts.pop("max_members", None)
        opts.pop("decode_witness", None)
        return check_membership(self.query, self.db, answer, d_sub, fix=self.fix, **opts)


def check_membership(
    q: Query,
    db: Database,
    answer: Sequence[str],
    d_sub: Database,
    *,
    fix: Optional[FixpointResult] = None,
    acyclicity: str = VERTEX_ELIMINATION,
    backend: str = "internal",
    seed: int = 0,
    conflict_budget: int = 0,
    external_command: Optional[str] = None,
    timeout: float = 0.0,
    max_clauses: int = DEFAULT_MAX_CLAUSES,
    max_facts: int = DEFAULT_MAX_FACTS,
) -> bool:
    """Is ``d_sub`` the support of some unambiguous proof tree of the answer fact?"""
    foreign = d_sub.facts - db.facts
    if foreign:
        raise NotASubset(foreign)
    goal = q.fact(tuple(answer))
    fix = fix or fixpoint(q.program, db, max_facts=max_facts)
    verdict = False
    if goal in fix:
        cnf = encode(closure_for(fix, goal), goal, acyclicity, max_clauses=max_clauses)
        leaves = {f: v for f, v in cnf.db_leaf_vars.items() if f in db}
        if all(f in leaves for f in d_sub.facts):
            solver = make_solver(backend, seed=seed, conflict_budget=conflict_budget, external_command=external_command)
            try:
                for clause in cnf.clauses:
                    solver.add_clause(clause)
                for fact, var in sorted(leaves.items()):
                    solver.add_clause([var if fact in d_sub else -var])
                verdict = solver.solve(timeout).satisfiable
            finally:
                solver.delete()
    log_event("membership_checked", meta={"goal": str(goal), "facts": len(d_sub), "member": verdict})
    return verdict


def format_member_text(member: ProvenanceMember) -> str:
    return "; ".join(render_fact(f) for f in member.sorted_facts())


def members_to_json(members: Iterable[ProvenanceMember]) -> List[List[str]]:
    return [[render_fact(f) for f in m.sorted_facts()] for m in members]
