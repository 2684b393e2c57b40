"""Differential sweeps: the SAT pipeline against the oracles, the two acyclicity
encodings against each other, solver backends against each other, and engine ranks
against minimal proof depths."""
from __future__ import annotations

import itertools
import random
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, Iterable, List, Optional, Sequence, Tuple

from ..errors import OracleTooLarge
from ..models import Database, Fact, Query
from .closure import closure_for
from .encoder import TRANSITIVE_CLOSURE, VERTEX_ELIMINATION
from .engine import fixpoint, naive_fixpoint
from .generators import (
    TWO_SOURCES_FACTS,
    Cnf3Formula,
    accessibility_instance,
    gen_3sat_instance,
    gen_random_instance,
    is_satisfiable,
    random_3cnf,
)
from .logging_service import log_event
from .prooftrees import (
    DEFAULT_ORACLE_MAX_FAMILY,
    DEFAULT_ORACLE_MAX_NODES,
    DEFAULT_ORACLE_MAX_PRODUCT,
    Support,
    is_unambiguous,
    oracle_min_depth,
    oracle_unwhy_witnesses,
    oracle_why,
    support,
    unravel,
    validate_compressed_dag,
    validate_tree,
)
from .provenance import EnumerationSession, check_membership

DEFAULT_PROFILES = ("tiny-linear", "tiny-nonlinear", "tiny-nonrecursive")
DEFAULT_MAX_SUBSET_FACTS = 6


def _facts(family: Iterable[Iterable[Any]]) -> List[List[str]]:
    return sorted(sorted(str(f) for f in member) for member in family)


@dataclass
class SweepReport:
    name: str
    instances: int = 0
    checks: int = 0
    skipped: int = 0
    mismatches: List[Dict[str, Any]] = field(default_factory=list)
    timings: Dict[str, float] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return not self.mismatches

    def mismatch(self, kind: str, seed: Any, expected: Any, got: Any, **extra) -> None:
        self.mismatches.append({"kind": kind, "seed": seed, "expected": expected, "got": got, **extra})

    def time(self, key: str, seconds: float) -> None:
        self.timings[key] = self.timings.get(key, 0.0) + seconds

    def absorb(self, other: "SweepReport") -> None:
        self.instances += other.instances
        self.checks += other.checks
        self.skipped += other.skipped
        self.mismatches.extend(other.mismatches)
        for key, seconds in other.timings.items():
            self.time(key, seconds)

    def to_json(self) -> Dict[str, Any]:
        return {
            "sweep": self.name,
            "instances": self.instances,
            "checks": self.checks,
            "skipped": self.skipped,
            "mismatches": self.mismatches,
            "passed": self.passed,
            "timings": {k: round(v, 6) for k, v in sorted(self.timings.items())},
        }


def _run(name: str, jobs: Sequence[Any], check: Callable[[Any], SweepReport], workers: int) -> SweepReport:
    report = SweepReport(name)
    started = time.perf_counter()
    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        for partial in pool.map(check, jobs):
            report.absorb(partial)
    report.timings["wall"] = time.perf_counter() - started
    log_event("sweep_finished", meta={k: v for k, v in report.to_json().items() if k != "mismatches"})
    return report

def _membership_candidates(leaves: Sequence[Fact], members: Iterable[Support], limit: int) -> List[Support]:
    if len(leaves) <= limit:
        return [frozenset(c) for k in range(len(leaves) + 1) for c in itertools.combinations(leaves, k)]
    out = set()
    for member in members:
        out.add(member)
        out.update(member - {f} for f in member)
        out.update(member | {f} for f in leaves if f not in member)
    return sorted(out, key=lambda s: (len(s), sorted(s)))


def check_unwhy_instance(
    label: Any,
    q: Query,
    db: Database,
    *,
    max_nodes: int = DEFAULT_ORACLE_MAX_NODES,
    max_product: int = DEFAULT_ORACLE_MAX_PRODUCT,
    max_family: int = DEFAULT_ORACLE_MAX_FAMILY,
    backend: str = "internal",
    compare_backend: Optional[str] = None,
    external_command: Optional[str] = None,
    max_subset_facts: int = DEFAULT_MAX_SUBSET_FACTS,
) -> SweepReport:
    """Every answer tuple of one instance through both encodings, the oracles, witness
    decoding and membership checks in both directions.

    Membership is checked on every subset of the closure's database facts when there
    are at most ``max_subset_facts`` of them, otherwise on the members and their
    one-fact neighbours."""
    report = SweepReport("unwhy", instances=1)
    p = q.program
    fix = fixpoint(p, db)
    answers = sorted(f.args for f in fix.facts.by_predicate.get(q.answer_predicate, ()))
    for answer in answers:
        goal = q.fact(answer)
        runs = {}
        started = time.perf_counter()
        for strategy in (TRANSITIVE_CLOSURE, VERTEX_ELIMINATION):
            session = EnumerationSession(
                q, db, answer, fix=fix, acyclicity=strategy, backend=backend,
                external_command=external_command, decode_witness=True,
            )
            runs[strategy] = session.collect()
        report.time("pipeline", time.perf_counter() - started)

        tc = [m.facts for m in runs[TRANSITIVE_CLOSURE]]
        ve = [m.facts for m in runs[VERTEX_ELIMINATION]]
        report.checks += 1
        if len(set(tc)) != len(tc) or len(set(ve)) != len(ve):
            report.mismatch("duplicate_member", label, "distinct", "repeated", goal=str(goal))
        if set(tc) != set(ve):
            report.mismatch("strategy", label, _facts(tc), _facts(ve), goal=str(goal))

        for member in runs[VERTEX_ELIMINATION]:
            tree = member.unravel(p)
            if not (
                validate_compressed_dag(member.witness, p, db, goal)
                and validate_tree(tree, p, db, goal)
                and is_unambiguous(tree)
                and support(tree) == member.facts
            ):
                report.mismatch("witness", label, _facts([member.facts]), _facts([support(tree)]), goal=str(goal))
            if not check_membership(q, db, answer, Database(member.facts), fix=fix, backend=backend,
                                    external_command=external_command):
                report.mismatch("membership", label, True, False, goal=str(goal), member=_facts([member.facts]))

        if compare_backend:
            other = EnumerationSession(q, db, answer, fix=fix, backend=compare_backend,
                                       external_command=external_command).collect()
            if {m.facts for m in other} != set(ve):
                report.mismatch("backend", label, _facts(ve), _facts(m.facts for m in other), goal=str(goal))

        started = time.perf_counter()
        try:
            witnesses = oracle_unwhy_witnesses(q, db, answer, max_nodes=max_nodes, fix=fix)
        except OracleTooLarge:
            report.skipped += 1
            continue
        finally:
            report.time("oracle", time.perf_counter() - started)
        if set(witnesses) != set(ve):
            report.mismatch("oracle", label, _facts(witnesses), _facts(ve), goal=str(goal))
        leaves = sorted(f for f in closure_for(fix, goal).nodes if f in db)
        for candidate in _membership_candidates(leaves, witnesses, max_subset_facts):
            expected = candidate in witnesses
            report.checks += 1
            if check_membership(q, db, answer, Database(candidate), fix=fix, backend=backend,
                                external_command=external_command) != expected:
                report.mismatch("membership", label, expected, not expected, goal=str(goal),
                                member=_facts([candidate]))
        for facts, dag in witnesses.items():
            tree = unravel(dag, p)
            if not (validate_tree(tree, p, db, goal) and is_unambiguous(tree) and support(tree) == facts):
                report.mismatch("oracle_witness", label, _facts([facts]), _facts([support(tree)]), goal=str(goal))
        try:
            why = oracle_why(q, db, answer, max_product=max_product, max_family=max_family, fix=fix)
        except OracleTooLarge:
            continue
        if not set(witnesses) <= why:
            report.mismatch("why_subset", label, _facts(witnesses), _facts(why), goal=str(goal))
    return report


def sweep_unwhy(
    profiles: Sequence[str] = DEFAULT_PROFILES,
    n_instances: int = 100,
    seed: int = 0,
    *,
    workers: int = 1,
    include_pinned: bool = True,
    **options,
) -> SweepReport:
    jobs: List[Tuple[Any, Query, Database]] = []
    if include_pinned:
        q, db = accessibility_instance(TWO_SOURCES_FACTS)
        jobs.append(("pinned:two-sources", q, db))
    for i in range(n_instances):
        profile = profiles[i % len(profiles)]
        instance_seed = seed * 1_000_003 + i
        q, db = gen_random_instance(profile, instance_seed)
        jobs.append((f"{profile}:{instance_seed}", q, db))
    return _run("unwhy", jobs, lambda job: check_unwhy_instance(*job, **options), workers)


FORCED_SAT = Cnf3Formula(1, (((1, True), (1, True), (1, True)),))
FORCED_UNSAT = Cnf3Formula(1, (((1, True), (1, True), (1, True)), ((1, False), (1, False), (1, False))))


def _check_formula(job: Tuple[Any, Cnf3Formula], max_product: int, max_family: int) -> SweepReport:
    label, phi = job
    report = SweepReport("reduction", instances=1)
    expected = is_satisfiable(phi)
    q, db, answer = gen_3sat_instance(phi)
    started = time.perf_counter()
    try:
        got = db.facts in oracle_why(q, db, answer, max_product=max_product, max_family=max_family)
    except OracleTooLarge:
        report.skipped += 1
        return report
    finally:
        report.time("oracle", time.perf_counter() - started)
    report.checks += 1
    if got != expected:
        report.mismatch("reduction", label, expected, got, formula=str(phi))
    return report


def sweep_reduction(
    n_formulas: int = 200,
    seed: int = 0,
    *,
    max_vars: int = 3,
    max_clauses: int = 3,
    max_product: int = DEFAULT_ORACLE_MAX_PRODUCT,
    max_family: int = DEFAULT_ORACLE_MAX_FAMILY,
    workers: int = 1,
) -> SweepReport:
    rng = random.Random(seed)
    jobs: List[Tuple[Any, Cnf3Formula]] = [("forced-sat", FORCED_SAT), ("forced-unsat", FORCED_UNSAT)]
    for i in range(max(0, n_formulas - len(jobs))):
        phi = random_3cnf(rng.randint(1, max_vars), rng.randint(1, max_clauses), rng)
        jobs.append((f"{seed}:{i}", phi))
    return _run("reduction", jobs, lambda job: _check_formula(job, max_product, max_family), workers)


def _check_ranks(job: Tuple[str, int]) -> SweepReport:
    profile, instance_seed = job
    label = f"{profile}:{instance_seed}"
    report = SweepReport("rank-depth", instances=1)
    q, db = gen_random_instance(profile, instance_seed)
    fix = fixpoint(q.program, db)
    report.checks += 1
    naive = naive_fixpoint(q.program, db)
    if naive.facts != fix.facts.facts:
        report.mismatch("naive", label, len(naive), len(fix.facts))
    depths = oracle_min_depth(q.program, db, fix=fix)
    for fact, rank in sorted(fix.rank.items()):
        report.checks += 1
        if depths.get(fact) != rank:
            report.mismatch("rank", label, rank, depths.get(fact), fact=str(fact))
    return report


def sweep_rank_depth(
    profiles: Sequence[str] = DEFAULT_PROFILES,
    n_instances: int = 100,
    seed: int = 0,
    *,
    workers: int = 1,
) -> SweepReport:
    jobs = [(profiles[i % len(profiles)], seed * 1_000_003 + i) for i in range(n_instances)]
    return _run("rank-depth", jobs, _check_ranks, workers)
