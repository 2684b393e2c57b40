"""Incremental SAT solving: an internal CDCL solver, a python-sat backend and a bridge to
external DIMACS solvers. All backends take DIMACS-style integer literals."""
from __future__ import annotations

import heapq
import os
import random
import shlex
import subprocess
import tempfile
import threading
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Iterable, List, Optional, Sequence

from pysat.formula import CNF
from pysat.solvers import Solver

from ..errors import ExternalSolverError, SolverTimeout

_UNASSIGNED = -1


class SolveStatus(str, Enum):
    SAT = "SAT"
    UNSAT = "UNSAT"


@dataclass
class SolveResult:
    status: SolveStatus
    model: Dict[int, bool] = field(default_factory=dict)

    @property
    def satisfiable(self) -> bool:
        return self.status is SolveStatus.SAT


def _luby(y: float, x: int) -> float:
    size, seq = 1, 0
    while size < x + 1:
        seq += 1
        size = 2 * size + 1
    while size - 1 != x:
        size = (size - 1) >> 1
        seq -= 1
        x = x % size
    return y ** seq


def _code(lit: int) -> int:
    # literal l -> 2*(|l|-1) + sign bit
    return ((abs(lit) - 1) << 1) | (lit < 0)


class SolverState:
    """Conflict-driven clause learning with two watched literals, first-UIP learning,
    VSIDS branching, phase saving and Luby restarts.

    Clauses may be added between calls to ``solve``; each call starts from decision
    level 0 and keeps learnt clauses.
    """

    def __init__(self, num_vars: int = 0, *, seed: int = 0, conflict_budget: int = 0):
        self.conflict_budget = conflict_budget
        self._rng = random.Random(seed)
        self.num_vars = 0
        self.clauses: List[Optional[List[int]]] = []
        self.learnt_ids: List[int] = []
        self.watches: List[List[int]] = []
        self.values: List[int] = []
        self.level: List[int] = []
        self.reason: List[Optional[int]] = []
        self.activity: List[float] = []
        self.phase: List[bool] = []
        self.trail: List[int] = []
        self.trail_lim: List[int] = []
        self.qhead = 0
        self.var_inc = 1.0
        self.heap: List[tuple] = []
        self.max_learnts = 2000.0
        self.trivially_unsat = False
        self.stats = {"decisions": 0, "conflicts": 0, "propagations": 0, "restarts": 0, "learnts": 0}
        self.ensure_vars(num_vars)

    def ensure_vars(self, n: int) -> None:
        while self.num_vars < n:
            v = self.num_vars
            self.num_vars += 1
            self.values.append(_UNASSIGNED)
            self.level.append(0)
            self.reason.append(None)
            self.activity.append(self._rng.random() * 1e-5)
            self.phase.append(False)
            self.watches.append([])
            self.watches.append([])
            heapq.heappush(self.heap, (-self.activity[v], v))

    def _value(self, code: int) -> int:
        value = self.values[code >> 1]
        if value == _UNASSIGNED:
            return _UNASSIGNED
        return value ^ (code & 1)

    def _decision_level(self) -> int:
        return len(self.trail_lim)

    def _enqueue(self, code: int, reason: Optional[int]) -> None:
        v = code >> 1
        self.values[v] = 1 - (code & 1)
        self.level[v] = self._decision_level()
        self.reason[v] = reason
        self.trail.append(code)

    def _backtrack(self, level: int) -> None:
        if self._decision_level() <= level:
            return
        start = self.trail_lim[level]
        for code in self.trail[start:]:
            v = code >> 1
            self.phase[v] = self.values[v] == 1
            self.values[v] = _UNASSIGNED
            self.reason[v] = None
            heapq.heappush(self.heap, (-self.activity[v], v))
        del self.trail[start:]
        del self.trail_lim[level:]
        self.qhead = len(self.trail)

    def _store(self, codes: List[int], learnt: bool) -> int:
        index = len(self.clauses)
        self.clauses.append(codes)
        self.watches[codes[0]].append(index)
        self.watches[codes[1]].append(index)
        if learnt:
            self.learnt_ids.append(index)
            self.stats["learnts"] += 1
        return index

    def add_clause(self, lits: Iterable[int]) -> None:
        self._backtrack(0)
        if self.trivially_unsat:
            return
        codes: List[int] = []
        seen = set()
        for lit in lits:
            if lit == 0:
                raise ValueError("0 is not a literal")
            self.ensure_vars(abs(lit))
            code = _code(lit)
            if code ^ 1 in seen:
                return
            if code not in seen:
                seen.add(code)
                codes.append(code)
        # level-0 assignments are permanent
        if any(self._value(c) == 1 for c in codes):
            return
        codes = [c for c in codes if self._value(c) == _UNASSIGNED]
        if not codes:
            self.trivially_unsat = True
            return
        if len(codes) == 1:
            self._enqueue(codes[0], None)
            if self._propagate() is not None:
                self.trivially_unsat = True
            return
        self._store(codes, learnt=False)

    def _propagate(self) -> Optional[int]:
        clauses = self.clauses
        while self.qhead < len(self.trail):
            false_lit = self.trail[self.qhead] ^ 1
            self.qhead += 1
            self.stats["propagations"] += 1
            watching = self.watches[false_lit]
            kept: List[int] = []
            conflict = None
            i = 0
            while i < len(watching):
                ci = watching[i]
                i += 1
                c = clauses[ci]
                if c is None:
                    continue
                if c[0] == false_lit:
                    c[0], c[1] = c[1], c[0]
                first = c[0]
                if self._value(first) == 1:
                    kept.append(ci)
                    continue
                for k in range(2, len(c)):
                    if self._value(c[k]) != 0:
                        c[1], c[k] = c[k], c[1]
                        self.watches[c[1]].append(ci)
                        break
                else:
                    kept.append(ci)
                    if self._value(first) == 0:
                        conflict = ci
                        kept.extend(watching[i:])
                        break
                    self._enqueue(first, ci)
            self.watches[false_lit] = kept
            if conflict is not None:
                self.qhead = len(self.trail)
                return conflict
        return None

    def _bump(self, v: int) -> None:
        self.activity[v] += self.var_inc
        if self.activity[v] > 1e100:
            self.activity = [a * 1e-100 for a in self.activity]
            self.var_inc *= 1e-100
            self.heap = [(-self.activity[u], u) for u in range(self.num_vars) if self.values[u] == _UNASSIGNED]
            heapq.heapify(self.heap)
        heapq.heappush(self.heap, (-self.activity[v], v))

    def _analyze(self, conflict: int):
        seen = set()
        learnt: List[int] = [0]
        pending = 0
        index = len(self.trail) - 1
        current = self._decision_level()
        clause = self.clauses[conflict]
        p = None
        while True:
            for q in clause if p is None else clause[1:]:
                v = q >> 1
                if v not in seen and self.level[v] > 0:
                    seen.add(v)
                    self._bump(v)
                    if self.level[v] >= current:
                        pending += 1
                    else:
                        learnt.append(q)
            while (self.trail[index] >> 1) not in seen:
                index -= 1
            p = self.trail[index]
            index -= 1
            seen.discard(p >> 1)
            pending -= 1
            if pending == 0:
                break
            clause = self.clauses[self.reason[p >> 1]]
        learnt[0] = p ^ 1
        if len(learnt) == 1:
            return learnt, 0
        best = max(range(1, len(learnt)), key=lambda k: self.level[learnt[k] >> 1])
        learnt[1], learnt[best] = learnt[best], learnt[1]
        return learnt, self.level[learnt[1] >> 1]

    def _pick(self) -> Optional[int]:
        while self.heap:
            neg_activity, v = heapq.heappop(self.heap)
            if self.values[v] == _UNASSIGNED and -neg_activity == self.activity[v]:
                return v
        for v in range(self.num_vars):
            if self.values[v] == _UNASSIGNED:
                return v
        return None

    def _reduce_learnts(self) -> None:
        # level 0 only: reasons of level-0 assignments are never analysed
        if len(self.learnt_ids) <= self.max_learnts:
            return
        ranked = sorted(self.learnt_ids, key=lambda ci: len(self.clauses[ci]))
        keep = len(ranked) // 2
        for ci in ranked[keep:]:
            if len(self.clauses[ci]) > 2:
                self.clauses[ci] = None
        self.learnt_ids = [ci for ci in self.learnt_ids if self.clauses[ci] is not None]
        self.max_learnts *= 1.1

    def _search(self, limit: float, deadline: Optional[float], start_conflicts: int) -> Optional[SolveResult]:
        local = 0
        while True:
            conflict = self._propagate()
            if conflict is not None:
                self.stats["conflicts"] += 1
                local += 1
                if self._decision_level() == 0:
                    self.trivially_unsat = True
                    return SolveResult(SolveStatus.UNSAT)
                learnt, back = self._analyze(conflict)
                self._backtrack(back)
                if len(learnt) == 1:
                    self._enqueue(learnt[0], None)
                else:
                    self._enqueue(learnt[0], self._store(learnt, learnt=True))
                self.var_inc /= 0.95
                if self.conflict_budget and self.stats["conflicts"] - start_conflicts > self.conflict_budget:
                    self._backtrack(0)
                    raise SolverTimeout(f"{self.conflict_budget} conflicts")
                if deadline is not None and time.monotonic() > deadline:
                    self._backtrack(0)
                    raise SolverTimeout("wall clock")
                continue
            if local >= limit:
                return None
            v = self._pick()
            if v is None:
                model = {u + 1: self.values[u] == 1 for u in range(self.num_vars)}
                self._backtrack(0)
                return SolveResult(SolveStatus.SAT, model)
            self.stats["decisions"] += 1
            self.trail_lim.append(len(self.trail))
            self._enqueue((v << 1) | (not self.phase[v]), None)

    def solve(self, time_budget: float = 0.0) -> SolveResult:
        if self.trivially_unsat:
            return SolveResult(SolveStatus.UNSAT)
        self._backtrack(0)
        deadline = time.monotonic() + time_budget if time_budget else None
        start_conflicts = self.stats["conflicts"]
        restarts = 0
        while True:
            result = self._search(100 * _luby(2, restarts), deadline, start_conflicts)
            if result is not None:
                return result
            restarts += 1
            self.stats["restarts"] += 1
            self._backtrack(0)
            self._reduce_learnts()

    def delete(self) -> None:
        pass


class PysatSolver:
    """python-sat backend, e.g. ``PysatSolver("glucose4")``."""

    def __init__(self, name: str = "glucose4", *, conflict_budget: int = 0):
        self.name = name
        self.conflict_budget = conflict_budget
        self.num_vars = 0
        self._solver = Solver(name=name)

    @property
    def stats(self) -> Dict[str, int]:
        return dict(self._solver.accum_stats() or {})

    def add_clause(self, lits: Iterable[int]) -> None:
        lits = list(lits)
        self.num_vars = max([self.num_vars] + [abs(l) for l in lits])
        self._solver.add_clause(lits)

    def solve(self, time_budget: float = 0.0) -> SolveResult:
        if not self.conflict_budget and not time_budget:
            sat = self._solver.solve()
        else:
            if self.conflict_budget:
                self._solver.conf_budget(self.conflict_budget)
            timer = None
            if time_budget:
                timer = threading.Timer(time_budget, self._solver.interrupt)
                timer.start()
            try:
                sat = self._solver.solve_limited(expect_interrupt=timer is not None)
            finally:
                if timer is not None:
                    timer.cancel()
            if sat is None:
                self._solver.clear_interrupt()
                raise SolverTimeout("wall clock" if time_budget else f"{self.conflict_budget} conflicts")
        if not sat:
            return SolveResult(SolveStatus.UNSAT)
        positive = {l for l in self._solver.get_model() or () if l > 0}
        return SolveResult(SolveStatus.SAT, {v: v in positive for v in range(1, self.num_vars + 1)})

    def delete(self) -> None:
        self._solver.delete()


class ExternalSolver:
    """Runs ``command <file.cnf>`` per solve. Exit code 10 means SAT, 20 UNSAT; the model
    is read from ``v`` lines."""

    def __init__(self, command: str):
        self.command = shlex.split(command)
        if not self.command:
            raise ExternalSolverError("empty external solver command")
        self.clauses: List[List[int]] = []
        self.num_vars = 0
        self.stats: Dict[str, int] = {"calls": 0}

    def add_clause(self, lits: Iterable[int]) -> None:
        clause = list(lits)
        self.num_vars = max([self.num_vars] + [abs(l) for l in clause])
        self.clauses.append(clause)

    def solve(self, time_budget: float = 0.0) -> SolveResult:
        formula = CNF(from_clauses=self.clauses)
        formula.nv = max(formula.nv, self.num_vars)
        fd, path = tempfile.mkstemp(suffix=".cnf")
        try:
            with os.fdopen(fd, "w") as fh:
                formula.to_fp(fh)
            self.stats["calls"] += 1
            try:
                proc = subprocess.run(
                    self.command + [path],
                    capture_output=True,
                    text=True,
                    timeout=time_budget or None,
                )
            except subprocess.TimeoutExpired:
                raise SolverTimeout("wall clock") from None
            except OSError as e:
                raise ExternalSolverError(f"cannot run {self.command[0]}: {e}") from None
        finally:
            os.unlink(path)
        return parse_solver_output(proc.stdout, proc.returncode, self.num_vars)

    def delete(self) -> None:
        pass


def parse_solver_output(stdout: str, returncode: int, num_vars: int) -> SolveResult:
    status = None
    values: Dict[int, bool] = {}
    for line in stdout.splitlines():
        parts = line.split()
        if not parts:
            continue
        if parts[0] == "s" and len(parts) > 1:
            status = "UNSAT" if parts[1].startswith("UNSAT") else "SAT" if parts[1].startswith("SAT") else status
        elif parts[0] == "v":
            for token in parts[1:]:
                lit = int(token)
                if lit:
                    values[abs(lit)] = lit > 0
    if returncode == 20 or status == "UNSAT":
        return SolveResult(SolveStatus.UNSAT)
    if returncode == 10 or status == "SAT":
        return SolveResult(SolveStatus.SAT, {v: values.get(v, False) for v in range(1, num_vars + 1)})
    raise ExternalSolverError(f"external solver exited with status {returncode}")


def make_solver(
    backend: str = "internal",
    *,
    seed: int = 0,
    conflict_budget: int = 0,
    external_command: Optional[str] = None,
):
    if backend == "internal":
        return SolverState(seed=seed, conflict_budget=conflict_budget)
    if backend.startswith("pysat"):
        _, _, name = backend.partition(":")
        return PysatSolver(name or "glucose4", conflict_budget=conflict_budget)
    if backend == "external":
        if not external_command:
            raise ExternalSolverError("EXTERNAL_SAT_SOLVER is not set")
        return ExternalSolver(external_command)
    raise ValueError(f"unknown solver backend {backend!r}")


def solve_clauses(clauses: Sequence[Sequence[int]], num_vars: int = 0, **kwargs) -> SolveResult:
    solver = make_solver(**kwargs)
    try:
        if isinstance(solver, SolverState):
            solver.ensure_vars(num_vars)
        else:
            solver.num_vars = max(solver.num_vars, num_vars)
        for clause in clauses:
            solver.add_clause(clause)
        return solver.solve()
    finally:
        solver.delete()
