"""Bottom-up evaluation: immediate consequence, semi-naive fixpoint, ranks and the
instantiation log."""
from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, Iterable, Iterator, List, Optional, Set, Tuple

from ..errors import ResourceLimit
from ..models import Constant, Database, Fact, Program, Query, Rule
from .logging_service import log_event

DEFAULT_MAX_FACTS = 10_000_000

# compiled term: (is_variable, variable name or constant symbol)
_CTerm = Tuple[bool, str]
_CAtom = Tuple[str, Tuple[_CTerm, ...]]


def _compile_atom(atom) -> _CAtom:
    return (
        atom.predicate,
        tuple((False, t.symbol) if isinstance(t, Constant) else (True, t.name) for t in atom.args),
    )


class _Relations:
    """Facts grouped by predicate, indexed on every argument position."""

    def __init__(self, facts: Iterable[Fact] = ()):
        self.tuples: Dict[str, Set[Tuple[str, ...]]] = defaultdict(set)
        self.index: Dict[Tuple[str, int], Dict[str, List[Tuple[str, ...]]]] = {}
        self.size = 0
        for fact in facts:
            self.add(fact.predicate, fact.args)

    def add(self, predicate: str, args: Tuple[str, ...]) -> bool:
        rows = self.tuples[predicate]
        if args in rows:
            return False
        rows.add(args)
        self.size += 1
        for pos, value in enumerate(args):
            self.index.setdefault((predicate, pos), {}).setdefault(value, []).append(args)
        return True

    def __contains__(self, item: Tuple[str, Tuple[str, ...]]) -> bool:
        predicate, args = item
        return args in self.tuples.get(predicate, ())

    def predicates(self) -> Set[str]:
        return {p for p, rows in self.tuples.items() if rows}

    def lookup(self, atom: _CAtom, binding: Dict[str, str]) -> Iterable[Tuple[str, ...]]:
        predicate, terms = atom
        for pos, (is_var, key) in enumerate(terms):
            if not is_var:
                return self.index.get((predicate, pos), {}).get(key, ())
            value = binding.get(key)
            if value is not None:
                return self.index.get((predicate, pos), {}).get(value, ())
        return self.tuples.get(predicate, ())


def _unify(atom: _CAtom, row: Tuple[str, ...], binding: Dict[str, str]) -> Optional[Dict[str, str]]:
    extended = None
    for (is_var, key), value in zip(atom[1], row):
        if not is_var:
            if key != value:
                return None
            continue
        current = (extended or binding).get(key)
        if current is None:
            if extended is None:
                extended = dict(binding)
            extended[key] = value
        elif current != value:
            return None
    return binding if extended is None else extended


def _join(body: List[_CAtom], stores: List[_Relations], binding: Dict[str, str], i: int = 0) -> Iterator[Dict[str, str]]:
    if i == len(body):
        yield binding
        return
    atom = body[i]
    for row in stores[i].lookup(atom, binding):
        extended = _unify(atom, row, binding)
        if extended is not None:
            yield from _join(body, stores, extended, i + 1)


def _ground(atom: _CAtom, binding: Dict[str, str]) -> Tuple[str, ...]:
    return tuple(binding[key] if is_var else key for is_var, key in atom[1])


@dataclass(frozen=True)
class Instantiation:
    rule_index: int
    homomorphism: Tuple[Tuple[str, str], ...]
    head: Fact
    body: Tuple[Fact, ...]


class _CompiledRule:
    def __init__(self, index: int, rule: Rule):
        self.index = index
        self.rule = rule
        self.head = _compile_atom(rule.head)
        self.body = [_compile_atom(atom) for atom in rule.body]

    def instantiation(self, binding: Dict[str, str]) -> Instantiation:
        return Instantiation(
            rule_index=self.index,
            homomorphism=tuple(sorted(binding.items())),
            head=Fact(self.head[0], _ground(self.head, binding)),
            body=tuple(Fact(atom[0], _ground(atom, binding)) for atom in self.body),
        )


def base_size(p: Program, db: Database) -> int:
    """Number of facts over the program schema built from the active domain and the
    constants of the rules."""
    n = len(db.active_domain | p.constants)
    return sum(n ** arity for arity in p.arities.values())


def immediate_consequence(p: Program, db: Database) -> Database:
    store = _Relations(db.facts)
    derived = set(db.facts)
    for index, rule in enumerate(p.rules):
        compiled = _CompiledRule(index, rule)
        stores = [store] * len(compiled.body)
        for binding in _join(compiled.body, stores, {}):
            derived.add(Fact(compiled.head[0], _ground(compiled.head, binding)))
    return Database(frozenset(derived))


def naive_fixpoint(p: Program, db: Database) -> Database:
    current = db
    while True:
        following = immediate_consequence(p, current)
        if len(following) == len(current):
            return current
        current = following


@dataclass
class FixpointResult:
    program: Program
    facts: Database
    rank: Dict[Fact, int]
    iterations: int
    _store: _Relations = field(repr=False, compare=False)
    _rules: List[_CompiledRule] = field(repr=False, compare=False)

    @cached_property
    def instantiations(self) -> List[Instantiation]:
        """Every satisfied rule instantiation over the final fixpoint."""
        out: List[Instantiation] = []
        for compiled in self._rules:
            stores = [self._store] * len(compiled.body)
            for binding in _join(compiled.body, stores, {}):
                out.append(compiled.instantiation(binding))
        return out

    def instantiations_for_head(self, head: Fact) -> List[Instantiation]:
        """Instantiations whose head is ``head``, found by a goal-directed join."""
        out: List[Instantiation] = []
        for compiled in self._rules:
            if compiled.head[0] != head.predicate or len(compiled.head[1]) != head.arity:
                continue
            binding = _unify(compiled.head, head.args, {})
            if binding is None:
                continue
            stores = [self._store] * len(compiled.body)
            for full in _join(compiled.body, stores, binding):
                out.append(compiled.instantiation(full))
        return out

    def __contains__(self, fact: Fact) -> bool:
        return (fact.predicate, fact.args) in self._store


def fixpoint(
    p: Program,
    db: Database,
    max_facts: int = DEFAULT_MAX_FACTS,
    max_iterations: int = 0,
) -> FixpointResult:
    """Semi-naive evaluation of ``p`` over ``db``.

    Iteration i produces exactly T^i(D) minus T^(i-1)(D), so the iteration number is the
    fact's rank. ``max_iterations=0`` means the base-size bound.
    """
    iteration_cap = max_iterations or base_size(p, db)
    rules = [_CompiledRule(i, rule) for i, rule in enumerate(p.rules)]
    full = _Relations(db.facts)
    delta = _Relations(db.facts)
    rank: Dict[Fact, int] = {fact: 0 for fact in db.facts}
    if full.size > max_facts:
        raise ResourceLimit("max_facts", full.size)

    iteration = 0
    while delta.size:
        fresh: Set[Tuple[str, Tuple[str, ...]]] = set()
        changed = delta.predicates()
        for compiled in rules:
            for j, atom in enumerate(compiled.body):
                if atom[0] not in changed:
                    continue
                stores = [full] * len(compiled.body)
                stores[j] = delta
                for binding in _join(compiled.body, stores, {}):
                    head = (compiled.head[0], _ground(compiled.head, binding))
                    if head not in full:
                        fresh.add(head)
        if not fresh:
            break
        iteration += 1
        if iteration > iteration_cap:
            raise ResourceLimit("max_iterations", iteration)
        delta = _Relations()
        for predicate, args in fresh:
            full.add(predicate, args)
            delta.add(predicate, args)
            rank[Fact(predicate, args)] = iteration
        if full.size > max_facts:
            raise ResourceLimit("max_facts", full.size)

    facts = Database(frozenset(rank))
    log_event("fixpoint_computed", meta={"facts": len(facts), "input": len(db), "iterations": iteration})
    return FixpointResult(
        program=p, facts=facts, rank=rank, iterations=iteration, _store=full, _rules=rules
    )


def answers(q: Query, db: Database, fix: Optional[FixpointResult] = None) -> Set[Tuple[str, ...]]:
    fix = fix or fixpoint(q.program, db)
    return {fact.args for fact in fix.facts.facts if fact.predicate == q.answer_predicate}
