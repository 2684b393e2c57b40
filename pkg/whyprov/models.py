from __future__ import annotations

import re
import sys
from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, FrozenSet, Iterable, Iterator, Mapping, NamedTuple, Tuple, Union

import networkx as nx

from .errors import ArityMismatch, SafetyViolation, UnknownPredicate

_FACT_BARE = re.compile(r"[A-Za-z0-9][A-Za-z0-9_]*\Z")
_RULE_BARE = re.compile(r"[0-9][A-Za-z0-9_]*\Z")


def quote_constant(symbol: str, in_rule: bool = False) -> str:
    bare = _RULE_BARE if in_rule else _FACT_BARE
    if bare.match(symbol):
        return symbol
    escaped = symbol.replace("\\", "\\\\").replace('"', '\\"')
    return f'"{escaped}"'


@dataclass(frozen=True, order=True)
class Constant:
    symbol: str

    def __post_init__(self):
        object.__setattr__(self, "symbol", sys.intern(self.symbol))

    def __str__(self) -> str:
        return quote_constant(self.symbol, in_rule=True)


@dataclass(frozen=True, order=True)
class Variable:
    name: str

    def __post_init__(self):
        object.__setattr__(self, "name", sys.intern(self.name))

    def __str__(self) -> str:
        return self.name


Term = Union[Constant, Variable]


@dataclass(frozen=True, order=True)
class Fact:
    """A ground atom. Arguments are constant symbols."""

    predicate: str
    args: Tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "predicate", sys.intern(self.predicate))
        object.__setattr__(self, "args", tuple(sys.intern(a) for a in self.args))

    @property
    def arity(self) -> int:
        return len(self.args)

    def as_atom(self) -> "Atom":
        return Atom(self.predicate, tuple(Constant(a) for a in self.args))

    def __str__(self) -> str:
        return f"{self.predicate}({','.join(quote_constant(a) for a in self.args)})"


@dataclass(frozen=True)
class Atom:
    predicate: str
    args: Tuple[Term, ...]

    def __post_init__(self):
        object.__setattr__(self, "predicate", sys.intern(self.predicate))
        object.__setattr__(self, "args", tuple(self.args))

    @property
    def arity(self) -> int:
        return len(self.args)

    def variables(self) -> FrozenSet[str]:
        return frozenset(t.name for t in self.args if isinstance(t, Variable))

    def ground(self, h: Mapping[str, str]) -> Fact:
        return Fact(
            self.predicate,
            tuple(t.symbol if isinstance(t, Constant) else h[t.name] for t in self.args),
        )

    def __str__(self) -> str:
        return f"{self.predicate}({','.join(str(t) for t in self.args)})"


@dataclass(frozen=True)
class Rule:
    head: Atom
    body: Tuple[Atom, ...]

    def __post_init__(self):
        object.__setattr__(self, "body", tuple(self.body))

    def variables(self) -> FrozenSet[str]:
        out = set(self.head.variables())
        for atom in self.body:
            out |= atom.variables()
        return frozenset(out)

    def unsafe_variables(self) -> FrozenSet[str]:
        body_vars = set()
        for atom in self.body:
            body_vars |= atom.variables()
        return self.head.variables() - body_vars

    def __str__(self) -> str:
        return f"{self.head} :- {', '.join(str(a) for a in self.body)}."


@dataclass(frozen=True)
class Program:
    rules: Tuple[Rule, ...]
    arities: Dict[str, int] = field(init=False, compare=False, repr=False)
    idb: FrozenSet[str] = field(init=False, compare=False, repr=False)
    edb: FrozenSet[str] = field(init=False, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "rules", tuple(self.rules))
        arities: Dict[str, int] = {}
        for index, rule in enumerate(self.rules):
            if not rule.body:
                raise ValueError(f"rule {index} has an empty body")
            for atom in (rule.head, *rule.body):
                expected = arities.setdefault(atom.predicate, atom.arity)
                if expected != atom.arity:
                    raise ArityMismatch(atom.predicate, expected, atom.arity)
            unsafe = sorted(rule.unsafe_variables())
            if unsafe:
                raise SafetyViolation(index, unsafe[0])
        idb = frozenset(rule.head.predicate for rule in self.rules)
        object.__setattr__(self, "arities", arities)
        object.__setattr__(self, "idb", idb)
        object.__setattr__(self, "edb", frozenset(arities) - idb)

    @cached_property
    def constants(self) -> FrozenSet[str]:
        """Constant symbols written in the rules."""
        return frozenset(
            t.symbol
            for rule in self.rules
            for atom in (rule.head, *rule.body)
            for t in atom.args
            if isinstance(t, Constant)
        )

    @cached_property
    def predicate_graph(self) -> nx.DiGraph:
        graph = nx.DiGraph()
        graph.add_nodes_from(sorted(self.arities))
        for rule in self.rules:
            for atom in rule.body:
                graph.add_edge(atom.predicate, rule.head.predicate)
        return graph

    def is_intensional(self, fact: Fact) -> bool:
        return fact.predicate in self.idb

    def __str__(self) -> str:
        return "\n".join(str(rule) for rule in self.rules)


class Classification(NamedTuple):
    is_linear: bool
    is_nonrecursive: bool


def classify(p: Program) -> Classification:
    linear = all(
        sum(1 for atom in rule.body if atom.predicate in p.idb) <= 1 for rule in p.rules
    )
    return Classification(
        is_linear=linear,
        is_nonrecursive=nx.is_directed_acyclic_graph(p.predicate_graph),
    )


@dataclass(frozen=True)
class Database:
    facts: FrozenSet[Fact] = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "facts", frozenset(self.facts))

    @cached_property
    def active_domain(self) -> FrozenSet[str]:
        return frozenset(a for fact in self.facts for a in fact.args)

    @cached_property
    def ordered(self) -> Tuple[Fact, ...]:
        return tuple(sorted(self.facts))

    @cached_property
    def by_predicate(self) -> Dict[str, FrozenSet[Fact]]:
        grouped: Dict[str, set] = {}
        for fact in self.facts:
            grouped.setdefault(fact.predicate, set()).add(fact)
        return {pred: frozenset(facts) for pred, facts in grouped.items()}

    def union(self, facts: Iterable[Fact]) -> "Database":
        return Database(self.facts | frozenset(facts))

    def __contains__(self, fact: object) -> bool:
        return fact in self.facts

    def __iter__(self) -> Iterator[Fact]:
        return iter(self.ordered)

    def __len__(self) -> int:
        return len(self.facts)


@dataclass(frozen=True)
class Query:
    program: Program
    answer_predicate: str

    def __post_init__(self):
        if self.answer_predicate not in self.program.idb:
            raise UnknownPredicate(self.answer_predicate)

    @property
    def arity(self) -> int:
        return self.program.arities[self.answer_predicate]

    def fact(self, answer: Tuple[str, ...]) -> Fact:
        answer = tuple(answer)
        if len(answer) != self.arity:
            raise ArityMismatch(self.answer_predicate, self.arity, len(answer))
        return Fact(self.answer_predicate, answer)
