"""Instance generators: the 3SAT hardness reduction, seeded random Datalog instances and
the transitive-closure graph scenario."""
from __future__ import annotations

import itertools
import random
from dataclasses import dataclass
from typing import Dict, Iterable, List, Sequence, Tuple, Union

import networkx as nx

from ..models import Atom, Database, Fact, Program, Query, Rule, Variable
from ..parser import parse_database, parse_program

Literal = Tuple[int, bool]

BULLET = "bullet"

# walks the variables in Next order, fixing one value per variable and touching every
# clause made true by it
REDUCTION_PROGRAM = """\
R(x) :- Var(x, z, _), Assign(x, z).
R(x) :- Var(x, _, z), Assign(x, z).
Assign(x, y) :- C(x, y, _, _, _, _), Assign(x, y).
Assign(x, y) :- C(_, _, x, y, _, _), Assign(x, y).
Assign(x, y) :- C(_, _, _, _, x, y), Assign(x, y).
Assign(x, z) :- Next(x, y, z, _), R(y).
Assign(x, z) :- Next(x, y, _, z), R(y).
R(x) :- Last(x).
"""

TRANSCLOSURE_PROGRAM = """\
T(x, y) :- E(x, y).
T(x, y) :- T(x, z), E(z, y).
"""

# path accessibility: x is accessible if it is a source or reached from two accessible nodes
ACCESSIBILITY_PROGRAM = """\
A(x) :- S(x).
A(x) :- A(y), A(z), T(y, z, x).
"""
ACCESSIBILITY_FACTS = "S(a)\nT(a,a,b)\nT(a,a,c)\nT(a,a,d)\nT(b,c,a)\n"
TWO_SOURCES_FACTS = "S(a)\nS(b)\nT(a,a,c)\nT(b,b,c)\nT(c,c,d)\n"


def accessibility_instance(facts_text: str = ACCESSIBILITY_FACTS) -> Tuple[Query, Database]:
    program = parse_program(ACCESSIBILITY_PROGRAM)
    return Query(program, "A"), parse_database(facts_text, program)


@dataclass(frozen=True)
class Cnf3Formula:
    num_vars: int
    clauses: Tuple[Tuple[Literal, Literal, Literal], ...]

    def __post_init__(self):
        object.__setattr__(self, "clauses", tuple(tuple(c) for c in self.clauses))
        if self.num_vars < 1 or not self.clauses:
            raise ValueError("a 3CNF formula needs at least one variable and one clause")
        for clause in self.clauses:
            if len(clause) != 3:
                raise ValueError(f"clause {clause} does not have exactly 3 literals")
            for var, _ in clause:
                if not 1 <= var <= self.num_vars:
                    raise ValueError(f"variable {var} out of range 1..{self.num_vars}")

    def __str__(self) -> str:
        def lit(l: Literal) -> str:
            return f"v{l[0]}" if l[1] else f"-v{l[0]}"

        return " & ".join("(" + " | ".join(lit(l) for l in c) + ")" for c in self.clauses)


def is_satisfiable(phi: Cnf3Formula) -> bool:
    for values in itertools.product((False, True), repeat=phi.num_vars):
        if all(any(values[v - 1] == sign for v, sign in clause) for clause in phi.clauses):
            return True
    return False


def random_3cnf(num_vars: int, num_clauses: int, rng: random.Random) -> Cnf3Formula:
    clauses = [
        tuple((rng.randint(1, num_vars), rng.random() < 0.5) for _ in range(3))
        for _ in range(num_clauses)
    ]
    return Cnf3Formula(num_vars, tuple(clauses))


def _var(i: int) -> str:
    return f"v{i}"


def gen_3sat_instance(phi: Cnf3Formula) -> Tuple[Query, Database, Tuple[str, ...]]:
    """(query, database, ("v1",)) such that the whole database explains R(v1) iff the
    formula is satisfiable."""
    program = parse_program(REDUCTION_PROGRAM)
    n = phi.num_vars
    facts = {Fact("Var", (_var(i), "0", "1")) for i in range(1, n + 1)}
    facts |= {Fact("Next", (_var(i), _var(i + 1), "0", "1")) for i in range(1, n)}
    facts |= {Fact("Next", (_var(n), BULLET, "0", "1")), Fact("Last", (BULLET,))}
    for clause in phi.clauses:
        args: List[str] = []
        for var, positive in clause:
            args += [_var(var), "1" if positive else "0"]
        facts.add(Fact("C", tuple(args)))
    return Query(program, "R"), Database(frozenset(facts)), (_var(1),)


def _transclosure(pairs: Iterable[Tuple[object, object]]) -> Tuple[Query, Database]:
    program = parse_program(TRANSCLOSURE_PROGRAM)
    db = Database(frozenset(Fact("E", (str(a), str(b))) for a, b in pairs))
    return Query(program, "T"), db


def gen_transclosure(
    nodes: int,
    edges: Union[int, Iterable[Tuple[object, object]]],
    seed: int = 0,
) -> Tuple[Query, Database]:
    """Transitive closure over a seeded random directed graph with ``edges`` edges, or
    over the given edge pairs."""
    if not isinstance(edges, int):
        return _transclosure(edges)
    graph = nx.gnm_random_graph(nodes, edges, seed=seed, directed=True)
    return _transclosure(sorted(graph.edges()))


def load_edge_list(path: str) -> Tuple[Query, Database]:
    graph = nx.read_edgelist(path, comments="#", create_using=nx.DiGraph, nodetype=str, data=False)
    return _transclosure(graph.edges())


@dataclass(frozen=True)
class Profile:
    linear: bool
    recursive: bool
    idb: int = 2
    edb: int = 3
    max_arity: int = 2
    max_body: int = 3
    domain: int = 3
    max_facts: int = 4


PROFILES: Dict[str, Profile] = {
    "tiny-linear": Profile(linear=True, recursive=True),
    "tiny-nonlinear": Profile(linear=False, recursive=True),
    "tiny-nonrecursive": Profile(linear=True, recursive=False),
}

_VARIABLES = ("x", "y", "z", "w")


def _random_atom(rng: random.Random, predicate: str, arity: int) -> Atom:
    return Atom(predicate, tuple(Variable(rng.choice(_VARIABLES)) for _ in range(arity)))


def _random_rule(
    rng: random.Random,
    head: str,
    arities: Dict[str, int],
    edb: Sequence[str],
    idb_pool: Sequence[str],
    idb_atoms: int,
    max_body: int,
) -> Rule:
    # at least one extensional atom per body
    size = rng.randint(idb_atoms + 1, max(max_body, idb_atoms + 1))
    preds = [rng.choice(idb_pool) for _ in range(idb_atoms)]
    preds += [rng.choice(edb) for _ in range(size - idb_atoms)]
    rng.shuffle(preds)
    body = tuple(_random_atom(rng, p, arities[p]) for p in preds)
    body_vars = sorted({v for atom in body for v in atom.variables()})
    head_atom = Atom(head, tuple(Variable(rng.choice(body_vars)) for _ in range(arities[head])))
    return Rule(head_atom, body)


def gen_random_instance(profile: str, seed: int) -> Tuple[Query, Database]:
    """A small random safe program with a random database over a tiny domain."""
    try:
        shape = PROFILES[profile]
    except KeyError:
        raise ValueError(f"unknown profile {profile!r}; choose from {sorted(PROFILES)}") from None
    rng = random.Random(f"{profile}:{seed}")
    idb = [f"P{i}" for i in range(shape.idb)]
    edb = [f"E{i}" for i in range(shape.edb)]
    arities = {p: rng.randint(1, shape.max_arity) for p in idb + edb}

    rules: List[Rule] = []
    for i, head in enumerate(idb):
        rules.append(_random_rule(rng, head, arities, edb, idb, 0, shape.max_body))
        pool = idb if shape.recursive else idb[:i]
        if not pool:
            continue
        extra = rng.randint(1, 2)
        for k in range(extra):
            idb_atoms = 1
            if not shape.linear and (k == 0 or rng.random() < 0.5):
                idb_atoms = 2
            rules.append(_random_rule(rng, head, arities, edb, pool, idb_atoms, shape.max_body))
    program = Program(tuple(rules))

    domain = [chr(ord("a") + i) for i in range(shape.domain)]
    facts = set()
    for pred in sorted(program.edb):
        universe = list(itertools.product(domain, repeat=arities[pred]))
        for args in rng.sample(universe, rng.randint(1, min(shape.max_facts, len(universe)))):
            facts.add(Fact(pred, args))
    return Query(program, idb[-1]), Database(frozenset(facts))
