"""CNF encoding of compressed-DAG search over a downward closure.

The formula is the conjunction of four parts over node (x), hyperedge (y), edge (z) and
cycle variables:

* graph: a selected edge selects both endpoints;
* root: the goal is selected, has no parent, every other selected node has one;
* proof: a selected derived node picks a hyperedge, which fixes exactly its edges;
* acyclic: transitive-closure or vertex-elimination constraints on the selected edges.
"""
from __future__ import annotations

import heapq
import time
from dataclasses import dataclass, field
from typing import Dict, Hashable, Iterable, List, Mapping, Optional, Sequence, TextIO, Tuple

import networkx as nx
from pysat.formula import CNF, IDPool

from ..errors import EncodingTooLarge
from ..models import Database, Fact
from .closure import DownwardClosure, Hyperedge
from .logging_service import log_event

TRANSITIVE_CLOSURE = "transitive_closure"
VERTEX_ELIMINATION = "vertex_elimination"
_ALIASES = {
    "tc": TRANSITIVE_CLOSURE,
    TRANSITIVE_CLOSURE: TRANSITIVE_CLOSURE,
    "ve": VERTEX_ELIMINATION,
    VERTEX_ELIMINATION: VERTEX_ELIMINATION,
}
DEFAULT_MAX_CLAUSES = 20_000_000

Clause = List[int]
Pair = Tuple[Fact, Fact]


def normalize_strategy(name: str) -> str:
    try:
        return _ALIASES[name.strip().lower()]
    except KeyError:
        raise ValueError(f"unknown acyclicity strategy {name!r}") from None


class VarMap:
    """Dense variable ids over tagged keys, one family per variable kind."""

    FAMILIES = ("node", "hedge", "edge", "tc", "ve")

    def __init__(self):
        self.pool = IDPool()
        self.families: Dict[str, Dict[Hashable, int]] = {f: {} for f in self.FAMILIES}

    def new(self, family: str, obj: Hashable) -> int:
        var = self.pool.id((family, obj))
        self.families[family][obj] = var
        return var

    def get(self, family: str, obj: Hashable) -> Optional[int]:
        return self.families[family].get(obj)

    @property
    def node_vars(self) -> Dict[Fact, int]:
        return self.families["node"]

    @property
    def hedge_vars(self) -> Dict[Hyperedge, int]:
        return self.families["hedge"]

    @property
    def edge_vars(self) -> Dict[Pair, int]:
        return self.families["edge"]

    @property
    def cycle_vars(self) -> Dict[Tuple[str, Pair], int]:
        return {(f, k): v for f in ("tc", "ve") for k, v in self.families[f].items()}

    @property
    def top(self) -> int:
        return self.pool.top

    def lookup(self, var: int) -> Tuple[str, Hashable]:
        return self.pool.obj(abs(var))

    def describe(self, var: int) -> str:
        family, obj = self.lookup(var)
        if family == "node":
            return f"node {obj}"
        if family == "hedge":
            return f"hedge {obj}"
        head, member = obj
        if family == "edge":
            return f"edge {head} -> {member}"
        return f"aux {family} {head} -> {member}"


@dataclass
class CnfInstance:
    goal: Fact
    strategy: str
    clauses: List[Clause]
    var_map: VarMap
    db_leaf_vars: Dict[Fact, int]
    elapsed: float = 0.0
    stats: Dict[str, int] = field(default_factory=dict)

    @property
    def num_vars(self) -> int:
        return self.var_map.top

    def blocking_clause(self, member: Iterable[Fact]) -> Clause:
        """Excludes every assignment whose database leaves are exactly ``member``."""
        chosen = set(member)
        return [-v if f in chosen else v for f, v in sorted(self.db_leaf_vars.items())]


class _ClauseSink(list):
    def __init__(self, cap: int):
        super().__init__()
        self.cap = cap

    def add(self, clause: Clause) -> None:
        if self.cap and len(self) >= self.cap:
            raise EncodingTooLarge(len(self) + 1, self.cap)
        self.append(clause)


def encode_acyclicity_tc(
    edges: Mapping[Pair, int],
    nodes: Iterable[Fact],
    var_map: VarMap,
    sink: Optional[List[Clause]] = None,
) -> List[Clause]:
    """z(a,b) -> t(a,b), z(a,b) & t(b,c) -> t(a,c), and not t(a,a).

    t(a,c) exists only when c is reachable from a; no other t can be forced true.
    """
    out = sink if sink is not None else []
    add = getattr(out, "add", out.append)
    graph = nx.DiGraph()
    graph.add_nodes_from(sorted(nodes))
    graph.add_edges_from(sorted(edges))
    reach: Dict[Fact, List[Fact]] = {}
    for a in sorted(graph):
        var_map.new("tc", (a, a))
        reach[a] = sorted(nx.descendants(graph, a) - {a})
        for c in reach[a]:
            var_map.new("tc", (a, c))
    tc = var_map.families["tc"]
    for (a, b), z in sorted(edges.items()):
        add([-z, tc[(a, b)]])
        for c in [b] + reach[b]:
            add([-z, -tc[(b, c)], tc[(a, c)]])
    for a in sorted(graph):
        add([-tc[(a, a)]])
    return out


def encode_acyclicity_ve(
    edges: Mapping[Pair, int],
    nodes: Iterable[Fact],
    var_map: VarMap,
    order: Optional[Sequence[Fact]] = None,
    sink: Optional[List[Clause]] = None,
) -> List[Clause]:
    """Vertex elimination over arc variables r(a,b), one per arc of the elimination
    graph and never shared with an edge variable: z(a,b) -> r(a,b). Removing v adds
    r(u,v) & r(v,w) -> r(u,w) for each predecessor u and successor w, and a 2-cycle
    u -> v -> u is forbidden outright. Without ``order`` the next vertex is the one
    adding the fewest arcs (in-degree times out-degree, ties broken by fact order)."""
    out = sink if sink is not None else []
    add = getattr(out, "add", out.append)
    nodes = sorted(set(nodes))
    arc: Dict[Pair, int] = {}
    succ: Dict[Fact, set] = {n: set() for n in nodes}
    pred: Dict[Fact, set] = {n: set() for n in nodes}
    for (a, b), z in sorted(edges.items()):
        if a == b:
            add([-z])
            continue
        arc[(a, b)] = var_map.new("ve", (a, b))
        add([-z, arc[(a, b)]])
        succ.setdefault(a, set()).add(b)
        pred.setdefault(b, set()).add(a)
        succ.setdefault(b, set())
        pred.setdefault(a, set())
    if order is not None and sorted(order) != sorted(succ):
        raise ValueError("elimination order must be a permutation of the nodes")

    def fill(v: Fact) -> int:
        return len(pred[v]) * len(succ[v])

    def eliminate(v: Fact) -> List[Fact]:
        for u in sorted(pred[v]):
            for w in sorted(succ[v]):
                if u == w:
                    add([-arc[(u, v)], -arc[(v, u)]])
                    continue
                if (u, w) not in arc:
                    arc[(u, w)] = var_map.new("ve", (u, w))
                    succ[u].add(w)
                    pred[w].add(u)
                add([-arc[(u, v)], -arc[(v, w)], arc[(u, w)]])
        touched = sorted(pred[v] | succ[v])
        for u in pred[v]:
            succ[u].discard(v)
        for w in succ[v]:
            pred[w].discard(v)
        pred[v] = set()
        succ[v] = set()
        return touched

    if order is not None:
        for v in order:
            eliminate(v)
        return out

    eliminated = set()
    heap = [(fill(v), v) for v in succ]
    heapq.heapify(heap)
    while heap:
        score, v = heapq.heappop(heap)
        if v in eliminated:
            continue
        current = fill(v)
        if current != score:
            heapq.heappush(heap, (current, v))
            continue
        eliminated.add(v)
        for n in eliminate(v):
            if n not in eliminated:
                heapq.heappush(heap, (fill(n), n))
    return out


def encode(
    dc: DownwardClosure,
    goal: Fact,
    acyclicity: str = VERTEX_ELIMINATION,
    max_clauses: int = DEFAULT_MAX_CLAUSES,
) -> CnfInstance:
    """Compile the closure of ``goal`` into CNF.

    Closure nodes without outgoing hyperedges are exactly its database facts, so they
    become the leaf variables enumeration projects onto.
    """
    strategy = normalize_strategy(acyclicity)
    started = time.perf_counter()
    graph = dc.graph
    vm = VarMap()
    nodes = sorted(graph.nodes)
    x = {f: vm.new("node", f) for f in nodes}
    y = {e: vm.new("hedge", e) for e in graph.hyperedges}
    pairs = graph.edge_pairs()
    z = {pair: vm.new("edge", pair) for pair in pairs}

    incoming: Dict[Fact, List[int]] = {}
    by_head: Dict[Fact, List[Pair]] = {}
    for a, b in pairs:
        incoming.setdefault(b, []).append(z[(a, b)])
        by_head.setdefault(a, []).append((a, b))

    sink = _ClauseSink(max_clauses)
    for (a, b), var in z.items():
        sink.add([-var, x[a]])
        sink.add([-var, x[b]])

    sink.add([x[goal]])
    for var in incoming.get(goal, ()):
        sink.add([-var])
    for f in nodes:
        if f != goal:
            sink.add([-x[f]] + incoming.get(f, []))

    for f in nodes:
        hedges = graph.outgoing(f)
        if not hedges:
            continue
        sink.add([-x[f]] + [y[e] for e in hedges])
        for e in hedges:
            members = set(e.body)
            for pair in by_head[f]:
                sink.add([-y[e], z[pair] if pair[1] in members else -z[pair]])

    if strategy == TRANSITIVE_CLOSURE:
        encode_acyclicity_tc(z, nodes, vm, sink=sink)
    else:
        encode_acyclicity_ve(z, nodes, vm, sink=sink)

    leaves = {f: x[f] for f in nodes if not graph.outgoing(f)}
    elapsed = time.perf_counter() - started
    stats = {
        "nodes": len(x),
        "hyperedges": len(y),
        "edges": len(z),
        "cycle_vars": len(vm.families["tc"]) + len(vm.families["ve"]),
        "vars": vm.top,
        "clauses": len(sink),
    }
    log_event(
        "encoding_built",
        meta={"goal": str(goal), "strategy": strategy, "seconds": round(elapsed, 6), **stats},
    )
    return CnfInstance(
        goal=goal,
        strategy=strategy,
        clauses=list(sink),
        var_map=vm,
        db_leaf_vars=leaves,
        elapsed=elapsed,
        stats=stats,
    )


def db_leaf_facts(cnf: CnfInstance, db: Database) -> List[Fact]:
    return sorted(f for f in cnf.db_leaf_vars if f in db)


def to_pysat(cnf: CnfInstance) -> CNF:
    formula = CNF(from_clauses=cnf.clauses)
    formula.nv = max(formula.nv, cnf.num_vars)
    return formula


def write_dimacs(cnf: CnfInstance, fp: TextIO) -> None:
    to_pysat(cnf).to_fp(fp, comments=[f"c goal {cnf.goal}", f"c acyclicity {cnf.strategy}"])


def write_var_map(cnf: CnfInstance, fp: TextIO) -> None:
    for var in range(1, cnf.num_vars + 1):
        fp.write(f"var {var} {cnf.var_map.describe(var)}\n")


def read_dimacs(text: str) -> Tuple[int, List[Clause]]:
    formula = CNF(from_string=text)
    return formula.nv, [list(c) for c in formula.clauses]
