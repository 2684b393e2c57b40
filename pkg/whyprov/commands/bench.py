from __future__ import annotations

import random
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from typing import Any, Dict, List, Optional, Tuple

import click
from flask import Blueprint, current_app

from ..services.generators import PROFILES, gen_transclosure, load_edge_list
from ..services.harness import DEFAULT_PROFILES, sweep_rank_depth, sweep_reduction, sweep_unwhy
from ..services.logging_service import log_event
from ..services.provenance import ProvenanceContext
from .common import (
    ACYCLICITY_CHOICES,
    EXIT_NEGATIVE,
    EXIT_OK,
    echo_json,
    engine_options,
    handles_errors,
    solver_options,
)

bench_bp = Blueprint("bench", __name__, cli_group=None)


def _tuple_record(ctx: ProvenanceContext, answer: Tuple[str, ...], limit: int, timeout: float) -> Dict[str, Any]:
    session = ctx.session(answer, max_members=limit, timeout=timeout)
    # limit 0 measures closure and encoding only
    if limit:
        session.collect()
    elif session.solver is not None:
        session.solver.delete()
    record = session.summary()
    record["tuple"] = list(answer)
    return record


@bench_bp.cli.command("bench")
@click.option("--nodes", type=click.IntRange(min=1), default=200, show_default=True)
@click.option("--edges", type=click.IntRange(min=0), default=600, show_default=True)
@click.option("--edges-file", type=click.Path(exists=True, dir_okay=False), default=None,
              help="Whitespace-separated edge list used instead of a random graph.")
@click.option("--tuples", "k", type=click.IntRange(min=1), default=5, show_default=True)
@click.option("--limit", type=click.IntRange(min=0), default=1000, show_default=True,
              help="Members per tuple; 0 times closure and encoding only.")
@click.option("--timeout", type=click.FloatRange(min=0), default=None, help="Wall-clock seconds per tuple.")
@click.option("--acyclicity", type=click.Choice(ACYCLICITY_CHOICES), default=None)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--workers", type=click.IntRange(min=1), default=1, show_default=True)
@handles_errors
def bench_command(
    nodes: int,
    edges: int,
    edges_file: Optional[str],
    k: int,
    limit: int,
    timeout: Optional[float],
    acyclicity: Optional[str],
    seed: int,
    workers: int,
):
    """Transitive-closure benchmark: closure and encoding times and enumeration delays
    for a seeded sample of answer tuples, as JSON."""
    cfg = current_app.config
    if edges_file:
        q, db = load_edge_list(edges_file)
        scenario: Dict[str, Any] = {"edges_file": edges_file}
    else:
        q, db = gen_transclosure(nodes, edges, seed=seed)
        scenario = {"nodes": nodes, "edges": edges}
    scenario.update({"facts": len(db), "seed": seed, "tuples": k, "limit": limit})

    started = time.perf_counter()
    ctx = ProvenanceContext(
        q,
        db,
        acyclicity=acyclicity or cfg["ACYCLICITY"],
        **engine_options(),
        **solver_options(),
    )
    fixpoint_seconds = time.perf_counter() - started
    candidates = ctx.answers()
    chosen = random.Random(seed).sample(candidates, min(k, len(candidates)))
    per_tuple_timeout = cfg["SOLVE_TIMEOUT"] if timeout is None else timeout

    with ThreadPoolExecutor(max_workers=workers) as pool:
        records: List[Dict[str, Any]] = list(
            pool.map(lambda answer: _tuple_record(ctx, answer, limit, per_tuple_timeout), chosen)
        )

    payload = {
        "scenario": scenario,
        "answers": len(candidates),
        "fixpoint_seconds": fixpoint_seconds,
        "fixpoint_facts": len(ctx.fix.facts),
        "records": records,
    }
    log_event("bench_finished", meta={**scenario, "answers": len(candidates), "records": len(records)})
    echo_json(payload)


@bench_bp.cli.command("sweep")
@click.argument("kind", type=click.Choice(["unwhy", "reduction", "rank-depth"]))
@click.option("-n", "--instances", type=click.IntRange(min=0), default=100, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--profile", "profiles", multiple=True, type=click.Choice(sorted(PROFILES)),
              help="Random-instance profile; repeat for several. All profiles by default.")
@click.option("--workers", type=click.IntRange(min=1), default=1, show_default=True)
@click.option("--compare-backend", default=None, help="Second solver backend whose members must agree.")
@handles_errors
def sweep_command(kind: str, instances: int, seed: int, profiles: Tuple[str, ...], workers: int, compare_backend: Optional[str]):
    """Differential sweep; prints a JSON report and exits 1 on any mismatch."""
    cfg = current_app.config
    profiles = profiles or DEFAULT_PROFILES
    if kind == "unwhy":
        report = sweep_unwhy(
            profiles,
            instances,
            seed,
            workers=workers,
            max_nodes=cfg["ORACLE_MAX_NODES"],
            max_product=cfg["ORACLE_MAX_PRODUCT"],
            max_family=cfg["ORACLE_MAX_FAMILY"],
            backend=cfg["SOLVER_BACKEND"],
            compare_backend=compare_backend,
            external_command=cfg["EXTERNAL_SAT_SOLVER"],
        )
    elif kind == "reduction":
        report = sweep_reduction(
            instances,
            seed,
            max_product=cfg["ORACLE_MAX_PRODUCT"],
            max_family=cfg["ORACLE_MAX_FAMILY"],
            workers=workers,
        )
    else:
        report = sweep_rank_depth(profiles, instances, seed, workers=workers)
    echo_json(report.to_json())
    sys.exit(EXIT_OK if report.passed else EXIT_NEGATIVE)
