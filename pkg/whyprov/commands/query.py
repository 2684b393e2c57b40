from __future__ import annotations

from typing import Optional

import click
from flask import Blueprint

from ..errors import UnknownPredicate
from ..models import classify
from ..parser import render_fact
from ..services.engine import fixpoint
from .common import echo_json, engine_options, handles_errors, load_database, load_program

query_bp = Blueprint("query", __name__, cli_group=None)


@query_bp.cli.command("eval")
@click.argument("program_path", metavar="PROGRAM", type=click.Path(exists=True, dir_okay=False))
@click.argument("facts_path", metavar="FACTS", type=click.Path(exists=True, dir_okay=False))
@click.option("-p", "--predicate", help="Answer predicate; all intensional predicates when omitted.")
@click.option("--output", type=click.Choice(["text", "json"]), default="text", show_default=True)
@handles_errors
def eval_command(program_path: str, facts_path: str, predicate: Optional[str], output: str):
    """Evaluate PROGRAM over FACTS and print the derived facts, sorted."""
    program = load_program(program_path)
    db = load_database(facts_path, program)
    if predicate is not None and predicate not in program.idb:
        raise UnknownPredicate(predicate)
    predicates = [predicate] if predicate else sorted(program.idb)

    fix = fixpoint(program, db, **engine_options())
    derived = {p: sorted(fix.facts.by_predicate.get(p, ())) for p in predicates}

    if output == "json":
        shape = classify(program)
        echo_json({
            "answers": {p: [list(f.args) for f in facts] for p, facts in derived.items()},
            "facts": len(fix.facts),
            "iterations": fix.iterations,
            "linear": shape.is_linear,
            "nonrecursive": shape.is_nonrecursive,
        })
        return
    for p in predicates:
        for fact in derived[p]:
            click.echo(render_fact(fact))
