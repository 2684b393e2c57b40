from __future__ import annotations

import sys
from typing import Any, Dict, List, Optional

import click
from flask import Blueprint, current_app

from ..errors import TupleNotAnswer
from ..services.closure import closure_for
from ..services.encoder import encode, write_dimacs, write_var_map
from ..services.engine import fixpoint
from ..services.prooftrees import tree_to_dot
from ..services.provenance import (
    EnumerationSession,
    SessionStatus,
    check_membership,
    format_member_text,
)
from .common import (
    ACYCLICITY_CHOICES,
    EXIT_NEGATIVE,
    EXIT_OK,
    echo_json,
    engine_options,
    handles_errors,
    load_database,
    load_instance,
    solver_options,
)

explain_bp = Blueprint("explain", __name__, cli_group=None)

EXIT_TIMEOUT = 4

_program = click.argument("program_path", metavar="PROGRAM", type=click.Path(exists=True, dir_okay=False))
_facts = click.argument("facts_path", metavar="FACTS", type=click.Path(exists=True, dir_okay=False))
_goal = click.argument("goal_text", metavar="GOAL")


def _acyclicity(value: Optional[str]) -> str:
    return value or current_app.config["ACYCLICITY"]


def _summary_text(summary: Dict[str, Any]) -> str:
    delay = summary["delay"]

    def seconds(value: Optional[float]) -> str:
        return "-" if value is None else f"{value:.6f}"

    return (
        f"# members={summary['members']} status={summary['status']}"
        f" delay_min={seconds(delay['min'])} delay_median={seconds(delay['median'])}"
        f" delay_max={seconds(delay['max'])}"
        f" closure={summary['closure_seconds']:.6f}s encode={summary['encode_seconds']:.6f}s"
    )


@explain_bp.cli.command("explain")
@_program
@_facts
@_goal
@click.option("--limit", type=click.IntRange(min=0), default=None, help="Stop after this many members (0: no limit).")
@click.option("--timeout", type=click.FloatRange(min=0), default=None, help="Wall-clock seconds for the whole stream.")
@click.option("--acyclicity", type=click.Choice(ACYCLICITY_CHOICES), default=None)
@click.option("--output", type=click.Choice(["text", "json"]), default="text", show_default=True)
@click.option("--witness", is_flag=True, help="Also print an unambiguous proof tree per member.")
@handles_errors
def explain_command(
    program_path: str,
    facts_path: str,
    goal_text: str,
    limit: Optional[int],
    timeout: Optional[float],
    acyclicity: Optional[str],
    output: str,
    witness: bool,
):
    """Stream the database subsets explaining GOAL through unambiguous proof trees."""
    cfg = current_app.config
    q, db, answer = load_instance(program_path, facts_path, goal_text)
    fix = fixpoint(q.program, db, **engine_options())
    session = EnumerationSession(
        q,
        db,
        answer,
        fix=fix,
        acyclicity=_acyclicity(acyclicity),
        max_members=cfg["MAX_MEMBERS"] if limit is None else limit,
        timeout=cfg["SOLVE_TIMEOUT"] if timeout is None else timeout,
        decode_witness=witness,
        **solver_options(),
    )
    if not session.is_answer:
        raise TupleNotAnswer(session.goal)

    members: List[Dict[str, Any]] = []
    for member in session:
        tree = member.unravel(q.program) if witness else None
        if output == "json":
            record: Dict[str, Any] = {"facts": [str(f) for f in member.sorted_facts()]}
            if tree is not None:
                record["tree"] = tree_to_dot(tree)
            members.append(record)
            continue
        click.echo(format_member_text(member))
        sys.stdout.flush()
        if tree is not None:
            for line in tree.render().splitlines():
                click.echo(f"#   {line}", err=True)

    summary = session.summary()
    if output == "json":
        echo_json({"goal": str(session.goal), "members": members, "summary": summary})
    else:
        click.echo(_summary_text(summary), err=True)
    if session.status == SessionStatus.TIMEOUT:
        sys.exit(EXIT_TIMEOUT)


@explain_bp.cli.command("check")
@_program
@_facts
@_goal
@click.argument("subset_path", metavar="SUBSET", type=click.Path(exists=True, dir_okay=False))
@click.option("--acyclicity", type=click.Choice(ACYCLICITY_CHOICES), default=None)
@click.option("--timeout", type=click.FloatRange(min=0), default=None)
@handles_errors
def check_command(
    program_path: str,
    facts_path: str,
    goal_text: str,
    subset_path: str,
    acyclicity: Optional[str],
    timeout: Optional[float],
):
    """Decide whether SUBSET is explained by an unambiguous proof tree of GOAL."""
    q, db, answer = load_instance(program_path, facts_path, goal_text)
    d_sub = load_database(subset_path, q.program)
    verdict = check_membership(
        q,
        db,
        answer,
        d_sub,
        fix=fixpoint(q.program, db, **engine_options()),
        acyclicity=_acyclicity(acyclicity),
        timeout=current_app.config["SOLVE_TIMEOUT"] if timeout is None else timeout,
        **solver_options(),
    )
    click.echo("MEMBER" if verdict else "NOT-MEMBER")
    sys.exit(EXIT_OK if verdict else EXIT_NEGATIVE)


@explain_bp.cli.command("export-dimacs")
@_program
@_facts
@_goal
@click.option("-o", "--out", "out_path", type=click.Path(dir_okay=False), default="-", show_default=True)
@click.option("--var-map", "var_map_path", type=click.Path(dir_okay=False), default=None,
              help="Variable map sidecar; defaults to OUT.vars when OUT is a file.")
@click.option("--acyclicity", type=click.Choice(ACYCLICITY_CHOICES), default=None)
@handles_errors
def export_dimacs_command(
    program_path: str,
    facts_path: str,
    goal_text: str,
    out_path: str,
    var_map_path: Optional[str],
    acyclicity: Optional[str],
):
    """Write the CNF formula of GOAL in DIMACS form, plus a variable map."""
    q, db, answer = load_instance(program_path, facts_path, goal_text)
    fix = fixpoint(q.program, db, **engine_options())
    goal = q.fact(answer)
    if goal not in fix:
        raise TupleNotAnswer(goal)
    cnf = encode(
        closure_for(fix, goal),
        goal,
        _acyclicity(acyclicity),
        max_clauses=current_app.config["ENCODING_MAX_CLAUSES"],
    )

    if out_path == "-":
        write_dimacs(cnf, sys.stdout)
    else:
        with open(out_path, "w", encoding="utf-8") as fh:
            write_dimacs(cnf, fh)
        var_map_path = var_map_path or f"{out_path}.vars"
    if var_map_path:
        with open(var_map_path, "w", encoding="utf-8") as fh:
            write_var_map(cnf, fh)
