from __future__ import annotations

import functools
import json
import sys
from typing import Any, Callable, Dict, Tuple

import click
from flask import current_app

from ..errors import WhyProvError
from ..models import Database, Program, Query
from ..parser import parse_database, parse_goal, parse_program
from ..services.logging_service import log_event

EXIT_OK = 0
EXIT_NEGATIVE = 1

ACYCLICITY_CHOICES = ["tc", "ve", "transitive_closure", "vertex_elimination"]


def read_text(path: str) -> str:
    with open(path, encoding="utf-8") as fh:
        return fh.read()


def load_program(path: str) -> Program:
    return parse_program(read_text(path))


def load_database(path: str, program: Program) -> Database:
    return parse_database(read_text(path), program)


def load_instance(program_path: str, facts_path: str, goal_text: str) -> Tuple[Query, Database, Tuple[str, ...]]:
    program = load_program(program_path)
    db = load_database(facts_path, program)
    goal = parse_goal(goal_text, program)
    return Query(program, goal.predicate), db, goal.args


def engine_options() -> Dict[str, Any]:
    cfg = current_app.config
    return {"max_facts": cfg["MAX_FACTS"], "max_iterations": cfg["MAX_ITERATIONS"]}


def solver_options() -> Dict[str, Any]:
    cfg = current_app.config
    return {
        "backend": cfg["SOLVER_BACKEND"],
        "seed": cfg["SAT_SEED"],
        "conflict_budget": cfg["SAT_CONFLICT_BUDGET"],
        "external_command": cfg["EXTERNAL_SAT_SOLVER"],
        "max_clauses": cfg["ENCODING_MAX_CLAUSES"],
    }


def echo_json(payload: Any) -> None:
    click.echo(json.dumps(payload, indent=2, sort_keys=True, default=str))


def handles_errors(command: Callable) -> Callable:
    """Turns a WhyProvError into its exit code, with the message on stderr or the JSON
    envelope on stdout when the command runs with ``--output json``."""

    @functools.wraps(command)
    def wrapper(*args, **kwargs):
        try:
            return command(*args, **kwargs)
        except WhyProvError as e:
            log_event("command_failed", meta={"command": command.__name__, **e.to_dict()})
            if kwargs.get("output") == "json":
                echo_json(e.to_dict())
            else:
                click.echo(f"error: {e}", err=True)
            sys.exit(e.exit_code)

    return wrapper
