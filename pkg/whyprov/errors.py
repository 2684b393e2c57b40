from __future__ import annotations

from typing import Any, Dict, Iterable


class WhyProvError(Exception):
    code = "error"
    exit_code = 2

    def to_dict(self) -> Dict[str, Any]:
        return {"error": self.code, "message": str(self)}


class DatalogSyntaxError(WhyProvError):
    code = "syntax_error"

    def __init__(self, line: int, col: int, message: str):
        super().__init__(f"line {line}, col {col}: {message}")
        self.line = line
        self.col = col
        self.message = message


class SafetyViolation(WhyProvError):
    code = "safety_violation"

    def __init__(self, rule_index: int, variable: str):
        super().__init__(f"rule {rule_index}: head variable {variable!r} does not occur in the body")
        self.rule_index = rule_index
        self.variable = variable


class ArityMismatch(WhyProvError):
    code = "arity_mismatch"

    def __init__(self, predicate: str, expected: int, got: int):
        super().__init__(f"predicate {predicate!r} has arity {expected}, got {got}")
        self.predicate = predicate
        self.expected = expected
        self.got = got


class UnknownPredicate(WhyProvError):
    code = "unknown_predicate"

    def __init__(self, predicate: str):
        super().__init__(f"predicate {predicate!r} does not occur in the program")
        self.predicate = predicate


class IdbFactInInput(WhyProvError):
    code = "idb_fact_in_input"

    def __init__(self, fact: Any):
        super().__init__(f"{fact} is over an intensional predicate")
        self.fact = fact


class NotASubset(WhyProvError):
    code = "not_a_subset"

    def __init__(self, facts: Iterable[Any]):
        self.facts = sorted(facts)
        shown = ", ".join(str(f) for f in self.facts[:5])
        super().__init__(f"facts not in the database: {shown}")


class ResourceLimit(WhyProvError):
    code = "resource_limit"

    def __init__(self, limit: str, value: int):
        super().__init__(f"{limit} exceeded ({value})")
        self.limit = limit
        self.value = value


class GoalNotDerivable(WhyProvError):
    code = "goal_not_derivable"
    exit_code = 3

    def __init__(self, fact: Any):
        super().__init__(f"{fact} is not derivable")
        self.fact = fact


class TupleNotAnswer(WhyProvError):
    code = "tuple_not_answer"
    exit_code = 3

    def __init__(self, fact: Any):
        super().__init__(f"{fact} is not an answer")
        self.fact = fact


class SolverTimeout(WhyProvError):
    code = "timeout"
    exit_code = 4

    def __init__(self, budget: str):
        super().__init__(f"solver budget exhausted: {budget}")
        self.budget = budget


class OracleTooLarge(WhyProvError):
    code = "oracle_too_large"

    def __init__(self, what: str, size: int, cap: int):
        super().__init__(f"{what} is {size}, oracle cap is {cap}")
        self.what = what
        self.size = size
        self.cap = cap


class EncodingTooLarge(WhyProvError):
    code = "encoding_too_large"

    def __init__(self, clauses: int, cap: int):
        super().__init__(f"encoding needs more than {cap} clauses ({clauses} so far)")
        self.clauses = clauses
        self.cap = cap


class ExternalSolverError(WhyProvError):
    code = "external_solver_error"
