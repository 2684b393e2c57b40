import os


def _int_env(name: str, default: int) -> int:
    raw = os.environ.get(name)
    if raw is None or not raw.strip():
        return default
    value = int(raw)
    if value < 0:
        raise ValueError(f"{name} must be >= 0")
    return value


def _float_env(name: str, default: float) -> float:
    raw = os.environ.get(name)
    if raw is None or not raw.strip():
        return default
    value = float(raw)
    if value < 0:
        raise ValueError(f"{name} must be >= 0")
    return value


class Config:
    # engine
    MAX_FACTS = _int_env("MAX_FACTS", 10_000_000)
    MAX_ITERATIONS = _int_env("MAX_ITERATIONS", 0)

    # oracles
    ORACLE_MAX_NODES = _int_env("ORACLE_MAX_NODES", 64)
    ORACLE_MAX_PRODUCT = _int_env("ORACLE_MAX_PRODUCT", 1000)
    ORACLE_MAX_FAMILY = _int_env("ORACLE_MAX_FAMILY", 100_000)

    # encoding + solving
    ENCODING_MAX_CLAUSES = _int_env("ENCODING_MAX_CLAUSES", 20_000_000)
    ACYCLICITY = os.environ.get("ACYCLICITY", "vertex_elimination")
    SOLVER_BACKEND = os.environ.get("SOLVER_BACKEND", "internal")
    EXTERNAL_SAT_SOLVER = os.environ.get("EXTERNAL_SAT_SOLVER")
    SAT_CONFLICT_BUDGET = _int_env("SAT_CONFLICT_BUDGET", 0)
    SAT_SEED = _int_env("SAT_SEED", 0)

    # enumeration
    MAX_MEMBERS = _int_env("MAX_MEMBERS", 0)
    SOLVE_TIMEOUT = _float_env("SOLVE_TIMEOUT", 0.0)

    # audit log
    AUDIT_LOG_PATH = os.environ.get("AUDIT_LOG_PATH")
