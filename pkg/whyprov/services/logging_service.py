from __future__ import annotations

from datetime import datetime, timezone
from typing import Any, Dict, Optional
import json
import logging
import os

_logger = logging.getLogger("whyprov.audit")
_DISABLE = os.environ.get("DISABLE_AUDIT_LOGS") == "1"


def _audit_path() -> Optional[str]:
    return os.environ.get("AUDIT_LOG_PATH") or None


def log_event(action: str, meta: Optional[Dict[str, Any]] = None) -> None:
    if _DISABLE:
        return

    doc = {
        "action": action,
        "meta": meta or {},
        "created_at": datetime.now(timezone.utc).isoformat(),
    }
    try:
        line = json.dumps(doc, default=str, sort_keys=True)
        _logger.info(line)
        path = _audit_path()
        if path:
            with open(path, "a", encoding="utf-8") as fh:
                fh.write(line + "\n")
    except Exception as e:
        print("Audit logging failed:", repr(e))
