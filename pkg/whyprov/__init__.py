import os
from typing import Any, Dict, Optional

from flask import Flask

from .config import Config


def create_app(config_overrides: Optional[Dict[str, Any]] = None) -> Flask:
    app = Flask(__name__)
    app.config.from_object(Config)

    if config_overrides:
        app.config.update(config_overrides)

    # the audit service reads its sink from the environment
    if app.config.get("AUDIT_LOG_PATH"):
        os.environ["AUDIT_LOG_PATH"] = app.config["AUDIT_LOG_PATH"]

    from .commands.query import query_bp
    app.register_blueprint(query_bp)

    from .commands.explain import explain_bp
    app.register_blueprint(explain_bp)

    from .commands.bench import bench_bp
    app.register_blueprint(bench_bp)

    return app
