import os
from flask_sqlalchemy import SQLAlchemy
import logging

logger = logging.getLogger(__name__)

# Initialize SQLAlchemy without binding to an app
db = SQLAlchemy()

DEFAULT_DB_NAME = "runs.sqlite"


def database_url(output_dir="results"):
    """DATABASE_URL, or a SQLite ledger next to the experiment results."""
    url = os.environ.get("DATABASE_URL")
    if url:
        return url
    return f"sqlite:///{os.path.abspath(os.path.join(output_dir, DEFAULT_DB_NAME))}"


def init_db(app):
    """Bind the run ledger to the given Flask app and create its tables"""
    try:
        if not app.config.get("SQLALCHEMY_DATABASE_URI"):
            output_dir = app.config.get("RESULTS_DIR", "results")
            os.makedirs(output_dir, exist_ok=True)
            app.config["SQLALCHEMY_DATABASE_URI"] = database_url(output_dir)
        app.config["SQLALCHEMY_TRACK_MODIFICATIONS"] = False
        if not app.config["SQLALCHEMY_DATABASE_URI"].startswith("sqlite"):
            app.config["SQLALCHEMY_ENGINE_OPTIONS"] = {
                "pool_recycle": 300,
                "pool_pre_ping": True,
            }

        logger.info("Initializing run ledger connection...")
        db.init_app(app)

        with app.app_context():
            # Import models here to avoid circular imports
            from models import ExperimentRun, RunCheck  # noqa: F401

            logger.info("Creating run ledger tables...")
            db.create_all()
            logger.info("Run ledger initialization completed successfully")

    except Exception as e:
        logger.error(f"Database initialization failed: {str(e)}", exc_info=True)
        raise
