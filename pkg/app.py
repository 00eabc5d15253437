import os
import logging
from flask import Flask, Response, jsonify, request
from database import db, init_db
from run_registry import RunRegistry

logger = logging.getLogger(__name__)

SERVER_VERSION = "v1.0"


def _iso(value):
    return value.isoformat() if value is not None else None


def create_app(config=None):
    """Read-only browser over the run ledger."""
    try:
        app = Flask(__name__)
        app.config["RESULTS_DIR"] = os.environ.get("RESULTS_DIR", "results")
        if config:
            app.config.update(config)

        init_db(app)
        logger.info(f"Run browser {SERVER_VERSION} initialized")
    except Exception as e:
        logger.error(f"Error initializing Flask application: {str(e)}", exc_info=True)
        raise

    def shutdown_handler(exception=None):
        if exception:
            logger.warning(f"Context teardown due to error: {str(exception)}")
        try:
            db.session.remove()
        except Exception as e:
            logger.error(f"Error during cleanup: {str(e)}", exc_info=True)

    app.teardown_appcontext(shutdown_handler)

    @app.before_request
    def before_request():
        """Log incoming request details for debugging"""
        logger.info(f"Received request: {request.method} {request.path}")
        return None

    @app.route('/runs', methods=['GET'])
    def list_runs():
        """Recorded runs, newest first"""
        try:
            runs = RunRegistry.list_runs(request.args.get('experiment'),
                                         request.args.get('limit', default=100, type=int))
            for run in runs:
                run['updated_at'] = _iso(run['updated_at'])
            return jsonify({"status": "success", "runs": runs})
        except Exception as e:
            logger.error(f"Error listing runs: {str(e)}", exc_info=True)
            return jsonify({"status": "error", "message": str(e)}), 500

    @app.route('/runs/<int:run_id>', methods=['GET'])
    def get_run(run_id):
        """Report and assertion checks of one run"""
        try:
            info = RunRegistry.get_run_info(run_id)
            if not info:
                return jsonify({"status": "error", "message": "Run not found"}), 404
            info['created_at'] = _iso(info['created_at'])
            info['updated_at'] = _iso(info['updated_at'])
            return jsonify({"status": "success", "run": info})
        except Exception as e:
            logger.error(f"Error getting run {run_id}: {str(e)}", exc_info=True)
            return jsonify({"status": "error", "message": str(e)}), 500

    def _artifact(run_id, kind, mimetype):
        try:
            text = RunRegistry.get_artifact(run_id, kind)
            if text is None:
                return jsonify({"status": "error", "message": f"No {kind} stored for run {run_id}"}), 404
            return Response(text, mimetype=mimetype)
        except Exception as e:
            logger.error(f"Error serving {kind} of run {run_id}: {str(e)}", exc_info=True)
            return jsonify({"status": "error", "message": str(e)}), 500

    @app.route('/runs/<int:run_id>/results.csv', methods=['GET'])
    def get_csv(run_id):
        return _artifact(run_id, "csv", "text/csv")

    @app.route('/runs/<int:run_id>/plot.svg', methods=['GET'])
    def get_svg(run_id):
        return _artifact(run_id, "svg", "image/svg+xml")

    @app.errorhandler(404)
    def not_found_error(error):
        logger.error(f"404 error: {error}")
        return jsonify({"status": "error", "message": "Not found"}), 404

    @app.errorhandler(500)
    def internal_error(error):
        logger.error(f"500 error: {error}")
        return jsonify({"status": "error", "message": "Internal server error"}), 500

    return app
