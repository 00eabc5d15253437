"""Ledger of finished experiment runs."""
import logging
from datetime import datetime, timedelta
from database import db
from models import ExperimentRun, RunCheck
import reporting

logger = logging.getLogger(__name__)


class RunRegistry:
    """Records experiment outcomes and serves them back."""

    @staticmethod
    def run_key(cfg):
        return f"{cfg.config_hash()[:16]}-{cfg.seed_offset}"

    @staticmethod
    def record_run(cfg, outcome):
        """Store or replace the run of this config; returns its id."""
        try:
            key = RunRegistry.run_key(cfg)
            run = ExperimentRun.query.filter_by(run_key=key).first()
            if run:
                logger.info(f"Replacing recorded run {run.id} for key {key}")
                run.checks.clear()
                run.touch()
            else:
                run = ExperimentRun(run_key=key)
                db.session.add(run)

            run.experiment = outcome.experiment
            run.config = reporting.json_safe(cfg.to_dict())
            run.report = reporting.json_safe(outcome.report)
            run.csv_text = reporting.read_text(outcome.csv_path)
            run.svg_text = reporting.read_text(outcome.svg_path)
            run.output_dir = cfg.output_dir
            run.passed = outcome.passed
            for assertion in outcome.report.get("assertions", []):
                run.checks.append(RunCheck(name=assertion.name, passed=bool(assertion.passed),
                                           detail=assertion.detail))
            db.session.commit()

            logger.info(f"Recorded {outcome.experiment} run {run.id} (passed={run.passed})")
            return run.id

        except Exception as e:
            logger.error(f"Error recording run for {cfg.experiment}: {str(e)}")
            db.session.rollback()
            raise

    @staticmethod
    def get_run_info(run_id):
        """Report and checks of a recorded run, or None."""
        run = db.session.get(ExperimentRun, run_id)
        if not run:
            return None

        return {
            'id': run.id,
            'run_key': run.run_key,
            'experiment': run.experiment,
            'passed': run.passed,
            'config': run.config,
            'report': run.report,
            'checks': [{'name': c.name, 'passed': c.passed, 'detail': c.detail} for c in run.checks],
            'created_at': run.created_at,
            'updated_at': run.updated_at,
        }

    @staticmethod
    def get_artifact(run_id, kind):
        """Stored results.csv or plot.svg text of a run."""
        run = db.session.get(ExperimentRun, run_id)
        if not run:
            return None
        return run.csv_text if kind == "csv" else run.svg_text

    @staticmethod
    def list_runs(experiment=None, limit=100):
        query = ExperimentRun.query
        if experiment:
            query = query.filter_by(experiment=experiment)
        runs = query.order_by(ExperimentRun.updated_at.desc(), ExperimentRun.id.desc()).limit(limit).all()
        return [{
            'id': run.id,
            'experiment': run.experiment,
            'run_key': run.run_key,
            'passed': run.passed,
            'updated_at': run.updated_at,
        } for run in runs]

    @staticmethod
    def prune_runs(max_age_hours=24 * 30):
        """Delete runs not updated within the given period."""
        try:
            cutoff_time = datetime.utcnow() - timedelta(hours=max_age_hours)

            stale_runs = ExperimentRun.query.filter(ExperimentRun.updated_at < cutoff_time).all()
            for run in stale_runs:
                logger.info(f"Pruning run {run.id} ({run.experiment}) last updated {run.updated_at}")
                db.session.delete(run)

            db.session.commit()
            return len(stale_runs)

        except Exception as e:
            logger.error(f"Error pruning runs: {str(e)}")
            db.session.rollback()
            raise
