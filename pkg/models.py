from datetime import datetime
from database import db


class ExperimentRun(db.Model):
    """One finished experiment: its config, report and result files"""
    __tablename__ = 'experiment_runs'

    id = db.Column(db.Integer, primary_key=True)
    # config hash plus seed offset; re-running the same config replaces the row
    run_key = db.Column(db.String(100), unique=True, nullable=False)
    experiment = db.Column(db.String(50), nullable=False)
    config = db.Column(db.JSON, nullable=False)
    report = db.Column(db.JSON, nullable=False)
    csv_text = db.Column(db.Text)
    svg_text = db.Column(db.Text)
    output_dir = db.Column(db.String(500))
    passed = db.Column(db.Boolean, default=False, nullable=False)
    created_at = db.Column(db.DateTime, default=datetime.utcnow, nullable=False)
    updated_at = db.Column(db.DateTime, default=datetime.utcnow, onupdate=datetime.utcnow, nullable=False)
    checks = db.relationship('RunCheck', backref='run', lazy=True, cascade='all, delete-orphan',
                             order_by='RunCheck.id')

    def touch(self):
        """Update the modification timestamp"""
        self.updated_at = datetime.utcnow()


class RunCheck(db.Model):
    """One report assertion of a run"""
    __tablename__ = 'run_checks'

    id = db.Column(db.Integer, primary_key=True)
    run_id = db.Column(db.Integer, db.ForeignKey('experiment_runs.id'), nullable=False)
    name = db.Column(db.String(100), nullable=False)
    passed = db.Column(db.Boolean, nullable=False)
    detail = db.Column(db.Text)
    created_at = db.Column(db.DateTime, default=datetime.utcnow, nullable=False)
