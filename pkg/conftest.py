import logging

import pytest

from quadrature import QuadratureSpec

logging.basicConfig(level=logging.INFO)


@pytest.fixture
def small_quad():
    """Coarse quadrature that keeps 2-d checks fast."""
    return QuadratureSpec(points_per_axis=32, sup_points=64)


@pytest.fixture
def app(tmp_path):
    from app import create_app

    app = create_app({
        "SQLALCHEMY_DATABASE_URI": "sqlite://",
        "RESULTS_DIR": str(tmp_path),
        "TESTING": True,
    })
    yield app


@pytest.fixture
def client(app):
    return app.test_client()
