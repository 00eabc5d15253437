"""Order-preserving parallel map on a gevent thread pool."""
import logging
import os

from gevent.threadpool import ThreadPool

logger = logging.getLogger(__name__)


def default_jobs():
    """Worker count from ``KOROBOV_JOBS`` (default 1)."""
    try:
        return max(1, int(os.environ.get("KOROBOV_JOBS", 1)))
    except ValueError:
        logger.warning(f"Ignoring invalid KOROBOV_JOBS={os.environ.get('KOROBOV_JOBS')!r}")
        return 1


def parallel_map(fn, items, jobs=None):
    """Apply ``fn`` to every item and return results in input order.

    With ``jobs`` <= 1 the map runs inline. Otherwise the items are spread over
    a ``gevent.threadpool.ThreadPool``; numpy releases the GIL in the heavy
    kernels so real threads help. Reduction order never depends on ``jobs``.
    """
    items = list(items)
    jobs = default_jobs() if jobs is None else int(jobs)
    if jobs <= 1 or len(items) <= 1:
        return [fn(item) for item in items]

    logger.debug(f"Dispatching {len(items)} tasks to {jobs} pool threads")
    pool = ThreadPool(min(jobs, len(items)))
    try:
        return list(pool.map(fn, items))
    except Exception as e:
        logger.error(f"Parallel map failed: {str(e)}", exc_info=True)
        raise
    finally:
        pool.kill()
