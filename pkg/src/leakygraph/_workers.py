"""Global worker budget (``LGQ_THREADS``) and an ordered parallel map."""
import os
from concurrent.futures import ThreadPoolExecutor


def worker_budget():
    env = os.environ.get("LGQ_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return os.cpu_count() or 1


def parallel_map(fn, items, workers=None):
    """``[fn(x) for x in items]``, threaded when the budget allows.

    Results come back in input order.  LAPACK and the special functions
    release the GIL, so threads are enough.
    """
    items = list(items)
    n = worker_budget() if workers is None else max(1, int(workers))
    if n == 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=min(n, len(items))) as pool:
        return list(pool.map(fn, items))
