import logging
import threading

from ncrat.config import NUM_WORKERS
from ncrat.errors import NcratError

logger = logging.getLogger(__name__)


class SampleWorker:
    """
    Evaluates a batch of sample tasks on its own thread.

    A task is an (index, callable, argument) triple. Results and exceptions are
    stored by index so the caller can reassemble them in sample order no matter
    which worker finished first.

    Usage:
    1. Create worker with a list of tasks
    2. Add additional tasks if needed
    3. Call run() to execute the tasks in a separate thread
    4. Call join() to wait for completion
    """

    worker_id_counter = 0                   # counts worker ids
    worker_id_lock = threading.Lock()       # Ensures unique worker IDs

    def __init__(self, tasks=None):
        """
        Args:
            tasks: Optional list of (index, func, item) triples
        """
        if tasks is None:
            tasks = []
        self.tasks = list(tasks)        # copy, so callers can keep appending to theirs
        self.thread = None              # Thread to execute tasks
        self.results = {}               # index -> return value
        self.errors = {}                # index -> exception raised by the task

        with SampleWorker.worker_id_lock:
            self.worker_id = SampleWorker.worker_id_counter
            SampleWorker.worker_id_counter += 1

    def __repr__(self):
        return f"SampleWorker(id={self.worker_id}, tasks={len(self.tasks)})"

    def add_task(self, index, func, item):
        """
        Must be called before run() is invoked.
        """
        self.tasks.append((index, func, item))

    def run(self):
        self.thread = threading.Thread(target=self._run, name=f"sample-worker-{self.worker_id}")
        self.thread.start()

    def join(self):
        """
        Waits for all tasks to complete.

        Returns:
            int: Number of tasks that finished without raising
        """
        if self.thread:
            self.thread.join()
        return len(self.results)

    def _run(self):
        for index, func, item in self.tasks:
            try:
                self.results[index] = func(item)
            except Exception as e:
                logger.debug("worker %d: task %d raised %r", self.worker_id, index, e)
                self.errors[index] = e


def run_parallel(func, items, num_workers=NUM_WORKERS):
    """
    Applies func to every item using a pool of SampleWorkers.

    Items are dealt round-robin; the returned list is in item order. If any
    task raised, the exception of the lowest item index is re-raised, so the
    outcome never depends on thread scheduling.

    Args:
        func: callable of one argument
        items: sequence of arguments
        num_workers: number of threads (1 runs inline)

    Returns:
        list: func(item) for each item
    """
    items = list(items)
    if num_workers <= 1 or len(items) <= 1:
        return [func(item) for item in items]

    workers = [SampleWorker() for _ in range(min(num_workers, len(items)))]
    for index, item in enumerate(items):
        workers[index % len(workers)].add_task(index, func, item)
    for worker in workers:
        worker.run()
    for worker in workers:
        worker.join()

    results = {}
    errors = {}
    for worker in workers:
        results.update(worker.results)
        errors.update(worker.errors)
    if errors:
        raise errors[min(errors)]
    return [results[index] for index in range(len(items))]


def map_outcomes(func, items, num_workers=NUM_WORKERS, expected=(NcratError,)):
    """
    Like run_parallel, but exceptions of the expected types are returned in
    place of the result instead of being raised. Anything else still raises.
    """
    def guarded(item):
        try:
            return func(item)
        except expected as e:
            return e
    return run_parallel(guarded, items, num_workers)
