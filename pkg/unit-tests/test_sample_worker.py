import os
import sys
import time
import argparse
import threading
import unittest
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))
from ncrat.errors import DomainError, PencilSingular
from ncrat.sample_worker import SampleWorker, map_outcomes, run_parallel


class testingSampleWorker(unittest.TestCase):
    def test_WorkerIds(self):
        w1 = SampleWorker()
        w2 = SampleWorker()
        self.assertNotEqual(w1.worker_id, w2.worker_id, msg="worker ids should be unique")

    def test_RunAndJoin(self):
        worker = SampleWorker([(0, lambda x: x * x, 3)])
        worker.add_task(1, lambda x: x + 1, 3)
        worker.run()
        self.assertEqual(worker.join(), 2)
        self.assertEqual(worker.results, {0: 9, 1: 4})

    def test_ErrorsKeptByIndex(self):
        def fail(x):
            raise PencilSingular(0.0)
        worker = SampleWorker([(0, fail, None), (1, lambda x: x, 5)])
        worker.run()
        self.assertEqual(worker.join(), 1)
        self.assertIsInstance(worker.errors[0], PencilSingular)
        self.assertEqual(worker.results[1], 5)

    def test_TasksCopied(self):
        tasks = [(0, lambda x: x, 1)]
        worker = SampleWorker(tasks)
        tasks.append((1, lambda x: x, 2))
        self.assertEqual(len(worker.tasks), 1)


class testingRunParallel(unittest.TestCase):
    def test_OrderPreserved(self):
        def slow_square(x):
            # later items finish first
            time.sleep(0.001 * (10 - x))
            return x * x
        self.assertEqual(run_parallel(slow_square, range(10), num_workers=4), [x * x for x in range(10)])

    def test_UsesThreads(self):
        names = run_parallel(lambda x: threading.current_thread().name, range(8), num_workers=4)
        self.assertTrue(all(name.startswith("sample-worker-") for name in names))
        inline = run_parallel(lambda x: threading.current_thread().name, range(3), num_workers=1)
        self.assertEqual(inline, [threading.current_thread().name] * 3)

    def test_LowestIndexErrorWins(self):
        def pick(x):
            if x in (3, 6):
                raise ValueError(f"item {x}")
            return x
        for _ in range(5):
            with self.assertRaises(ValueError) as ctx:
                run_parallel(pick, range(8), num_workers=4)
            self.assertEqual(str(ctx.exception), "item 3")

    def test_Empty(self):
        self.assertEqual(run_parallel(lambda x: x, [], num_workers=4), [])

    def test_MapOutcomes(self):
        def maybe(x):
            if x % 2:
                raise PencilSingular(0.0)
            return x
        outcomes = map_outcomes(maybe, range(4), num_workers=2, expected=(DomainError,))
        self.assertEqual(outcomes[0], 0)
        self.assertIsInstance(outcomes[1], PencilSingular)
        self.assertEqual(outcomes[2], 2)

    def test_UnexpectedErrorsRaise(self):
        def broken(x):
            raise KeyError(x)
        with self.assertRaises(KeyError):
            map_outcomes(broken, range(3), num_workers=2, expected=(DomainError,))

    def test_DefaultCatchesOnlyNcratErrors(self):
        def reciprocal(x):
            if x == 0:
                raise PencilSingular(0.0)
            return 1 / x
        outcomes = map_outcomes(reciprocal, range(3), num_workers=2)
        self.assertIsInstance(outcomes[0], PencilSingular)
        self.assertEqual(outcomes[2], 0.5)
        with self.assertRaises(TypeError):
            map_outcomes(lambda x: x + "", range(3), num_workers=2)


def worker_Suite():
    loader = unittest.TestLoader()
    suite = unittest.TestSuite()
    suite.addTests(loader.loadTestsFromTestCase(testingSampleWorker))
    suite.addTests(loader.loadTestsFromTestCase(testingRunParallel))
    return suite


if __name__ == '__main__':
    parser = argparse.ArgumentParser(description='Run sample worker unit tests')
    parser.add_argument('-v', '--verbose', action='store_true', help='Run tests in verbose mode')
    args = parser.parse_args()
    runner = unittest.TextTestRunner(verbosity=2 if args.verbose else 1)
    runner.run(worker_Suite())
