import os
import unittest
from unittest import mock

import numpy as np

from fieldoscopysim import streams
from fieldoscopysim.errors import ConfigurationError


class TestSeeds(unittest.TestCase):
    def test_validate_seed(self):
        self.assertEqual(streams.validate_seed(np.uint64(5)), 5)
        self.assertEqual(streams.validate_seed(2 ** 64 - 1), 2 ** 64 - 1)
        for bad in (-1, 2 ** 64, 1.0, True, '3'):
            with self.subTest(seed=bad):
                with self.assertRaises(ConfigurationError):
                    streams.validate_seed(bad)

    def test_streams_are_reproducible(self):
        first = streams.derive_rng(42, 'sweep', 3).random(5)
        second = streams.derive_rng(42, 'sweep', 3).random(5)
        np.testing.assert_array_equal(first, second)

    def test_streams_are_distinct(self):
        draws = [streams.derive_rng(*path).random()
                 for path in ((42, 'sweep', 3), (42, 'sweep', 4),
                              (42, 'delay', 3), (43, 'sweep', 3))]
        self.assertEqual(len(set(draws)), len(draws))

    def test_derived_seed(self):
        child = streams.derive_seed(7, 'energy', 0)
        self.assertEqual(child, streams.derive_seed(7, 'energy', 0))
        self.assertNotEqual(child, streams.derive_seed(7, 'energy', 1))
        self.assertEqual(streams.validate_seed(child), child)


class TestWorkers(unittest.TestCase):
    def test_explicit(self):
        self.assertEqual(streams.worker_count(3), 3)
        with self.assertRaises(ConfigurationError):
            streams.worker_count(-1)

    def test_environment(self):
        with mock.patch.dict(os.environ, {streams.THREADS_VARIABLE: '2'}):
            self.assertEqual(streams.worker_count(), 2)
        with mock.patch.dict(os.environ, {streams.THREADS_VARIABLE: '0'}):
            self.assertEqual(streams.worker_count(), os.cpu_count() or 1)
        with mock.patch.dict(os.environ, {streams.THREADS_VARIABLE: 'many'}):
            with self.assertRaises(ConfigurationError):
                streams.worker_count()

    def test_parallel_map_keeps_order(self):
        items = list(range(20))
        expected = [streams.derive_rng(1, item).random() for item in items]
        for workers in (1, 4):
            result = streams.parallel_map(
                lambda item: streams.derive_rng(1, item).random(), items,
                workers)
            self.assertEqual(result, expected)
