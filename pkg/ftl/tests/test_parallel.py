"""
Tests for deterministic parallel mapping.
"""

import numpy as np

from ftl.parallel import parallel_map, resolve_jobs, spawn_rngs


def square(x):
    return x * x


class TestParallel:
    """Test worker resolution, seeding and ordering."""

    def test_resolve_jobs(self):
        assert resolve_jobs(1) == 1
        assert resolve_jobs(3) == 3
        assert resolve_jobs(None) >= 1
        assert resolve_jobs(0) == resolve_jobs(None)

    def test_serial(self):
        assert parallel_map(square, range(5), jobs=1) == [0, 1, 4, 9, 16]

    def test_processes_keep_order(self):
        assert parallel_map(square, range(8), jobs=2) == [x * x for x in range(8)]

    def test_threads_for_lambdas(self):
        assert parallel_map(lambda x: x + 1, [3, 1, 2], jobs=2) == [4, 2, 3]

    def test_spawned_streams(self):
        first = [rng.random() for rng in spawn_rngs(7, 3)]
        second = [rng.random() for rng in spawn_rngs(7, 3)]
        assert first == second
        assert len(set(first)) == 3
        assert not np.isclose(first[0], spawn_rngs(8, 1)[0].random())
