import threading

import pytest

from core.parallel import ResultCache, inner_stream, outer_stream, parallel_map
from core.qstates import SeededRng


def test_parallel_map_keeps_order():
    items = list(range(50))
    assert parallel_map(lambda x: x * x, items, threads=4) == [x * x for x in items]
    assert parallel_map(lambda x: x, [], threads=4) == []


def test_parallel_map_thread_count_does_not_change_random_results():
    master = SeededRng(123)

    def job(i):
        return float(master.spawn(outer_stream(i)).uniform())

    assert parallel_map(job, range(16), threads=1) == parallel_map(job, range(16), threads=8)


def test_streams_never_collide():
    outer = {outer_stream(i) for i in range(100)}
    inner = {inner_stream(j) for j in range(1000)}
    assert len(outer) == 100 and not outer & inner
    with pytest.raises(ValueError):
        inner_stream(1 << 20)


def test_result_cache_computes_once_per_key():
    cache = ResultCache()
    calls = []
    lock = threading.Lock()

    def compute():
        with lock:
            calls.append(1)
        return 7

    out = parallel_map(lambda _: cache.get_or_compute("k", compute), range(20), threads=1)
    assert out == [7] * 20
    assert len(calls) == 1
    assert len(cache) == 1
    cache.clear()
    assert len(cache) == 0
