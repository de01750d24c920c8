"""
parallel.py - Pool de hilos con orden determinista y caché de resultados.

Cada tarea recibe su propio índice; las semillas se derivan del índice, no del
hilo, así que el resultado no depende de cuántos hilos se usen.
"""

from __future__ import annotations
import threading
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Dict, Hashable, Iterable, List, Optional, TypeVar

from loguru import logger
from tqdm import tqdm

T = TypeVar("T")
R = TypeVar("R")

# índice de stream: los externos (muestras) viven por encima de este bit
OUTER_STREAM_SHIFT = 20


def outer_stream(i: int) -> int:
    return (int(i) + 1) << OUTER_STREAM_SHIFT


def inner_stream(j: int) -> int:
    if not 0 <= j < (1 << OUTER_STREAM_SHIFT) - 1:
        raise ValueError(f"índice de stream interno fuera de rango: {j}")
    return int(j) + 1


def parallel_map(
    fn: Callable[[T], R],
    items: Iterable[T],
    threads: int = 1,
    desc: Optional[str] = None,
    progress: bool = False,
) -> List[R]:
    """Como map(fn, items) pero en un ThreadPoolExecutor; respeta el orden de entrada."""
    seq = list(items)
    if not seq:
        return []
    bar = tqdm(total=len(seq), desc=desc, disable=not progress, leave=False)
    try:
        if threads <= 1 or len(seq) == 1:
            out: List[R] = []
            for it in seq:
                out.append(fn(it))
                bar.update(1)
            return out

        results: List[Optional[R]] = [None] * len(seq)
        with ThreadPoolExecutor(max_workers=int(threads)) as pool:
            futures = {pool.submit(fn, it): i for i, it in enumerate(seq)}
            for fut, i in futures.items():
                results[i] = fut.result()
                bar.update(1)
        logger.debug(f"parallel_map: {len(seq)} tareas en {threads} hilos ({desc or 'sin nombre'})")
        return results  # type: ignore[return-value]
    finally:
        bar.close()


class ResultCache:
    """Caché por clave hashable, segura entre hilos."""

    def __init__(self):
        self._data: Dict[Hashable, object] = {}
        self._lock = threading.Lock()

    def get_or_compute(self, key: Hashable, compute: Callable[[], R]) -> R:
        with self._lock:
            if key in self._data:
                return self._data[key]  # type: ignore[return-value]
        val = compute()
        with self._lock:
            # si otro hilo llegó primero, nos quedamos con su valor
            return self._data.setdefault(key, val)  # type: ignore[return-value]

    def __len__(self) -> int:
        with self._lock:
            return len(self._data)

    def clear(self) -> None:
        with self._lock:
            self._data.clear()
