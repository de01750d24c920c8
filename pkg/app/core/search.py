"""
search.py - Búsqueda de sección áurea sobre un intervalo acotado.
"""

from __future__ import annotations
import math
from typing import Callable, List, Tuple

INVPHI = (math.sqrt(5) - 1) / 2   # 1/phi
INVPHI2 = (3 - math.sqrt(5)) / 2  # 1/phi^2


def golden_section(
    f: Callable[[float], float],
    a: float,
    b: float,
    tol: float = 1e-6,
) -> Tuple[float, float, List[Tuple[float, float]]]:
    """
    Minimiza f (unimodal en [a, b]) hasta que el intervalo mida <= tol.
    Devuelve (x_mejor, f(x_mejor), evaluaciones) con todas las (x, f(x)) visitadas.
    """
    a, b = min(a, b), max(a, b)
    h = b - a
    seen: List[Tuple[float, float]] = []

    def ev(x: float) -> float:
        y = f(x)
        seen.append((x, y))
        return y

    if h <= tol:
        x = 0.5 * (a + b)
        return x, ev(x), seen

    n = int(math.ceil(math.log(tol / h) / math.log(INVPHI)))
    c = a + INVPHI2 * h
    d = a + INVPHI * h
    yc, yd = ev(c), ev(d)

    for _ in range(n - 1):
        if yc < yd:
            b, d, yd = d, c, yc
            h *= INVPHI
            c = a + INVPHI2 * h
            yc = ev(c)
        else:
            a, c, yc = c, d, yd
            h *= INVPHI
            d = a + INVPHI * h
            yd = ev(d)

    x, y = min(seen, key=lambda t: (t[1], t[0]))
    return x, y, seen
