"""
utils.py - utilidades varias: hashes, techos tolerantes y formato de celdas.
"""

from __future__ import annotations
import hashlib
import math
from pathlib import Path
from typing import Any

import numpy as np


# tolerancia relativa para techos de valores que en exacto son enteros
CEIL_REL_TOL = 1e-12


def file_sha256(path: str | Path, chunk: int = 1 << 20) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for b in iter(lambda: f.read(chunk), b""):
            h.update(b)
    return h.hexdigest()


def bytes_sha256(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def ceil_tol(x: float, rel: float = CEIL_REL_TOL) -> int:
    """
    Techo tolerante: 1024.0000000000002 -> 1024, 1024.001 -> 1025.
    Evita que el redondeo binario de una expresión entera suba un escalón.
    """
    x = float(x)
    if not math.isfinite(x):
        raise OverflowError(f"techo de valor no finito: {x}")
    return int(math.ceil(x - abs(x) * rel))


def fmt_real(x: Any) -> str:
    """Formato de celda CSV: reales a 12 cifras significativas, enteros tal cual, None -> ''."""
    if x is None:
        return ""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, int):
        return str(x)
    if isinstance(x, float):
        if math.isnan(x):
            return "nan"
        return format(x, ".12g")
    if isinstance(x, np.integer):
        return str(int(x))
    if isinstance(x, np.floating):
        return format(float(x), ".12g")
    return str(x)
