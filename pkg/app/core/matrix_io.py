"""
matrix_io.py - Lectura/escritura del formato de texto de matrices.

Documento JSON (UTF-8):
  {"dim": 4, "splitA": 2, "splitB": 2, "entries": [[[re, im], ...], ...]}
Las entradas van por filas; se acepta también una lista plana de dim² pares.
"""

from __future__ import annotations
import json
from pathlib import Path
from typing import Any, Dict, List

import numpy as np

from .errors import ShapeError
from .qmat import DensityMatrix


def _parse_entries(entries: Any, dim: int) -> np.ndarray:
    if not isinstance(entries, list) or not entries:
        raise ShapeError("formato de matriz: 'entries' vacío o inválido")

    # formatos admitidos:
    # 1) filas: [[[re, im], ...], ...]
    # 2) plano: [[re, im], ...] de largo dim²
    flat: List[Any]
    if isinstance(entries[0], list) and entries[0] and isinstance(entries[0][0], list):
        if len(entries) != dim or any(len(r) != dim for r in entries):
            raise ShapeError(f"formato de matriz: se esperaban {dim} filas de {dim} entradas")
        flat = [e for row in entries for e in row]
    else:
        flat = list(entries)
    if len(flat) != dim * dim:
        raise ShapeError(f"formato de matriz: {len(flat)} entradas para dim={dim}")

    out = np.empty(dim * dim, dtype=np.complex128)
    for i, e in enumerate(flat):
        if not isinstance(e, (list, tuple)) or len(e) != 2:
            raise ShapeError(f"formato de matriz: entrada {i} no es un par [re, im]")
        out[i] = complex(float(e[0]), float(e[1]))
    return out.reshape(dim, dim)


def read_matrix_document(doc: Dict[str, Any]) -> tuple[np.ndarray, tuple[int, int] | None]:
    """Matriz cruda + partición, sin condicionar (lo hace quien llama)."""
    try:
        dim = int(doc["dim"])
    except (KeyError, TypeError, ValueError):
        raise ShapeError("formato de matriz: falta 'dim' entero")
    if dim < 1:
        raise ShapeError(f"formato de matriz: dim={dim} inválido")
    split = None
    if doc.get("splitA") is not None or doc.get("splitB") is not None:
        split = (int(doc.get("splitA", 0)), int(doc.get("splitB", 0)))
        if split[0] * split[1] != dim:
            raise ShapeError(f"formato de matriz: partición {split} incompatible con dim={dim}")
    return _parse_entries(doc.get("entries"), dim), split


def density_from_document(doc: Dict[str, Any]) -> DensityMatrix:
    m, split = read_matrix_document(doc)
    return DensityMatrix.from_array(m, split=split)


def density_to_document(rho: DensityMatrix) -> Dict[str, Any]:
    m = rho.matrix
    return {
        "dim": rho.dim,
        "splitA": rho.split_a,
        "splitB": rho.split_b,
        "entries": [[[float(z.real), float(z.imag)] for z in row] for row in m],
    }


def load_matrix_file(path: str | Path) -> Dict[str, Any]:
    p = Path(path)
    if not p.is_file():
        raise FileNotFoundError(f"No existe el archivo de matriz: {p}")
    with open(p, "r", encoding="utf-8") as f:
        return json.load(f)


def save_matrix_file(rho: DensityMatrix, path: str | Path) -> str:
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    with open(p, "w", encoding="utf-8", newline="\n") as f:
        json.dump(density_to_document(rho), f, ensure_ascii=False, indent=1)
        f.write("\n")
    return str(p.resolve())
